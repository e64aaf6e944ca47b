"""Gaussian basis-set tables (STO-3G for H/O, 6-31G for H/C) and expansion
into contracted Cartesian functions.

Exponents and contraction coefficients are the standard published values;
contracted functions are renormalized numerically so small table roundoff
cannot leak into energies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ANGSTROM_TO_BOHR = 1.0 / 0.52917721092

# element -> list of (shell_type, [exponents], [coefficients])
STO3G = {
    "H": [
        ("s", [3.42525091, 0.62391373, 0.16885540],
              [0.15432897, 0.53532814, 0.44463454]),
    ],
    "O": [
        ("s", [130.70932000, 23.80886100, 6.44360830],
              [0.15432897, 0.53532814, 0.44463454]),
        ("s", [5.03315130, 1.16959610, 0.38038900],
              [-0.09996723, 0.39951283, 0.70115470]),
        ("p", [5.03315130, 1.16959610, 0.38038900],
              [0.15591627, 0.60768372, 0.39195739]),
    ],
}

POPLE_631G = {
    "H": [
        ("s", [18.73113700, 2.82539370, 0.64012170],
              [0.03349460, 0.23472695, 0.81375733]),
        ("s", [0.16127780], [1.0]),
    ],
    "C": [
        ("s", [3047.52490, 457.369510, 103.948690, 29.2101550, 9.28666300,
               3.16392700],
              [0.00183470, 0.01403730, 0.06884260, 0.23218440, 0.46794130,
               0.36231200]),
        ("s", [7.86827240, 1.88128850, 0.54424930],
              [-0.11933240, -0.16085420, 1.14345640]),
        ("p", [7.86827240, 1.88128850, 0.54424930],
              [0.06899910, 0.31642400, 0.74430830]),
        ("s", [0.16871440], [1.0]),
        ("p", [0.16871440], [1.0]),
    ],
}

BASIS_SETS = {"sto-3g": STO3G, "6-31g": POPLE_631G}

ATOMIC_NUMBER = {"H": 1, "C": 6, "O": 8}

_CARTESIANS = {"s": [(0, 0, 0)], "p": [(1, 0, 0), (0, 1, 0), (0, 0, 1)]}


@dataclass(frozen=True)
class BasisFunction:
    center: np.ndarray          # Bohr
    lmn: tuple[int, int, int]
    exponents: np.ndarray
    coefficients: np.ndarray    # includes primitive norms and contraction norm
    atom_index: int


def _double_factorial(n: int) -> float:
    out = 1.0
    while n > 1:
        out *= n
        n -= 2
    return out


def primitive_norm(alpha: float, lmn) -> float:
    l, m, n = lmn
    num = (2.0 * alpha / np.pi) ** 1.5 * (4.0 * alpha) ** (l + m + n)
    den = (_double_factorial(2 * l - 1) * _double_factorial(2 * m - 1)
           * _double_factorial(2 * n - 1))
    return float(np.sqrt(num / den))


def _self_overlap(exponents, coefficients, lmn) -> float:
    l, m, n = lmn
    total = 0.0
    for a, ca in zip(exponents, coefficients):
        for b, cb in zip(exponents, coefficients):
            p = a + b
            pref = (np.pi / p) ** 1.5
            dim = (_double_factorial(2 * l - 1) * _double_factorial(2 * m - 1)
                   * _double_factorial(2 * n - 1)) / (2.0 * p) ** (l + m + n)
            total += ca * cb * pref * dim
    return total


def build_basis(symbols, coords_bohr, basis_name: str) -> list[BasisFunction]:
    """Contracted Cartesian basis functions in atom order, shells in table
    order, p functions ordered (x, y, z)."""
    try:
        table = BASIS_SETS[basis_name.lower()]
    except KeyError:
        raise ValueError(f"unknown basis {basis_name!r}") from None
    functions: list[BasisFunction] = []
    for atom_index, (symbol, xyz) in enumerate(zip(symbols, coords_bohr)):
        if symbol not in table:
            raise ValueError(f"no {basis_name} entry for element {symbol}")
        for shell_type, exps, coefs in table[symbol]:
            for lmn in _CARTESIANS[shell_type]:
                exps_arr = np.asarray(exps, dtype=float)
                raw = np.array([c * primitive_norm(a, lmn)
                                for a, c in zip(exps_arr, coefs)])
                raw /= np.sqrt(_self_overlap(exps_arr, raw, lmn))
                functions.append(BasisFunction(center=np.asarray(xyz, dtype=float),
                                               lmn=lmn, exponents=exps_arr,
                                               coefficients=raw,
                                               atom_index=atom_index))
    return functions


def nuclear_repulsion(symbols, coords_bohr) -> float:
    charges = [ATOMIC_NUMBER[s] for s in symbols]
    energy = 0.0
    for i in range(len(charges)):
        for j in range(i + 1, len(charges)):
            r = np.linalg.norm(np.asarray(coords_bohr[i]) - np.asarray(coords_bohr[j]))
            energy += charges[i] * charges[j] / r
    return energy
