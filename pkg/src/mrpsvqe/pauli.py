"""Sparse Pauli-string algebra, fermionic operators, and the Jordan-Wigner map.

An n-qubit Pauli string is stored in symplectic form as two bitmasks (x, z):
bit q of x set means the letter on qubit q has an X component, bit q of z a
Z component, so (x_q, z_q) = (0,0) I, (1,0) X, (1,1) Y, (0,1) Z.
Coefficients are always kept relative to the *letter* form, i.e. a term
represents  coef * prod_q {I,X,Y,Z}_q  with qubit 0 the leftmost letter in
text dumps.

Spin orbitals are indexed so that spin orbital 2k is the alpha and 2k+1 the
beta partner of the k-th spatial orbital in the fragment-major ordering
(see `integrals.Partition`); index parity therefore encodes spin everywhere
in this package.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

import numpy as np

PRUNE_THRESHOLD = 1e-12

_LETTERS = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}
_MASKS = {v: k for k, v in _LETTERS.items()}


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliString:
    """Single Pauli string on a fixed qubit count, symplectic (x, z) masks."""

    n_qubits: int
    x: int = 0
    z: int = 0

    def __post_init__(self):
        limit = 1 << self.n_qubits
        if self.x >= limit or self.z >= limit or self.x < 0 or self.z < 0:
            raise ValueError("mask bits outside qubit range")

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Build from a letter string, qubit 0 leftmost (e.g. "XZIY")."""
        x = z = 0
        for q, letter in enumerate(label):
            try:
                xb, zb = _MASKS[letter]
            except KeyError:
                raise ValueError(f"invalid Pauli letter {letter!r}") from None
            x |= xb << q
            z |= zb << q
        return cls(len(label), x, z)

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls(n_qubits, 0, 0)

    def letter(self, q: int) -> str:
        return _LETTERS[(self.x >> q) & 1, (self.z >> q) & 1]

    def label(self) -> str:
        return "".join(self.letter(q) for q in range(self.n_qubits))

    def __str__(self) -> str:
        return self.label()

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    @property
    def support(self) -> tuple[int, ...]:
        m = self.x | self.z
        return tuple(q for q in range(self.n_qubits) if (m >> q) & 1)

    @property
    def n_y(self) -> int:
        return _popcount(self.x & self.z)

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def strip_z(self) -> "PauliString":
        """Drop every pure-Z letter (keep X and Y letters intact)."""
        return PauliString(self.n_qubits, self.x, self.z & self.x)

    def commutes_with(self, other: "PauliString") -> bool:
        a = _popcount(self.x & other.z) & 1
        b = _popcount(self.z & other.x) & 1
        return a == b

    def mul(self, other: "PauliString") -> tuple["PauliString", complex]:
        """Product self*other as (string, phase) with phase in {1, -1, 1j, -1j}."""
        if self.n_qubits != other.n_qubits:
            raise ValueError("qubit-count mismatch")
        x = self.x ^ other.x
        z = self.z ^ other.z
        # letter form carries i^{#Y}; re-expressing the product in letter
        # form leaves i^{y1+y2-y12} times the XZ anticommutation sign
        yexp = (self.n_y + other.n_y - _popcount(x & z)) % 4
        phase = (1j) ** yexp
        if _popcount(self.z & other.x) & 1:
            phase = -phase
        return PauliString(self.n_qubits, x, z), phase

    def to_dense(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix in the little-endian basis convention."""
        dim = 1 << self.n_qubits
        idx = np.arange(dim)
        perm, phase = self.action_table()
        mat = np.zeros((dim, dim), dtype=complex)
        mat[perm, idx] = phase
        return mat

    def action_table(self) -> tuple[np.ndarray, np.ndarray]:
        """(perm, phase) with P|j> = phase[j] |perm[j]>."""
        dim = 1 << self.n_qubits
        idx = np.arange(dim, dtype=np.int64)
        perm = idx ^ self.x
        signs = 1.0 - 2.0 * (np.bitwise_count(idx & np.int64(self.z)) & 1)
        phase = (1j) ** self.n_y * signs.astype(complex)
        return perm, phase


def _sort_key(s: PauliString):
    return (s.x | s.z).bit_length(), s.label()


class PauliSum:
    """Sparse sum of Pauli strings: map PauliString -> complex coefficient.

    Coefficients below PRUNE_THRESHOLD in magnitude are dropped whenever
    terms are merged, so stored data stays minimal. Treat instances as
    immutable values; all arithmetic returns new objects.
    """

    __slots__ = ("n_qubits", "terms", "_dense")

    def __init__(self, n_qubits: int, terms: Mapping[PauliString, complex] | None = None):
        self.n_qubits = n_qubits
        data: dict[PauliString, complex] = {}
        if terms:
            for string, coef in terms.items():
                if string.n_qubits != n_qubits:
                    raise ValueError("qubit-count mismatch in PauliSum")
                if abs(coef) > PRUNE_THRESHOLD:
                    data[string] = complex(coef)
        self.terms = data
        self._dense = None

    @classmethod
    def zero(cls, n_qubits: int) -> "PauliSum":
        return cls(n_qubits)

    @classmethod
    def scalar(cls, n_qubits: int, value: complex) -> "PauliSum":
        return cls(n_qubits, {PauliString.identity(n_qubits): value})

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[tuple[PauliString, complex]]:
        return iter(self.terms.items())

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if self.n_qubits != other.n_qubits:
            raise ValueError("qubit-count mismatch")
        data = dict(self.terms)
        for s, c in other.terms.items():
            data[s] = data.get(s, 0.0) + c
        return PauliSum(self.n_qubits, data)

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + (other * -1.0)

    def __mul__(self, factor) -> "PauliSum":
        if isinstance(factor, PauliSum):
            return self._mul_sum(factor)
        return PauliSum(self.n_qubits, {s: c * factor for s, c in self.terms.items()})

    __rmul__ = __mul__

    def _mul_sum(self, other: "PauliSum") -> "PauliSum":
        if self.n_qubits != other.n_qubits:
            raise ValueError("qubit-count mismatch")
        data: dict[PauliString, complex] = {}
        for s1, c1 in self.terms.items():
            for s2, c2 in other.terms.items():
                s, phase = s1.mul(s2)
                data[s] = data.get(s, 0.0) + c1 * c2 * phase
        return PauliSum(self.n_qubits, data)

    def adjoint(self) -> "PauliSum":
        return PauliSum(self.n_qubits, {s: np.conj(c) for s, c in self.terms.items()})

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return all(abs(c.imag) <= tol for c in self.terms.values())

    def is_antihermitian(self, tol: float = 1e-10) -> bool:
        return all(abs(c.real) <= tol for c in self.terms.values())

    def strings_commute(self) -> bool:
        strings = list(self.terms)
        return all(
            strings[i].commutes_with(strings[j])
            for i in range(len(strings))
            for j in range(i + 1, len(strings))
        )

    def to_dense(self) -> np.ndarray:
        if self._dense is None:
            dim = 1 << self.n_qubits
            idx = np.arange(dim)
            mat = np.zeros((dim, dim), dtype=complex)
            for string, coef in self.terms.items():
                perm, phase = string.action_table()
                mat[perm, idx] += coef * phase
            self._dense = mat
        return self._dense

    def dump(self) -> str:
        """One term per line: "coef_re coef_im STRING", qubit 0 leftmost."""
        lines = []
        for string in sorted(self.terms, key=_sort_key):
            c = self.terms[string]
            lines.append(f"{c.real:.17g} {c.imag:.17g} {string.label()}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def load(cls, text: str) -> "PauliSum":
        terms: dict[PauliString, complex] = {}
        n_qubits = None
        for ln, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"line {ln}: expected 'coef_re coef_im STRING'")
            re_c, im_c, label = parts
            string = PauliString.from_label(label)
            if n_qubits is None:
                n_qubits = string.n_qubits
            elif string.n_qubits != n_qubits:
                raise ValueError(f"line {ln}: inconsistent string length")
            terms[string] = terms.get(string, 0.0) + complex(float(re_c), float(im_c))
        if n_qubits is None:
            raise ValueError("empty Pauli-sum dump")
        return cls(n_qubits, terms)


@dataclass(frozen=True)
class FermionOperator:
    """Linear combination of ladder-operator products.

    Each term is (coef, ops) with ops an ordered tuple of
    (spin_orbital_index, is_creation) applied right-to-left as written,
    i.e. ops[0] acts last on a ket. Example: 1.0 * a+_2 a_0 is
    (1.0, ((2, True), (0, False))).
    """

    terms: tuple[tuple[complex, tuple[tuple[int, bool], ...]], ...] = field(default_factory=tuple)

    @classmethod
    def from_term(cls, coef: complex, ops: Iterable[tuple[int, bool]]) -> "FermionOperator":
        return cls(((complex(coef), tuple((int(i), bool(c)) for i, c in ops)),))

    def __add__(self, other: "FermionOperator") -> "FermionOperator":
        return FermionOperator(self.terms + other.terms)

    def __sub__(self, other: "FermionOperator") -> "FermionOperator":
        return self + (other * -1.0)

    def __mul__(self, factor: complex) -> "FermionOperator":
        return FermionOperator(tuple((c * factor, ops) for c, ops in self.terms))

    __rmul__ = __mul__

    def adjoint(self) -> "FermionOperator":
        out = []
        for coef, ops in self.terms:
            out.append((np.conj(coef), tuple((i, not c) for i, c in reversed(ops))))
        return FermionOperator(tuple(out))

    def max_index(self) -> int:
        return max((i for _, ops in self.terms for i, _ in ops), default=-1)


def _ladder_image(index: int, creation: bool, n_qubits: int) -> PauliSum:
    # a+_p -> (X_p - iY_p)/2 * Z_{p-1}...Z_0 ; a_p flips the Y sign
    zchain = (1 << index) - 1
    x_string = PauliString(n_qubits, 1 << index, zchain)
    y_string = PauliString(n_qubits, 1 << index, zchain | (1 << index))
    sign = -1j if creation else 1j
    return PauliSum(n_qubits, {x_string: 0.5, y_string: 0.5 * sign})


def jw_transform(op: FermionOperator, n_qubits: int) -> PauliSum:
    """Jordan-Wigner image of a fermionic operator on n_qubits qubits."""
    if op.max_index() >= n_qubits:
        raise ValueError("spin-orbital index out of range for qubit register")
    total = PauliSum.zero(n_qubits)
    for coef, ops in op.terms:
        acc = PauliSum.scalar(n_qubits, coef)
        for index, creation in ops:
            acc = acc * _ladder_image(index, creation, n_qubits)
        total = total + acc
    return total


def number_operator(n_qubits: int) -> PauliSum:
    op = FermionOperator(tuple((1.0, ((q, True), (q, False))) for q in range(n_qubits)))
    return jw_transform(op, n_qubits)


def sz_operator(n_qubits: int) -> PauliSum:
    """Total S_z in units of hbar; index parity encodes spin."""
    terms = tuple(
        (0.5 if q % 2 == 0 else -0.5, ((q, True), (q, False))) for q in range(n_qubits)
    )
    return jw_transform(FermionOperator(terms), n_qubits)


def hamiltonian_to_pauli(ints, part) -> PauliSum:
    """Qubit Hamiltonian of an IntegralSet in the partition's qubit ordering.

    H = sum_pq h_pq a+_p a_q
      + 1/2 sum over spatial pqrs of (pq|rs) a+_{p,s1} a+_{r,s2} a_{s,s2} a_{q,s1}
      + core_energy, Jordan-Wigner mapped. The chemist-notation two-body
    table is rearranged into the physicist operator order above, which
    absorbs the one-body exchange correction exactly.
    """
    part.validate_against(ints)
    n_qubits = 2 * ints.n_orb
    qubit = part.qubit_map()
    total: dict[PauliString, complex] = {}

    def accumulate(coef: complex, ops):
        image = jw_transform(FermionOperator.from_term(coef, ops), n_qubits)
        for s, c in image.terms.items():
            total[s] = total.get(s, 0.0) + c

    ident = PauliString.identity(n_qubits)
    total[ident] = complex(ints.core_energy)

    for p in range(ints.n_orb):
        for q in range(ints.n_orb):
            hpq = ints.h[p, q]
            if abs(hpq) <= PRUNE_THRESHOLD:
                continue
            for spin in (0, 1):
                accumulate(hpq, ((qubit[(p, spin)], True), (qubit[(q, spin)], False)))

    for p in range(ints.n_orb):
        for q in range(ints.n_orb):
            for r in range(ints.n_orb):
                for s in range(ints.n_orb):
                    gpqrs = ints.g[p, q, r, s]
                    if abs(gpqrs) <= PRUNE_THRESHOLD:
                        continue
                    for s1 in (0, 1):
                        for s2 in (0, 1):
                            i1, i2 = qubit[(p, s1)], qubit[(r, s2)]
                            i3, i4 = qubit[(s, s2)], qubit[(q, s1)]
                            if i1 == i2 or i3 == i4:
                                continue
                            accumulate(0.5 * gpqrs,
                                       ((i1, True), (i2, True), (i3, False), (i4, False)))

    return PauliSum(n_qubits, total)


def _spin(index: int) -> int:
    return index % 2


def excitation_generator(kind: str, indices, n_qubits: int) -> tuple[FermionOperator, PauliSum]:
    """Anti-Hermitian single or double excitation generator and its JW image.

    kind "single" with indices (p, q) builds a+_q a_p - a+_p a_q (p -> q);
    kind "double" with indices (p, q, r, s) builds
    a+_s a+_r a_p a_q - a+_q a+_p a_r a_s ((p,q) -> (r,s)). Spin must be
    conserved: index parity encodes spin.
    """
    if kind == "single":
        p, q = (int(i) for i in indices)
        if p == q:
            op = FermionOperator()
        else:
            if _spin(p) != _spin(q):
                raise ValueError("single excitation does not conserve spin")
            op = (FermionOperator.from_term(1.0, ((q, True), (p, False)))
                  - FermionOperator.from_term(1.0, ((p, True), (q, False))))
    elif kind == "double":
        p, q, r, s = (int(i) for i in indices)
        if p == q or r == s:
            raise ValueError("duplicate index within creation or annihilation group")
        if _spin(p) + _spin(q) != _spin(r) + _spin(s):
            raise ValueError("double excitation does not conserve Sz")
        if {p, q} == {r, s}:
            op = FermionOperator()
        else:
            op = (FermionOperator.from_term(1.0, ((s, True), (r, True), (p, False), (q, False)))
                  - FermionOperator.from_term(1.0, ((q, True), (p, True), (r, False), (s, False))))
    else:
        raise ValueError(f"unknown excitation kind {kind!r}")
    image = jw_transform(op, n_qubits)
    return op, image
