"""Active-space reduction: frozen-core folding and MO integral extraction."""

from __future__ import annotations

import numpy as np


def mo_transform_h(hcore: np.ndarray, C: np.ndarray) -> np.ndarray:
    return C.T @ hcore @ C


def active_space_integrals(hcore: np.ndarray, eri_ao: np.ndarray, C: np.ndarray,
                           core: list[int], active: list[int], e_nuc: float):
    """(h_eff, g_act, e_core) of the CAS problem defined by MO index lists.

    h_eff carries the frozen-core Coulomb/exchange field; e_core is the
    inactive energy including nuclear repulsion.
    """
    C_core = C[:, core]
    C_act = C[:, active]
    h_mo_full = C.T @ hcore @ C

    # inactive Fock in AO basis: h + sum_i (2 J_i - K_i)
    P_core = 2.0 * C_core @ C_core.T
    J = np.einsum("ijkl,kl->ij", eri_ao, P_core, optimize=True)
    K = np.einsum("ikjl,kl->ij", eri_ao, P_core, optimize=True)
    f_inactive_ao = hcore + J - 0.5 * K

    e_core = e_nuc + 0.5 * np.sum(P_core * (hcore + f_inactive_ao))
    h_eff = C_act.T @ f_inactive_ao @ C_act

    g_act = np.einsum("pqrs,pi,qj,rk,sl->ijkl", eri_ao, C_act, C_act, C_act,
                      C_act, optimize=True)
    del h_mo_full
    return h_eff, g_act, float(e_core)


def exact_symmetrize(g: np.ndarray) -> np.ndarray:
    """Broadcast canonical entries so the table is bitwise 8-fold symmetric."""
    n = g.shape[0]
    out = np.empty_like(g)
    for i in range(n):
        for j in range(i + 1):
            for k in range(i + 1):
                lmax = j if k == i else k
                for l in range(lmax + 1):
                    v = g[i, j, k, l]
                    for p, q, r, s in {(i, j, k, l), (j, i, k, l), (i, j, l, k),
                                       (j, i, l, k), (k, l, i, j), (l, k, i, j),
                                       (k, l, j, i), (l, k, j, i)}:
                        out[p, q, r, s] = v
    return out


def write_fcidump(path, h: np.ndarray, g: np.ndarray, core_energy: float,
                  n_elec: int, ms2: int = 0, orbsym=None, tol: float = 1e-14):
    """FCIDUMP writer matching the consumer grammar (1-based, chemist)."""
    n = h.shape[0]
    lines = [f"&FCI NORB={n},NELEC={n_elec},MS2={ms2},"]
    if orbsym is not None:
        lines.append(" ORBSYM=" + ",".join(str(x) for x in orbsym) + ",")
    lines.append(" ISYM=1,")
    lines.append("&END")
    for i in range(n):
        for j in range(i + 1):
            for k in range(i + 1):
                lmax = j if k == i else k
                for l in range(lmax + 1):
                    v = g[i, j, k, l]
                    if abs(v) > tol:
                        lines.append(f"{v:.17g} {i + 1} {j + 1} {k + 1} {l + 1}")
    for i in range(n):
        for j in range(i + 1):
            if abs(h[i, j]) > tol:
                lines.append(f"{h[i, j]:.17g} {i + 1} {j + 1} 0 0")
    lines.append(f"{core_energy:.17g} 0 0 0 0")
    text = "\n".join(lines) + "\n"
    with open(path, "w") as handle:
        handle.write(text)
    return text
