"""Restricted Hartree-Fock with DIIS over the integral engine."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import ATOMIC_NUMBER, build_basis, nuclear_repulsion
from .integrals import electron_repulsion, one_electron_matrices


@dataclass
class ScfResult:
    energy: float
    mo_coeff: np.ndarray      # AO x MO
    mo_energy: np.ndarray
    converged: bool
    n_elec: int
    overlap: np.ndarray
    hcore: np.ndarray
    eri: np.ndarray           # AO chemist (ij|kl)
    e_nuc: float
    basis_functions: list
    symbols: tuple
    coords_bohr: np.ndarray


def _density(C: np.ndarray, n_occ: int) -> np.ndarray:
    occ = C[:, :n_occ]
    return 2.0 * occ @ occ.T


def _fock(h, eri, P):
    J = np.einsum("ijkl,kl->ij", eri, P, optimize=True)
    K = np.einsum("ikjl,kl->ij", eri, P, optimize=True)
    return h + J - 0.5 * K


def restricted_hf(symbols, coords_bohr, basis_name: str, max_cycles: int = 200,
                  conv_tol: float = 1e-11, level_shift: float = 0.0,
                  initial_mo: np.ndarray | None = None,
                  occupation_guide: np.ndarray | None = None,
                  occupation_selector=None,
                  density_symmetrizer=None) -> ScfResult:
    """Closed-shell SCF; raises RuntimeError on non-convergence.

    `occupation_guide` (AO x n_occ) switches aufbau occupation to
    maximum-overlap occupation against the guide span, pinning the SCF to a
    chosen solution basin (deterministic at degenerate geometries).
    `occupation_selector(C, mo_energy) -> indices` picks the occupied set
    outright (it wins over the guide). `density_symmetrizer(P) -> P` is
    applied to every density (symmetry-restricted SCF). The returned
    mo_coeff always has the occupied block first.
    """
    symbols = tuple(symbols)
    coords = np.asarray(coords_bohr, dtype=float)
    n_elec = sum(ATOMIC_NUMBER[s] for s in symbols)
    if n_elec % 2:
        raise ValueError("restricted_hf needs an even electron count")
    n_occ = n_elec // 2

    functions = build_basis(symbols, coords, basis_name)
    S, T, V = one_electron_matrices(functions, symbols, coords)
    h = T + V
    eri = electron_repulsion(functions)
    e_nuc = nuclear_repulsion(symbols, coords)

    w, U = np.linalg.eigh(S)
    if np.min(w) < 1e-10:
        raise RuntimeError("near-singular overlap matrix")
    X = U @ np.diag(w ** -0.5) @ U.T

    if initial_mo is not None:
        C = initial_mo
    else:
        e0, C0 = np.linalg.eigh(X.T @ h @ X)
        C = X @ C0
    P = _density(C, n_occ)
    if density_symmetrizer is not None:
        P = density_symmetrizer(P)

    diis_f: list[np.ndarray] = []
    diis_e: list[np.ndarray] = []
    energy = 0.0
    mo_energy = np.zeros(S.shape[0])
    converged = False
    for cycle in range(max_cycles):
        F = _fock(h, eri, P)
        new_energy = 0.5 * np.sum(P * (h + F)) + e_nuc

        err = F @ P @ S - S @ P @ F
        err = X.T @ err @ X
        diis_f.append(F.copy())
        diis_e.append(err)
        if len(diis_f) > 8:
            diis_f.pop(0)
            diis_e.pop(0)
        if len(diis_f) > 1:
            m = len(diis_f)
            B = -np.ones((m + 1, m + 1))
            B[m, m] = 0.0
            for i in range(m):
                for j in range(m):
                    B[i, j] = np.sum(diis_e[i] * diis_e[j])
            rhs = np.zeros(m + 1)
            rhs[m] = -1.0
            try:
                weights = np.linalg.solve(B, rhs)[:m]
                F = sum(wgt * mat for wgt, mat in zip(weights, diis_f))
            except np.linalg.LinAlgError:
                pass

        F_shift = F + level_shift * (S - S @ P @ S / 2.0) if level_shift else F
        Fp = X.T @ F_shift @ X
        mo_energy, Cp = np.linalg.eigh(Fp)
        C = X @ Cp
        C = _select_occupation(C, mo_energy, S, occupation_guide,
                               occupation_selector, n_occ)
        P_new = _density(C, n_occ)
        if density_symmetrizer is not None:
            P_new = density_symmetrizer(P_new)

        d_energy = abs(new_energy - energy)
        d_dens = np.max(np.abs(P_new - P))
        energy = new_energy
        P = P_new
        if cycle > 1 and d_energy < conv_tol and d_dens < 1e-8:
            converged = True
            break
    if not converged:
        raise RuntimeError(f"SCF failed to converge in {max_cycles} cycles "
                           f"(last dE={d_energy:.2e})")

    # canonical MOs of the final unshifted Fock matrix
    F = _fock(h, eri, P)
    mo_energy, Cp = np.linalg.eigh(X.T @ F @ X)
    C = X @ Cp
    C = _select_occupation(C, mo_energy, S, occupation_guide,
                           occupation_selector, n_occ)
    mo_energy = np.array([c @ F @ c for c in C.T])
    C = _fix_mo_phases(C)
    return ScfResult(energy=float(energy), mo_coeff=C, mo_energy=mo_energy,
                     converged=converged, n_elec=n_elec, overlap=S, hcore=h,
                     eri=eri, e_nuc=float(e_nuc), basis_functions=functions,
                     symbols=symbols, coords_bohr=coords)


def _select_occupation(C, mo_energy, S, guide, selector, n_occ) -> np.ndarray:
    """Reorder MOs so the chosen occupied set comes first: by an explicit
    selector, by maximum overlap with a guide span, or aufbau (no-op)."""
    if selector is not None:
        occupied = sorted(int(k) for k in selector(C, mo_energy))
        if len(occupied) != n_occ:
            raise RuntimeError("occupation selector returned wrong count")
    elif guide is not None:
        proj = guide.T @ S @ C                 # (n_occ_guide, n_mo)
        weight = np.sum(proj ** 2, axis=0)
        occupied = sorted(np.argsort(-weight)[:n_occ])
    else:
        return C
    virtual = [k for k in range(C.shape[1]) if k not in occupied]
    return C[:, occupied + virtual]


def _fix_mo_phases(C: np.ndarray) -> np.ndarray:
    out = C.copy()
    for k in range(C.shape[1]):
        pivot = np.argmax(np.abs(out[:, k]))
        if out[pivot, k] < 0:
            out[:, k] = -out[:, k]
    return out
