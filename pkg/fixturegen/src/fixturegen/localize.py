"""Pipek-Mezey orbital localization via 2x2 Jacobi sweeps on Mulliken
populations."""

from __future__ import annotations

import numpy as np


def mulliken_population(C: np.ndarray, S: np.ndarray, atom_of_ao, i: int,
                        j: int, n_atoms: int) -> np.ndarray:
    """Symmetrized Mulliken transition populations Q_A^(ij) per atom."""
    left = C[:, i] * (S @ C[:, j])
    right = C[:, j] * (S @ C[:, i])
    per_ao = 0.5 * (left + right)
    out = np.zeros(n_atoms)
    np.add.at(out, atom_of_ao, per_ao)
    return out


def pipek_mezey(C: np.ndarray, S: np.ndarray, atom_of_ao, max_sweeps: int = 200,
                tol: float = 1e-12) -> np.ndarray:
    """Localize the given orbital block (columns of C); returns rotated block.

    Maximizes sum_i sum_A Q_A(ii)^2 with pairwise Jacobi rotations; the
    final columns are sign-fixed and sorted by their dominant atom so the
    output ordering is deterministic.
    """
    atom_of_ao = np.asarray(atom_of_ao)
    n_atoms = int(atom_of_ao.max()) + 1
    C = C.copy()
    n_mo = C.shape[1]
    if n_mo < 2:
        return C
    for _ in range(max_sweeps):
        biggest = 0.0
        for i in range(n_mo):
            for j in range(i + 1, n_mo):
                qii = mulliken_population(C, S, atom_of_ao, i, i, n_atoms)
                qjj = mulliken_population(C, S, atom_of_ao, j, j, n_atoms)
                qij = mulliken_population(C, S, atom_of_ao, i, j, n_atoms)
                a_term = float(np.sum(qij ** 2 - 0.25 * (qii - qjj) ** 2))
                b_term = float(np.sum(qij * (qii - qjj)))
                if a_term ** 2 + b_term ** 2 < tol ** 2:
                    continue
                gamma = 0.25 * np.arctan2(b_term, -a_term)
                if abs(gamma) < 1e-10:
                    continue
                biggest = max(biggest, abs(gamma))
                ci = np.cos(gamma) * C[:, i] + np.sin(gamma) * C[:, j]
                cj = -np.sin(gamma) * C[:, i] + np.cos(gamma) * C[:, j]
                C[:, i], C[:, j] = ci, cj
        if biggest < 1e-10:
            break
    # deterministic order and phase
    keys = []
    for k in range(n_mo):
        pops = mulliken_population(C, S, atom_of_ao, k, k, n_atoms)
        keys.append((int(np.argmax(pops)), -float(np.max(pops)), k))
        pivot = np.argmax(np.abs(C[:, k]))
        if C[pivot, k] < 0:
            C[:, k] = -C[:, k]
    order = [k for *_, k in sorted(keys)]
    return C[:, order]


def dominant_atoms(C: np.ndarray, S: np.ndarray, atom_of_ao) -> list[int]:
    atom_of_ao = np.asarray(atom_of_ao)
    n_atoms = int(atom_of_ao.max()) + 1
    out = []
    for k in range(C.shape[1]):
        pops = mulliken_population(C, S, atom_of_ao, k, k, n_atoms)
        out.append(int(np.argmax(pops)))
    return out


def split_by_sites(C: np.ndarray, S: np.ndarray, atom_of_ao, site_a: int,
                   site_b: int, n_grid: int = 720) -> np.ndarray:
    """Rotate a 2-column block to maximize the site asymmetry
    (w_a - w_b)^2 summed over both columns; deterministic grid + refine.

    Coincides with Pipek-Mezey for well-separated bond pairs but keeps one
    orbital per site even when both are dominated by a third center.
    """
    atom_of_ao = np.asarray(atom_of_ao)
    n_atoms = int(atom_of_ao.max()) + 1
    if C.shape[1] != 2:
        raise ValueError("split_by_sites expects exactly two orbitals")

    def asymmetry(theta):
        c, s = np.cos(theta), np.sin(theta)
        block = np.column_stack([c * C[:, 0] + s * C[:, 1],
                                 -s * C[:, 0] + c * C[:, 1]])
        total = 0.0
        for k in range(2):
            pops = mulliken_population(block, S, atom_of_ao, k, k, n_atoms)
            total += (pops[site_a] - pops[site_b]) ** 2
        return total

    grid = np.linspace(0.0, np.pi / 2.0, n_grid, endpoint=False)
    values = [asymmetry(t) for t in grid]
    best = grid[int(np.argmax(values))]
    # golden-section refinement around the grid optimum
    lo, hi = best - np.pi / n_grid, best + np.pi / n_grid
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    for _ in range(60):
        m1 = hi - phi * (hi - lo)
        m2 = lo + phi * (hi - lo)
        if asymmetry(m1) < asymmetry(m2):
            lo = m1
        else:
            hi = m2
    theta = 0.5 * (lo + hi)
    c, s = np.cos(theta), np.sin(theta)
    out = np.column_stack([c * C[:, 0] + s * C[:, 1],
                           -s * C[:, 0] + c * C[:, 1]])
    for k in range(2):
        pivot = np.argmax(np.abs(out[:, k]))
        if out[pivot, k] < 0:
            out[:, k] = -out[:, k]
    return out
