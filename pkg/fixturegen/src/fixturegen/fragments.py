"""Embedded-fragment FCIDUMPs derived from parent active-space integrals.

Replicates the consumer's default embedding (literal half-prefactor form,
occupied set = first n_elec/2 orbitals) so committed fragment fixtures can
be cross-checked against the consumer's own embedding path.
"""

from __future__ import annotations

import numpy as np


def embedded_fock(h: np.ndarray, g: np.ndarray, occupied, fac: float = 0.5):
    """F_uv = h_uv + fac * sum_i (2 (ii|uv) - (iv|ui))."""
    fock = h.copy()
    for i in occupied:
        fock = fock + fac * (2.0 * g[i, i, :, :] - g[i, :, :, i].T)
    return fock


def fragment_tables(h: np.ndarray, g: np.ndarray, n_elec: int,
                    orbitals, occ_mode: str = "all_occ", fac: float = 0.5):
    """(h_frag, g_frag) for the fragment holding `orbitals`."""
    occupied = list(range(n_elec // 2))
    if occ_mode == "env_occ":
        occupied = [i for i in occupied if i not in set(orbitals)]
    fock = embedded_fock(h, g, occupied, fac)
    orbs = list(orbitals)
    return (fock[np.ix_(orbs, orbs)],
            g[np.ix_(orbs, orbs, orbs, orbs)])
