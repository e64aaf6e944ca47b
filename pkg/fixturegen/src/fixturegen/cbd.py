"""Cyclobutadiene fixtures: (4o,4e) pi active space in 6-31G, HF or CASSCF
orbitals, Pipek-Mezey localized onto the two C2H2 moieties."""

from __future__ import annotations

import numpy as np

from .active import active_space_integrals
from .basis import ANGSTROM_TO_BOHR
from .casscf import casscf
from .fci import CasSolver
from .localize import mulliken_population, pipek_mezey
from .scf import ScfResult, restricted_hf


def cbd_geometry(r1: float, r2: float, rch: float):
    """Planar C4H4 rectangle in the xy plane; r1 is the C1-C2 bond along y
    (the double bond in D2h), r2 along x; hydrogens on the corner bisectors.
    r1 == r2 gives the D4h square."""
    x, y = r2 / 2.0, r1 / 2.0
    carbons = [np.array([x, y, 0.0]), np.array([x, -y, 0.0]),
               np.array([-x, -y, 0.0]), np.array([-x, y, 0.0])]
    hydrogens = []
    for c in carbons:
        direction = np.array([np.sign(c[0]), np.sign(c[1]), 0.0]) / np.sqrt(2.0)
        hydrogens.append(c + rch * direction)
    symbols = ["C"] * 4 + ["H"] * 4
    coords = [c * ANGSTROM_TO_BOHR for c in carbons + hydrogens]
    return symbols, coords


def _is_pi(res: ScfResult, k: int, tol: float = 1e-7) -> bool:
    """Planar molecule: a pi MO has exactly zero in-plane AO coefficients."""
    in_plane = max(abs(res.mo_coeff[i, k])
                   for i, f in enumerate(res.basis_functions)
                   if f.lmn != (0, 0, 1))
    return in_plane < tol


def pi_active_space(res: ScfResult):
    """(core, active) with active = 2 occupied + 2 lowest virtual pi MOs."""
    n_occ = res.n_elec // 2
    occ_pi = [k for k in range(n_occ) if _is_pi(res, k)]
    virt_pi = [k for k in range(n_occ, res.mo_coeff.shape[1]) if _is_pi(res, k)]
    if len(occ_pi) != 2 or len(virt_pi) < 2:
        raise RuntimeError(f"pi selection failed: occ {occ_pi} virt {virt_pi}")
    active = occ_pi + virt_pi[:2]
    core = [k for k in range(n_occ) if k not in occ_pi]
    return core, active


def cbd_scf(r1: float, r2: float, rch: float) -> ScfResult:
    """Deterministic SCF for CBD.

    The rectangle (D2h) has a well-gapped aufbau solution. At the square,
    aufbau SCF can fall into either the symmetry-pure "diagonal" eg
    occupation (what point-group-adapted codes produce) or a lower
    broken-symmetry edge solution; a second maximum-overlap stage pins the
    diagonal basin, whose active space reproduces the published energies.
    """
    symbols, coords = cbd_geometry(r1, r2, rch)
    first = restricted_hf(symbols, coords, "6-31g", level_shift=0.3)
    if abs(r1 - r2) > 1e-9:
        return first
    n_occ = first.n_elec // 2
    functions = first.basis_functions
    n_ao = first.mo_coeff.shape[0]
    pz_rows = [i for i, f in enumerate(functions) if f.lmn == (0, 0, 1)]
    a2u = np.zeros(n_ao)
    diag = np.zeros(n_ao)
    for i in pz_rows:
        atom = functions[i].atom_index
        a2u[i] = 1.0
        if atom in (0, 2):
            diag[i] = 1.0 if atom == 0 else -1.0   # one-diagonal eg component
    S = first.overlap
    guide = np.column_stack([a2u, diag])

    def select(C, mo_energy):
        in_plane = np.array([max(abs(C[i, k]) for i in range(n_ao)
                                 if functions[i].lmn != (0, 0, 1))
                             for k in range(C.shape[1])])
        is_pi = in_plane < 1e-7
        sigma = [k for k in range(C.shape[1]) if not is_pi[k]]
        sigma_occ = sorted(sigma, key=lambda k: mo_energy[k])[: n_occ - 2]
        weight = np.sum((guide.T @ S @ C) ** 2, axis=0)
        weight[~is_pi] = -1.0
        pi_occ = list(np.argsort(-weight)[:2])
        return sigma_occ + pi_occ

    # mirror through the C0-C2 diagonal: (x, y) -> (y, x); atoms 1<->3,
    # H5<->H7, px<->py. Averaging the density with its image restricts the
    # SCF to sigma_d-symmetric solutions (the diagonal eg basin).
    atom_map = {0: 0, 1: 3, 2: 2, 3: 1, 4: 4, 5: 7, 6: 6, 7: 5}
    lmn_map = {(0, 0, 0): (0, 0, 0), (1, 0, 0): (0, 1, 0),
               (0, 1, 0): (1, 0, 0), (0, 0, 1): (0, 0, 1)}
    index = {}
    for i, f in enumerate(functions):
        index[(f.atom_index, f.lmn, tuple(f.exponents))] = i
    R = np.zeros((n_ao, n_ao))
    for i, f in enumerate(functions):
        j = index[(atom_map[f.atom_index], lmn_map[f.lmn], tuple(f.exponents))]
        R[j, i] = 1.0

    def symmetrize(P):
        return 0.5 * (P + R @ P @ R.T)

    return restricted_hf(symbols, coords, "6-31g", level_shift=0.3,
                         max_cycles=600, occupation_selector=select,
                         density_symmetrizer=symmetrize)


def cas_exact_energy(res: ScfResult, core, active) -> float:
    """FCI-in-active-space energy on the given orbitals (lowest singlet)."""
    h_eff, g_act, e_core = active_space_integrals(res.hcore, res.eri,
                                                  res.mo_coeff, core, active,
                                                  res.e_nuc)
    solver = CasSolver(4, 2, 2)
    energy, _ = solver.lowest_singlet(h_eff, g_act)
    return energy + e_core


def cbd_hf_exact(r1: float, r2: float, rch: float) -> float:
    res = cbd_scf(r1, r2, rch)
    core, active = pi_active_space(res)
    return cas_exact_energy(res, core, active)


def cbd_casscf(res: ScfResult):
    core, active = pi_active_space(res)
    return casscf(res.hcore, res.eri, res.e_nuc, res.mo_coeff, core, active,
                  2, 2, max_iterations=400)


def localize_active_block(res: ScfResult, C_full: np.ndarray, core, active,
                          split: str):
    """Localized active orbitals ordered fragment-alternating.

    split "occ_virt": localize the first-two/last-two active columns
    separately (preserves the aufbau split). split "whole": localize all
    four together (atomic-like orbitals). Returns (C_ordered, fragments)
    where fragments pairs columns (0,2) and (1,3) onto the two moieties.
    """
    atom_of_ao = np.array([f.atom_index for f in res.basis_functions])
    n_atoms = int(atom_of_ao.max()) + 1
    # moieties: carbons of the two short (r1) edges, plus their hydrogens
    moiety_a = (0, 1, 4, 5)
    moiety_b = (2, 3, 6, 7)

    def weight(block, k, atoms):
        pops = mulliken_population(block, res.overlap, atom_of_ao, k, k, n_atoms)
        return float(sum(pops[a] for a in atoms))

    C_act = C_full[:, active]
    if split == "occ_virt":
        occ = pipek_mezey(C_act[:, :2], res.overlap, atom_of_ao)
        virt = pipek_mezey(C_act[:, 2:], res.overlap, atom_of_ao)
        blocks = [occ, virt]
    elif split == "whole":
        whole = pipek_mezey(C_act, res.overlap, atom_of_ao)
        # split the four localized orbitals into two per moiety
        a_cols = sorted(range(4), key=lambda k: -weight(whole, k, moiety_a))[:2]
        b_cols = [k for k in range(4) if k not in a_cols]
        blocks = [np.column_stack([whole[:, a_cols[0]], whole[:, b_cols[0]]]),
                  np.column_stack([whole[:, a_cols[1]], whole[:, b_cols[1]]])]
    else:
        raise ValueError(f"unknown split {split!r}")

    ordered = []
    for block in blocks:
        wa = weight(block, 0, moiety_a)
        wb = weight(block, 1, moiety_a)
        cols = [0, 1] if wa >= wb else [1, 0]
        ordered.append(block[:, cols])
    # [blockA_a, blockA_b, blockB_a, blockB_b] -> orbitals (0,2) on moiety A
    C_ordered = np.column_stack([ordered[0][:, 0], ordered[0][:, 1],
                                 ordered[1][:, 0], ordered[1][:, 1]])
    return C_ordered
