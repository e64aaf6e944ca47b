"""Fixture recipes: geometry + basis + orbital treatment for every committed
FCIDUMP, with provenance sidecars.

Orbital orderings are always "occupied-like first" so the consumer's aufbau
reference is meaningful; partitions are recorded in the sidecar. At exactly
degenerate geometries (square H4) the broken-symmetry edge-aligned SCF
solution is selected deterministically via a biased initial guess, except
for the *_symhf fixtures, which deliberately keep the symmetry-pure saddle
determinant (zero overlap with the exact state).
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

import numpy as np
import scipy.linalg

from . import __version__ as BACKEND_VERSION
from .active import active_space_integrals, exact_symmetrize, write_fcidump
from .basis import ANGSTROM_TO_BOHR, build_basis
from .localize import mulliken_population, pipek_mezey, split_by_sites
from .scf import ScfResult, restricted_hf


@dataclasses.dataclass(frozen=True)
class FixtureRecipe:
    tag: str
    molecule: str
    basis: str
    orbital_mode: str           # canonical | localized | symmetric | casscf
    geometry: dict
    partition_fragments: str    # e.g. "0 2|1 3"
    partition_electrons: str    # e.g. "2|2"
    notes: str = ""


def _write(out_dir: Path, recipe: FixtureRecipe, h, g, e_core, n_elec,
           extra_meta: dict):
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{recipe.tag}.fcidump"
    h = (h + h.T) / 2.0
    g = exact_symmetrize(g)
    write_fcidump(path, h, g, e_core, n_elec)
    meta = {
        "tag": recipe.tag,
        "molecule": recipe.molecule,
        "basis": recipe.basis,
        "orbital_mode": recipe.orbital_mode,
        "backend": f"fixturegen-{BACKEND_VERSION}",
        "partition.fragments": recipe.partition_fragments,
        "partition.electrons": recipe.partition_electrons,
    }
    for key, value in recipe.geometry.items():
        meta[f"geometry.{key}"] = value
    meta.update(extra_meta)
    if recipe.notes:
        meta["notes"] = recipe.notes
    with open(out_dir / f"{recipe.tag}.meta", "w") as handle:
        for key, value in meta.items():
            handle.write(f"{key} = {value}\n")
    return path


def _pair_weight(block, S, atom_of_ao, k, atoms):
    pops = mulliken_population(block, S, np.asarray(atom_of_ao), k, k,
                               int(np.max(atom_of_ao)) + 1)
    return float(sum(pops[a] for a in atoms))


def _assign_pairs(block, S, atom_of_ao, moieties):
    """Order the 2-column block so column k belongs to moieties[k]."""
    w0 = _pair_weight(block, S, atom_of_ao, 0, moieties[0])
    w1 = _pair_weight(block, S, atom_of_ao, 1, moieties[0])
    order = [0, 1] if w0 >= w1 else [1, 0]
    return block[:, order]


# ----------------------------------------------------------------- H2 / H4

def h2_geometry(r):
    return ["H", "H"], [np.zeros(3), np.array([0.0, 0.0, r]) * ANGSTROM_TO_BOHR]


def h4_geometry(r1, r2):
    coords = [np.array([0.0, 0.0, 0.0]), np.array([0.0, r1, 0.0]),
              np.array([r2, 0.0, 0.0]), np.array([r2, r1, 0.0])]
    return ["H"] * 4, [c * ANGSTROM_TO_BOHR for c in coords]


def _h4_edge_guess(symbols, coords, overlap):
    """Initial MOs biased toward the x=const edge-bonding solution."""
    n = overlap.shape[0]
    guess = np.zeros((n, 4))
    guess[0, 0] = guess[1, 0] = guess[2, 0] = guess[3, 0] = 1.0
    guess[0, 1] = guess[1, 1] = 1.0
    guess[2, 1] = guess[3, 1] = -1.0
    guess[0, 2] = 1.0
    guess[1, 2] = -1.0
    guess[2, 2] = 1.0
    guess[3, 2] = -1.0
    guess[0, 3] = 1.0
    guess[1, 3] = -1.0
    guess[2, 3] = -1.0
    guess[3, 3] = 1.0
    M = guess.T @ overlap @ guess
    return guess @ scipy.linalg.fractional_matrix_power(M, -0.5)


def generate_h2(out_dir: Path, r=0.7414):
    recipe = FixtureRecipe(tag="h2_sto3g_0.7414", molecule="H2", basis="sto-3g",
                           orbital_mode="canonical", geometry={"r_angstrom": r},
                           partition_fragments="0 1", partition_electrons="2")
    symbols, coords = h2_geometry(r)
    res = restricted_hf(symbols, coords, "sto-3g")
    h, g, e_core = active_space_integrals(res.hcore, res.eri, res.mo_coeff,
                                          [], [0, 1], res.e_nuc)
    return _write(out_dir, recipe, h, g, e_core, 2,
                  {"scf_energy": f"{res.energy:.12f}"})


def _h4_scf(r1, r2):
    symbols, coords = h4_geometry(r1, r2)
    from .integrals import one_electron_matrices
    functions = build_basis(symbols, coords, "sto-3g")
    S, _, _ = one_electron_matrices(functions, symbols, coords)
    guess = _h4_edge_guess(symbols, coords, S)
    return restricted_hf(symbols, coords, "sto-3g", initial_mo=guess)


def generate_h4_localized(out_dir: Path, tag: str, r1: float, r2: float,
                          notes: str = ""):
    """H4 fixture in edge-localized orbitals: order [occA occB virtA virtB],
    fragments (0,2) and (1,3) on the two r1 edges."""
    recipe = FixtureRecipe(tag=tag, molecule="H4", basis="sto-3g",
                           orbital_mode="localized",
                           geometry={"r1_angstrom": r1, "r2_angstrom": r2},
                           partition_fragments="0 2|1 3",
                           partition_electrons="2|2", notes=notes)
    res = _h4_scf(r1, r2)
    atom_of_ao = [f.atom_index for f in res.basis_functions]
    moieties = [(0, 1), (2, 3)]
    occ = pipek_mezey(res.mo_coeff[:, :2], res.overlap, atom_of_ao)
    virt = pipek_mezey(res.mo_coeff[:, 2:], res.overlap, atom_of_ao)
    occ = _assign_pairs(occ, res.overlap, atom_of_ao, moieties)
    virt = _assign_pairs(virt, res.overlap, atom_of_ao, moieties)
    C_loc = np.column_stack([occ, virt])
    h, g, e_core = active_space_integrals(res.hcore, res.eri, C_loc,
                                          [], [0, 1, 2, 3], res.e_nuc)
    return _write(out_dir, recipe, h, g, e_core, 4,
                  {"scf_energy": f"{res.energy:.12f}"})


def generate_h4_square_symhf(out_dir: Path, r=1.0):
    """Square H4 in the canonical orbitals of the symmetry-pure SCF saddle
    point; its aufbau determinant has (numerically) zero overlap with the
    exact ground state."""
    recipe = FixtureRecipe(tag="h4_square_symhf", molecule="H4", basis="sto-3g",
                           orbital_mode="symmetric",
                           geometry={"r1_angstrom": r, "r2_angstrom": r},
                           partition_fragments="0 2|1 3",
                           partition_electrons="2|2",
                           notes="symmetry-pure saddle determinant; HF-side "
                                 "comparisons only")
    res = _h4_scf(r, r)
    C = res.mo_coeff.copy()
    Cs = C.copy()
    Cs[:, 1] = (C[:, 1] + C[:, 2]) / np.sqrt(2.0)
    Cs[:, 2] = (C[:, 1] - C[:, 2]) / np.sqrt(2.0)
    h, g, e_core = active_space_integrals(res.hcore, res.eri, Cs,
                                          [], [0, 1, 2, 3], res.e_nuc)
    return _write(out_dir, recipe, h, g, e_core, 4,
                  {"scf_energy": f"{res.energy:.12f}"})


H4_R2_GRID = (1.0, 1.1, 1.2, 1.3, 1.4, 1.5, 1.75, 2.0)
H4_SYMM_GRID = (1.0, 1.2, 1.4, 1.6, 1.8, 2.0, 2.2, 2.4)


def generate_h4_scan(out_dir: Path):
    paths = []
    for r2 in H4_R2_GRID:
        tag = f"h4_r2_{r2:.2f}"
        paths.append(generate_h4_localized(out_dir, tag, 1.0, r2,
                                           notes="r2 scan, square to rectangle"))
    return paths


def generate_h4_symm(out_dir: Path):
    paths = []
    for r in H4_SYMM_GRID:
        tag = f"h4_symm_{r:.2f}"
        paths.append(generate_h4_localized(out_dir, tag, r, r,
                                           notes="symmetric stretch of the square"))
    return paths


# -------------------------------------------------------------------- water

def water_geometry(r_oh, angle_deg=104.45):
    half = np.deg2rad(angle_deg) / 2.0
    o = np.zeros(3)
    h1 = np.array([0.0, r_oh * np.sin(half), r_oh * np.cos(half)])
    h2 = np.array([0.0, -r_oh * np.sin(half), r_oh * np.cos(half)])
    return ["O", "H", "H"], [c * ANGSTROM_TO_BOHR
                             for c in (o, h1, h2)]


def _reflection_character(res: ScfResult, mo: np.ndarray) -> float:
    """<mo| R |mo> for the reflection y -> -y (swaps the two H atoms)."""
    n = len(res.basis_functions)
    R = np.zeros((n, n))
    # map each AO to its image: same shell on the mirrored atom, sign from l_y
    key = {}
    for idx, f in enumerate(res.basis_functions):
        key[(f.atom_index, f.lmn, tuple(f.exponents))] = idx
    swap = {0: 0, 1: 2, 2: 1}
    for idx, f in enumerate(res.basis_functions):
        target = key[(swap[f.atom_index], f.lmn, tuple(f.exponents))]
        sign = -1.0 if f.lmn[1] % 2 else 1.0
        R[target, idx] = sign
    return float(mo @ res.overlap @ R @ mo)


def _water_active(res: ScfResult):
    """(core, active) MO indices: active = (1b2, 3a1, 4a1, 2b2)."""
    n_occ = res.n_elec // 2
    occ_b2 = [k for k in range(n_occ)
              if _reflection_character(res, res.mo_coeff[:, k]) < -0.5]
    if len(occ_b2) != 1:
        raise RuntimeError(f"expected one occupied b2 orbital, got {occ_b2}")
    # highest occupied a1: exclude out-of-plane b1 (pure O px) and b2
    occ_a1 = []
    for k in range(n_occ):
        if k in occ_b2:
            continue
        in_plane = max(abs(res.mo_coeff[i, k])
                       for i, f in enumerate(res.basis_functions)
                       if f.lmn != (1, 0, 0))
        if in_plane < 1e-7:
            continue  # 1b1 lone pair (pure out-of-plane)
        occ_a1.append(k)
    active_occ = [occ_b2[0], occ_a1[-1]]
    virt = list(range(n_occ, res.mo_coeff.shape[1]))
    if len(virt) != 2:
        raise RuntimeError("water/STO-3G should have exactly two virtuals")
    core = [k for k in range(n_occ) if k not in active_occ]
    return core, active_occ, virt


def water_scf(r_oh: float, initial_mo=None):
    """SCF for one scan point; cold start and (optionally) a warm start from
    the previous geometry, keeping the lower-energy converged solution."""
    symbols, coords = water_geometry(r_oh)
    best = None
    for guess in ([None] if initial_mo is None else [None, initial_mo]):
        try:
            res = restricted_hf(symbols, coords, "sto-3g", initial_mo=guess,
                                level_shift=0.2 if guess is None else 0.0)
        except RuntimeError:
            continue
        if best is None or res.energy < best.energy - 1e-10:
            best = res
    if best is None:
        raise RuntimeError(f"water SCF failed at r={r_oh}")
    return best


def generate_water(out_dir: Path, tag: str, r_oh: float, mode: str,
                   notes: str = "", scf_result=None):
    """Water (4o,4e) fixture; mode "sym" keeps canonical irrep-blocked
    orbitals (fragments b2/a1), mode "loc" localizes into OH-bond fragments."""
    res = scf_result if scf_result is not None else water_scf(r_oh)
    core, active_occ, virt = _water_active(res)

    if mode == "sym":
        # order [1b2, 3a1, 4a1, 2b2]; virtuals sorted a1 first
        v_chars = [_reflection_character(res, res.mo_coeff[:, k]) for k in virt]
        v_a1 = virt[int(np.argmax(v_chars))]
        v_b2 = virt[int(np.argmin(v_chars))]
        order = [active_occ[0], active_occ[1], v_a1, v_b2]
        C_act = res.mo_coeff[:, order]
        fragments, electrons = "0 3|1 2", "2|2"
    elif mode == "loc":
        atom_of_ao = [f.atom_index for f in res.basis_functions]
        moieties = [(1,), (2,)]  # one OH bond per hydrogen
        # site-split localization: matches Pipek-Mezey near equilibrium but
        # keeps one orbital per OH even when both are oxygen-dominated
        occ_block = split_by_sites(res.mo_coeff[:, active_occ], res.overlap,
                                   atom_of_ao, 1, 2)
        virt_block = split_by_sites(res.mo_coeff[:, virt], res.overlap,
                                    atom_of_ao, 1, 2)
        occ_block = _assign_pairs(occ_block, res.overlap, atom_of_ao, moieties)
        virt_block = _assign_pairs(virt_block, res.overlap, atom_of_ao, moieties)
        C_act = np.column_stack([occ_block, virt_block])
        fragments, electrons = "0 2|1 3", "2|2"
    else:
        raise ValueError(f"unknown water mode {mode!r}")

    recipe = FixtureRecipe(tag=tag, molecule="H2O", basis="sto-3g",
                           orbital_mode="canonical" if mode == "sym" else "localized",
                           geometry={"r_oh_angstrom": r_oh, "angle_deg": 104.45},
                           partition_fragments=fragments,
                           partition_electrons=electrons, notes=notes)
    C_full = np.column_stack([res.mo_coeff[:, core], C_act])
    core_new = list(range(len(core)))
    act_new = list(range(len(core), len(core) + 4))
    h, g, e_core = active_space_integrals(res.hcore, res.eri, C_full,
                                          core_new, act_new, res.e_nuc)
    return _write(out_dir, recipe, h, g, e_core, 4,
                  {"scf_energy": f"{res.energy:.12f}"})


WATER_GRID = (0.96, 1.1, 1.3, 1.5, 1.7, 1.9, 2.05, 2.2)


def generate_water_scans(out_dir: Path):
    paths = []
    results = {}
    previous = None
    for r in WATER_GRID:
        res = water_scf(r, initial_mo=previous)
        results[r] = res
        previous = res.mo_coeff
    for mode in ("sym", "loc"):
        for r in WATER_GRID:
            tag = f"h2o_{mode}_{r:.2f}"
            paths.append(generate_water(out_dir, tag, r, mode,
                                        notes="double OH dissociation",
                                        scf_result=results[r]))
    return paths


# ---------------------------------------------------------------------- CBD

def generate_cbd(out_dir: Path, tag: str, orbitals: str, r1: float, r2: float,
                 rch: float, notes: str = "", moiety_edges: str = "r1"):
    """CBD (4o,4e)/6-31G fixture; `orbitals` is "hf" or "casscf". The four
    active orbitals are Pipek-Mezey localized as one block (atomic-like pi
    orbitals), ordered fragment-alternating: fragments (0,2) and (1,3) are
    the two r1-edge C2H2 moieties."""
    from .cbd import cbd_scf, pi_active_space, cbd_casscf, localize_active_block

    res = cbd_scf(r1, r2, rch)
    core, active = pi_active_space(res)
    extra = {"scf_energy": f"{res.energy:.12f}"}
    if orbitals == "hf":
        C_full = res.mo_coeff
    elif orbitals == "casscf":
        cas = cbd_casscf(res)
        C_full = cas.mo_coeff
        core, active = cas.core, cas.active
        extra["casscf_energy"] = f"{cas.energy:.12f}"
    else:
        raise ValueError(f"unknown orbitals {orbitals!r}")

    C_act = localize_active_block(res, C_full, core, active, split="whole")
    C_used = np.column_stack([C_full[:, core], C_act])
    core_new = list(range(len(core)))
    act_new = list(range(len(core), len(core) + 4))
    h, g, e_core = active_space_integrals(res.hcore, res.eri, C_used,
                                          core_new, act_new, res.e_nuc)
    # at the square both edge directions are C2H2 moieties; "r2" pairs the
    # perpendicular edges (recorded per fixture in the sidecar)
    fragments = "0 2|1 3" if moiety_edges == "r1" else "0 1|2 3"
    recipe = FixtureRecipe(tag=tag, molecule="C4H4", basis="6-31g",
                           orbital_mode=f"{orbitals}_localized",
                           geometry={"r1_angstrom": r1, "r2_angstrom": r2,
                                     "rch_angstrom": rch},
                           partition_fragments=fragments,
                           partition_electrons="2|2", notes=notes)
    return _write(out_dir, recipe, h, g, e_core, 4, extra)


# ----------------------------------------------------------- fragment files

def generate_fragment_fixtures(out_dir: Path, parent_path: Path,
                               parent_tag: str):
    """Embedded (2o,2e) fragment FCIDUMPs for both fragments of a committed
    parent fixture (default literal embedding: all_occ, half prefactor)."""
    from .fragments import fragment_tables

    text = Path(parent_path).read_text()
    meta = {}
    for line in (Path(parent_path).with_suffix(".meta")).read_text().splitlines():
        if " = " in line:
            key, value = line.split(" = ", 1)
            meta[key] = value
    # parse the FCIDUMP minimally (we wrote it: full 8-fold tables)
    import re
    lines = text.splitlines()
    header = lines[0]
    n_orb = int(re.search(r"NORB=(\d+)", header).group(1))
    n_elec = int(re.search(r"NELEC=(\d+)", header).group(1))
    h = np.zeros((n_orb, n_orb))
    g = np.zeros((n_orb,) * 4)
    e_core = 0.0
    for line in lines:
        parts = line.split()
        if len(parts) != 5:
            continue
        v = float(parts[0])
        i, j, k, l = (int(p) for p in parts[1:])
        if i and j and k and l:
            for p, q, r, s in {(i, j, k, l), (j, i, k, l), (i, j, l, k),
                               (j, i, l, k), (k, l, i, j), (l, k, i, j),
                               (k, l, j, i), (l, k, j, i)}:
                g[p - 1, q - 1, r - 1, s - 1] = v
        elif i and j:
            h[i - 1, j - 1] = h[j - 1, i - 1] = v
        elif not any((i, j, k, l)):
            e_core = v

    fragments = [tuple(int(x) for x in blk.split())
                 for blk in meta["partition.fragments"].split("|")]
    electrons = [int(x) for x in meta["partition.electrons"].split("|")]
    paths = []
    for fid, (orbs, ne) in enumerate(zip(fragments, electrons)):
        h_f, g_f = fragment_tables(h, g, n_elec, orbs)
        recipe = FixtureRecipe(tag=f"{parent_tag}_frag{fid}",
                               molecule=meta.get("molecule", "?"),
                               basis=meta.get("basis", "?"),
                               orbital_mode="embedded_fragment",
                               geometry={}, partition_fragments=" ".join(
                                   str(k) for k in range(len(orbs))),
                               partition_electrons=str(ne),
                               notes=f"fragment {fid} of {parent_tag}; "
                                     "embedding: all_occ, half prefactor")
        paths.append(_write(out_dir, recipe, h_f, g_f, e_core, ne,
                            {"parent": parent_tag,
                             "embed.occ": "all_occ", "embed.half": "true"}))
    return paths
