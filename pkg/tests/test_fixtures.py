"""Committed-fixture checks: parsing, oracle energies, embedding cross-checks,
fragment fixture consistency, rotation invariance."""

from pathlib import Path

import numpy as np
import pytest
from scipy.stats import ortho_group

from mrpsvqe.integrals import (
    Fragment,
    Partition,
    embed_fragment,
    hf_reference,
    parse_fcidump,
    rotate_orbitals,
)
from mrpsvqe.oracle import exact_ground_state, fidelity
from mrpsvqe.pauli import hamiltonian_to_pauli
from mrpsvqe.simulator import expectation, kron, prepare_basis

import oracles

FIXTURES = Path(__file__).parent.parent / "fixtures"


def load_fixture(tag: str, subdir: str = ""):
    base = FIXTURES / subdir if subdir else FIXTURES
    ints = parse_fcidump((base / f"{tag}.fcidump").read_text())
    meta = {}
    for line in (base / f"{tag}.meta").read_text().splitlines():
        if " = " in line:
            key, value = line.split(" = ", 1)
            meta[key.strip()] = value.strip()
    groups = [tuple(int(x) for x in blk.split())
              for blk in meta["partition.fragments"].split("|")]
    electrons = [int(x) for x in meta["partition.electrons"].split("|")]
    part = Partition(tuple(Fragment(o, e) for o, e in zip(groups, electrons)))
    return ints, part, meta


class TestH2Fixture:
    def test_fci_energy_from_oracle(self):
        ints, part, _ = load_fixture("h2_sto3g_0.7414")
        assert ints.n_orb == 2
        H = hamiltonian_to_pauli(ints, part)
        energy = exact_ground_state(H).ground_energy
        # independent determinant-CI oracle on the same tables
        assert energy == pytest.approx(oracles.fci_ground_energy(ints), abs=1e-10)
        # frozen value, established once from the determinant oracle
        assert energy == pytest.approx(-1.137270174661, abs=1e-9)

    def test_rotation_invariance_of_exact_energy(self):
        ints, part, _ = load_fixture("h2_sto3g_0.7414")
        rng = np.random.default_rng(17)
        U = ortho_group.rvs(2, random_state=rng)
        rotated = rotate_orbitals(ints, U)
        e0 = exact_ground_state(hamiltonian_to_pauli(ints, part)).ground_energy
        e1 = exact_ground_state(hamiltonian_to_pauli(rotated, part)).ground_energy
        assert e1 == pytest.approx(e0, abs=1e-9)


class TestH4Fixtures:
    def test_embedding_matches_brute_force_reference(self):
        # the twenty-line reference: build F and the fragment spectrum
        # directly from the parent tables, independent of the library path
        ints, part, _ = load_fixture("h4_r2_1.00")
        for fid in (0, 1):
            orbs = part.fragments[fid].orbitals
            occupied = range(ints.n_elec // 2)
            F = ints.h.copy()
            for i in occupied:
                F = F + 0.5 * (2.0 * ints.g[i, i, :, :] - ints.g[i, :, :, i].T)
            h_frag = F[np.ix_(orbs, orbs)]
            g_frag = ints.g[np.ix_(orbs, orbs, orbs, orbs)]
            from mrpsvqe.integrals import IntegralSet
            ref = IntegralSet(n_orb=2, n_elec=2, ms2=0,
                              core_energy=ints.core_energy,
                              h=(h_frag + h_frag.T) / 2, g=g_frag)
            expected = oracles.fci_ground_energy(ref)

            prob = embed_fragment(ints, part, fid)
            H_frag = hamiltonian_to_pauli(prob.ints, Partition.single(2, 2))
            actual = exact_ground_state(H_frag).ground_energy
            assert actual == pytest.approx(expected, abs=1e-10)

    def test_fragment_label_swap_is_relabeling(self):
        ints, part, _ = load_fixture("h4_r2_1.00")
        a = embed_fragment(ints, part, 0)
        b = embed_fragment(ints, part, 1)
        # the square fixture is symmetric under swapping the two moieties
        assert np.allclose(a.ints.h, b.ints.h, atol=1e-8)
        assert np.allclose(a.ints.g, b.ints.g, atol=1e-8)

    def test_hf_energy_matches_independent_mean_field(self):
        ints, part, _ = load_fixture("h4_r2_1.00")
        bits = hf_reference(ints, part)
        assert sum(bits) == 4
        H = hamiltonian_to_pauli(ints, part)
        energy = expectation(prepare_basis(bits), H)
        assert energy == pytest.approx(oracles.restricted_hf_energy(ints), abs=1e-8)

    def test_scan_grid_energies_match_determinant_ci(self):
        for tag in ("h4_r2_1.00", "h4_r2_1.40", "h4_r2_2.00"):
            ints, part, _ = load_fixture(tag)
            H = hamiltonian_to_pauli(ints, part)
            energy = exact_ground_state(H).ground_energy
            assert energy == pytest.approx(oracles.fci_ground_energy(ints),
                                           abs=1e-10)

    def test_symhf_square_has_same_spectrum_as_localized(self):
        loc, part, _ = load_fixture("h4_r2_1.00")
        sym, part2, _ = load_fixture("h4_square_symhf")
        e_loc = exact_ground_state(hamiltonian_to_pauli(loc, part)).ground_energy
        e_sym = exact_ground_state(hamiltonian_to_pauli(sym, part2)).ground_energy
        assert e_loc == pytest.approx(e_sym, abs=1e-9)

    def test_symhf_reference_is_orthogonal_to_ground_state(self):
        ints, part, _ = load_fixture("h4_square_symhf")
        H = hamiltonian_to_pauli(ints, part)
        spectrum = exact_ground_state(H)
        hf_state = prepare_basis(hf_reference(ints, part))
        assert fidelity(spectrum.ground_state, hf_state) < 1e-6


class TestFragmentFixtures:
    @pytest.mark.parametrize("parent", ["h4_r2_1.00", "h4_r2_2.00",
                                        "cbd_hf_d2h", "cbd_hf_d4h"])
    def test_committed_fragments_match_embedding_path(self, parent):
        ints, part, _ = load_fixture(parent)
        for fid in (0, 1):
            frag_ints, frag_part, meta = load_fixture(f"{parent}_frag{fid}",
                                                      subdir="fragments")
            prob = embed_fragment(ints, part, fid)
            assert np.allclose(frag_ints.h, prob.ints.h, atol=1e-12)
            assert np.allclose(frag_ints.g, prob.ints.g, atol=1e-12)
            assert frag_ints.core_energy == pytest.approx(prob.constant_shift,
                                                          abs=1e-12)


class TestWaterFixtures:
    def test_sym_and_loc_share_the_exact_energy(self):
        for r in ("0.96", "1.50", "2.20"):
            e = {}
            for mode in ("sym", "loc"):
                ints, part, _ = load_fixture(f"h2o_{mode}_{r}")
                H = hamiltonian_to_pauli(ints, part)
                e[mode] = exact_ground_state(H).ground_energy
            assert e["sym"] == pytest.approx(e["loc"], abs=1e-8)

    def test_energies_match_determinant_ci(self):
        ints, part, _ = load_fixture("h2o_loc_1.90")
        H = hamiltonian_to_pauli(ints, part)
        assert exact_ground_state(H).ground_energy == pytest.approx(
            oracles.fci_ground_energy(ints), abs=1e-10)


class TestCbdFixtures:
    def test_hf_and_cas_fixture_spectra_are_distinct(self):
        hf_ints, part, _ = load_fixture("cbd_hf_d2h")
        cas_ints, part2, _ = load_fixture("cbd_cas_d2h")
        e_hf = exact_ground_state(hamiltonian_to_pauli(hf_ints, part)).ground_energy
        e_cas = exact_ground_state(hamiltonian_to_pauli(cas_ints, part2)).ground_energy
        assert e_cas < e_hf - 1e-3

    def test_casscf_sidecar_energy_matches_oracle(self):
        for tag in ("cbd_cas_d2h", "cbd_cas_d4h"):
            ints, part, meta = load_fixture(tag)
            H = hamiltonian_to_pauli(ints, part)
            energy = exact_ground_state(H).ground_energy
            assert energy == pytest.approx(float(meta["casscf_energy"]), abs=2e-6)
