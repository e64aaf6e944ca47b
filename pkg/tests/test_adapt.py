"""Operator pools, ADAPT-VQE growth, UCCGSD, and the compiled evaluator."""

import itertools

import numpy as np
import pytest

from mrpsvqe.adapt import (
    AdaptResult,
    CompiledAnsatz,
    OperatorPool,
    adapt_vqe,
    ansatz_state,
    build_pool,
    pool_gradients,
    uccgsd_vqe,
)
from mrpsvqe.hea import OptimizerConfig
from mrpsvqe.integrals import Fragment, Partition, ValidationError
from mrpsvqe.oracle import exact_ground_state
from mrpsvqe.pauli import PauliSum, hamiltonian_to_pauli
from mrpsvqe.simulator import ParamCircuit, PauliRot, apply_circuit, prepare_basis

import oracles
from test_pauli import random_integrals


def brute_force_gsd_tuples(n_qubits, part=None):
    """Exhaustive enumeration of canonical spin-conserving GSD tuples,
    written independently of the pool builder."""
    singles = []
    for p in range(n_qubits):
        for q in range(p + 1, n_qubits):
            if p % 2 == q % 2:
                singles.append((p, q))
    doubles = []
    all_pairs = [(a, b) for a in range(n_qubits) for b in range(a + 1, n_qubits)]
    for (p, q), (r, s) in itertools.combinations(all_pairs, 2):
        sz_annihilate = (1 if p % 2 == 0 else -1) + (1 if q % 2 == 0 else -1)
        sz_create = (1 if r % 2 == 0 else -1) + (1 if s % 2 == 0 else -1)
        if sz_annihilate == sz_create:
            doubles.append((p, q, r, s))
    if part is not None:
        order = part.spin_orbital_order()

        def crosses(idx):
            frags = {part.fragment_of_orbital(order[i][0]) for i in idx}
            return len(frags) >= 2

        singles = [t for t in singles if crosses(t)]
        doubles = [t for t in doubles if crosses(t)]
    return singles, doubles


TWO_SITE = Partition((Fragment((0,), 2), Fragment((1,), 0)))
FOUR_ORB = Partition((Fragment((0, 2), 2), Fragment((1, 3), 2)))


class TestBuildPool:
    def test_two_site_inter_counts_match_enumeration(self):
        singles, doubles = brute_force_gsd_tuples(4, TWO_SITE)
        assert len(singles) == 2
        assert len(doubles) == 6
        pool = build_pool(TWO_SITE, 4, "fermionic_gsd_inter")
        assert len(pool) == len(singles) + len(doubles) == 8

    def test_full_pool_counts_match_enumeration(self):
        singles, doubles = brute_force_gsd_tuples(8)
        assert len(singles) == 12
        assert len(doubles) == 150
        pool = build_pool(FOUR_ORB, 8, "fermionic_gsd_full")
        assert len(pool) == 162

    def test_inter_pool_is_subset_of_full(self):
        full = set(build_pool(FOUR_ORB, 8, "fermionic_gsd_full").labels())
        inter = set(build_pool(FOUR_ORB, 8, "fermionic_gsd_inter").labels())
        assert inter < full
        singles, doubles = brute_force_gsd_tuples(8, FOUR_ORB)
        assert len(inter) == len(singles) + len(doubles)

    def test_inter_predicate_holds_for_every_operator(self):
        for kind in ("fermionic_gsd_inter", "qubit_inter"):
            pool = build_pool(FOUR_ORB, 8, kind)
            assert all(len(op.touched) >= 2 for op in pool.operators)

    def test_qubit_pool_strings_z_free_weight_two_or_four(self):
        pool = build_pool(FOUR_ORB, 8, "qubit_inter")
        for op in pool.operators:
            (string, coef), = list(op.image)
            assert coef == 1j
            assert string.z & ~string.x == 0  # no pure-Z letters
            assert string.weight in (2, 4)
            assert string.n_y % 2 == 1

    def test_images_antihermitian(self):
        pool = build_pool(TWO_SITE, 4, "fermionic_gsd_inter")
        for op in pool.operators:
            dense = op.image.to_dense()
            assert np.allclose(dense.conj().T, -dense, atol=1e-14)

    def test_single_fragment_inter_rejected(self):
        with pytest.raises(ValidationError, match="two fragments"):
            build_pool(Partition.single(2, 2), 4, "fermionic_gsd_inter")

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValidationError):
            build_pool(FOUR_ORB, 8, "bogus")


class TestCompiledAnsatz:
    def test_matches_gatewise_pauli_rotations(self):
        rng = np.random.default_rng(51)
        pool = build_pool(TWO_SITE, 4, "fermionic_gsd_inter")
        ops = list(pool.operators)[:4]
        thetas = rng.uniform(-1.0, 1.0, size=len(ops))
        vec = rng.normal(size=16) + 1j * rng.normal(size=16)
        vec /= np.linalg.norm(vec)

        compiled = CompiledAnsatz(ops, 4).apply(vec.copy(), thetas)

        gates = []
        for slot, op in enumerate(ops):
            for string, coef in sorted(op.image, key=lambda t: t[0].label()):
                gates.append(PauliRot(string, coef.imag, slot))
        from mrpsvqe.simulator import QuantumState
        state = apply_circuit(QuantumState(4, vec.copy()), ParamCircuit(4, tuple(gates)), thetas)
        assert np.max(np.abs(compiled - state.amplitudes)) < 1e-12

    def test_gradient_matches_finite_difference(self):
        rng = np.random.default_rng(52)
        ints = random_integrals(rng, 2, 2)
        H = hamiltonian_to_pauli(ints, TWO_SITE)
        pool = build_pool(TWO_SITE, 4, "fermionic_gsd_inter")
        ansatz = CompiledAnsatz(list(pool.operators), 4)
        ref = prepare_basis((1, 1, 0, 0)).amplitudes
        thetas = rng.uniform(-0.5, 0.5, size=ansatz.n_params)
        h_dense = H.to_dense()

        def energy(x):
            vec = ansatz.apply(ref.copy(), x)
            return float(np.vdot(vec, h_dense @ vec).real)

        _, grad = ansatz.energy_and_gradient(thetas, h_dense, ref)
        expected = oracles.finite_difference(energy, thetas)
        assert np.max(np.abs(grad - expected)) < 1e-6

    def test_zero_parameters_reproduce_reference(self):
        pool = build_pool(TWO_SITE, 4, "fermionic_gsd_inter")
        ansatz = CompiledAnsatz(list(pool.operators), 4)
        ref = prepare_basis((1, 1, 0, 0)).amplitudes
        out = ansatz.apply(ref.copy(), np.zeros(ansatz.n_params))
        assert np.array_equal(out, ref)


class TestPoolGradients:
    def test_vanish_on_eigenstate(self):
        rng = np.random.default_rng(53)
        ints = random_integrals(rng, 2, 2)
        H = hamiltonian_to_pauli(ints, TWO_SITE)
        ground = exact_ground_state(H).ground_state
        pool = build_pool(TWO_SITE, 4, "fermionic_gsd_full")
        grads = pool_gradients(ground, H, pool)
        assert np.max(np.abs(grads)) < 1e-10

    def test_match_finite_difference_through_circuit(self):
        rng = np.random.default_rng(54)
        ints = random_integrals(rng, 2, 2)
        H = hamiltonian_to_pauli(ints, TWO_SITE)
        state = prepare_basis((1, 1, 0, 0))
        pool = build_pool(TWO_SITE, 4, "fermionic_gsd_inter")
        grads = pool_gradients(state, H, pool)
        h = 1e-5
        for k, op in enumerate(pool.operators):
            ansatz = CompiledAnsatz([op], 4)
            plus = ansatz.apply(state.amplitudes.copy(), np.array([h]))
            minus = ansatz.apply(state.amplitudes.copy(), np.array([-h]))
            hd = H.to_dense()
            fd = (np.vdot(plus, hd @ plus).real - np.vdot(minus, hd @ minus).real) / (2 * h)
            assert grads[k] == pytest.approx(fd, abs=1e-6)


def _molecular_setup(seed):
    rng = np.random.default_rng(seed)
    ints = random_integrals(rng, 2, 2)
    H = hamiltonian_to_pauli(ints, TWO_SITE)
    reference = prepare_basis((1, 1, 0, 0))
    return ints, H, reference


class TestAdaptVqe:
    def test_exact_reference_converges_immediately(self):
        _, H, _ = _molecular_setup(55)
        ground = exact_ground_state(H)
        pool = build_pool(TWO_SITE, 4, "fermionic_gsd_full")
        result = adapt_vqe(H, ground.ground_state, pool)
        assert len(result.iterations) == 0
        assert result.converged
        assert result.final_energy == pytest.approx(ground.ground_energy, abs=1e-10)

    def test_monotone_descent_and_selection_threshold(self):
        _, H, reference = _molecular_setup(56)
        pool = build_pool(TWO_SITE, 4, "fermionic_gsd_full")
        result = adapt_vqe(H, reference, pool, grad_threshold=1e-7, max_depth=30,
                           opt=OptimizerConfig(seed=1))
        energies = [it.energy for it in result.iterations]
        assert all(b <= a + 1e-10 for a, b in zip(energies, energies[1:]))
        assert all(it.max_gradient >= 1e-7 for it in result.iterations)
        assert result.iterations[0].energy <= result.reference_energy + 1e-10

    def test_reaches_sector_ground_state(self):
        ints, H, reference = _molecular_setup(57)
        pool = build_pool(TWO_SITE, 4, "fermionic_gsd_full")
        result = adapt_vqe(H, reference, pool, grad_threshold=1e-8, max_depth=40,
                           opt=OptimizerConfig(seed=2))
        sector = np.linalg.eigvalsh(oracles.sector_hamiltonian(ints, 2)[0])[0]
        assert result.final_energy == pytest.approx(float(sector), abs=1e-7)
        assert result.final_energy >= float(sector) - 1e-9

    def test_deterministic_byte_for_byte(self):
        _, H, reference = _molecular_setup(58)
        pool = build_pool(TWO_SITE, 4, "fermionic_gsd_inter")
        a = adapt_vqe(H, reference, pool, opt=OptimizerConfig(seed=5))
        b = adapt_vqe(H, reference, pool, opt=OptimizerConfig(seed=5))
        assert a.table() == b.table()
        assert a.final_params == b.final_params

    def test_cnot_accounting_accumulates(self):
        _, H, reference = _molecular_setup(59)
        pool = build_pool(TWO_SITE, 4, "fermionic_gsd_full")
        result = adapt_vqe(H, reference, pool, max_depth=5,
                           opt=OptimizerConfig(seed=3))
        by_label = {op.label: op.cnot_cost for op in pool.operators}
        running = 0
        for it in result.iterations:
            running += by_label[it.label]
            assert it.cnots == running

    def test_trajectory_table_round_trip(self):
        _, H, reference = _molecular_setup(60)
        pool = build_pool(TWO_SITE, 4, "fermionic_gsd_inter")
        result = adapt_vqe(H, reference, pool, max_depth=4,
                           opt=OptimizerConfig(seed=4))
        rows = AdaptResult.parse_table(result.table())
        assert len(rows) == len(result.iterations)
        for row, it in zip(rows, result.iterations):
            assert row == (it.index, it.label, it.max_gradient, it.energy, it.cnots)


class TestUccgsd:
    def test_zero_parameters_is_reference_energy(self):
        _, H, reference = _molecular_setup(61)
        pool = build_pool(TWO_SITE, 4, "fermionic_gsd_full")
        ansatz = CompiledAnsatz(list(pool.operators), 4)
        energy, _ = ansatz.energy_and_gradient(
            np.zeros(ansatz.n_params), H.to_dense(), reference.amplitudes)
        from mrpsvqe.simulator import expectation
        assert energy == pytest.approx(expectation(reference, H), abs=1e-14)

    def test_best_of_restarts_reaches_sector_ground(self):
        ints, H, reference = _molecular_setup(62)
        result = uccgsd_vqe(H, reference, TWO_SITE,
                            OptimizerConfig(restarts=4, seed=6))
        sector = float(np.linalg.eigvalsh(oracles.sector_hamiltonian(ints, 2)[0])[0])
        assert result.final_energy == pytest.approx(sector, abs=1e-6)
        assert result.final_energy >= sector - 1e-9
        assert len(result.restart_energies) == 4
        assert result.final_energy == pytest.approx(min(result.restart_energies),
                                                    abs=1e-12)

    def test_adapt_with_full_pool_at_least_as_good(self):
        _, H, reference = _molecular_setup(63)
        pool = build_pool(TWO_SITE, 4, "fermionic_gsd_full")
        adapt = adapt_vqe(H, reference, pool, grad_threshold=1e-9, max_depth=50,
                          opt=OptimizerConfig(seed=7))
        fixed = uccgsd_vqe(H, reference, TWO_SITE, OptimizerConfig(restarts=4, seed=7))
        assert adapt.final_energy <= fixed.final_energy + 1e-8


class TestAnsatzState:
    def test_rebuilds_optimized_state(self):
        _, H, reference = _molecular_setup(64)
        pool = build_pool(TWO_SITE, 4, "fermionic_gsd_full")
        result = adapt_vqe(H, reference, pool, max_depth=6, opt=OptimizerConfig(seed=8))
        state = ansatz_state(result, pool, reference)
        from mrpsvqe.simulator import expectation
        assert expectation(state, H) == pytest.approx(result.final_energy, abs=1e-10)
