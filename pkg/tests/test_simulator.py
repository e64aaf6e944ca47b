"""State preparation, gate application, expectations, gradients, CNOT counts."""

import numpy as np
import pytest

from mrpsvqe.pauli import PauliString, PauliSum, excitation_generator
from mrpsvqe.simulator import (
    Cnot,
    ParamCircuit,
    PauliRot,
    QuantumState,
    Rotation,
    apply_circuit,
    count_cnots,
    dump_state,
    energy_and_gradient,
    expectation,
    gradient,
    kron,
    load_state,
    prepare_basis,
)

import oracles


def random_circuit(rng, n_qubits, n_gates, n_slots):
    gates = []
    for _ in range(n_gates):
        kind = rng.integers(3)
        if kind == 0:
            gates.append(Rotation("xyz"[rng.integers(3)], int(rng.integers(n_qubits)),
                                  slot=int(rng.integers(n_slots))))
        elif kind == 1:
            c, t = rng.choice(n_qubits, size=2, replace=False)
            gates.append(Cnot(int(c), int(t)))
        else:
            label = "".join(rng.choice(list("IXYZ")) for _ in range(n_qubits))
            if set(label) == {"I"}:
                label = "X" + label[1:]
            gates.append(PauliRot(PauliString.from_label(label),
                                  float(rng.uniform(0.2, 1.0)), int(rng.integers(n_slots))))
    # make sure every slot is used so the circuit's slot set stays dense
    for slot in range(n_slots):
        gates.append(Rotation("y", int(rng.integers(n_qubits)), slot=slot))
    return ParamCircuit(n_qubits, tuple(gates))


def dense_circuit_matrix(circuit, params):
    dim = 1 << circuit.n_qubits
    mat = np.eye(dim, dtype=complex)
    for gate in circuit.gates:
        if isinstance(gate, Rotation):
            angle = gate.angle if gate.slot is None else params[gate.slot]
            step = oracles.dense_rotation(gate.axis, gate.qubit, angle, circuit.n_qubits)
        elif isinstance(gate, Cnot):
            step = oracles.dense_cnot(gate.control, gate.target, circuit.n_qubits)
        else:
            label = gate.string.label()
            step = oracles.dense_pauli_rot(label, gate.coeff, params[gate.slot])
        mat = step @ mat
    return mat


class TestPrepareBasis:
    def test_all_zeros(self):
        state = prepare_basis([0, 0, 0])
        assert state.amplitudes[0] == 1.0

    def test_little_endian_index(self):
        state = prepare_basis("101")
        assert state.amplitudes[5] == 1.0

    def test_z_eigenvalues(self):
        bits = (1, 0, 1, 1)
        state = prepare_basis(bits)
        for q, b in enumerate(bits):
            z = PauliSum(4, {PauliString(4, 0, 1 << q): 1.0})
            assert expectation(state, z) == pytest.approx(1.0 - 2.0 * b, abs=1e-14)


class TestApplyCircuit:
    def test_empty_circuit_identity(self):
        state = prepare_basis("0110")
        out = apply_circuit(state, ParamCircuit(4, ()), [])
        assert np.array_equal(out.amplitudes, state.amplitudes)

    def test_ry_pi_flips(self):
        circuit = ParamCircuit(1, (Rotation("y", 0, slot=0),))
        out = apply_circuit(prepare_basis("0"), circuit, [np.pi])
        assert abs(out.amplitudes[1]) == pytest.approx(1.0, abs=1e-14)

    def test_matches_dense_unitary_oracle(self):
        rng = np.random.default_rng(21)
        for _ in range(5):
            circuit = random_circuit(rng, 4, 12, 5)
            params = rng.uniform(-np.pi, np.pi, size=circuit.n_params)
            state = prepare_basis("0000")
            out = apply_circuit(state, circuit, params)
            expected = dense_circuit_matrix(circuit, params) @ state.amplitudes
            assert np.max(np.abs(out.amplitudes - expected)) < 1e-12

    def test_norm_preserved(self):
        rng = np.random.default_rng(22)
        for _ in range(50):
            circuit = random_circuit(rng, 3, 10, 4)
            params = rng.uniform(-np.pi, np.pi, size=circuit.n_params)
            out = apply_circuit(prepare_basis("000"), circuit, params)
            assert abs(np.linalg.norm(out.amplitudes) - 1.0) < 1e-10

    def test_generator_forward_backward_cancels(self):
        rng = np.random.default_rng(23)
        _, image = excitation_generator("double", (0, 1, 2, 3), 4)
        gates = tuple(PauliRot(s, c.imag, 0) for s, c in sorted(
            image.terms.items(), key=lambda t: t[0].label()))
        vec = rng.normal(size=16) + 1j * rng.normal(size=16)
        state = QuantumState(4, vec / np.linalg.norm(vec))
        theta = 0.7342
        forward = apply_circuit(state, ParamCircuit(4, gates), [theta])
        back = apply_circuit(forward, ParamCircuit(4, gates), [-theta])
        assert np.max(np.abs(back.amplitudes - state.amplitudes)) < 1e-12

    def test_parameter_count_mismatch(self):
        circuit = ParamCircuit(2, (Rotation("x", 0, slot=0),))
        with pytest.raises(ValueError, match="parameters"):
            apply_circuit(prepare_basis("00"), circuit, [0.1, 0.2])


class TestExpectation:
    def test_identity_expectation_is_one(self):
        rng = np.random.default_rng(24)
        vec = rng.normal(size=8) + 1j * rng.normal(size=8)
        state = QuantumState(3, vec / np.linalg.norm(vec))
        assert expectation(state, PauliSum.scalar(3, 1.0)) == pytest.approx(1.0, abs=1e-14)

    def test_z_on_vacuum(self):
        z0 = PauliSum(3, {PauliString(3, 0, 1): 1.0})
        assert expectation(prepare_basis("000"), z0) == pytest.approx(1.0)

    def test_non_hermitian_rejected(self):
        op = PauliSum(1, {PauliString.from_label("X"): 1j})
        with pytest.raises(ValueError, match="Hermitian"):
            expectation(prepare_basis("0"), op)


class TestGradient:
    def ry_on_z(self, theta):
        circuit = ParamCircuit(1, (Rotation("y", 0, slot=0),))
        H = PauliSum(1, {PauliString.from_label("Z"): 1.0})
        return circuit, H, np.array([theta])

    def test_slope_zero_at_origin(self):
        circuit, H, params = self.ry_on_z(0.0)
        grad = gradient(circuit, params, H, prepare_basis("0"))
        assert grad[0] == pytest.approx(0.0, abs=1e-12)

    def test_slope_minus_one_at_half_pi(self):
        circuit, H, params = self.ry_on_z(np.pi / 2)
        grad = gradient(circuit, params, H, prepare_basis("0"))
        assert grad[0] == pytest.approx(-1.0, abs=1e-12)

    def test_shift_matches_finite_difference(self):
        rng = np.random.default_rng(25)
        circuit = random_circuit(rng, 4, 14, 6)
        params = rng.uniform(-np.pi, np.pi, size=circuit.n_params)
        terms = {}
        for _ in range(6):
            s = PauliString(4, int(rng.integers(16)), int(rng.integers(16)))
            terms[s] = terms.get(s, 0.0) + rng.normal()
        H = PauliSum(4, terms)
        H = H + H.adjoint()
        ref = prepare_basis("0000")

        def energy(x):
            return expectation(apply_circuit(ref, circuit, x), H)

        expected = oracles.finite_difference(energy, params)
        shift = gradient(circuit, params, H, ref, method="shift")
        assert np.max(np.abs(shift - expected)) < 1e-6

    def test_adjoint_matches_shift_exactly(self):
        rng = np.random.default_rng(26)
        circuit = random_circuit(rng, 3, 12, 5)
        params = rng.uniform(-np.pi, np.pi, size=circuit.n_params)
        H = PauliSum(3, {PauliString.from_label("ZZI"): 0.7,
                         PauliString.from_label("XIY"): -0.3,
                         PauliString.from_label("IYZ"): 0.2})
        ref = prepare_basis("000")
        shift = gradient(circuit, params, H, ref, method="shift")
        energy, adjoint = energy_and_gradient(circuit, params, H, ref)
        assert np.max(np.abs(shift - adjoint)) < 1e-10
        assert energy == pytest.approx(expectation(apply_circuit(ref, circuit, params), H),
                                       abs=1e-12)


class TestKron:
    def test_basis_composition(self):
        out = kron(prepare_basis("0"), prepare_basis("1"))
        assert out.amplitudes[2] == 1.0

    def test_norm_one(self):
        rng = np.random.default_rng(27)
        a = rng.normal(size=4) + 1j * rng.normal(size=4)
        b = rng.normal(size=2) + 1j * rng.normal(size=2)
        state = kron(QuantumState(2, a / np.linalg.norm(a)),
                     QuantumState(1, b / np.linalg.norm(b)))
        assert np.linalg.norm(state.amplitudes) == pytest.approx(1.0, abs=1e-14)

    def test_local_energies_add(self):
        rng = np.random.default_rng(28)
        a = rng.normal(size=4) + 1j * rng.normal(size=4)
        b = rng.normal(size=4) + 1j * rng.normal(size=4)
        sa = QuantumState(2, a / np.linalg.norm(a))
        sb = QuantumState(2, b / np.linalg.norm(b))
        ha = PauliSum(2, {PauliString.from_label("ZX"): 0.3,
                          PauliString.from_label("YY"): -0.8})
        hb = PauliSum(2, {PauliString.from_label("XI"): 1.1,
                          PauliString.from_label("ZZ"): 0.4})
        joint = kron(sa, sb)
        ha_big = PauliSum(4, {PauliString.from_label(s.label() + "II"): c
                              for s, c in ha})
        hb_big = PauliSum(4, {PauliString.from_label("II" + s.label()): c
                              for s, c in hb})
        lhs = expectation(joint, ha_big + hb_big)
        rhs = expectation(sa, ha) + expectation(sb, hb)
        assert lhs == pytest.approx(rhs, abs=1e-12)


class TestCnotCount:
    def test_empty(self):
        assert count_cnots(ParamCircuit(2, ())) == 0

    def test_weight_two_pauli_rot(self):
        circuit = ParamCircuit(2, (PauliRot(PauliString.from_label("XY"), 0.5, 0),))
        assert count_cnots(circuit) == 2

    def test_double_excitation_staircase(self):
        _, image = excitation_generator("double", (0, 1, 2, 3), 4)
        gates = tuple(PauliRot(s, c.imag, 0) for s, c in image.terms.items())
        circuit = ParamCircuit(4, gates)
        assert len(gates) == 8
        per_gate = [2 * (g.string.weight - 1) for g in gates]
        assert count_cnots(circuit) == sum(per_gate) == 48

    def test_weight_one_is_free(self):
        circuit = ParamCircuit(2, (PauliRot(PauliString.from_label("XI"), 1.0, 0),))
        assert count_cnots(circuit) == 0


class TestStateDump:
    def test_round_trip(self):
        rng = np.random.default_rng(29)
        vec = rng.normal(size=8) + 1j * rng.normal(size=8)
        state = QuantumState(3, vec / np.linalg.norm(vec))
        again = load_state(dump_state(state))
        assert np.array_equal(again.amplitudes, state.amplitudes)

    def test_bad_header_rejected(self):
        with pytest.raises(ValueError):
            load_state(b"XXXX" + bytes(20))
