"""Dense state-vector engine: gates, Pauli-generator exponentials,
expectation values, analytic gradients, and CNOT accounting.

Amplitudes are little-endian: qubit q is bit q of the basis index.
Rotation gates follow exp(-i*theta*G/2); a PauliRot gate with coefficient
gamma applies exp(i*gamma*theta*P), which realises one commuting term
c*P (c = i*gamma) of an anti-Hermitian generator exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .pauli import PauliString, PauliSum

NORM_TOL = 1e-10


@dataclass(frozen=True)
class QuantumState:
    """Unit-norm complex amplitude vector over 2^n_qubits basis states."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.amplitudes.shape != (1 << self.n_qubits,):
            raise ValueError("amplitude length does not match qubit count")
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm} deviates from 1")

    def copy(self) -> "QuantumState":
        return QuantumState(self.n_qubits, self.amplitudes.copy())


@dataclass(frozen=True)
class Rotation:
    axis: str  # 'x' | 'y' | 'z'
    qubit: int
    slot: int | None = None
    angle: float | None = None

    def __post_init__(self):
        if self.axis not in ("x", "y", "z"):
            raise ValueError(f"unknown rotation axis {self.axis!r}")
        if (self.slot is None) == (self.angle is None):
            raise ValueError("rotation needs exactly one of slot or fixed angle")


@dataclass(frozen=True)
class Cnot:
    control: int
    target: int

    def __post_init__(self):
        if self.control == self.target:
            raise ValueError("CNOT control equals target")


@dataclass(frozen=True)
class PauliRot:
    """exp(i * coeff * theta * string); theta is read from a parameter slot."""

    string: PauliString
    coeff: float
    slot: int


Gate = Rotation | Cnot | PauliRot


@dataclass(frozen=True)
class ParamCircuit:
    n_qubits: int
    gates: tuple[Gate, ...]

    def __post_init__(self):
        slots = set()
        for gate in self.gates:
            if isinstance(gate, (Rotation, PauliRot)) and getattr(gate, "slot", None) is not None:
                slots.add(gate.slot)
            for q in _gate_qubits(gate):
                if q < 0 or q >= self.n_qubits:
                    raise ValueError("gate qubit index out of range")
        if slots and slots != set(range(max(slots) + 1)):
            raise ValueError("parameter slots must be dense 0..k-1")
        object.__setattr__(self, "_n_params", len(slots))

    @property
    def n_params(self) -> int:
        return self._n_params


def _gate_qubits(gate: Gate) -> tuple[int, ...]:
    if isinstance(gate, Rotation):
        return (gate.qubit,)
    if isinstance(gate, Cnot):
        return (gate.control, gate.target)
    return gate.string.support


def prepare_basis(bits: Sequence[int] | str) -> QuantumState:
    """Computational basis state; bits[q] is the occupation of qubit q."""
    values = [int(b) for b in bits]
    if any(b not in (0, 1) for b in values):
        raise ValueError("bits must be 0/1")
    n = len(values)
    index = sum(b << q for q, b in enumerate(values))
    amp = np.zeros(1 << n, dtype=complex)
    amp[index] = 1.0
    return QuantumState(n, amp)


_PAULI_CACHE: dict[tuple[int, int, int], tuple[np.ndarray, np.ndarray]] = {}
_CNOT_CACHE: dict[tuple[int, int, int], np.ndarray] = {}


def _pauli_table(string: PauliString) -> tuple[np.ndarray, np.ndarray]:
    key = (string.n_qubits, string.x, string.z)
    table = _PAULI_CACHE.get(key)
    if table is None:
        table = string.action_table()
        _PAULI_CACHE[key] = table
    return table


def apply_pauli(vec: np.ndarray, string: PauliString) -> np.ndarray:
    perm, phase = _pauli_table(string)
    return (phase * vec)[perm]


def _cnot_perm(n: int, control: int, target: int) -> np.ndarray:
    key = (n, control, target)
    perm = _CNOT_CACHE.get(key)
    if perm is None:
        idx = np.arange(1 << n, dtype=np.int64)
        perm = idx ^ (((idx >> control) & 1) << target)
        _CNOT_CACHE[key] = perm
    return perm


def _apply_rotation(vec: np.ndarray, n: int, axis: str, qubit: int, angle: float) -> np.ndarray:
    c = np.cos(angle / 2.0)
    s = np.sin(angle / 2.0)
    t = vec.reshape(-1, 2, 1 << qubit)
    a0 = t[:, 0, :]
    a1 = t[:, 1, :]
    out = np.empty_like(t)
    if axis == "x":
        out[:, 0, :] = c * a0 - 1j * s * a1
        out[:, 1, :] = -1j * s * a0 + c * a1
    elif axis == "y":
        out[:, 0, :] = c * a0 - s * a1
        out[:, 1, :] = s * a0 + c * a1
    else:
        phase = np.exp(-0.5j * angle)
        out[:, 0, :] = phase * a0
        out[:, 1, :] = np.conj(phase) * a1
    return out.reshape(-1)


def _apply_gate(vec: np.ndarray, n: int, gate: Gate, params: np.ndarray,
                shift: float = 0.0) -> np.ndarray:
    if isinstance(gate, Cnot):
        return vec[_cnot_perm(n, gate.control, gate.target)]
    if isinstance(gate, Rotation):
        angle = (gate.angle if gate.slot is None else params[gate.slot]) + shift
        return _apply_rotation(vec, n, gate.axis, gate.qubit, angle)
    phi = gate.coeff * (params[gate.slot] + shift)
    return np.cos(phi) * vec + 1j * np.sin(phi) * apply_pauli(vec, gate.string)


def _run(circuit: ParamCircuit, vec: np.ndarray, params: np.ndarray,
         shift_index: int = -1, shift: float = 0.0) -> np.ndarray:
    for k, gate in enumerate(circuit.gates):
        vec = _apply_gate(vec, circuit.n_qubits, gate, params,
                          shift if k == shift_index else 0.0)
    return vec


def apply_circuit(state: QuantumState, circuit: ParamCircuit,
                  params: Sequence[float]) -> QuantumState:
    """Apply the circuit's gates in list order to a copy of the state."""
    params = np.asarray(params, dtype=float)
    if params.shape != (circuit.n_params,):
        raise ValueError(f"expected {circuit.n_params} parameters, got {params.shape}")
    if state.n_qubits != circuit.n_qubits:
        raise ValueError("state/circuit qubit mismatch")
    return QuantumState(state.n_qubits, _run(circuit, state.amplitudes.copy(), params))


def expectation(state: QuantumState, H: PauliSum) -> float:
    """<psi|H|psi> for Hermitian H; the imaginary residue is checked then dropped."""
    if state.n_qubits != H.n_qubits:
        raise ValueError("state/operator qubit mismatch")
    if not H.is_hermitian():
        raise ValueError("expectation requires a Hermitian operator")
    value = _raw_expectation(state.amplitudes, H)
    if abs(value.imag) > 1e-10:
        raise ValueError(f"imaginary expectation residue {value.imag}")
    return float(value.real)


def _raw_expectation(vec: np.ndarray, H: PauliSum) -> complex:
    if H.n_qubits <= 12:
        return complex(np.vdot(vec, H.to_dense() @ vec))
    acc = 0.0 + 0.0j
    for string, coef in H.terms.items():
        acc += coef * np.vdot(vec, apply_pauli(vec, string))
    return acc


def _apply_h(vec: np.ndarray, H: PauliSum) -> np.ndarray:
    if H.n_qubits <= 12:
        return H.to_dense() @ vec
    out = np.zeros_like(vec)
    for string, coef in H.terms.items():
        out += coef * apply_pauli(vec, string)
    return out


def gradient(circuit: ParamCircuit, params: Sequence[float], H: PauliSum,
             reference_state: QuantumState, method: str = "shift") -> np.ndarray:
    """Analytic dE/dtheta per parameter slot.

    "shift" evaluates the parameter-shift rule gate by gate (each gate
    sharing a slot contributes its own shifted-energy difference, which is
    the exact chain rule); "adjoint" computes the same values in one
    forward/backward sweep and is what the optimizers use.
    """
    params = np.asarray(params, dtype=float)
    if method == "adjoint":
        return energy_and_gradient(circuit, params, H, reference_state)[1]
    if method != "shift":
        raise ValueError(f"unknown gradient method {method!r}")
    grad = np.zeros(circuit.n_params)

    def energy(index: int, delta: float) -> float:
        vec = _run(circuit, reference_state.amplitudes, params, index, delta)
        return _raw_expectation(vec, H).real

    for k, gate in enumerate(circuit.gates):
        if isinstance(gate, Rotation) and gate.slot is not None:
            grad[gate.slot] += 0.5 * (energy(k, np.pi / 2) - energy(k, -np.pi / 2))
        elif isinstance(gate, PauliRot):
            s = np.pi / (4.0 * gate.coeff)
            grad[gate.slot] += gate.coeff * (energy(k, s) - energy(k, -s))
    return grad


_SIGMA = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _apply_sigma(vec: np.ndarray, axis: str, qubit: int) -> np.ndarray:
    t = vec.reshape(-1, 2, 1 << qubit)
    out = np.empty_like(t)
    m = _SIGMA[axis]
    out[:, 0, :] = m[0, 0] * t[:, 0, :] + m[0, 1] * t[:, 1, :]
    out[:, 1, :] = m[1, 0] * t[:, 0, :] + m[1, 1] * t[:, 1, :]
    return out.reshape(-1)


def energy_and_gradient(circuit: ParamCircuit, params: Sequence[float], H: PauliSum,
                        reference_state: QuantumState) -> tuple[float, np.ndarray]:
    """Adjoint-mode energy and full gradient in one backward sweep."""
    params = np.asarray(params, dtype=float)
    if params.shape != (circuit.n_params,):
        raise ValueError(f"expected {circuit.n_params} parameters, got {params.shape}")
    n = circuit.n_qubits
    psi = _run(circuit, reference_state.amplitudes, params)
    b = _apply_h(psi, H)
    energy = float(np.vdot(psi, b).real)
    grad = np.zeros(circuit.n_params)
    for gate in reversed(circuit.gates):
        if isinstance(gate, Rotation):
            if gate.slot is not None:
                # dU/dtheta = (-i/2) sigma * U
                g_psi = _apply_sigma(psi, gate.axis, gate.qubit)
                grad[gate.slot] += 2.0 * np.real(np.vdot(b, -0.5j * g_psi))
                angle = params[gate.slot]
            else:
                angle = gate.angle
            psi = _apply_rotation(psi, n, gate.axis, gate.qubit, -angle)
            b = _apply_rotation(b, n, gate.axis, gate.qubit, -angle)
        elif isinstance(gate, PauliRot):
            # dU/dtheta = i*coeff*P * U
            g_psi = apply_pauli(psi, gate.string)
            grad[gate.slot] += 2.0 * np.real(np.vdot(b, 1j * gate.coeff * g_psi))
            phi = -gate.coeff * params[gate.slot]
            psi = np.cos(phi) * psi + 1j * np.sin(phi) * apply_pauli(psi, gate.string)
            b = np.cos(phi) * b + 1j * np.sin(phi) * apply_pauli(b, gate.string)
        else:
            perm = _cnot_perm(n, gate.control, gate.target)
            psi = psi[perm]
            b = b[perm]
    return energy, grad


def kron(a: QuantumState, b: QuantumState) -> QuantumState:
    """Tensor product with `a` on the low qubit indices."""
    return QuantumState(a.n_qubits + b.n_qubits, np.kron(b.amplitudes, a.amplitudes))


def count_cnots(circuit: ParamCircuit) -> int:
    """CNOTs counted directly; a weight-w PauliRot costs 2(w-1) (staircase)."""
    total = 0
    for gate in circuit.gates:
        if isinstance(gate, Cnot):
            total += 1
        elif isinstance(gate, PauliRot):
            total += max(0, 2 * (gate.string.weight - 1))
    return total


_MAGIC = b"MVQS"


def dump_state(state: QuantumState) -> bytes:
    """Binary dump: magic, endianness tag (1 = little), n_qubits, amplitudes."""
    header = struct.pack("<4sBI", _MAGIC, 1, state.n_qubits)
    body = state.amplitudes.astype("<c16").tobytes()
    return header + body


def load_state(blob: bytes) -> QuantumState:
    magic, endian, n = struct.unpack_from("<4sBI", blob, 0)
    if magic != _MAGIC or endian != 1:
        raise ValueError("bad state dump header")
    amp = np.frombuffer(blob, dtype="<c16", offset=struct.calcsize("<4sBI"))
    if amp.shape != (1 << n,):
        raise ValueError("state dump length mismatch")
    return QuantumState(n, amp.astype(complex))
