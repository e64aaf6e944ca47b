"""Hardware-efficient ansatz circuits, fragment VQE, and MRPS assembly.

Fragment states are prepared by minimizing the embedded-fragment energy
with a layered HEA acting on all-|0> registers; the multireference product
state is the fragment-major Kronecker product of the optimized states.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .integrals import FragmentProblem, Partition, ValidationError
from .pauli import PauliSum, hamiltonian_to_pauli, number_operator
from .simulator import (
    Cnot,
    ParamCircuit,
    QuantumState,
    Rotation,
    apply_circuit,
    energy_and_gradient,
    expectation,
    kron,
    prepare_basis,
)

log = logging.getLogger(__name__)

ENTANGLERS = ("linear", "full", "circular", "pairwise")


@dataclass(frozen=True)
class HeaConfig:
    layers: int = 6
    entangler: str = "linear"
    gates: tuple[str, ...] = ("ry", "rz")
    final_rotations: bool = True

    def __post_init__(self):
        if self.layers < 1:
            raise ValidationError("HEA needs at least one layer")
        if not self.gates:
            raise ValidationError("HEA gate sequence must be non-empty")
        if self.entangler not in ENTANGLERS:
            raise ValidationError(f"unknown entangler {self.entangler!r}")
        if any(g not in ("rx", "ry", "rz") for g in self.gates):
            raise ValidationError("HEA gates must be rx/ry/rz")


@dataclass(frozen=True)
class OptimizerConfig:
    """L-BFGS-B settings shared by every optimization in the pipeline."""

    gtol: float = 1e-9
    ftol: float = 1e-13
    max_evals: int = 10000
    restarts: int = 10
    seed: int = 0
    init_low: float = -np.pi
    init_high: float = np.pi

    def __post_init__(self):
        if self.gtol <= 0 or self.ftol <= 0:
            raise ValidationError("tolerances must be positive")

    def initial_points(self, n_params: int):
        """Deterministic per-restart uniform initial parameter vectors."""
        seq = np.random.SeedSequence(self.seed)
        for child in seq.spawn(self.restarts):
            rng = np.random.default_rng(child)
            yield rng.uniform(self.init_low, self.init_high, size=n_params)


@dataclass(frozen=True)
class FragmentState:
    fragment_id: int
    energy: float
    params: np.ndarray
    state: QuantumState
    restart_energies: tuple[float, ...]
    layers: int
    entangler: str

    @property
    def best_energy(self) -> float:
        return min(self.restart_energies)

    @property
    def median_energy(self) -> float:
        return float(np.median(self.restart_energies))


def entangler_pairs(n_qubits: int, kind: str) -> tuple[tuple[int, int], ...]:
    """CNOT (control, target) pairs of one entangling block."""
    if n_qubits < 2:
        return ()
    if kind == "linear":
        return tuple((q, q + 1) for q in range(n_qubits - 1))
    if kind == "circular":
        return tuple((q, q + 1) for q in range(n_qubits - 1)) + ((n_qubits - 1, 0),)
    if kind == "full":
        return tuple((i, j) for i in range(n_qubits) for j in range(i + 1, n_qubits))
    if kind == "pairwise":
        evens = tuple((q, q + 1) for q in range(0, n_qubits - 1, 2))
        odds = tuple((q, q + 1) for q in range(1, n_qubits - 1, 2))
        return evens + odds
    raise ValidationError(f"unknown entangler {kind!r}")


def build_hea(n_qubits: int, cfg: HeaConfig) -> ParamCircuit:
    """Layered HEA; parameter slots run layer-major, qubit-minor, with the
    gate sequence innermost."""
    if n_qubits < 1:
        raise ValidationError("need at least one qubit")
    gates: list = []
    slot = 0
    for _ in range(cfg.layers):
        for q in range(n_qubits):
            for axis in cfg.gates:
                gates.append(Rotation(axis[1], q, slot=slot))
                slot += 1
        for control, target in entangler_pairs(n_qubits, cfg.entangler):
            gates.append(Cnot(control, target))
    if cfg.final_rotations:
        for q in range(n_qubits):
            for axis in cfg.gates:
                gates.append(Rotation(axis[1], q, slot=slot))
                slot += 1
    return ParamCircuit(n_qubits, tuple(gates))


def embed_hea_params(params: np.ndarray, cfg: HeaConfig, n_qubits: int) -> np.ndarray:
    """Warm start for one extra layer: a fresh all-zero rotation layer is
    prepended, where the entangler acts trivially on |0...0>, so the deeper
    circuit reproduces the shallower optimum exactly."""
    per_layer = n_qubits * len(cfg.gates)
    return np.concatenate([np.zeros(per_layer), np.asarray(params, dtype=float)])


def minimize_energy(circuit: ParamCircuit, cost: PauliSum, reference: QuantumState,
                    x0: np.ndarray, opt: OptimizerConfig):
    """One L-BFGS-B descent with adjoint gradients; returns (fun, x, nfev)."""
    result = scipy.optimize.minimize(
        lambda x: energy_and_gradient(circuit, x, cost, reference),
        x0=np.asarray(x0, dtype=float), jac=True, method="L-BFGS-B",
        options={"maxfun": opt.max_evals, "maxiter": opt.max_evals,
                 "ftol": opt.ftol, "gtol": opt.gtol})
    return float(result.fun), np.asarray(result.x), int(result.nfev)


def fragment_hamiltonian(prob: FragmentProblem) -> PauliSum:
    local_part = Partition.single(prob.ints.n_orb, prob.ints.n_elec)
    return hamiltonian_to_pauli(prob.ints, local_part)


def hea_vqe(H: PauliSum, cfg: HeaConfig, opt: OptimizerConfig,
            cost: PauliSum | None = None,
            warm_starts: tuple[np.ndarray, ...] = ()):
    """Best-of-restarts HEA minimization of <H> from the all-|0> register.

    `cost` (default H) is what the optimizer descends on; the reported
    energies are always plain <H>. Extra `warm_starts` vectors run after
    the seeded random restarts. Returns (energy, params, restart_energies).
    """
    circuit = build_hea(H.n_qubits, cfg)
    reference = prepare_basis([0] * H.n_qubits)
    cost = H if cost is None else cost

    candidates: list[tuple[float, int, np.ndarray]] = []
    energies: list[float] = []
    starts = list(opt.initial_points(circuit.n_params)) + [
        np.asarray(w, dtype=float) for w in warm_starts]
    for k, x0 in enumerate(starts):
        _, x_opt, _ = minimize_energy(circuit, cost, reference, x0, opt)
        energy = expectation(apply_circuit(reference, circuit, x_opt), H)
        if not np.isfinite(energy):
            log.warning("HEA restart %d diverged; discarded", k)
            continue
        candidates.append((energy, k, x_opt))
        energies.append(energy)
    if not candidates:
        raise RuntimeError("all HEA restarts failed")
    energy, _, params = min(candidates, key=lambda c: (c[0], c[1]))
    return energy, params, tuple(energies)


def fragment_vqe(prob: FragmentProblem, cfg: HeaConfig, opt: OptimizerConfig,
                 number_penalty: float = 0.0,
                 warm_starts: tuple[np.ndarray, ...] = ()) -> FragmentState:
    """Embedded-fragment HEA VQE; see hea_vqe for the restart protocol.

    `number_penalty` adds lambda * (N - n_elec)^2 to the cost (never to the
    reported energy) to guard against particle-sector drift.
    """
    H = fragment_hamiltonian(prob)
    cost = None
    if number_penalty > 0.0:
        n_op = number_operator(prob.n_qubits)
        shift = n_op - PauliSum.scalar(prob.n_qubits, float(prob.ints.n_elec))
        cost = H + number_penalty * (shift * shift)
    energy, params, energies = hea_vqe(H, cfg, opt, cost=cost, warm_starts=warm_starts)
    circuit = build_hea(prob.n_qubits, cfg)
    reference = prepare_basis([0] * prob.n_qubits)
    state = apply_circuit(reference, circuit, params)
    return FragmentState(fragment_id=prob.fragment_id, energy=energy, params=params,
                         state=state, restart_energies=tuple(energies),
                         layers=cfg.layers, entangler=cfg.entangler)


def parity_weight(state: QuantumState, parity: int) -> float:
    """Probability mass on basis states whose electron-number parity matches."""
    idx = np.arange(1 << state.n_qubits, dtype=np.int64)
    mask = (np.bitwise_count(idx) & 1) == (parity & 1)
    return float(np.sum(np.abs(state.amplitudes[mask]) ** 2))


def assemble_mrps(frags, part: Partition) -> QuantumState:
    """Fragment-major Kronecker product of fragment states.

    Each fragment state must hold >= 99.9% of its weight in the basis-state
    parity sector of its nominal electron count.
    """
    if len(frags) != part.n_fragments:
        raise ValidationError("fragment list does not match partition")
    state = None
    for k, frag_state in enumerate(frags):
        expected_qubits = 2 * len(part.fragments[k].orbitals)
        if frag_state.state.n_qubits != expected_qubits:
            raise ValidationError(f"fragment {k} register size mismatch")
        weight = parity_weight(frag_state.state, part.fragments[k].n_elec % 2)
        if weight < 0.999:
            raise ValidationError(
                f"fragment {k} holds only {weight:.6f} of its weight in the "
                f"expected particle-number parity sector")
        state = frag_state.state if state is None else kron(state, frag_state.state)
    return state


def gradient_variance(circuit: ParamCircuit, H: PauliSum, samples: int,
                      seed: int) -> np.ndarray:
    """Empirical per-parameter variance of dE/dtheta over uniform random
    parameter vectors in [-pi, pi)."""
    if samples < 2:
        raise ValidationError("need at least two samples")
    rng = np.random.default_rng(seed)
    reference = prepare_basis([0] * circuit.n_qubits)
    grads = np.empty((samples, circuit.n_params))
    for k in range(samples):
        theta = rng.uniform(-np.pi, np.pi, size=circuit.n_params)
        grads[k] = energy_and_gradient(circuit, theta, H, reference)[1]
    return np.var(grads, axis=0)
