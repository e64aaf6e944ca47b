"""Inter-fragment operator pools, ADAPT-VQE, and one-shot UCCGSD.

Pools enumerate spin-conserving generalized single and double excitation
generators over the partition's qubit-ordered spin orbitals; *_inter kinds
keep only generators whose spatial-orbital support touches at least two
fragments. The qubit pool takes every Pauli string of the fermionic inter
pool's JW images, strips Z letters, filters on the same inter-fragment
predicate, and uses i*P as the generator.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import combinations

import numpy as np
import scipy.optimize
import scipy.sparse

from .hea import OptimizerConfig
from .integrals import Partition, ValidationError
from .pauli import FermionOperator, PauliString, PauliSum, excitation_generator
from .simulator import QuantumState

log = logging.getLogger(__name__)

POOL_KINDS = ("fermionic_gsd_inter", "fermionic_gsd_full", "qubit_inter")


def _staircase_cnots(image: PauliSum) -> int:
    return sum(max(0, 2 * (s.weight - 1)) for s, _ in image)


class PoolOperator:
    """One anti-Hermitian pool generator with its JW image and CNOT cost."""

    def __init__(self, label: str, image: PauliSum, touched: frozenset[int],
                 generator: FermionOperator | None = None):
        if not image.is_antihermitian(tol=0.0):
            raise ValidationError(f"pool operator {label} is not anti-Hermitian")
        self.label = label
        self.image = image
        self.touched = touched
        self.generator = generator
        self.cnot_cost = _staircase_cnots(image)
        self._tau = None
        self._tau_sq = None

    def matrices(self):
        """CSR matrices (tau, tau^2); generators satisfy tau^3 = -tau, so
        exp(theta*tau) = 1 + sin(theta) tau + (1-cos(theta)) tau^2 exactly."""
        if self._tau is None:
            dim = 1 << self.image.n_qubits
            idx = np.arange(dim)
            acc = scipy.sparse.csr_matrix((dim, dim), dtype=complex)
            for string, coef in self.image:
                perm, phase = string.action_table()
                acc = acc + scipy.sparse.csr_matrix(
                    (coef * phase, (perm, idx)), shape=(dim, dim))
            tau_sq = (acc @ acc).tocsr()
            residual = abs(tau_sq @ acc + acc)
            if residual.count_nonzero() and residual.max() > 1e-10:
                raise ValidationError(
                    f"pool operator {self.label} violates tau^3 = -tau")
            self._tau, self._tau_sq = acc, tau_sq
        return self._tau, self._tau_sq

    def __repr__(self):
        return f"PoolOperator({self.label})"


@dataclass(frozen=True)
class OperatorPool:
    kind: str
    operators: tuple[PoolOperator, ...]
    partition: Partition
    n_qubits: int

    def __len__(self):
        return len(self.operators)

    def labels(self) -> tuple[str, ...]:
        return tuple(op.label for op in self.operators)


def _touched_fragments(part: Partition, qubits) -> frozenset[int]:
    order = part.spin_orbital_order()
    return frozenset(part.fragment_of_orbital(order[q][0]) for q in qubits)


def enumerate_gsd_labels(n_qubits: int):
    """Canonical spin-conserving GSD index tuples: singles (p, q) with
    p < q and equal spin, then doubles ((p, q), (r, s)) with each pair
    ascending, Sz conserved, and (p, q) < (r, s) to drop conjugates."""
    for p, q in combinations(range(n_qubits), 2):
        if p % 2 == q % 2:
            yield "single", (p, q)
    pairs = list(combinations(range(n_qubits), 2))
    for i, (p, q) in enumerate(pairs):
        for r, s in pairs[i + 1:]:
            if (p % 2 + q % 2) == (r % 2 + s % 2):
                yield "double", (p, q, r, s)


def _gsd_operators(part: Partition, n_qubits: int, inter_only: bool):
    ops = []
    for kind, idx in enumerate_gsd_labels(n_qubits):
        touched = _touched_fragments(part, idx)
        if inter_only and len(touched) < 2:
            continue
        generator, image = excitation_generator(kind, idx, n_qubits)
        if len(image) == 0:
            continue
        if not image.strings_commute():
            raise ValidationError(f"{kind}{idx} image strings do not commute")
        if kind == "single":
            label = f"s[{idx[0]}->{idx[1]}]"
        else:
            label = f"d[{idx[0]},{idx[1]}->{idx[2]},{idx[3]}]"
        ops.append(PoolOperator(label, image, touched, generator))
    return ops


def build_pool(part: Partition, n_qubits: int, kind: str) -> OperatorPool:
    if kind not in POOL_KINDS:
        raise ValidationError(f"unknown pool kind {kind!r}")
    if n_qubits != part.n_qubits:
        raise ValidationError("qubit count does not match partition")
    if kind.endswith("_inter") and part.n_fragments < 2:
        raise ValidationError(f"{kind} needs at least two fragments")

    if kind == "fermionic_gsd_full":
        ops = _gsd_operators(part, n_qubits, inter_only=False)
    elif kind == "fermionic_gsd_inter":
        ops = _gsd_operators(part, n_qubits, inter_only=True)
    else:
        fermionic = _gsd_operators(part, n_qubits, inter_only=True)
        seen: dict[PauliString, frozenset[int]] = {}
        for op in fermionic:
            for string, _ in op.image:
                stripped = string.strip_z()
                if stripped.is_identity() or stripped in seen:
                    continue
                touched = _touched_fragments(part, stripped.support)
                if len(touched) < 2:
                    continue
                seen[stripped] = touched
        ops = []
        for string in sorted(seen, key=lambda s: (s.support, s.label())):
            image = PauliSum(n_qubits, {string: 1j})
            ops.append(PoolOperator(f"p[{string.label()}]", image, seen[string]))

    return OperatorPool(kind=kind, operators=tuple(ops), partition=part,
                        n_qubits=n_qubits)


class CompiledAnsatz:
    """Product of exp(theta_k tau_k) applied through cached sparse matrices.

    Mathematically identical to applying each generator's commuting Pauli
    rotations gate by gate (the simulator path); this form is what the
    optimizer loops run on.
    """

    def __init__(self, operators, n_qubits: int):
        self.operators = list(operators)
        self.n_qubits = n_qubits

    def append(self, op: PoolOperator):
        self.operators.append(op)

    @property
    def n_params(self) -> int:
        return len(self.operators)

    def apply(self, vec: np.ndarray, thetas: np.ndarray) -> np.ndarray:
        for op, theta in zip(self.operators, thetas):
            tau, tau_sq = op.matrices()
            vec = vec + np.sin(theta) * (tau @ vec) + (1.0 - np.cos(theta)) * (tau_sq @ vec)
        return vec

    def energy_and_gradient(self, thetas: np.ndarray, h_dense: np.ndarray,
                            reference: np.ndarray) -> tuple[float, np.ndarray]:
        psi = self.apply(reference.copy(), thetas)
        b = h_dense @ psi
        energy = float(np.vdot(psi, b).real)
        grad = np.zeros(len(thetas))
        for k in range(len(self.operators) - 1, -1, -1):
            op, theta = self.operators[k], thetas[k]
            tau, tau_sq = op.matrices()
            grad[k] = 2.0 * np.real(np.vdot(b, tau @ psi))
            psi = psi + np.sin(-theta) * (tau @ psi) + (1.0 - np.cos(theta)) * (tau_sq @ psi)
            b = b + np.sin(-theta) * (tau @ b) + (1.0 - np.cos(theta)) * (tau_sq @ b)
        return energy, grad


@dataclass(frozen=True)
class AdaptIteration:
    index: int
    label: str
    max_gradient: float
    params: tuple[float, ...]
    energy: float
    cnots: int


@dataclass(frozen=True)
class AdaptResult:
    iterations: tuple[AdaptIteration, ...]
    final_energy: float
    final_params: tuple[float, ...]
    labels: tuple[str, ...]
    converged: bool
    reason: str
    reference_energy: float
    pool_kind: str
    cnots: int
    restart_energies: tuple[float, ...] = ()

    def table(self) -> str:
        """Trajectory table consumed by the CLI reporter."""
        lines = ["# iteration label grad energy cnots"]
        for it in self.iterations:
            lines.append(f"{it.index} {it.label} {it.max_gradient:.17g} "
                         f"{it.energy:.17g} {it.cnots}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse_table(cls, text: str):
        rows = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            index, label, grad, energy, cnots = line.split()
            rows.append((int(index), label, float(grad), float(energy), int(cnots)))
        return rows


def pool_gradients(state: QuantumState, H: PauliSum, pool: OperatorPool) -> np.ndarray:
    """g_k = <psi|[H, tau_k]|psi> = 2 Re <psi|H tau_k|psi> for anti-Hermitian tau."""
    if state.n_qubits != H.n_qubits or state.n_qubits != pool.n_qubits:
        raise ValidationError("dimension mismatch in pool gradients")
    vec = state.amplitudes
    phi = H.to_dense() @ vec if H.n_qubits <= 12 else _matvec_sum(H, vec)
    grads = np.empty(len(pool.operators))
    for k, op in enumerate(pool.operators):
        tau, _ = op.matrices()
        value = 2.0 * np.vdot(phi, tau @ vec)
        grads[k] = value.real
    return grads


def _matvec_sum(H: PauliSum, vec: np.ndarray) -> np.ndarray:
    out = np.zeros_like(vec)
    for string, coef in H:
        perm, phase = string.action_table()
        out += coef * (phase * vec)[perm]
    return out


def _optimize(ansatz: CompiledAnsatz, h_dense: np.ndarray, reference: np.ndarray,
              x0: np.ndarray, opt: OptimizerConfig) -> tuple[float, np.ndarray, bool]:
    result = scipy.optimize.minimize(
        lambda x: ansatz.energy_and_gradient(x, h_dense, reference),
        x0=x0, jac=True, method="L-BFGS-B",
        options={"maxfun": opt.max_evals, "maxiter": opt.max_evals,
                 "ftol": opt.ftol, "gtol": opt.gtol})
    return float(result.fun), np.asarray(result.x), bool(np.isfinite(result.fun))


def adapt_vqe(H: PauliSum, reference: QuantumState, pool: OperatorPool,
              grad_threshold: float = 1e-8, max_depth: int = 200,
              opt: OptimizerConfig = OptimizerConfig()) -> AdaptResult:
    """Gradient-greedy ansatz growth from an arbitrary reference state.

    Each iteration appends the pool operator with the largest energy
    gradient magnitude (ties break to the earliest canonical label) and
    re-optimizes every parameter from the previous optimum; the full
    Hamiltonian drives both selection and optimization.
    """
    if grad_threshold <= 0:
        raise ValidationError("gradient threshold must be positive")
    h_dense = H.to_dense()
    ref_vec = reference.amplitudes
    ansatz = CompiledAnsatz([], H.n_qubits)
    thetas = np.zeros(0)
    state = reference
    energy = float(np.vdot(ref_vec, h_dense @ ref_vec).real)
    reference_energy = energy
    iterations: list[AdaptIteration] = []
    labels: list[str] = []
    cnots = 0
    converged = False
    reason = "max_depth"
    jitter_rng = np.random.default_rng(opt.seed)

    for index in range(1, max_depth + 1):
        grads = pool_gradients(state, H, pool)
        gmax = float(np.max(np.abs(grads)))
        if gmax < grad_threshold:
            converged = True
            reason = "gradient_threshold"
            break
        pick = int(np.argmax(np.abs(grads)))
        op = pool.operators[pick]
        ansatz.append(op)
        x0 = np.concatenate([thetas, [0.0]])
        new_energy, x_opt, ok = _optimize(ansatz, h_dense, ref_vec, x0, opt)
        if not ok:
            jitter = x0 + 1e-2 * jitter_rng.standard_normal(len(x0))
            new_energy, x_opt, ok = _optimize(ansatz, h_dense, ref_vec, jitter, opt)
            if not ok:
                reason = "optimizer_failure"
                log.error("ADAPT optimizer failed twice at depth %d", index)
                break
        thetas = x_opt
        energy = new_energy
        cnots += op.cnot_cost
        labels.append(op.label)
        vec = ansatz.apply(ref_vec.copy(), thetas)
        state = QuantumState(H.n_qubits, vec / np.linalg.norm(vec))
        iterations.append(AdaptIteration(index=index, label=op.label,
                                         max_gradient=gmax,
                                         params=tuple(float(t) for t in thetas),
                                         energy=energy, cnots=cnots))

    return AdaptResult(iterations=tuple(iterations), final_energy=energy,
                       final_params=tuple(float(t) for t in thetas),
                       labels=tuple(labels), converged=converged, reason=reason,
                       reference_energy=reference_energy, pool_kind=pool.kind,
                       cnots=cnots)


def uccgsd_vqe(H: PauliSum, reference: QuantumState, part: Partition,
               opt: OptimizerConfig = OptimizerConfig(),
               pool: OperatorPool | None = None) -> AdaptResult:
    """One disentangled product over the full GSD pool in canonical order,
    all parameters optimized jointly; best of `opt.restarts` random
    initializations wins (ties to the earliest restart)."""
    if pool is None:
        pool = build_pool(part, H.n_qubits, "fermionic_gsd_full")
    h_dense = H.to_dense()
    ref_vec = reference.amplitudes
    ansatz = CompiledAnsatz(list(pool.operators), H.n_qubits)
    reference_energy = float(np.vdot(ref_vec, h_dense @ ref_vec).real)

    best: tuple[float, int, np.ndarray] | None = None
    energies = []
    for k, x0 in enumerate(opt.initial_points(ansatz.n_params)):
        energy, x_opt, ok = _optimize(ansatz, h_dense, ref_vec, x0, opt)
        if not ok:
            log.warning("UCCGSD restart %d diverged; discarded", k)
            continue
        energies.append(energy)
        if best is None or (energy, k) < (best[0], best[1]):
            best = (energy, k, x_opt)
    if best is None:
        raise RuntimeError("all UCCGSD restarts failed")
    energy, _, params = best
    cnots = sum(op.cnot_cost for op in pool.operators)
    iteration = AdaptIteration(index=1, label=f"uccgsd[{len(pool.operators)}]",
                               max_gradient=float("nan"),
                               params=tuple(float(t) for t in params),
                               energy=energy, cnots=cnots)
    return AdaptResult(iterations=(iteration,), final_energy=energy,
                       final_params=tuple(float(t) for t in params),
                       labels=pool.labels(), converged=True, reason="single_shot",
                       reference_energy=reference_energy, pool_kind=pool.kind,
                       cnots=cnots, restart_energies=tuple(energies))


def ansatz_state(result: AdaptResult, pool: OperatorPool,
                 reference: QuantumState) -> QuantumState:
    """Re-materialize the optimized state from a result's labels/params."""
    by_label = {op.label: op for op in pool.operators}
    ansatz = CompiledAnsatz([by_label[lbl] for lbl in result.labels], pool.n_qubits)
    vec = ansatz.apply(reference.amplitudes.copy(), np.asarray(result.final_params))
    return QuantumState(pool.n_qubits, vec / np.linalg.norm(vec))
