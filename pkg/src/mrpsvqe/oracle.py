"""Exact-diagonalization reference and wavefunction diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .integrals import Partition
from .pauli import FermionOperator, PauliSum, jw_transform
from .simulator import QuantumState

DENSE_LIMIT = 12  # qubits; beyond this an iterative extremal eigensolver is used


@dataclass(frozen=True)
class SpectrumResult:
    ground_energy: float
    ground_state: QuantumState
    eigenvalues: np.ndarray | None = None


def _fix_phase(vec: np.ndarray) -> np.ndarray:
    pivot = int(np.argmax(np.abs(vec)))
    phase = vec[pivot] / abs(vec[pivot])
    return vec * np.conj(phase)


def _to_sparse(H: PauliSum) -> scipy.sparse.csr_matrix:
    dim = 1 << H.n_qubits
    idx = np.arange(dim)
    acc = scipy.sparse.csr_matrix((dim, dim), dtype=complex)
    for string, coef in H.terms.items():
        perm, phase = string.action_table()
        acc = acc + scipy.sparse.csr_matrix((coef * phase, (perm, idx)), shape=(dim, dim))
    return acc


def exact_ground_state(H: PauliSum, n_eigenvalues: int = 1) -> SpectrumResult:
    """Lowest eigenpair of a Hermitian PauliSum.

    Dense diagonalization up to DENSE_LIMIT qubits, Lanczos beyond. The
    eigenvector phase is fixed deterministically (largest-magnitude
    amplitude made real positive).
    """
    if not H.is_hermitian():
        raise ValueError("exact_ground_state requires a Hermitian operator")
    if H.n_qubits <= DENSE_LIMIT:
        mat = H.to_dense()
        eigenvalues, eigenvectors = np.linalg.eigh(mat)
        ground = _fix_phase(eigenvectors[:, 0])
        lows = eigenvalues[: max(1, n_eigenvalues)]
        energy = float(eigenvalues[0])
    else:
        sp = _to_sparse(H)
        k = max(1, n_eigenvalues)
        eigenvalues, eigenvectors = scipy.sparse.linalg.eigsh(sp, k=k, which="SA")
        order = np.argsort(eigenvalues)
        ground = _fix_phase(eigenvectors[:, order[0]])
        lows = eigenvalues[order][:k]
        energy = float(eigenvalues[order[0]])
    state = QuantumState(H.n_qubits, ground / np.linalg.norm(ground))
    residual = np.linalg.norm(_matvec(H, state.amplitudes) - energy * state.amplitudes)
    if residual > 1e-9 * max(1.0, abs(energy)):
        raise ArithmeticError(f"eigenpair residual {residual} too large")
    return SpectrumResult(energy, state, lows)


def _matvec(H: PauliSum, vec: np.ndarray) -> np.ndarray:
    if H.n_qubits <= DENSE_LIMIT:
        return H.to_dense() @ vec
    out = np.zeros_like(vec)
    for string, coef in H.terms.items():
        perm, phase = string.action_table()
        out += coef * (phase * vec)[perm]
    return out


def fidelity(a: QuantumState, b: QuantumState) -> float:
    """|<a|b>|^2; insensitive to the global phase of either argument."""
    if a.n_qubits != b.n_qubits:
        raise ValueError("state dimension mismatch")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def one_rdm(state: QuantumState, n_orb: int, part: Partition) -> np.ndarray:
    """Spin-traced one-particle reduced density matrix D_pq = sum_s <a+_ps a_qs>."""
    if state.n_qubits != 2 * n_orb:
        raise ValueError("state does not cover 2*n_orb spin orbitals")
    qubit = part.qubit_map()
    dm = np.zeros((n_orb, n_orb), dtype=complex)
    vec = state.amplitudes
    for p in range(n_orb):
        for q in range(p, n_orb):
            value = 0.0 + 0.0j
            for spin in (0, 1):
                op = FermionOperator.from_term(
                    1.0, ((qubit[(p, spin)], True), (qubit[(q, spin)], False)))
                image = jw_transform(op, state.n_qubits)
                for string, coef in image.terms.items():
                    perm, phase = string.action_table()
                    value += coef * np.vdot(vec, (phase * vec)[perm])
            dm[p, q] = value
            dm[q, p] = np.conj(value)
    if np.max(np.abs(dm.imag)) > 1e-8:
        raise ArithmeticError("one-RDM has a large imaginary part")
    return dm.real


def natural_occupations(dm: np.ndarray) -> np.ndarray:
    """Eigenvalues of the spin-traced 1-RDM, descending, clipped at -1e-8."""
    occ = np.linalg.eigvalsh(dm)[::-1]
    if np.any(occ < -1e-8):
        raise ArithmeticError(f"negative natural occupation {occ.min()}")
    return occ


def shannon_entropy(occupations, normalized: bool = False) -> float:
    """S = -sum_i n_i ln n_i over natural occupations (n_i in [0, 2] as-is).

    `normalized` divides occupations by two first; used for cross-checks
    only, never for the headline ordering.
    """
    eps = 1e-12
    total = 0.0
    for n in occupations:
        if n < -1e-8:
            raise ValueError(f"negative occupation {n}")
        x = n / 2.0 if normalized else float(n)
        if x > eps:
            total -= x * np.log(x)
    return total


def npe(errors) -> float:
    """Non-parallelity error: max minus min of per-geometry energy errors."""
    values = [float(e) for e in errors]
    if len(values) < 2:
        raise ValueError("need at least two points for an NPE")
    return max(values) - min(values)
