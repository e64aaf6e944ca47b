"""Determinant-basis FCI in a small active space, with spin-free RDMs.

Used both as the CASSCF inner solver and as the backend's own exactness
check; independent of the consumer package's qubit machinery.
"""

from __future__ import annotations

import itertools

import numpy as np


def _apply(ops, det: frozenset, coef: float):
    occ = set(det)
    sign = 1.0
    for index, creation in reversed(ops):
        below = sum(1 for o in occ if o < index)
        if creation:
            if index in occ:
                return None
            occ.add(index)
        else:
            if index not in occ:
                return None
            occ.remove(index)
        if below % 2:
            sign = -sign
    return coef * sign, frozenset(occ)


def _sector(n_so: int, n_alpha: int, n_beta: int):
    alpha = [frozenset(2 * i for i in c)
             for c in itertools.combinations(range(n_so // 2), n_alpha)]
    beta = [frozenset(2 * i + 1 for i in c)
            for c in itertools.combinations(range(n_so // 2), n_beta)]
    return [a | b for a in alpha for b in beta]


def _terms(h: np.ndarray, g: np.ndarray):
    n = h.shape[0]
    terms = []
    for p in range(n):
        for q in range(n):
            if h[p, q] != 0.0:
                for s in (0, 1):
                    terms.append((h[p, q], ((2 * p + s, True), (2 * q + s, False))))
    for p in range(n):
        for q in range(n):
            for r in range(n):
                for s_ in range(n):
                    v = g[p, q, r, s_]
                    if v == 0.0:
                        continue
                    for s1 in (0, 1):
                        for s2 in (0, 1):
                            a, b = 2 * p + s1, 2 * r + s2
                            c, d = 2 * s_ + s2, 2 * q + s1
                            if a == b or c == d:
                                continue
                            terms.append((0.5 * v, ((a, True), (b, True),
                                                    (c, False), (d, False))))
    return terms


class CasSolver:
    """FCI over an (n_orb, n_elec) active space Hamiltonian (chemist g)."""

    def __init__(self, n_orb: int, n_alpha: int, n_beta: int):
        self.n_orb = n_orb
        self.n_alpha = n_alpha
        self.n_beta = n_beta
        self.dets = _sector(2 * n_orb, n_alpha, n_beta)
        self.index = {d: i for i, d in enumerate(self.dets)}

    def hamiltonian(self, h: np.ndarray, g: np.ndarray) -> np.ndarray:
        dim = len(self.dets)
        mat = np.zeros((dim, dim))
        for j, det in enumerate(self.dets):
            for coef, ops in _terms(h, g):
                hit = _apply(ops, det, coef)
                if hit is not None:
                    value, out = hit
                    i = self.index.get(out)
                    if i is not None:
                        mat[i, j] += value
        return mat

    def s_squared(self) -> np.ndarray:
        """S^2 matrix over the sector basis (hbar = 1)."""
        dim = len(self.dets)
        sz = (self.n_alpha - self.n_beta) / 2.0
        mat = np.zeros((dim, dim))
        for j, det in enumerate(self.dets):
            mat[j, j] += sz * (sz + 1.0)
            # S- S+ = sum_pq a+_{p beta} a_{p alpha} a+_{q alpha} a_{q beta}
            for p in range(self.n_orb):
                for q in range(self.n_orb):
                    ops = ((2 * p + 1, True), (2 * p, False),
                           (2 * q, True), (2 * q + 1, False))
                    hit = _apply(ops, det, 1.0)
                    if hit is not None:
                        value, out = hit
                        i = self.index.get(out)
                        if i is not None:
                            mat[i, j] += value
        return mat

    def lowest_singlet(self, h: np.ndarray, g: np.ndarray):
        """(energy, CI vector) of the lowest root with <S^2> < 0.1."""
        mat = self.hamiltonian(h, g)
        eigenvalues, eigenvectors = np.linalg.eigh(mat)
        s2 = self.s_squared()
        for k in range(len(eigenvalues)):
            vec = eigenvectors[:, k]
            if float(vec @ s2 @ vec) < 0.1:
                return float(eigenvalues[k]), vec
        raise RuntimeError("no singlet root found in the sector")

    def ground(self, h: np.ndarray, g: np.ndarray):
        mat = self.hamiltonian(h, g)
        eigenvalues, eigenvectors = np.linalg.eigh(mat)
        return float(eigenvalues[0]), eigenvectors[:, 0]

    def rdms(self, vec: np.ndarray):
        """Spin-free (gamma_tu, Gamma_tuvw) with the chemist pairing
        Gamma_tuvw = sum_{s1 s2} <a+_{t s1} a+_{v s2} a_{w s2} a_{u s1}>."""
        n = self.n_orb
        gamma = np.zeros((n, n))
        big = np.zeros((n, n, n, n))
        dim = len(self.dets)
        for t in range(n):
            for u in range(n):
                for s in (0, 1):
                    acc = 0.0
                    for j, det in enumerate(self.dets):
                        if vec[j] == 0.0:
                            continue
                        hit = _apply(((2 * t + s, True), (2 * u + s, False)),
                                     det, vec[j])
                        if hit is not None:
                            value, out = hit
                            i = self.index.get(out)
                            if i is not None:
                                acc += vec[i] * value
                    gamma[t, u] += acc
        for t in range(n):
            for u in range(n):
                for v in range(n):
                    for w in range(n):
                        acc = 0.0
                        for s1 in (0, 1):
                            for s2 in (0, 1):
                                a, b = 2 * t + s1, 2 * v + s2
                                c, d = 2 * w + s2, 2 * u + s1
                                if a == b or c == d:
                                    continue
                                for j, det in enumerate(self.dets):
                                    if vec[j] == 0.0:
                                        continue
                                    hit = _apply(((a, True), (b, True),
                                                  (c, False), (d, False)),
                                                 det, vec[j])
                                    if hit is not None:
                                        value, out = hit
                                        i = self.index.get(out)
                                        if i is not None:
                                            acc += vec[i] * value
                        big[t, u, v, w] = acc
        return gamma, big

    def energy_from_rdms(self, h, g, gamma, big) -> float:
        return float(np.einsum("tu,tu->", h, gamma)
                     + 0.5 * np.einsum("tuvw,tuvw->", g, big))
