"""McMurchie-Davidson one- and two-electron integrals over contracted
Cartesian Gaussians (numba-compiled kernels)."""

from __future__ import annotations

import numpy as np
from numba import njit

from .basis import ATOMIC_NUMBER, BasisFunction

LMAX = 2  # highest per-function angular momentum we ever need is p


@njit(cache=True)
def _boys(m_max: int, T: float) -> np.ndarray:
    out = np.empty(m_max + 1)
    if T < 1e-13:
        for m in range(m_max + 1):
            out[m] = 1.0 / (2 * m + 1)
        return out
    if T > 35.0:
        # asymptotic for the top order, downward recursion below
        top = 0.5 * np.sqrt(np.pi / T)
        for m in range(1, m_max + 1):
            top *= (2 * m - 1) / (2.0 * T)
        out[m_max] = top
    else:
        # convergent series for F_{m_max}
        num = 1.0
        den = 2.0 * m_max + 1.0
        term = 1.0 / den
        total = term
        k = 0
        while term > 1e-17 * total and k < 400:
            k += 1
            num *= 2.0 * T
            den *= 2.0 * m_max + 2.0 * k + 1.0
            term = num / den
            total += term
        out[m_max] = np.exp(-T) * total
    emt = np.exp(-T)
    for m in range(m_max - 1, -1, -1):
        out[m] = (2.0 * T * out[m + 1] + emt) / (2 * m + 1)
    return out


@njit(cache=True)
def _hermite_e(l1: int, l2: int, ab: float, a: float, b: float) -> np.ndarray:
    """Hermite expansion table E[i, j, t] for one Cartesian direction."""
    p = a + b
    q = a * b / p
    table = np.zeros((l1 + 1, l2 + 1, l1 + l2 + 1))
    table[0, 0, 0] = np.exp(-q * ab * ab)
    for i in range(1, l1 + 1):
        for t in range(i + 1):
            val = 0.0
            if t > 0:
                val += table[i - 1, 0, t - 1] / (2.0 * p)
            val += -(b / p) * ab * table[i - 1, 0, t]
            if t + 1 <= i - 1:
                val += (t + 1) * table[i - 1, 0, t + 1]
            table[i, 0, t] = val
    for j in range(1, l2 + 1):
        for i in range(l1 + 1):
            for t in range(i + j + 1):
                val = 0.0
                if t > 0:
                    val += table[i, j - 1, t - 1] / (2.0 * p)
                val += (a / p) * ab * table[i, j - 1, t]
                if t + 1 <= i + j - 1:
                    val += (t + 1) * table[i, j - 1, t + 1]
                table[i, j, t] = val
    return table


@njit(cache=True)
def _hermite_r(t_max: int, u_max: int, v_max: int, p: float,
               pc: np.ndarray) -> np.ndarray:
    """Hermite Coulomb integrals R^0_{tuv} via auxiliary-order recursion."""
    n_max = t_max + u_max + v_max
    T = p * (pc[0] * pc[0] + pc[1] * pc[1] + pc[2] * pc[2])
    boys = _boys(n_max, T)
    table = np.zeros((n_max + 1, t_max + 1, u_max + 1, v_max + 1))
    for n in range(n_max + 1):
        table[n, 0, 0, 0] = (-2.0 * p) ** n * boys[n]
    for t in range(1, t_max + 1):
        for n in range(n_max - t + 1):
            val = pc[0] * table[n + 1, t - 1, 0, 0]
            if t > 1:
                val += (t - 1) * table[n + 1, t - 2, 0, 0]
            table[n, t, 0, 0] = val
    for u in range(1, u_max + 1):
        for t in range(t_max + 1):
            for n in range(n_max - t - u + 1):
                val = pc[1] * table[n + 1, t, u - 1, 0]
                if u > 1:
                    val += (u - 1) * table[n + 1, t, u - 2, 0]
                table[n, t, u, 0] = val
    for v in range(1, v_max + 1):
        for u in range(u_max + 1):
            for t in range(t_max + 1):
                for n in range(n_max - t - u - v + 1):
                    val = pc[2] * table[n + 1, t, u, v - 1]
                    if v > 1:
                        val += (v - 1) * table[n + 1, t, u, v - 2]
                    table[n, t, u, v] = val
    return table[0]


@njit(cache=True)
def _overlap_prim(a, la, A, b, lb, B):
    p = a + b
    s = (np.pi / p) ** 1.5
    for d in range(3):
        e = _hermite_e(la[d], lb[d], A[d] - B[d], a, b)
        s *= e[la[d], lb[d], 0]
    return s


@njit(cache=True)
def _kinetic_prim(a, la, A, b, lb, B):
    p = a + b
    pref = (np.pi / p) ** 0.5
    s = np.empty(3)
    t = np.empty(3)
    for d in range(3):
        l2 = lb[d]
        e = _hermite_e(la[d], l2 + 2, A[d] - B[d], a, b)
        s_d = e[la[d], l2, 0] * pref
        term = -2.0 * b * b * e[la[d], l2 + 2, 0]
        term += b * (2 * l2 + 1) * e[la[d], l2, 0]
        if l2 >= 2:
            term -= 0.5 * l2 * (l2 - 1) * e[la[d], l2 - 2, 0]
        s[d] = s_d
        t[d] = term * pref
    return t[0] * s[1] * s[2] + s[0] * t[1] * s[2] + s[0] * s[1] * t[2]


@njit(cache=True)
def _nuclear_prim(a, la, A, b, lb, B, C):
    p = a + b
    P = (a * A + b * B) / p
    ex = _hermite_e(la[0], lb[0], A[0] - B[0], a, b)
    ey = _hermite_e(la[1], lb[1], A[1] - B[1], a, b)
    ez = _hermite_e(la[2], lb[2], A[2] - B[2], a, b)
    tm, um, vm = la[0] + lb[0], la[1] + lb[1], la[2] + lb[2]
    r = _hermite_r(tm, um, vm, p, P - C)
    total = 0.0
    for t in range(tm + 1):
        for u in range(um + 1):
            for v in range(vm + 1):
                total += (ex[la[0], lb[0], t] * ey[la[1], lb[1], u]
                          * ez[la[2], lb[2], v] * r[t, u, v])
    return 2.0 * np.pi / p * total


@njit(cache=True)
def _eri_prim(a, la, A, b, lb, B, c, lc, C, d, ld, D):
    p = a + b
    q = c + d
    alpha = p * q / (p + q)
    P = (a * A + b * B) / p
    Q = (c * C + d * D) / q
    e1x = _hermite_e(la[0], lb[0], A[0] - B[0], a, b)
    e1y = _hermite_e(la[1], lb[1], A[1] - B[1], a, b)
    e1z = _hermite_e(la[2], lb[2], A[2] - B[2], a, b)
    e2x = _hermite_e(lc[0], ld[0], C[0] - D[0], c, d)
    e2y = _hermite_e(lc[1], ld[1], C[1] - D[1], c, d)
    e2z = _hermite_e(lc[2], ld[2], C[2] - D[2], c, d)
    t1, u1, v1 = la[0] + lb[0], la[1] + lb[1], la[2] + lb[2]
    t2, u2, v2 = lc[0] + ld[0], lc[1] + ld[1], lc[2] + ld[2]
    r = _hermite_r(t1 + t2, u1 + u2, v1 + v2, alpha, P - Q)
    total = 0.0
    for t in range(t1 + 1):
        for u in range(u1 + 1):
            for v in range(v1 + 1):
                w1 = (e1x[la[0], lb[0], t] * e1y[la[1], lb[1], u]
                      * e1z[la[2], lb[2], v])
                if w1 == 0.0:
                    continue
                for tt in range(t2 + 1):
                    for uu in range(u2 + 1):
                        for vv in range(v2 + 1):
                            w2 = (e2x[lc[0], ld[0], tt] * e2y[lc[1], ld[1], uu]
                                  * e2z[lc[2], ld[2], vv])
                            if w2 == 0.0:
                                continue
                            sign = 1.0 if (tt + uu + vv) % 2 == 0 else -1.0
                            total += w1 * w2 * sign * r[t + tt, u + uu, v + vv]
    return 2.0 * np.pi ** 2.5 / (p * q * np.sqrt(p + q)) * total


@njit(cache=True)
def _build_one_electron(centers, lmns, starts, counts, alphas, coefs,
                        atom_coords, atom_charges):
    n = centers.shape[0]
    S = np.zeros((n, n))
    T = np.zeros((n, n))
    V = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            s = t = v = 0.0
            for ip in range(starts[i], starts[i] + counts[i]):
                for jp in range(starts[j], starts[j] + counts[j]):
                    cc = coefs[ip] * coefs[jp]
                    s += cc * _overlap_prim(alphas[ip], lmns[i], centers[i],
                                            alphas[jp], lmns[j], centers[j])
                    t += cc * _kinetic_prim(alphas[ip], lmns[i], centers[i],
                                            alphas[jp], lmns[j], centers[j])
                    for k in range(atom_coords.shape[0]):
                        v -= atom_charges[k] * cc * _nuclear_prim(
                            alphas[ip], lmns[i], centers[i],
                            alphas[jp], lmns[j], centers[j], atom_coords[k])
            S[i, j] = S[j, i] = s
            T[i, j] = T[j, i] = t
            V[i, j] = V[j, i] = v
    return S, T, V


@njit(cache=True)
def _build_eri(centers, lmns, starts, counts, alphas, coefs):
    n = centers.shape[0]
    eri = np.zeros((n, n, n, n))
    for i in range(n):
        for j in range(i + 1):
            for k in range(i + 1):
                l_top = j if k == i else k
                for l in range(l_top + 1):
                    total = 0.0
                    for ip in range(starts[i], starts[i] + counts[i]):
                        for jp in range(starts[j], starts[j] + counts[j]):
                            cij = coefs[ip] * coefs[jp]
                            for kp in range(starts[k], starts[k] + counts[k]):
                                for lp in range(starts[l], starts[l] + counts[l]):
                                    total += cij * coefs[kp] * coefs[lp] * _eri_prim(
                                        alphas[ip], lmns[i], centers[i],
                                        alphas[jp], lmns[j], centers[j],
                                        alphas[kp], lmns[k], centers[k],
                                        alphas[lp], lmns[l], centers[l])
                    eri[i, j, k, l] = total
                    eri[j, i, k, l] = total
                    eri[i, j, l, k] = total
                    eri[j, i, l, k] = total
                    eri[k, l, i, j] = total
                    eri[l, k, i, j] = total
                    eri[k, l, j, i] = total
                    eri[l, k, j, i] = total
    return eri


def _pack(functions: list[BasisFunction]):
    n = len(functions)
    centers = np.array([f.center for f in functions])
    lmns = np.array([f.lmn for f in functions], dtype=np.int64)
    counts = np.array([len(f.exponents) for f in functions], dtype=np.int64)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]]).astype(np.int64)
    alphas = np.concatenate([f.exponents for f in functions])
    coefs = np.concatenate([f.coefficients for f in functions])
    return centers, lmns, starts, counts, alphas, coefs


def one_electron_matrices(functions, symbols, coords_bohr):
    """(S, T, V) over contracted functions; V includes all nuclei."""
    centers, lmns, starts, counts, alphas, coefs = _pack(functions)
    atom_coords = np.asarray(coords_bohr, dtype=float)
    charges = np.array([ATOMIC_NUMBER[s] for s in symbols], dtype=float)
    return _build_one_electron(centers, lmns, starts, counts, alphas, coefs,
                               atom_coords, charges)


def electron_repulsion(functions):
    """Chemist-notation (ij|kl) tensor over contracted functions."""
    centers, lmns, starts, counts, alphas, coefs = _pack(functions)
    return _build_eri(centers, lmns, starts, counts, alphas, coefs)
