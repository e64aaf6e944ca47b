"""State-specific CASSCF: FCI in the active space plus quasi-Newton orbital
rotations with the analytic generalized-Fock gradient."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .active import active_space_integrals
from .fci import CasSolver


@dataclass
class CasscfResult:
    energy: float
    mo_coeff: np.ndarray
    core: list[int]
    active: list[int]
    converged: bool
    gradient_norm: float
    n_iterations: int
    ci_vector: np.ndarray


def _pair_list(core, active, virtual):
    pairs = []
    for i in core:
        for t in active:
            pairs.append((i, t))
    for i in core:
        for a in virtual:
            pairs.append((i, a))
    for t in active:
        for a in virtual:
            pairs.append((t, a))
    return pairs


def _expand_kappa(x, pairs, n):
    K = np.zeros((n, n))
    for value, (p, q) in zip(x, pairs):
        K[p, q] = value
        K[q, p] = -value
    return K


def _gradient(hcore, eri_ao, C, core, active, gamma, big):
    """g_pq = 2 (F_pq - F_qp) with the generalized Fock matrix."""
    n = C.shape[1]
    C_core = C[:, core]
    C_act = C[:, active]

    P_core = 2.0 * C_core @ C_core.T
    J = np.einsum("ijkl,kl->ij", eri_ao, P_core, optimize=True)
    K = np.einsum("ikjl,kl->ij", eri_ao, P_core, optimize=True)
    f_inact_ao = hcore + J - 0.5 * K
    f_inact = C.T @ f_inact_ao @ C

    # active mean field: D_act in AO, then F^A_mn = sum_tu gamma_tu [(mn|tu) - (mt|un)/2]
    D_act = C_act @ gamma @ C_act.T
    Ja = np.einsum("ijkl,kl->ij", eri_ao, D_act, optimize=True)
    Ka = np.einsum("ikjl,kl->ij", eri_ao, D_act, optimize=True)
    f_act = C.T @ (Ja - 0.5 * Ka) @ C

    # (mu|vw) for the Q coupling
    A_mu = np.einsum("pqrs,pm,qu->murs", eri_ao, C, C_act, optimize=True)
    T = np.einsum("murs,rv,sw->muvw", A_mu, C_act, C_act, optimize=True)
    Q = np.einsum("tuvw,muvw->tm", big, T, optimize=True)

    F = np.zeros((n, n))
    for i in core:
        F[i, :] = 2.0 * (f_inact[:, i] + f_act[:, i])
    # active rows: F_tm = sum_u gamma_tu FI_mu + Q_tm
    fi_act_cols = f_inact[:, active]           # (m, u)
    F_act_rows = gamma @ fi_act_cols.T + Q     # (t, m)
    for a_idx, t in enumerate(active):
        F[t, :] = F_act_rows[a_idx]
    # sign matches the C -> C exp(K) parameterization used by the optimizer
    return 2.0 * (F.T - F)


def casscf(hcore, eri_ao, e_nuc, mo_coeff, core, active, n_alpha, n_beta,
           max_iterations: int = 300, grad_tol: float = 1e-7,
           max_step: float = 0.25, singlet: bool = True):
    """Two-step CASSCF; returns CasscfResult. Raises on non-convergence."""
    C = mo_coeff.copy()
    n = C.shape[1]
    core = list(core)
    active = list(active)
    virtual = [m for m in range(n) if m not in core and m not in active]
    pairs = _pair_list(core, active, virtual)
    solver = CasSolver(len(active), n_alpha, n_beta)

    def solve_at(C_now):
        h_eff, g_act, e_core = active_space_integrals(hcore, eri_ao, C_now,
                                                      core, active, e_nuc)
        if singlet:
            e_ci, vec = solver.lowest_singlet(h_eff, g_act)
        else:
            e_ci, vec = solver.ground(h_eff, g_act)
        return e_ci + e_core, vec

    energy, vec = solve_at(C)
    hess_inv = None
    g_prev = None
    x_prev = None
    grad_norm = np.inf
    for iteration in range(1, max_iterations + 1):
        gamma, big = solver.rdms(vec)
        G = _gradient(hcore, eri_ao, C, core, active, gamma, big)
        g = np.array([G[p, q] for p, q in pairs])
        grad_norm = float(np.max(np.abs(g))) if len(g) else 0.0
        if grad_norm < grad_tol:
            return CasscfResult(energy=float(energy), mo_coeff=C, core=core,
                                active=active, converged=True,
                                gradient_norm=grad_norm,
                                n_iterations=iteration, ci_vector=vec)
        if hess_inv is None:
            hess_inv = np.eye(len(pairs)) / 4.0
        if g_prev is not None:
            s = x_prev
            y = g - g_prev
            sy = float(s @ y)
            if sy > 1e-12:
                # BFGS inverse update in the evolving frame
                rho = 1.0 / sy
                I = np.eye(len(pairs))
                V = I - rho * np.outer(s, y)
                hess_inv = V @ hess_inv @ V.T + rho * np.outer(s, s)
        step = -hess_inv @ g
        norm = np.linalg.norm(step)
        if norm > max_step:
            step *= max_step / norm

        scale = 1.0
        for _ in range(8):
            K = _expand_kappa(scale * step, pairs, n)
            C_trial = C @ scipy.linalg.expm(K)
            e_trial, vec_trial = solve_at(C_trial)
            if e_trial < energy + 1e-12:
                break
            scale *= 0.5
        else:
            # reset curvature information and fall back to steepest descent
            hess_inv = None
            g_prev = None
            scale = min(0.05 / (grad_norm + 1e-12), 1.0)
            K = _expand_kappa(-scale * g, pairs, n)
            C_trial = C @ scipy.linalg.expm(K)
            e_trial, vec_trial = solve_at(C_trial)
            x_prev = -scale * g
            C, energy, vec = C_trial, e_trial, vec_trial
            continue

        x_prev = scale * step
        g_prev = g
        C, energy, vec = C_trial, e_trial, vec_trial
    raise RuntimeError(f"CASSCF did not converge (|g|={grad_norm:.2e})")
