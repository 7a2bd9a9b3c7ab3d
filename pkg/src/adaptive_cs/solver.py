"""ADMM solvers for basis pursuit and l1-l1 minimization.

All problems share the consensus form::

    minimize  g(z) + indicator_C(x)   subject to  x = z

with ``g(x) = ||x||_1 + beta * ||x - w||_1`` (``beta`` is 0 for basis pursuit,
1 for l1-l1) and ``C`` either the affine set ``{x : Ax = y}`` or the tube
``{x : ||Ax - y||_2 <= sigma}``. Projections onto ``C`` reuse one
eigendecomposition of ``A A^T``.

Because ``g`` is piecewise linear, the equality-constrained problems have
solutions at vertices of its kink arrangement. The solvers periodically
freeze the coordinates that ADMM has placed on kinks, solve for the rest, and
accept the result only if an exact dual certificate exists.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "SolveReport",
    "SolveSettings",
    "basis_pursuit",
    "l1l1_min",
    "l1l1_min_noisy",
    "prox_l1",
    "prox_l1l1",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolveSettings:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_iters: int = 20000
    penalty: float = 1.0
    over_relaxation: float = 1.0
    # vertex polishing (equality constraints only)
    polish: bool = True
    polish_every: int = 20

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.penalty > 0:
            raise ValueError("penalty must be positive")
        if not 1.0 <= self.over_relaxation < 2.0:
            raise ValueError("over_relaxation must lie in [1, 2)")


@dataclass
class SolveReport:
    """Result of a solve.

    ``primal_residual`` and ``dual_residual`` are the ADMM residuals, unless
    ``polished`` is set, in which case they are the constraint violation and
    the dual-certificate violation of the polished vertex.
    """

    x_hat: np.ndarray
    iterations: int
    primal_residual: float
    dual_residual: float
    objective: float
    converged: bool
    polished: bool = False


def prox_l1(v, t):
    """Soft thresholding: proximal map of ``t * ||x||_1``."""
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def prox_l1l1(v, w, t):
    """Proximal map of ``x -> ||x||_1 + ||x - w||_1`` with step ``t``.

    Per component the function has slope -2 left of ``min(0, w)``, 0 between
    the two kinks and +2 right of ``max(0, w)``, so the minimizer of
    ``|x| + |x - w| + (x - v)**2 / (2t)`` shifts ``v`` by ``2t`` outside the
    kinks and clips it onto ``[min(0, w), max(0, w)]`` otherwise.
    """
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if not t > 0:
        raise ValueError("t must be positive")
    lo = np.minimum(0.0, w)
    hi = np.maximum(0.0, w)
    return np.where(v < lo - 2.0 * t, v + 2.0 * t,
                    np.where(v > hi + 2.0 * t, v - 2.0 * t, np.clip(v, lo, hi)))


def _objective(x, w, beta):
    val = np.abs(x).sum()
    if beta:
        val += np.abs(x - w).sum()
    return float(val)


class _Constraint:
    """Projections onto ``{Ax = y}`` and ``{||Ax - y|| <= sigma}``.

    With ``A A^T = U diag(s^2) U^T`` and ``V = A^T U diag(1/s)`` (orthonormal
    columns spanning the row space of ``A``), both projections act only on
    the coordinates ``V^T x``.
    """

    def __init__(self, A, y):
        A = np.asarray(A, dtype=float)
        ev, U = np.linalg.eigh(A @ A.T)
        if ev[0] <= ev[-1] * 1e-14:
            raise np.linalg.LinAlgError("measurement matrix is rank deficient")
        self.A = A
        self.y = y
        self.U = U
        self.s = np.sqrt(ev)
        self.V = (A.T @ U) / self.s
        self.y_rot = U.T @ y
        # least-norm solution of Ax = y
        self.x_ls = self.V @ (self.y_rot / self.s)

    def project(self, v, sigma=0.0):
        c = self.V.T @ v
        if sigma == 0.0:
            return v - self.V @ c + self.x_ls
        r0 = self.s * c - self.y_rot
        norm_r0 = np.linalg.norm(r0)
        if norm_r0 <= sigma:
            return v
        s2 = self.s ** 2

        def excess(log_mu):
            mu = np.exp(log_mu)
            return np.log(np.linalg.norm(r0 / (1.0 + mu * s2))) - np.log(sigma)

        hi = np.log(max((norm_r0 / sigma - 1.0) / s2.min(), 1e-300)) + 1.0
        lo = hi - 60.0
        while excess(lo) <= 0:
            lo -= 60.0
        mu = np.exp(brentq(excess, lo, hi, xtol=1e-14, rtol=1e-14))
        c_new = c - mu * self.s * r0 / (1.0 + mu * s2)
        return v + self.V @ (c_new - c)

    def multiplier(self, g):
        """Least-squares ``nu`` with ``A^T nu ~= g``."""
        return self.U @ ((self.V.T @ g) / self.s)

    def violation(self, x, sigma=0.0):
        return max(0.0, float(np.linalg.norm(self.A @ x - self.y)) - sigma)


def _subgradient_bounds(x, w, beta, at0, atw):
    """Componentwise interval of the subdifferential of ``g`` at ``x``."""
    lo = np.where(at0, -1.0, np.sign(x))
    hi = np.where(at0, 1.0, np.sign(x))
    if beta:
        d = np.sign(x - w)
        lo = lo + np.where(atw, -1.0, d)
        hi = hi + np.where(atw, 1.0, d)
    return lo, hi


def _polish(con, w, beta, z, u, rho):
    """Try to turn the current iterate into an exactly optimal vertex.

    Returns ``(x, constraint_violation, certificate_violation)`` or ``None``.
    """
    at0 = z == 0.0
    atw = (z == w) & ~at0 if beta else np.zeros_like(at0)
    free = ~(at0 | atw)
    m = con.A.shape[0]
    n_free = int(free.sum())
    if n_free > m:
        return None
    x = np.where(atw, w, 0.0)
    if n_free:
        A_f = con.A[:, free]
        sol, *_ = np.linalg.lstsq(A_f, con.y - con.A @ x, rcond=None)
        x[free] = sol
    viol = con.violation(x)
    if viol > 1e-12 * (1.0 + np.linalg.norm(con.y)):
        return None
    # solutions that land on a kink are ambiguous; let ADMM continue
    if np.any(x[free] == 0.0) or (beta and np.any(x[free] == w[free])):
        return None

    nu = con.multiplier(rho * u)
    if n_free:
        slope = np.sign(x[free])
        if beta:
            slope = slope + np.sign(x[free] - w[free])
        corr, *_ = np.linalg.lstsq(A_f.T, slope - A_f.T @ nu, rcond=None)
        nu = nu + corr
    g = con.A.T @ nu
    # where w is zero both terms have a kink at the origin
    lo, hi = _subgradient_bounds(x, w, beta, at0, atw | (at0 & (w == 0.0)))
    cert = float(np.max(np.maximum(lo - g, g - hi), initial=0.0))
    return x, viol, cert


def _admm(A, y, w, beta, sigma, settings):
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    m, n = A.shape
    if y.size != m:
        raise ValueError(f"y has length {y.size}, expected {m}")
    w = np.zeros(n) if w is None else np.asarray(w, dtype=float).ravel()
    if w.size != n:
        raise ValueError(f"w has length {w.size}, expected {n}")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")

    con = _Constraint(A, y)
    prox = (lambda v, t: prox_l1l1(v, w, t)) if beta else prox_l1
    rho = settings.penalty
    relax = settings.over_relaxation
    tol_abs = settings.abs_tol * np.sqrt(n)
    tol_rel = settings.rel_tol
    can_polish = settings.polish and sigma == 0.0

    z = np.zeros(n)
    u = np.zeros(n)
    best_x, best_obj = None, np.inf
    last_free = None
    r = d = np.inf
    for it in range(1, settings.max_iters + 1):
        x = con.project(z - u, sigma)
        obj = _objective(x, w, beta)
        if obj < best_obj:
            best_x, best_obj = x, obj
        xr = relax * x + (1.0 - relax) * z
        z_old = z
        z = prox(xr + u, 1.0 / rho)
        u = u + xr - z

        r = float(np.linalg.norm(x - z))
        d = float(rho * np.linalg.norm(z - z_old))
        eps_pri = tol_abs + tol_rel * max(np.linalg.norm(x), np.linalg.norm(z))
        eps_dual = tol_abs + tol_rel * rho * np.linalg.norm(u)
        if r <= eps_pri and d <= eps_dual:
            return SolveReport(x_hat=x, iterations=it, primal_residual=r, dual_residual=d,
                               objective=obj, converged=True)

        if can_polish and it % settings.polish_every == 0:
            free = z != 0.0
            if beta:
                free &= z != w
            # only bother when the kink pattern has settled
            if last_free is not None and np.array_equal(free, last_free):
                res = _polish(con, w, beta, z, u, rho)
                if res is not None and res[2] <= settings.abs_tol:
                    xp, viol, cert = res
                    return SolveReport(x_hat=xp, iterations=it, primal_residual=viol,
                                       dual_residual=cert, objective=_objective(xp, w, beta),
                                       converged=True, polished=True)
            last_free = free

        # residual balancing
        if it % 10 == 0:
            if r > 10.0 * d:
                rho *= 2.0
                u = u / 2.0
            elif d > 10.0 * r:
                rho /= 2.0
                u = u * 2.0

    log.info("ADMM stopped after %d iterations (r=%.3g, s=%.3g)", settings.max_iters, r, d)
    return SolveReport(x_hat=best_x, iterations=settings.max_iters, primal_residual=r,
                       dual_residual=d, objective=best_obj, converged=False)


def _matrix(A):
    return getattr(A, "matrix", A)


def basis_pursuit(A, y, settings=None, sigma=0.0) -> SolveReport:
    """Minimize ``||x||_1`` subject to ``Ax = y`` (or ``||Ax - y|| <= sigma``).

    ``A`` may be an array or a :class:`~adaptive_cs.sensing.SensingOperator`.
    Non-convergence is reported through ``converged=False``, never raised.
    """
    return _admm(_matrix(A), y, None, 0, float(sigma), settings or SolveSettings())


def l1l1_min(A, y, w, settings=None) -> SolveReport:
    """Minimize ``||x||_1 + ||x - w||_1`` subject to ``Ax = y``."""
    return _admm(_matrix(A), y, w, 1, 0.0, settings or SolveSettings())


def l1l1_min_noisy(A, y, w, sigma_noise, settings=None) -> SolveReport:
    """Minimize ``||x||_1 + ||x - w||_1`` subject to ``||Ax - y||_2 <= sigma_noise``."""
    return _admm(_matrix(A), y, w, 1, float(sigma_noise), settings or SolveSettings())
