"""Closed-form measurement bounds for basis pursuit and l1-l1 minimization.

Everything here is a pure function of its arguments. Logarithms are natural.
Bounds are returned as :class:`BoundResult`, which keeps the real-valued
right-hand side next to the integer measurement count actually used for
acquisition.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "AssumptionError",
    "BoundKind",
    "BoundResult",
    "clamp_measurements",
    "DegenerateBoundError",
    "LaplacianStats",
    "QualityParams",
    "corollary_delta",
    "cs_bound",
    "interpretation_constants",
    "l1l1_bound",
    "laplacian_bound",
    "laplacian_mu",
    "laplacian_success_probability",
    "lemma1_min_delta",
    "noisy_scale",
    "quality_params",
    "success_probability",
]

DEFAULT_ZERO_TOL = 1e-6

# guards ceil() against round-off on bounds that are integers in exact arithmetic
_CEIL_SLACK = 1e-9


class DegenerateBoundError(ValueError):
    """Raised when the effective sparsity leaves the open interval (0, n).

    The offending value is kept in :attr:`value` so callers can pick a
    fallback.
    """

    def __init__(self, value, n):
        self.value = value
        self.n = n
        super().__init__(
            f"effective sparsity {value!r} outside (0, {n}); bound undefined")


class AssumptionError(ValueError):
    """An assumption required by a bound does not hold."""


class BoundKind(enum.Enum):
    BASIS_PURSUIT = "basis_pursuit"
    L1L1 = "l1l1"
    L1L1_NOISY = "l1l1_noisy"
    LAPLACIAN = "laplacian"


@dataclass(frozen=True)
class QualityParams:
    """Sparsity ``s`` and side-information quality ``xi``, ``hbar``."""

    s: int
    xi: int
    hbar: int
    zero_tol: float = DEFAULT_ZERO_TOL

    @property
    def u(self) -> float:
        """Effective sparsity ``s + xi/2``."""
        return self.s + self.xi / 2.0


@dataclass(frozen=True)
class BoundResult:
    raw_bound: float
    m_required: int
    kind: BoundKind
    n: int


@dataclass(frozen=True)
class LaplacianStats:
    """Laplacian modelling-noise summary for one signal.

    ``sigma`` holds per-component standard deviations, ``support_sigma`` the
    indices with nonzero variance and ``support_w`` the nonzero indices of the
    side information.
    """

    sigma: np.ndarray
    support_sigma: np.ndarray
    support_w: np.ndarray
    mu: float
    t: float

    @property
    def n(self) -> int:
        return int(self.sigma.size)

    @property
    def n_sigma(self) -> int:
        return int(self.support_sigma.size)

    @property
    def n_w_outside(self) -> int:
        """``|complement(Sigma) & W|``."""
        return int(np.setdiff1d(self.support_w, self.support_sigma).size)

    @property
    def u(self) -> float:
        return self.n_sigma + self.n_w_outside / 2.0


def clamp_measurements(raw, n, m_floor=1) -> int:
    """``min(n, max(m_floor, ceil(raw)))``, tolerant of round-off in ``raw``."""
    m = math.ceil(raw - _CEIL_SLACK * max(1.0, abs(raw)))
    return int(min(n, max(m_floor, m)))


def _finalize(raw, n, kind, m_floor):
    return BoundResult(raw_bound=float(raw), m_required=clamp_measurements(raw, n, m_floor),
                       kind=kind, n=int(n))


def _check_u(u, n):
    if not 0 < u < n:
        raise DegenerateBoundError(u, n)


def _l1l1_raw(n, hbar, u):
    # 7*u/5 rather than 1.4*u keeps integer-valued cases exact
    return 2.0 * hbar * math.log(n / u) + 7.0 * u / 5.0 + 1.0


def quality_params(x_star, w, zero_tol=DEFAULT_ZERO_TOL) -> QualityParams:
    """Count ``s``, ``xi`` and ``hbar`` for a signal and its side information.

    Entries with magnitude at most ``zero_tol`` are treated as zero, and two
    entries are considered equal when they differ by at most ``zero_tol``.

    Parameters
    ----------
    x_star : array_like, shape (n,)
        Signal to reconstruct.
    w : array_like, shape (n,)
        Side information.
    zero_tol : float
        Classification tolerance, ``>= 0``.
    """
    x = np.asarray(x_star, dtype=float).ravel()
    w = np.asarray(w, dtype=float).ravel()
    if x.shape != w.shape:
        raise ValueError(f"length mismatch: x has {x.size}, w has {w.size}")
    if zero_tol < 0:
        raise ValueError("zero_tol must be nonnegative")

    x = np.where(np.abs(x) > zero_tol, x, 0.0)
    w = np.where(np.abs(w) > zero_tol, w, 0.0)
    x_nz = x != 0
    equal = np.abs(x - w) <= zero_tol

    s = int(np.count_nonzero(x_nz))
    xi = int(np.count_nonzero(~x_nz & (w != 0))) - int(np.count_nonzero(x_nz & equal))
    bad = ((x > 0) & (x > w + zero_tol)) | ((x < 0) & (x < w - zero_tol))
    return QualityParams(s=s, xi=xi, hbar=int(np.count_nonzero(bad)), zero_tol=zero_tol)


def l1l1_bound(n, q: QualityParams, m_floor=1) -> BoundResult:
    """Measurements sufficient for l1-l1 minimization with side information."""
    u = q.u
    _check_u(u, n)
    return _finalize(_l1l1_raw(n, q.hbar, u), n, BoundKind.L1L1, m_floor)


def cs_bound(n, s, m_floor=1) -> BoundResult:
    """Measurements sufficient for basis pursuit on an ``s``-sparse signal."""
    _check_u(s, n)
    return _finalize(_l1l1_raw(n, s, s), n, BoundKind.BASIS_PURSUIT, m_floor)


def noisy_scale(b: BoundResult, tau, m_floor=1) -> BoundResult:
    """Turn a noiseless l1-l1 bound into its bounded-noise counterpart.

    The additive constant becomes 3/2 and the whole bracket is multiplied by
    ``1/(1-tau)**2``.
    """
    if b.kind is not BoundKind.L1L1:
        raise ValueError(f"noisy_scale expects an l1-l1 bound, got {b.kind}")
    if not 0.0 < tau < 1.0:
        raise ValueError(f"tau must lie in (0, 1), got {tau!r}")
    raw = (b.raw_bound + 0.5) / (1.0 - tau) ** 2
    return _finalize(raw, b.n, BoundKind.L1L1_NOISY, m_floor)


def success_probability(m_lower, k) -> float:
    """Lower bound on the probability of exact recovery at all ``k`` instants."""
    m = float(m_lower)
    p_fail = math.exp(-0.5 * (m - math.sqrt(m)) ** 2)
    if p_fail >= 1.0:
        return 0.0
    return math.exp(k * math.log1p(-p_fail))


def _l1l1_terms(q, n):
    u = q.u
    _check_u(u, n)
    return q.hbar, u, math.log(n / u)


def lemma1_min_delta(q_prev: QualityParams, q_cur: QualityParams, n) -> float:
    """Smallest oversampling factor keeping one step ahead of the l1-l1 bound."""
    h0, u0, l0 = _l1l1_terms(q_prev, n)
    h1, u1, l1 = _l1l1_terms(q_cur, n)
    num = 2.0 * (h1 * l1 - h0 * l0) + 7.0 * (u1 - u0) / 5.0
    den = 2.0 * h0 * l0 + 7.0 * u0 / 5.0 + 1.0
    return num / den


def interpretation_constants(q_prev: QualityParams, q_cur: QualityParams, n):
    """Return ``(c1, c2)`` such that the minimum oversampling factor equals
    ``(hbar_cur - hbar_prev + c1) / (hbar_prev + c2)``.

    Both constants decay like ``1/log(n)``.
    """
    h0, u0, _ = _l1l1_terms(q_prev, n)
    h1, u1, _ = _l1l1_terms(q_cur, n)
    two_log_n = 2.0 * math.log(n)
    c1 = (2.0 * h0 * math.log(u0) - 2.0 * h1 * math.log(u1)
          + 7.0 * (u1 - u0) / 5.0) / two_log_n
    c2 = (7.0 * u0 / 5.0 + 1.0 - 2.0 * h0 * math.log(u0)) / two_log_n
    return c1, c2


def laplacian_mu(w, sigma, t=2.0) -> LaplacianStats:
    """Expected number of badly-signed side-information entries under Laplacian noise.

    ``t`` is the slack of the measurement bound and must exceed 1.
    """
    w = np.asarray(w, dtype=float).ravel()
    sigma = np.asarray(sigma, dtype=float).ravel()
    if w.shape != sigma.shape:
        raise ValueError(f"length mismatch: w has {w.size}, sigma has {sigma.size}")
    if np.any(sigma < 0):
        raise ValueError("standard deviations must be nonnegative")
    if not t > 1:
        raise ValueError(f"t must exceed 1, got {t!r}")
    on = sigma != 0
    # tiny sigma overflows the ratio to inf, and exp(-inf) = 0 is the right limit
    with np.errstate(over="ignore"):
        ratio = np.abs(w[on]) / sigma[on]
    mu = 0.5 * float(np.sum(1.0 + np.exp(-math.sqrt(2.0) * ratio)))
    return LaplacianStats(sigma=sigma, support_sigma=np.flatnonzero(on),
                          support_w=np.flatnonzero(w != 0), mu=mu, t=float(t))


def _require_zero_index(stats):
    n_both = stats.n - np.union1d(stats.support_sigma, stats.support_w).size
    if n_both == 0:
        raise AssumptionError(
            "no index has both zero variance and zero side information")


def laplacian_bound(n, stats: LaplacianStats, m_floor=1) -> BoundResult:
    """Deterministic measurement bound for Laplacian modelling noise."""
    _require_zero_index(stats)
    u = stats.u
    _check_u(u, n)
    raw = 2.0 * (stats.mu + stats.t) * math.log(n / u) + 7.0 * u / 5.0 + 1.0
    return _finalize(raw, n, BoundKind.LAPLACIAN, m_floor)


def laplacian_success_probability(m, stats: LaplacianStats) -> float:
    """Probability lower bound that goes with :func:`laplacian_bound`."""
    k = stats.n_sigma
    first = 1.0 - math.exp(-0.5 * (m - math.sqrt(m)) ** 2)
    if k == 0:
        return first
    second = (1.0 - math.exp(-2.0 * stats.mu ** 2 / k)
              - math.exp(-2.0 * (stats.t - 1.0) ** 2 / k))
    return first * second


def corollary_delta(stats_prev: LaplacianStats, stats_cur: LaplacianStats, n,
                    approximate=False) -> float:
    """Oversampling factor for the Laplacian model.

    With ``approximate=True`` returns ``2*kappa - 1`` where ``kappa`` is the
    ratio of the noise-support sizes; that value is typically conservative.
    """
    if approximate:
        if stats_prev.n_sigma == 0:
            raise DegenerateBoundError(0, n)
        return 2.0 * stats_cur.n_sigma / stats_prev.n_sigma - 1.0
    u0, u1 = stats_prev.u, stats_cur.u
    _check_u(u0, n)
    _check_u(u1, n)
    a0 = stats_prev.mu + stats_prev.t
    a1 = stats_cur.mu + stats_cur.t
    num = 2.0 * (a1 * math.log(n / u1) - a0 * math.log(n / u0)) + 7.0 * (u1 - u0) / 5.0
    den = 2.0 * a0 * math.log(n / u0) + 7.0 * u0 / 5.0 + 1.0
    return num / den
