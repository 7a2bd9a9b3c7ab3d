"""Adaptive-rate online reconstruction of a sparse signal sequence.

The first two signals are recovered by basis pursuit with measurement counts
taken from the sparsity estimates supplied by the user. From then on each
signal is recovered by l1-l1 minimization against a prediction built from
past reconstructions, and the number of measurements follows an exponential
moving average ``phi`` of the l1-l1 bound evaluated on the previous
reconstructions, inflated by an oversampling factor ``delta``.

Time indices ``k`` are 1-based throughout.
"""

from __future__ import annotations

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .bounds import (BoundResult, DegenerateBoundError, QualityParams, clamp_measurements,
                     cs_bound, l1l1_bound, noisy_scale, quality_params)
from .sensing import SensingOperator, add_bounded_noise, gaussian_operator, measure
from .solver import SolveReport, SolveSettings, basis_pursuit, l1l1_min, l1l1_min_noisy

__all__ = [
    "OnlineConfig",
    "OnlineState",
    "StepRecord",
    "init_step",
    "online_step",
    "run_sequence",
]

log = logging.getLogger(__name__)

# flags attached to step records
DEGENERATE_LOW = "degenerate_mhat"
DEGENERATE_HIGH = "dense_mhat"
NOT_CONVERGED = "not_converged"

Schedule = float | Sequence[float] | Callable[[int], float]


def _at(schedule, k):
    if callable(schedule):
        return float(schedule(k))
    if isinstance(schedule, Sequence):
        return float(schedule[k - 1])
    return float(schedule)


@dataclass
class OnlineConfig:
    """Inputs of the adaptive-rate scheme.

    ``delta`` and ``sigma`` accept a constant, a sequence whose entry ``k-1``
    applies at time ``k``, or a callable of ``k``. ``sigma`` is the noise
    bound used by the solvers in noisy mode. When ``reestimate_s2`` is set
    the sparsity in the first rate estimate is counted on the second
    reconstruction rather than taken from ``s_hat_2``.
    """

    s_hat_1: int
    s_hat_2: int
    alpha: float = 0.5
    delta: Schedule = 0.1
    noisy: bool = False
    tau: float = 0.1
    sigma: Schedule = 0.0
    base_seed: int = 0
    m_floor: int = 10
    zero_tol: float = 1e-4
    reestimate_s2: bool = True
    settings: SolveSettings = field(default_factory=SolveSettings)

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha!r}")
        if self.s_hat_1 < 1 or self.s_hat_2 < 1:
            raise ValueError("sparsity estimates must be positive")
        if self.m_floor < 1:
            raise ValueError("m_floor must be positive")
        if self.noisy and not 0.0 < self.tau < 1.0:
            raise ValueError(f"tau must lie in (0, 1), got {self.tau!r}")

    def delta_at(self, k):
        return _at(self.delta, k)

    def sigma_at(self, k):
        return _at(self.sigma, k) if self.noisy else 0.0


@dataclass
class StepRecord:
    """Everything known about one time instant after it is processed.

    ``phi`` is the rate estimate used to pick ``m`` (``None`` during
    initialization). The ``true_*`` and ``oracle_*`` fields are filled only
    when the harness knows the true signal, and never feed the algorithm.
    """

    k: int
    m: int
    phi: float | None
    m_hat: float | None
    quality: QualityParams | None
    report: SolveReport
    side_info: np.ndarray | None
    flags: tuple[str, ...] = ()
    true_quality: QualityParams | None = None
    oracle_l1l1: float | None = None
    oracle_cs: float | None = None

    @property
    def x_hat(self):
        return self.report.x_hat


@dataclass
class OnlineState:
    n: int
    k: int = 0
    phi: float | None = None
    records: list[StepRecord] = field(default_factory=list)

    @property
    def reconstructions(self):
        return [r.x_hat for r in self.records]


def _rate_estimate(q: QualityParams, n, config):
    """Bound evaluated on estimated quality parameters, with fallbacks."""
    try:
        b = l1l1_bound(n, q)
    except DegenerateBoundError as exc:
        if exc.value <= 0:
            return float(config.m_floor), (DEGENERATE_LOW,)
        return float(n), (DEGENERATE_HIGH,)
    if config.noisy:
        b = noisy_scale(b, config.tau)
    return b.raw_bound, ()


def _acquire(acquire, k, op):
    y = acquire(k, op)
    return getattr(y, "y", y)


def init_step(q, acquire, config: OnlineConfig, state: OnlineState,
              predictor=None) -> OnlineState:
    """Initialization at ``q = 1`` or ``q = 2``.

    ``acquire(k, op)`` returns the measurement vector of signal ``k`` taken
    with ``op``. At ``q = 2`` the ``predictor`` (called with the list of past
    reconstructions) provides the side information needed to seed ``phi``.
    """
    if q not in (1, 2) or state.k != q - 1:
        raise ValueError(f"init_step({q}) called at state k={state.k}")
    n = state.n
    s_hat = config.s_hat_1 if q == 1 else config.s_hat_2
    b: BoundResult = cs_bound(n, s_hat, m_floor=config.m_floor)
    m = b.m_required
    op = gaussian_operator(m, n, config.base_seed + q)
    y = _acquire(acquire, q, op)
    report = basis_pursuit(op, y, config.settings, sigma=config.sigma_at(q))
    flags = () if report.converged else (NOT_CONVERGED,)

    m_hat = quality = w = None
    if q == 2:
        if predictor is None:
            raise ValueError("a predictor is required to initialize phi")
        w = np.asarray(predictor(state.reconstructions), dtype=float)
        quality = quality_params(report.x_hat, w, config.zero_tol)
        if not config.reestimate_s2:
            quality = QualityParams(s=config.s_hat_2, xi=quality.xi, hbar=quality.hbar,
                                    zero_tol=quality.zero_tol)
        m_hat, extra = _rate_estimate(quality, n, config)
        flags += extra
        state.phi = m_hat
    state.records.append(StepRecord(k=q, m=m, phi=None, m_hat=m_hat, quality=quality,
                                    report=report, side_info=w, flags=flags))
    state.k = q
    return state


def online_step(predictor, acquire, config: OnlineConfig, state: OnlineState) -> OnlineState:
    """One adaptive step for ``k = state.k + 1 >= 3``."""
    if state.k < 2 or state.phi is None:
        raise ValueError("online_step needs a completed initialization")
    k = state.k + 1
    n = state.n
    phi = state.phi
    m = clamp_measurements((1.0 + config.delta_at(k)) * phi, n, config.m_floor)
    op: SensingOperator = gaussian_operator(m, n, config.base_seed + k)
    y = _acquire(acquire, k, op)
    w = np.asarray(predictor(state.reconstructions), dtype=float)
    if config.noisy:
        report = l1l1_min_noisy(op, y, w, config.sigma_at(k), config.settings)
    else:
        report = l1l1_min(op, y, w, config.settings)
    flags = ()
    if not report.converged:
        log.warning("solver did not converge at k=%d; continuing", k)
        flags = (NOT_CONVERGED,)

    quality = quality_params(report.x_hat, w, config.zero_tol)
    m_hat, extra = _rate_estimate(quality, n, config)
    state.phi = (1.0 - config.alpha) * phi + config.alpha * m_hat
    state.records.append(StepRecord(k=k, m=m, phi=phi, m_hat=m_hat, quality=quality,
                                    report=report, side_info=w, flags=flags + extra))
    state.k = k
    return state


def _attach_oracle(rec: StepRecord, x_true, zero_tol):
    n = x_true.size
    s = int(np.count_nonzero(np.abs(x_true) > zero_tol))
    try:
        rec.oracle_cs = cs_bound(n, s).raw_bound
    except DegenerateBoundError:
        rec.oracle_cs = None
    if rec.side_info is not None:
        rec.true_quality = quality_params(x_true, rec.side_info, zero_tol)
        try:
            rec.oracle_l1l1 = l1l1_bound(n, rec.true_quality).raw_bound
        except DegenerateBoundError:
            rec.oracle_l1l1 = None


def default_acquire(signal_source, config: OnlineConfig):
    """Plain ``y = A x`` acquisition, plus bounded noise in noisy mode.

    In noisy mode the noise at time ``k`` has per-entry variance
    ``sigma_k**2 / m_k`` and norm capped at ``sigma_k``.
    """
    def acquire(k, op):
        y = measure(op, signal_source(k))
        if config.noisy:
            sig = config.sigma_at(k)
            seed = np.random.SeedSequence([config.base_seed + k, 1])
            return add_bounded_noise(y, sig ** 2 / op.m, sig, seed).y
        return y
    return acquire


def run_sequence(signal_source, predictor, config: OnlineConfig, K, acquire=None,
                 oracle=True, n=None):
    """Reconstruct signals ``1..K``.

    Parameters
    ----------
    signal_source : callable
        ``signal_source(k)`` returns the true signal at time ``k``. Used for
        acquisition unless ``acquire`` is given, and for oracle diagnostics.
        May be ``None`` when ``acquire`` and ``n`` are given.
    predictor : callable
        Maps the list of past reconstructions to the side information.
    config : OnlineConfig
    K : int
        Sequence length, at least 3.
    acquire : callable, optional
        ``acquire(k, op)`` overriding the default acquisition.
    oracle : bool
        Attach ground-truth quality parameters and bounds to each record.
    n : int, optional
        Signal length; read off ``signal_source(1)`` when omitted.

    Returns
    -------
    OnlineState
        Final state; ``state.records`` holds one :class:`StepRecord` per time.
    """
    if K < 3:
        raise ValueError("K must be at least 3")
    if acquire is None:
        acquire = default_acquire(signal_source, config)
    if n is None:
        n = np.asarray(signal_source(1)).size
    # fail early on degenerate initial sparsity estimates
    cs_bound(n, config.s_hat_1)
    cs_bound(n, config.s_hat_2)

    state = OnlineState(n=n)
    init_step(1, acquire, config, state)
    init_step(2, acquire, config, state, predictor)
    for _ in range(3, K + 1):
        online_step(predictor, acquire, config, state)
    if oracle and signal_source is not None:
        for rec in state.records:
            _attach_oracle(rec, np.asarray(signal_source(rec.k), dtype=float).ravel(),
                           config.zero_tol)
    return state
