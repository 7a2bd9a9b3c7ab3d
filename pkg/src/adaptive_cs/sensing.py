"""Gaussian sensing operators and measurement acquisition."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "MeasurementRecord",
    "SensingOperator",
    "add_bounded_noise",
    "bg_subtracted_measurements",
    "gaussian_operator",
    "measure",
]


@dataclass(frozen=True)
class SensingOperator:
    """Dense ``m x n`` matrix with i.i.d. N(0, 1/m) entries."""

    matrix: np.ndarray
    seed: int

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.matrix.shape[1]

    @property
    def variance(self) -> float:
        return 1.0 / self.m


@dataclass
class MeasurementRecord:
    y: np.ndarray
    frame_index: int = 0
    noise_norm: float = 0.0

    @property
    def m_used(self) -> int:
        return self.y.size


def gaussian_operator(m, n, seed) -> SensingOperator:
    """Draw a Gaussian sensing matrix; identical seeds give identical matrices."""
    m, n = int(m), int(n)
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n)) / np.sqrt(m)
    A.flags.writeable = False
    return SensingOperator(matrix=A, seed=seed)


def measure(op, x) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.size != op.n:
        raise ValueError(f"signal has length {x.size}, operator expects {op.n}")
    return op.matrix @ x


def bg_subtracted_measurements(op, z, b, frame_index=0) -> MeasurementRecord:
    """Measure a frame and the known background with the same matrix and subtract.

    The two products are formed separately, as a camera would acquire them.
    """
    u = measure(op, z)
    u_b = measure(op, b)
    return MeasurementRecord(y=u - u_b, frame_index=frame_index)


def add_bounded_noise(y, variance, sigma_cap, seed) -> MeasurementRecord:
    """Add i.i.d. Gaussian noise, rescaled if needed so its norm is at most ``sigma_cap``.

    ``y`` may be an array or a :class:`MeasurementRecord`.
    """
    if variance < 0 or sigma_cap < 0:
        raise ValueError("variance and sigma_cap must be nonnegative")
    frame_index = 0
    if isinstance(y, MeasurementRecord):
        frame_index = y.frame_index
        y = y.y
    y = np.asarray(y, dtype=float)
    rng = np.random.default_rng(seed)
    eta = rng.standard_normal(y.shape) * np.sqrt(variance)
    norm = float(np.linalg.norm(eta))
    if norm > sigma_cap:
        eta = eta * (sigma_cap / norm) if norm > 0 else eta
        norm = float(np.linalg.norm(eta))
        # guard against the rescaled norm landing one ulp above the cap
        if norm > sigma_cap:
            eta = eta * np.nextafter(sigma_cap / norm, 0.0)
            norm = float(np.linalg.norm(eta))
    return MeasurementRecord(y=y + eta, frame_index=frame_index, noise_norm=norm)
