"""Monte Carlo recovery rates on signals with prescribed quality parameters."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..bounds import clamp_measurements, cs_bound, l1l1_bound, QualityParams
from ..sensing import gaussian_operator, measure
from ..solver import SolveSettings, basis_pursuit, l1l1_min

__all__ = ["PhaseCell", "PhaseResult", "make_instance", "phase_harness", "run_cell"]

SUCCESS_TOL = 1e-5
SOLVERS = ("l1l1", "bp")


@dataclass(frozen=True)
class PhaseCell:
    """One grid point.

    The number of measurements is ``multiplier`` times the bound matching
    ``solver`` (l1-l1 or basis pursuit), rounded up and capped at ``n``,
    unless ``m`` is given explicitly.
    """

    n: int
    s: int
    hbar: int = 0
    xi: int = 0
    multiplier: float = 1.0
    solver: str = "l1l1"
    m: int | None = None

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        check_feasible(self.n, self.s, self.xi, self.hbar)

    def measurements(self) -> int:
        if self.m is not None:
            return int(self.m)
        if self.solver == "bp":
            raw = cs_bound(self.n, self.s).raw_bound
        else:
            raw = l1l1_bound(self.n, QualityParams(self.s, self.xi, self.hbar)).raw_bound
        return clamp_measurements(self.multiplier * raw, self.n)


@dataclass(frozen=True)
class PhaseResult:
    cell: PhaseCell
    m: int
    trials: int
    successes: int
    errors: tuple[float, ...]

    @property
    def rate(self) -> float:
        return self.successes / self.trials


def check_feasible(n, s, xi, hbar):
    if not 1 <= s <= n:
        raise ValueError(f"need 1 <= s <= n, got s={s}, n={n}")
    if not 0 <= hbar <= s:
        raise ValueError(f"need 0 <= hbar <= s, got hbar={hbar}, s={s}")
    if xi < 0 and -xi > s - hbar:
        raise ValueError(f"xi={xi} needs {-xi} exact matches but only {s - hbar} "
                         "support entries are not bad")
    if xi > n - s:
        raise ValueError(f"xi={xi} exceeds the {n - s} zero entries")


def make_instance(n, s, xi, hbar, rng):
    """Random ``(x, w)`` whose quality parameters are exactly ``(s, xi, hbar)``.

    Bad entries get side information of the opposite sign, the other support
    entries get side information 30% larger in magnitude, and ``xi`` is
    realised either with exact matches on the support (``xi < 0``) or with
    spurious nonzeros off the support (``xi > 0``).
    """
    check_feasible(n, s, xi, hbar)
    support = rng.choice(n, size=s, replace=False)
    x = np.zeros(n)
    x[support] = rng.choice((-1.0, 1.0), size=s) * (1.0 + np.abs(rng.standard_normal(s)))
    w = np.zeros(n)
    bad, good = support[:hbar], support[hbar:]
    w[bad] = -x[bad]
    w[good] = 1.3 * x[good]
    if xi < 0:
        match = good[:-xi]
        w[match] = x[match]
    elif xi > 0:
        off = rng.choice(np.setdiff1d(np.arange(n), support), size=xi, replace=False)
        w[off] = rng.choice((-1.0, 1.0), size=xi) * (1.0 + np.abs(rng.standard_normal(xi)))
    return x, w


def _trial(cell, m, seed, settings):
    ss = np.random.SeedSequence(seed)
    sig_seed, op_seed = ss.spawn(2)
    x, w = make_instance(cell.n, cell.s, cell.xi, cell.hbar, np.random.default_rng(sig_seed))
    op = gaussian_operator(m, cell.n, op_seed)
    y = measure(op, x)
    if cell.solver == "bp":
        rep = basis_pursuit(op, y, settings)
    else:
        rep = l1l1_min(op, y, w, settings)
    return float(np.linalg.norm(rep.x_hat - x) / np.linalg.norm(x))


def run_cell(cell: PhaseCell, trials=50, seed=0, settings=None, cell_index=0,
             workers=1) -> PhaseResult:
    """Run ``trials`` independent recoveries of one cell.

    Trial ``t`` draws everything from ``SeedSequence([seed, cell_index, t])``,
    so results do not depend on ``workers``.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    settings = settings or SolveSettings()
    m = cell.measurements()
    seeds = [[seed, cell_index, t] for t in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            errs = list(ex.map(_trial, [cell] * trials, [m] * trials, seeds,
                               [settings] * trials))
    else:
        errs = [_trial(cell, m, sd, settings) for sd in seeds]
    ok = sum(e < SUCCESS_TOL for e in errs)
    return PhaseResult(cell=cell, m=m, trials=trials, successes=ok, errors=tuple(errs))


def phase_harness(cells, trials=50, seed=0, settings=None, workers=1) -> list[PhaseResult]:
    """Empirical success rate for every cell of a grid."""
    return [run_cell(c, trials, seed, settings, i, workers) for i, c in enumerate(cells)]
