"""Greedy selection of frequency-domain measurement points.

Two realizations built from nested measurement sets are compared on a frequency
grid; the next two measurements go where their discrepancy, weighted by a notch
mask around recent measurements, is largest. The loop stops once the two
realizations agree on the grid to within ``tol``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from loewnerid.exceptions import (ConfigError, DegenerateObjective, GridExhausted, GridTooSmall)
from loewnerid.loewner import loewner_model
from loewnerid.lti import FrequencyGrid, StateSpace, freqresp

logger = logging.getLogger(__name__)

#: truncation level for the loop's realizations; must leave the truncation floor
#: (about ``rank_tol * max|H|``) well below ``tol``
GREEDY_RANK_TOL = 1e-12

_BELOW_ONE = np.nextafter(1.0, 0.0)


@dataclass(frozen=True)
class GreedyConfig:
    """Hyper-parameters of the greedy loop.

    ``beta`` is the notch bandwidth and ``epsilon`` the offset inside the logarithm of
    the mask; ``tol`` bounds the grid discrepancy between consecutive realizations.
    """

    grid: FrequencyGrid
    beta: float = 0.6
    epsilon: float = 1e-15
    tol: float = 1e-8
    initial_count: int = 6
    D: complex = 0.0
    max_points: int = 200
    rank_tol: float = GREEDY_RANK_TOL

    def __post_init__(self):
        if not self.beta > 0:
            raise ConfigError(f'beta must be positive, got {self.beta}')
        if not self.epsilon > 0:
            raise ConfigError(f'epsilon must be positive, got {self.epsilon}')
        if not self.tol > 0:
            raise ConfigError(f'tol must be positive, got {self.tol}')
        if self.initial_count < 4 or self.initial_count % 2:
            raise ConfigError(f'initial_count must be even and >= 4, got {self.initial_count}')
        if self.max_points < self.initial_count:
            raise ConfigError('max_points must be at least initial_count')
        if self.initial_count > len(self.grid):
            raise GridTooSmall(f'grid has {len(self.grid)} points, need {self.initial_count}')


@dataclass
class IterationRecord:
    """One pass of the loop: the points added, the discrepancy after refitting."""

    iteration: int
    new_points: tuple
    err: float
    order: int
    n_points: int


@dataclass
class GreedyHistory:
    points: list = field(default_factory=list)
    values: list = field(default_factory=list)
    records: list = field(default_factory=list)
    stop_reason: str = ''
    estimates: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.stop_reason == 'converged'

    @property
    def iterations(self) -> int:
        """Number of loop passes that added measurements (the initial fit is pass 0)."""
        return len(self.records) - 1

    @property
    def errors(self) -> list:
        return [r.err for r in self.records]

    def measurement_set(self, k: int) -> np.ndarray:
        """Cumulative points after record ``k``."""
        return np.array(self.points[:self.records[k].n_points])


def mask_single(sigma, sigma_i, beta: float, epsilon: float):
    """Notch ``1 - exp(-beta (ln(|sigma|+eps) - ln(|sigma_i|+eps))^2)``, zero at ``sigma_i``."""
    d = np.log(np.abs(sigma) + epsilon) - np.log(np.abs(sigma_i) + epsilon)
    # far from the notch 1 - exp(-x) rounds to 1; keep the value strictly below it
    return np.minimum(-np.expm1(-beta * d * d), _BELOW_ONE)


def mask_product(sigma, anchors: Sequence, beta: float, epsilon: float):
    """Product of :func:`mask_single` over all anchors."""
    if len(anchors) == 0:
        raise ConfigError('mask_product needs at least one anchor')
    out = np.ones(np.shape(sigma))
    for a in anchors:
        out = out * mask_single(sigma, a, beta, epsilon)
    return out


def discrepancy(Hk: StateSpace, Hkm1: StateSpace, grid: FrequencyGrid) -> np.ndarray:
    """``|Hk - Hkm1|`` at every grid point."""
    pts = grid.eval_points
    return np.abs(freqresp(Hk, pts) - freqresp(Hkm1, pts))


def select_point(Hk: StateSpace, Hkm1: StateSpace, anchors: Sequence, cfg: GreedyConfig,
                 exclude=(), gap: np.ndarray | None = None) -> complex:
    """Grid point maximizing ``mask(sigma) * |Hk(sigma) - Hkm1(sigma)|``.

    Points in ``exclude`` are never returned. Ties go to the lowest frequency.
    ``gap`` may carry a precomputed :func:`discrepancy` to avoid re-evaluating
    both models.

    Raises
    ------
    GridExhausted
        If every grid point is excluded.
    DegenerateObjective
        If the masked objective is zero on every remaining candidate.
    """
    grid = cfg.grid
    pts = grid.points
    keep = ~np.isin(pts, np.asarray(list(exclude), dtype=complex))
    if not keep.any():
        raise GridExhausted('no unmeasured grid point left')
    if gap is None:
        gap = discrepancy(Hk, Hkm1, grid)
    objective = np.where(keep, mask_product(pts, anchors, cfg.beta, cfg.epsilon) * gap, -np.inf)
    best = int(np.argmax(objective))
    if not objective[best] > 0:
        raise DegenerateObjective('masked discrepancy vanishes on all candidates')
    return complex(pts[best])


def check_convergence(Hk: StateSpace, Hkm1: StateSpace, grid: FrequencyGrid, tol: float):
    """Return ``(err, err <= tol)`` with ``err`` the maximum grid discrepancy."""
    err = float(discrepancy(Hk, Hkm1, grid).max())
    return err, err <= tol


def initial_points(grid: FrequencyGrid, count: int) -> list:
    """Snap ``count`` log-equidistant targets over the grid range onto distinct grid points.

    Each target takes its nearest grid frequency (absolute distance); when that one
    is already taken, the next nearest free one is used.
    """
    if count > len(grid):
        raise GridTooSmall(f'grid has {len(grid)} points, need {count}')
    if count < 1:
        raise ConfigError(f'count must be positive, got {count}')
    omega = grid.omega
    if count == 1:
        targets = np.array([omega[0]])
    else:
        targets = np.logspace(np.log10(omega[0]), np.log10(omega[-1]), count) if omega[0] > 0 \
            else np.linspace(omega[0], omega[-1], count)
    taken: list[int] = []
    for t in targets:
        for i in np.argsort(np.abs(omega - t), kind='stable'):
            if i not in taken:
                taken.append(int(i))
                break
    return [complex(p) for p in grid.points[taken]]


def _fit(points, values, cfg: GreedyConfig) -> StateSpace:
    grid = cfg.grid
    return loewner_model(grid.to_eval(points), values, cfg.D, cfg.rank_tol,
                         conjugate=True, sample_time=grid.sample_time)


def run_greedy(measure: Callable[[list], Sequence], cfg: GreedyConfig):
    """Generic greedy driver.

    ``measure`` takes a list of imaginary-axis grid points and returns the
    corresponding transfer-function values; it is called once with the initial
    points and then once per iteration with the two selected points.
    """
    history = GreedyHistory()
    points = initial_points(cfg.grid, cfg.initial_count)
    history.points.extend(points)
    history.values.extend(complex(v) for v in measure(points))

    Hkm1 = _fit(history.points[:-2], history.values[:-2], cfg)
    Hk = _fit(history.points, history.values, cfg)
    gap = discrepancy(Hk, Hkm1, cfg.grid)
    err = float(gap.max())
    history.records.append(IterationRecord(0, tuple(points), err, Hk.order, len(history.points)))
    logger.info('initial fit: %d points, order %d, err %.3e', len(history.points), Hk.order, err)

    k = 0
    while err > cfg.tol:
        if len(history.points) + 2 > cfg.max_points:
            history.stop_reason = 'max_points'
            break
        anchors = history.points[-2:]
        try:
            s1 = select_point(Hk, Hkm1, anchors, cfg, history.points, gap)
            s2 = select_point(Hk, Hkm1, anchors + [s1], cfg, history.points + [s1], gap)
        except DegenerateObjective:
            history.stop_reason = 'degenerate'
            break
        except GridExhausted:
            history.stop_reason = 'grid_exhausted'
            break
        new = [s1, s2]
        history.points.extend(new)
        history.values.extend(complex(v) for v in measure(new))
        k += 1
        Hkm1, Hk = Hk, _fit(history.points, history.values, cfg)
        gap = discrepancy(Hk, Hkm1, cfg.grid)
        err = float(gap.max())
        history.records.append(IterationRecord(k, tuple(new), err, Hk.order, len(history.points)))
        logger.info('iteration %d: %d points, order %d, err %.3e', k, len(history.points),
                    Hk.order, err)
    else:
        history.stop_reason = 'converged'
    return Hk, history


def greedy_loop(oracle, cfg: GreedyConfig):
    """Greedy frequency-domain identification against a measurement oracle.

    Parameters
    ----------
    oracle
        Object with a ``measure(sigma)`` method returning the transfer function at
        the imaginary-axis point ``sigma`` (see :class:`loewnerid.measurement.Oracle`).
    cfg
        Loop configuration.

    Returns
    -------
    model
        Final real realization.
    history
        Points, values and per-iteration discrepancies.
    """
    return run_greedy(lambda pts: [oracle.measure(p) for p in pts], cfg)
