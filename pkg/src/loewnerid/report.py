"""Experiment runner: adaptive versus equidistant identification, exported as CSV tables.

One experiment fixes a plant, a frequency band and a loop configuration, then
runs both schemes noiselessly and at each requested noise level. Every table is
written with fixed headers and full-precision numbers, so identical configurations
give identical files. Only ``summary.json`` carries wall-clock timings.
"""
from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import trapezoid

from loewnerid.exceptions import ConfigError, GridTooSmall, LoewnerIdError
from loewnerid.greedy import (GREEDY_RANK_TOL, GreedyConfig, greedy_loop, initial_points,
                              mask_product)
from loewnerid.loewner import loewner_model
from loewnerid.lti import FrequencyGrid, StateSpace, discretize, freqresp
from loewnerid.measurement import Oracle, PlantSimulator, benchmark, load_model
from loewnerid.timedomain import default_sample_time, greedy_time_loop, two_tone_measure

logger = logging.getLogger(__name__)

BODE_HEADER = ['omega', 'mag_true', 'mag_adaptive', 'mag_equidistant', 'err_adaptive',
               'err_equidistant']
CONVERGENCE_HEADER = ['scheme', 'n_points', 'h2_error', 'max_error']
NOISE_HEADER = ['noise_std', 'seed', 'adaptive_h2', 'equidistant_h2', 'adaptive_points',
                'equidistant_points', 'adaptive_status', 'equidistant_status']
POINTS_HEADER = ['scheme', 'index', 'iteration', 'omega', 'h_re', 'h_im']
MASK_HEADER = ['omega', 'mask']


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines an experiment's output files.

    ``plant`` is a benchmark id (see :func:`loewnerid.measurement.benchmark`) and
    ``model_file`` a saved model; at most one may be set, and Penzl is used when
    neither is. ``equi_count=None`` gives the equidistant scheme as many points as
    the adaptive run of the same cell used.
    """

    plant: str | None = None
    model_file: str | None = None
    domain: str = 'freq'
    wmin: float = 1e-1
    wmax: float = 1e3
    grid_size: int = 500
    beta: float = 0.6
    epsilon: float = 1e-15
    tol: float = 1e-8
    init_points: int = 6
    D: float = 0.0
    max_points: int = 200
    rank_tol: float = GREEDY_RANK_TOL
    equi_count: int | None = None
    noise_levels: tuple = ()
    seeds: tuple = (0,)
    out_dir: str = 'report'
    K: int = 4096
    sample_time: float | None = None
    workers: int = 1

    def __post_init__(self):
        if self.plant is not None and self.model_file is not None:
            raise ConfigError('give either a plant id or a model file, not both')
        if self.domain not in ('freq', 'time'):
            raise ConfigError(f'domain must be freq or time, got {self.domain!r}')
        if not 0 < self.wmin < self.wmax:
            raise ConfigError(f'need 0 < wmin < wmax, got {self.wmin}, {self.wmax}')
        if self.grid_size < self.init_points:
            raise GridTooSmall(f'grid of {self.grid_size} points cannot hold '
                               f'{self.init_points} initial points')
        if self.equi_count is not None and (self.equi_count < 2 or self.equi_count % 2
                                            or self.equi_count > self.grid_size):
            raise ConfigError(f'equi_count must be even and in [2, {self.grid_size}]')
        if any(not s >= 0 for s in self.noise_levels):
            raise ConfigError('noise levels must be nonnegative')
        if not self.seeds:
            raise ConfigError('need at least one seed')
        if self.K < 64:
            raise ConfigError(f'K must be at least 64, got {self.K}')
        if self.workers < 1:
            raise ConfigError('workers must be positive')
        object.__setattr__(self, 'noise_levels', tuple(float(s) for s in self.noise_levels))
        object.__setattr__(self, 'seeds', tuple(int(s) for s in self.seeds))
        # validates beta, epsilon, tol, init_points and max_points
        GreedyConfig(FrequencyGrid.logspace(self.wmin, self.wmax, self.grid_size), self.beta,
                     self.epsilon, self.tol, self.init_points, self.D, self.max_points,
                     self.rank_tol)


def h2_grid_error(m1: StateSpace, m2: StateSpace, grid: FrequencyGrid) -> float:
    """Band-limited H2 distance by trapezoidal quadrature over the grid.

    ``sqrt(1/pi * integral |H1(j w) - H2(j w)|^2 dw)`` over ``[omega_1, omega_M]``,
    with the integrand sampled at the grid frequencies (``exp(j w T_s)`` for
    discrete grids).
    """
    pts = grid.eval_points
    gap = np.abs(freqresp(m1, pts) - freqresp(m2, pts)) ** 2
    return float(np.sqrt(trapezoid(gap, grid.omega) / np.pi))


def max_grid_error(m1: StateSpace, m2: StateSpace, grid: FrequencyGrid) -> float:
    pts = grid.eval_points
    return float(np.max(np.abs(freqresp(m1, pts) - freqresp(m2, pts))))


def _fit(points, values, grid: FrequencyGrid, D, rank_tol) -> StateSpace:
    return loewner_model(grid.to_eval(points), values, D, rank_tol, conjugate=True,
                         sample_time=grid.sample_time)


def equidistant_fit(measure, count: int, grid: FrequencyGrid, D: complex = 0.0,
                    rank_tol: float = GREEDY_RANK_TOL):
    """Measure ``count`` snapped log-equidistant points with ``measure`` and realize.

    ``measure`` takes a list of ``j omega`` points and returns their values.
    Returns ``(model, points, values)``.
    """
    if count < 2 or count % 2:
        raise ConfigError(f'count must be even and at least 2, got {count}')
    points = initial_points(grid, count)
    values = [complex(v) for v in measure(points)]
    return _fit(points, values, grid, D, rank_tol), points, values


def run_equidistant(oracle, count: int, grid: FrequencyGrid, D: complex = 0.0,
                    rank_tol: float = GREEDY_RANK_TOL) -> StateSpace:
    """Baseline realization from ``count`` log-equidistant measurements.

    Points are snapped to the grid by the same rule as the greedy loop's initial
    set, each is queried once from ``oracle``, and the compressed Loewner
    realization is returned.
    """
    return equidistant_fit(lambda pts: [oracle.measure(p) for p in pts], count, grid, D,
                           rank_tol)[0]


@dataclass
class RunResult:
    scheme: str
    noise_std: float
    seed: int
    status: str = 'ok'
    model: StateSpace | None = None
    points: list = field(default_factory=list)
    values: list = field(default_factory=list)
    history: object = None
    measurements: int = 0
    experiments: int = 0
    h2: float = float('nan')
    max_err: float = float('nan')
    runtime: float = 0.0

    def summary(self) -> dict:
        out = {'scheme': self.scheme, 'noise_std': self.noise_std, 'seed': self.seed,
               'status': self.status, 'n_points': len(self.points),
               'measurements': self.measurements, 'experiments': self.experiments,
               'order': None if self.model is None else self.model.order,
               'h2_error': _json_float(self.h2), 'max_error': _json_float(self.max_err),
               'runtime_s': self.runtime}
        if self.history is not None:
            out['iterations'] = self.history.iterations
            out['stop_reason'] = self.history.stop_reason
        return out


def _json_float(x):
    return None if not np.isfinite(x) else x


class Experiment:
    """Resolved plant, grids and measurement sources for one configuration."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        model = load_model(cfg.model_file) if cfg.model_file else None
        if cfg.domain == 'time':
            Ts = cfg.sample_time or (model.sample_time if model is not None
                                     and model.is_discrete else None) \
                or default_sample_time(cfg.wmax)
            if model is None:
                model = benchmark(cfg.plant or 'penzl', Ts, cfg.wmin, cfg.wmax)
            if not model.is_discrete:
                model = discretize(model, Ts)
            elif model.sample_time != Ts:
                raise ConfigError(f'model sample time {model.sample_time} differs from {Ts}')
        elif model is None:
            model = benchmark(cfg.plant or 'penzl', cfg.sample_time, cfg.wmin, cfg.wmax)
        self.truth = model
        self.grid = FrequencyGrid.logspace(cfg.wmin, cfg.wmax, cfg.grid_size, model.sample_time)
        self.greedy_cfg = GreedyConfig(self.grid, cfg.beta, cfg.epsilon, cfg.tol,
                                       cfg.init_points, cfg.D, cfg.max_points, cfg.rank_tol)

    @property
    def name(self) -> str:
        return self.cfg.model_file or self.cfg.plant or 'penzl'

    def source(self, noise_std: float, seed: int):
        """Fresh measurement source and a ``measure(points)`` function over it."""
        if self.cfg.domain == 'time':
            plant = PlantSimulator(self.truth, noise_std, seed)
            return plant, two_tone_measure(plant, self.grid.sample_time, self.cfg.K)
        oracle = Oracle(self.truth, noise_std, seed)
        return oracle, lambda pts: [oracle.measure(p) for p in pts]

    def _score(self, res: RunResult, source):
        if self.cfg.domain == 'time':
            res.experiments = source.experiments
            res.measurements = 2 * source.experiments
        else:
            res.measurements = res.experiments = len(source.call_log)
        res.h2 = h2_grid_error(res.model, self.truth, self.grid)
        res.max_err = max_grid_error(res.model, self.truth, self.grid)

    def adaptive(self, noise_std: float = 0.0, seed: int = 0) -> RunResult:
        res = RunResult('adaptive', noise_std, seed)
        start = time.perf_counter()
        source, _ = self.source(noise_std, seed)
        try:
            if self.cfg.domain == 'time':
                res.model, res.history = greedy_time_loop(source, self.greedy_cfg,
                                                          self.grid.sample_time, self.cfg.K)
            else:
                res.model, res.history = greedy_loop(source, self.greedy_cfg)
            res.points, res.values = res.history.points, res.history.values
            self._score(res, source)
        except LoewnerIdError as exc:
            res.status = f'{type(exc).__name__}: {exc}'
            logger.warning('adaptive run (noise %g, seed %d) failed: %s', noise_std, seed, exc)
        res.runtime = time.perf_counter() - start
        return res

    def equidistant(self, count: int | None, noise_std: float = 0.0, seed: int = 0) -> RunResult:
        res = RunResult('equidistant', noise_std, seed)
        if count is None:
            res.status = 'skipped: no point count'
            return res
        start = time.perf_counter()
        source, measure = self.source(noise_std, seed)
        try:
            res.model, res.points, res.values = equidistant_fit(
                measure, count, self.grid, self.cfg.D, self.cfg.rank_tol)
            self._score(res, source)
        except LoewnerIdError as exc:
            res.status = f'{type(exc).__name__}: {exc}'
            logger.warning('equidistant run (noise %g, seed %d) failed: %s', noise_std, seed, exc)
        res.runtime = time.perf_counter() - start
        return res

    def cell(self, noise_std: float, seed: int):
        ad = self.adaptive(noise_std, seed)
        count = self.cfg.equi_count or (len(ad.points) if ad.model is not None else None)
        return ad, self.equidistant(count, noise_std, seed)

    def convergence(self, ad: RunResult, final_count: int) -> list:
        """Rows ``(scheme, n_points, h2, max)`` along the adaptive history and for
        equidistant sets of every even size up to ``final_count``."""
        rows = []
        if ad.history is not None:
            for rec in ad.history.records:
                n = rec.n_points
                try:
                    m = _fit(ad.points[:n], ad.values[:n], self.grid, self.cfg.D,
                             self.cfg.rank_tol)
                    rows.append(['adaptive', n, h2_grid_error(m, self.truth, self.grid),
                                 max_grid_error(m, self.truth, self.grid)])
                except LoewnerIdError:
                    rows.append(['adaptive', n, float('nan'), float('nan')])
        for n in range(self.cfg.init_points, final_count + 1, 2):
            res = self.equidistant(n)
            rows.append(['equidistant', n, res.h2, res.max_err])
        return rows


def _write_csv(path: Path, header, rows):
    with path.open('w', newline='') as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x
                             for x in row])


def _mags(model, pts):
    if model is None:
        return np.full(pts.shape, np.nan, dtype=complex)
    return freqresp(model, pts)


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run both schemes for every noise level and seed and write the report files.

    Files written to ``cfg.out_dir``: ``bode.csv``, ``convergence.csv``,
    ``noise_table.csv``, ``chosen_points.csv``, ``mask.csv`` and ``summary.json``.
    A failing run is recorded in its table row and in the summary; the remaining
    cells still run. Returns the summary dictionary.
    """
    exp = Experiment(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = exp.grid
    cells = [(0.0, cfg.seeds[0])] + [(s, seed) for s in cfg.noise_levels if s > 0
                                      for seed in cfg.seeds]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        results = list(pool.map(lambda c: exp.cell(*c), cells))
    ad, eq = results[0]

    pts = grid.eval_points
    Ht, Ha, He = freqresp(exp.truth, pts), _mags(ad.model, pts), _mags(eq.model, pts)
    _write_csv(out / 'bode.csv', BODE_HEADER,
               zip(grid.omega, np.abs(Ht), np.abs(Ha), np.abs(He), np.abs(Ha - Ht),
                   np.abs(He - Ht)))

    final_count = cfg.equi_count or len(ad.points) or cfg.init_points
    _write_csv(out / 'convergence.csv', CONVERGENCE_HEADER, exp.convergence(ad, final_count))

    _write_csv(out / 'noise_table.csv', NOISE_HEADER,
               [[a.noise_std, a.seed, a.h2, e.h2, len(a.points), len(e.points), a.status,
                 e.status] for a, e in results])

    rows = []
    if ad.history is not None:
        it = [0] * ad.history.records[0].n_points
        for rec in ad.history.records[1:]:
            it += [rec.iteration] * len(rec.new_points)
        rows += [['adaptive', i, k, p.imag, v.real, v.imag]
                 for i, (k, p, v) in enumerate(zip(it, ad.points, ad.values))]
    rows += [['equidistant', i, 0, p.imag, v.real, v.imag]
             for i, (p, v) in enumerate(zip(eq.points, eq.values))]
    _write_csv(out / 'chosen_points.csv', POINTS_HEADER, rows)

    notches = 1j * np.array([cfg.wmin, np.sqrt(cfg.wmin * cfg.wmax), cfg.wmax])
    _write_csv(out / 'mask.csv', MASK_HEADER,
               zip(grid.omega, mask_product(grid.points, notches, cfg.beta, cfg.epsilon)))

    summary = {
        'plant': exp.name,
        'plant_order': exp.truth.order,
        'domain': cfg.domain,
        'sample_time': grid.sample_time,
        'config': {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(cfg).items()},
        'runs': [r.summary() for pair in results for r in pair],
    }
    (out / 'summary.json').write_text(json.dumps(summary, indent=2))
    return summary
