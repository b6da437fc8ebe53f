"""Greedy identification from sampled input/output data.

Each iteration excites the plant with two complex exponentials at the frequencies
picked by the frequency-domain selection rule, waits for the response to settle,
and recovers the two transfer-function values by least squares on the steady
state. The estimates feed the same Loewner machinery as the frequency-domain loop,
with interpolation points on the unit circle.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from loewnerid.exceptions import (ConfigError, IllConditioned, ParseError, TraceTooShort,
                                  ZeroInputComponent)
from loewnerid.greedy import GreedyConfig, run_greedy
from loewnerid.lti import FrequencyGrid, StateSpace

#: largest acceptable condition number of the least-squares matrix
MAX_COND = 1e12

TRACE_HEADER = ['p', 'u_re', 'u_im', 'y_re', 'y_im']


@dataclass(frozen=True, eq=False)
class DiscreteTrace:
    """Input/output samples of one experiment; rows from ``k_min`` on are steady state."""

    u: np.ndarray
    y: np.ndarray
    sample_time: float
    k_min: int = 0

    def __post_init__(self):
        u = np.asarray(self.u, dtype=complex).ravel()
        y = np.asarray(self.y, dtype=complex).ravel()
        if u.shape != y.shape:
            raise ConfigError(f'u has {u.size} samples but y has {y.size}')
        if not 0 <= self.k_min < u.size:
            raise ConfigError(f'k_min={self.k_min} outside [0, {u.size})')
        if u.size - self.k_min < 2:
            raise TraceTooShort('need at least two steady-state samples')
        object.__setattr__(self, 'u', u)
        object.__setattr__(self, 'y', y)

    @property
    def K(self) -> int:
        return self.u.size


@dataclass(frozen=True)
class TfEstimatePair:
    sigma_a: float
    sigma_b: float
    h_a: complex
    h_b: complex
    residual: float
    k_min: int = 0


def design_input(sigma_a: float, sigma_b: float, K: int) -> np.ndarray:
    """Two-tone input ``u[p] = (1+j)/K * (exp(j sigma_a p) + exp(j sigma_b p))``.

    ``sigma_a`` and ``sigma_b`` are discrete angles in radians per sample.
    """
    if K < 2:
        raise ConfigError(f'K must be at least 2, got {K}')
    p = np.arange(K)
    return (1 + 1j) / K * (np.exp(1j * sigma_a * p) + np.exp(1j * sigma_b * p))


def tone_amplitudes(u, sigma_a: float, sigma_b: float) -> np.ndarray:
    """Complex amplitudes of ``exp(j sigma p)`` at both angles, fitted over the whole record.

    On DFT bin angles this equals the DFT of ``u`` at those bins divided by ``K``.
    """
    u = np.asarray(u, dtype=complex).ravel()
    p = np.arange(u.size)
    basis = np.exp(1j * np.outer(p, [sigma_a, sigma_b]))
    amp, *_ = np.linalg.lstsq(basis, u, rcond=None)
    return amp


def detect_kmin(y, window: int, rel_tol: float, scale: float | None = None) -> int:
    """First index where the magnitude profile stops changing between consecutive windows.

    Returns the smallest ``k`` with ``| |y[k+i]| - |y[k+window+i]| | <= rel_tol * scale``
    for all ``0 <= i < window``; ``scale`` defaults to ``max|y|``. Falls back to
    ``ceil(K/2)`` when no such ``k`` exists.
    """
    mag = np.abs(np.asarray(y, dtype=complex).ravel())
    K = mag.size
    if window < 1 or K <= 2 * window:
        raise TraceTooShort(f'trace of length {K} is too short for window {window}')
    if scale is None:
        scale = mag.max()
    change = np.abs(mag[window:] - mag[:-window])
    worst = sliding_window_view(change, window).max(axis=1)
    ok = np.flatnonzero(worst <= rel_tol * scale)
    return int(ok[0]) if ok.size else -(-K // 2)


def _ls_matrix(sigma_a, sigma_b, amps, rows):
    return np.exp(1j * np.outer(rows, [sigma_a, sigma_b])) * amps[None, :]


def estimate_tf_pair(trace: DiscreteTrace, sigma_a: float, sigma_b: float) -> TfEstimatePair:
    """Least-squares estimates of ``H(exp(j sigma_a))`` and ``H(exp(j sigma_b))``.

    Row ``p`` of the system (``p = k_min, ..., K-1``) is
    ``[U_a exp(j sigma_a p), U_b exp(j sigma_b p)]`` and the right-hand side is ``y[p]``.
    """
    if sigma_a == sigma_b:
        raise ConfigError('excitation angles must differ')
    amps = tone_amplitudes(trace.u, sigma_a, sigma_b)
    if np.min(np.abs(amps)) <= 1e-12 * max(np.abs(trace.u).max(), 1e-300):
        raise ZeroInputComponent(f'input has no component at one of {sigma_a}, {sigma_b}')
    rows = np.arange(trace.k_min, trace.K)
    F = _ls_matrix(sigma_a, sigma_b, amps, rows)
    Q, R = np.linalg.qr(F)
    cond = np.linalg.cond(R)
    if not cond <= MAX_COND:
        raise IllConditioned(f'least-squares matrix has condition number {cond:.2e}')
    ybar = trace.y[trace.k_min:]
    h = np.linalg.solve(R, Q.conj().T @ ybar)
    residual = float(np.linalg.norm(F @ h - ybar))
    return TfEstimatePair(sigma_a, sigma_b, complex(h[0]), complex(h[1]), residual, trace.k_min)


def estimate_with_settling(u, y, sample_time: float, sigma_a: float, sigma_b: float,
                           window: int | None = None, rel_tol: float = 1e-10) -> TfEstimatePair:
    """Estimate a pair with ``k_min`` found from the decay of the transient.

    A first fit on the second half of the record gives a steady-state prediction;
    :func:`detect_kmin` is then applied to the residual (the transient) relative to
    ``max|y|``.
    """
    u = np.asarray(u, dtype=complex).ravel()
    y = np.asarray(y, dtype=complex).ravel()
    K = u.size
    window = window or max(K // 32, 1)
    first = estimate_tf_pair(DiscreteTrace(u, y, sample_time, K // 2), sigma_a, sigma_b)
    amps = tone_amplitudes(u, sigma_a, sigma_b)
    steady = _ls_matrix(sigma_a, sigma_b, amps, np.arange(K)) @ np.array([first.h_a, first.h_b])
    k_min = detect_kmin(y - steady, window, rel_tol, scale=np.abs(y).max())
    k_min = min(k_min, K - 2)
    return estimate_tf_pair(DiscreteTrace(u, y, sample_time, k_min), sigma_a, sigma_b)


def default_sample_time(omega_max: float) -> float:
    """Sampling time that puts ``omega_max`` at 0.9 of the Nyquist frequency."""
    return 0.9 * np.pi / omega_max


def greedy_time_loop(plant, cfg: GreedyConfig, sample_time: float | None = None, K: int = 4096,
                     window: int | None = None, rel_tol: float = 1e-10):
    """Greedy identification of a discrete plant from two-tone experiments.

    Parameters
    ----------
    plant
        Object with ``simulate(u) -> y`` (see :class:`loewnerid.measurement.PlantSimulator`)
        and, optionally, a ``sample_time`` attribute.
    cfg
        Loop configuration; its grid holds continuous frequencies in rad/s.
    sample_time
        Sampling time. Defaults to the plant's, else to 0.9 of Nyquist at the grid maximum.
    K
        Samples per experiment.

    Returns
    -------
    model
        Real discrete-time realization.
    history
        Loop history; ``history.estimates`` lists every :class:`TfEstimatePair`.
    """
    if sample_time is None:
        sample_time = getattr(plant, 'sample_time', None) or cfg.grid.sample_time \
            or default_sample_time(cfg.grid.omega[-1])
    cfg = replace(cfg, grid=FrequencyGrid(cfg.grid.omega, sample_time))
    measure = two_tone_measure(plant, sample_time, K, window, rel_tol)
    model, history = run_greedy(measure, cfg)
    history.estimates = measure.estimates
    return model, history


def two_tone_measure(plant, sample_time: float, K: int = 4096, window: int | None = None,
                     rel_tol: float = 1e-10):
    """Measurement function for :func:`loewnerid.greedy.run_greedy` backed by experiments.

    Consecutive points are excited together; each pair costs one call to
    ``plant.simulate``. The returned function keeps every :class:`TfEstimatePair` in
    its ``estimates`` attribute.
    """
    estimates = []

    def measure(points):
        if len(points) % 2:
            raise ConfigError(f'two-tone experiments need an even number of points, got {len(points)}')
        values = []
        for a, b in zip(points[0::2], points[1::2]):
            sa, sb = a.imag * sample_time, b.imag * sample_time
            u = design_input(sa, sb, K)
            y = plant.simulate(u)
            est = estimate_with_settling(u, y, sample_time, sa, sb, window, rel_tol)
            estimates.append(est)
            values += [est.h_a, est.h_b]
        return values

    measure.estimates = estimates
    return measure


def write_trace(trace: DiscreteTrace, path) -> None:
    """Write ``p, u_re, u_im, y_re, y_im`` rows plus a JSON sidecar with sampling metadata."""
    path = Path(path)
    with path.open('w', newline='') as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for p, (u, y) in enumerate(zip(trace.u, trace.y)):
            writer.writerow([p] + [repr(float(x)) for x in (u.real, u.imag, y.real, y.imag)])
    sidecar = {'domain': 'discrete', 'sample_time': trace.sample_time, 'K': trace.K,
               'k_min': trace.k_min}
    path.with_suffix('.json').write_text(json.dumps(sidecar, indent=2))


def read_trace(path) -> DiscreteTrace:
    path = Path(path)
    try:
        meta = json.loads(path.with_suffix('.json').read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f'{path.with_suffix(".json")}: cannot read sidecar: {exc}') from exc
    rows = []
    with path.open(newline='') as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header != TRACE_HEADER:
            raise ParseError(f'{path}:1: expected header {", ".join(TRACE_HEADER)}')
        for lineno, row in enumerate(reader, start=2):
            try:
                rows.append([float(v) for v in row[1:5]])
            except (ValueError, IndexError) as exc:
                raise ParseError(f'{path}:{lineno}: {exc}') from exc
    data = np.array(rows).reshape(-1, 4)
    return DiscreteTrace(data[:, 0] + 1j * data[:, 1], data[:, 2] + 1j * data[:, 3],
                         float(meta['sample_time']), int(meta.get('k_min', 0)))
