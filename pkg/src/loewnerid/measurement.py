"""Measurement oracles over known plants, and the JSON model file format.

An oracle is the only way the identification algorithms see a plant: every query
is logged, which makes the measurement budget of a run auditable.
"""
from __future__ import annotations

import csv
import json
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from loewnerid.exceptions import ConfigError, DimensionMismatch, ParseError
from loewnerid.lti import (StateSpace, eval_tf, make_penzl, make_random_stable,
                           make_time_benchmark, simulate_discrete)

LOG_HEADER = ['index', 'omega', 'h_re', 'h_im']


@dataclass(frozen=True)
class LogEntry:
    sigma: complex
    value: complex


class Oracle:
    """Transfer-function measurements of a plant with optional additive Gaussian noise.

    The noise is ``noise_std * (n1 + j n2)`` with independent standard normal ``n1``,
    ``n2`` drawn from a generator seeded with ``seed``, so a given query sequence
    always yields the same values.

    Not safe for concurrent use; wrap in :class:`LockedOracle` for that.
    """

    concurrent = False

    def __init__(self, model: StateSpace, noise_std: float = 0.0, seed: int = 0):
        if noise_std < 0:
            raise ConfigError(f'noise_std must be nonnegative, got {noise_std}')
        self.model = model
        self.noise_std = float(noise_std)
        self.seed = seed
        self._rng = np.random.default_rng(seed)
        self._log: list[LogEntry] = []

    @property
    def call_log(self) -> tuple:
        return tuple(self._log)

    def measure(self, sigma: complex) -> complex:
        value = eval_tf(self.model, sigma)
        if self.noise_std:
            re, im = self._rng.standard_normal(2)
            value += self.noise_std * complex(re, im)
        self._log.append(LogEntry(complex(sigma), value))
        return value

    def export_log(self, path) -> None:
        """Write the call log as CSV with columns ``index, omega, h_re, h_im``."""
        with Path(path).open('w', newline='') as fh:
            writer = csv.writer(fh)
            writer.writerow(LOG_HEADER)
            for i, e in enumerate(self._log):
                writer.writerow([i] + [repr(float(x)) for x in (e.sigma.imag, e.value.real, e.value.imag)])


class LockedOracle:
    """Thread-safe wrapper; the log order follows lock acquisition."""

    concurrent = True

    def __init__(self, oracle: Oracle):
        self._oracle = oracle
        self._lock = threading.Lock()

    def measure(self, sigma: complex) -> complex:
        with self._lock:
            return self._oracle.measure(sigma)

    def __getattr__(self, name):
        return getattr(self._oracle, name)


class PlantSimulator:
    """Discrete plant answering ``simulate(u)``; each call is one counted experiment.

    With ``noise_std > 0`` every output sample is corrupted like an :class:`Oracle`
    value, with independent Gaussian real and imaginary parts.
    """

    concurrent = False

    def __init__(self, model: StateSpace, noise_std: float = 0.0, seed: int = 0):
        if not model.is_discrete:
            raise ConfigError('PlantSimulator needs a discrete-time model')
        if noise_std < 0:
            raise ConfigError(f'noise_std must be nonnegative, got {noise_std}')
        self.model = model
        self.sample_time = model.sample_time
        self.noise_std = float(noise_std)
        self._rng = np.random.default_rng(seed)
        self.experiments = 0

    def simulate(self, u) -> np.ndarray:
        self.experiments += 1
        y = simulate_discrete(self.model, u).astype(complex)
        if self.noise_std:
            y += self.noise_std * (self._rng.standard_normal(y.shape)
                                   + 1j * self._rng.standard_normal(y.shape))
        return y


def benchmark(spec: str, sample_time: float | None = None, wmin: float = 1e-1,
              wmax: float = 1e3) -> StateSpace:
    """Build a shipped plant from an id: ``penzl``, ``time12``, or ``random:<order>:<seed>``.

    Random plants place their modes inside ``[wmin, wmax]``. ``sample_time`` makes
    ``time12`` and random plants discrete; Penzl is always continuous.
    """
    name, *args = spec.split(':')
    if name == 'penzl' and not args:
        return make_penzl()
    if name == 'time12' and not args:
        return make_time_benchmark(sample_time)
    if name == 'random' and len(args) == 2:
        try:
            n, seed = int(args[0]), int(args[1])
        except ValueError as exc:
            raise ConfigError(f'bad random plant id {spec!r}') from exc
        return make_random_stable(n, seed, wmin, wmax, sample_time=sample_time)
    raise ConfigError(f'unknown plant {spec!r}; expected penzl, time12 or random:<order>:<seed>')


def _encode(M: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


def save_model(model: StateSpace, path) -> None:
    """Write a model as JSON; matrices are row-major nested ``[re, im]`` pairs."""
    doc = {
        'order': model.order,
        'domain': model.domain,
        'E': _encode(model.E),
        'A': _encode(model.A),
        'B': _encode(model.B),
        'C': _encode(model.C),
        'D': _encode(np.array([[model.D]])),
    }
    if model.sample_time is not None:
        doc['sample_time'] = model.sample_time
    Path(path).write_text(json.dumps(doc))


def _decode(doc, key, shape, path):
    if key not in doc:
        raise ParseError(f'{path}: missing field {key!r}')
    try:
        arr = np.array(doc[key], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f'{path}: field {key!r}: {exc}') from exc
    if key == 'D' and arr.shape == (2,):
        arr = arr.reshape(1, 1, 2)
    if arr.size == 0 and 0 in shape:
        return np.zeros(shape, dtype=complex)
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise ParseError(f'{path}: field {key!r} must be a nested array of [re, im] pairs')
    if arr.shape[:2] != shape:
        raise DimensionMismatch(f'{path}: field {key!r} has shape {arr.shape[:2]}, expected {shape}')
    return arr[..., 0] + 1j * arr[..., 1]


def load_model(path) -> StateSpace:
    """Read a model written by :func:`save_model` and validate its dimensions."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f'{path}:{exc.lineno}:{exc.colno}: {exc.msg}') from exc
    if not isinstance(doc, dict):
        raise ParseError(f'{path}: top level must be an object')
    try:
        n = int(doc['order'])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f'{path}: field "order" missing or not an integer') from exc
    domain = doc.get('domain', 'continuous')
    if domain not in ('continuous', 'discrete'):
        raise ParseError(f'{path}: field "domain" must be continuous or discrete, got {domain!r}')
    sample_time = doc.get('sample_time')
    if domain == 'discrete' and sample_time is None:
        raise ParseError(f'{path}: discrete models need "sample_time"')
    if domain == 'continuous':
        sample_time = None
    E = _decode(doc, 'E', (n, n), path)
    A = _decode(doc, 'A', (n, n), path)
    B = _decode(doc, 'B', (n, 1), path)
    C = _decode(doc, 'C', (1, n), path)
    D = _decode(doc, 'D', (1, 1), path)[0, 0]
    return StateSpace(E, A, B, C, D, None if sample_time is None else float(sample_time),
                      name=path.stem)
