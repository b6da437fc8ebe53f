"""Descriptor state-space models, transfer-function evaluation and benchmark plants.

Models are single-input single-output descriptor systems

.. math::
    E \\dot x = A x + B u, \\qquad y = C x + D u

in continuous time, or ``E x[p+1] = A x[p] + B u[p]`` in discrete time. Matrices
are always stored as complex arrays; ``is_real`` reports whether every imaginary
part is exactly zero.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as spla
import scipy.sparse as sps
import scipy.sparse.linalg as spsla

from loewnerid.exceptions import (AboveNyquist, ConfigError, DimensionMismatch, SingularE,
                                  SingularPencil)

#: reciprocal condition number below which a solve is declared singular
RCOND_MIN = 1e-14

# dense LU is replaced by sparse LU above this order when the pencil is sparse
_SPARSE_MIN_ORDER = 200
_SPARSE_MAX_DENSITY = 0.05


@dataclass(frozen=True, eq=False)
class StateSpace:
    """SISO descriptor realization ``(E, A, B, C, D)``.

    Parameters
    ----------
    E, A
        ``n x n`` matrices.
    B
        ``n x 1`` input matrix.
    C
        ``1 x n`` output matrix.
    D
        Scalar feed-through.
    sample_time
        ``None`` for continuous-time models, otherwise the sampling time in seconds.
    """

    E: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: complex = 0.0
    sample_time: float | None = None
    name: str = field(default='', compare=False)

    def __post_init__(self):
        A, E, B, C = (np.asarray(M, dtype=complex) for M in (self.A, self.E, self.B, self.C))
        if A.size == 0:
            n = 0
            A, E, B, C = A.reshape(0, 0), E.reshape(0, 0), B.reshape(0, 1), C.reshape(1, 0)
        else:
            A, E = np.atleast_2d(A), np.atleast_2d(E)
            n = A.shape[0]
            B = B.reshape(-1, 1) if B.ndim < 2 else B
            C = C.reshape(1, -1) if C.ndim < 2 else C
        if A.shape != (n, n) or E.shape != (n, n):
            raise DimensionMismatch(f'E and A must be {n}x{n}, got {E.shape} and {A.shape}')
        if B.shape != (n, 1):
            raise DimensionMismatch(f'B must be {n}x1, got {B.shape}')
        if C.shape != (1, n):
            raise DimensionMismatch(f'C must be 1x{n}, got {C.shape}')
        D = complex(np.asarray(self.D).reshape(()))
        if self.sample_time is not None and not self.sample_time > 0:
            raise ConfigError(f'sample_time must be positive, got {self.sample_time}')
        for name, val in (('E', E), ('A', A), ('B', B), ('C', C)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, 'D', D)

    @property
    def order(self) -> int:
        return self.A.shape[0]

    @property
    def domain(self) -> str:
        return 'continuous' if self.sample_time is None else 'discrete'

    @property
    def is_discrete(self) -> bool:
        return self.sample_time is not None

    @property
    def is_real(self) -> bool:
        return all(not np.any(M.imag) for M in (self.E, self.A, self.B, self.C)) and self.D.imag == 0

    @cached_property
    def _sparse(self):
        n = self.order
        if n < _SPARSE_MIN_ORDER:
            return None
        nnz = np.count_nonzero(self.A) + np.count_nonzero(self.E)
        if nnz > _SPARSE_MAX_DENSITY * n * n:
            return None
        return sps.csc_matrix(self.E), sps.csc_matrix(self.A)

    def with_feedthrough(self, D: complex) -> StateSpace:
        return StateSpace(self.E, self.A, self.B, self.C, D, self.sample_time, self.name)

    def poles(self) -> np.ndarray:
        """Finite generalized eigenvalues of ``(A, E)``."""
        if self.order == 0:
            return np.empty(0, dtype=complex)
        w = spla.eigvals(self.A, self.E)
        return w[np.isfinite(w)]

    def __repr__(self):
        return (f'StateSpace(order={self.order}, domain={self.domain}, '
                f'real={self.is_real}, D={self.D})')


def _lu(M):
    # exact singularity is reported through the condition estimate instead
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', spla.LinAlgWarning)
        return spla.lu_factor(M, check_finite=False)


def _solve_pencil(model: StateSpace, s: complex) -> np.ndarray:
    n = model.order
    sparse = model._sparse
    if sparse is not None:
        E, A = sparse
        try:
            lu = spsla.splu((s * E - A).tocsc())
        except RuntimeError as exc:
            raise SingularPencil(f'sE - A is singular at s={s}') from exc
        d = np.abs(lu.U.diagonal())
        if d.min() <= RCOND_MIN * d.max():
            raise SingularPencil(f'sE - A is numerically singular at s={s}')
        return lu.solve(model.B.reshape(-1))
    M = s * model.E - model.A
    # row/column equilibration so that bad scaling of a realization is not mistaken for singularity
    r = np.abs(M).max(axis=1)
    if not r.all():
        raise SingularPencil(f'sE - A has a zero row at s={s}')
    M = M / r[:, None]
    c = np.abs(M).max(axis=0)
    if not c.all():
        raise SingularPencil(f'sE - A has a zero column at s={s}')
    M = M / c[None, :]
    lu, piv = _lu(M)
    gecon, = spla.get_lapack_funcs(('gecon',), (lu,))
    rcond, _ = gecon(lu, np.linalg.norm(M, 1), norm='1')
    if rcond < RCOND_MIN:
        raise SingularPencil(f'sE - A is numerically singular at s={s} (rcond={rcond:.2e})')
    return spla.lu_solve((lu, piv), model.B.reshape(-1) / r, check_finite=False) / c


def eval_tf(model: StateSpace, s: complex) -> complex:
    """Evaluate ``C (sE - A)^{-1} B + D`` at a single point ``s``.

    Raises
    ------
    SingularPencil
        If ``s`` is (numerically) a generalized eigenvalue of ``(A, E)``.
    """
    if model.order == 0:
        return model.D
    x = _solve_pencil(model, complex(s))
    return complex(model.C.reshape(-1) @ x) + model.D


def freqresp(model: StateSpace, points) -> np.ndarray:
    """Vectorised :func:`eval_tf` over an array of evaluation points."""
    points = np.asarray(points, dtype=complex)
    return np.array([eval_tf(model, s) for s in points.ravel()], dtype=complex).reshape(points.shape)


def simulate_discrete(model: StateSpace, inputs, x0=None) -> np.ndarray:
    """Simulate ``x[p+1] = E^{-1}(A x[p] + B u[p])``, ``y[p] = C x[p] + D u[p]``.

    Parameters
    ----------
    model
        Discrete-time model.
    inputs
        Input samples ``u[0], ..., u[K-1]``.
    x0
        Initial state, zero by default.

    Returns
    -------
    Output samples ``y[0], ..., y[K-1]`` as a complex array.
    """
    if not model.is_discrete:
        raise ConfigError('simulate_discrete requires a discrete-time model')
    u = np.asarray(inputs, dtype=complex).ravel()
    n = model.order
    if n == 0:
        return model.D * u
    x = np.zeros(n, dtype=complex) if x0 is None else np.asarray(x0, dtype=complex).ravel().copy()
    if x.shape != (n,):
        raise DimensionMismatch(f'x0 must have length {n}')
    lu, piv = _lu(model.E)
    gecon, = spla.get_lapack_funcs(('gecon',), (lu,))
    rcond, _ = gecon(lu, np.linalg.norm(model.E, 1), norm='1')
    if rcond < RCOND_MIN:
        raise SingularE(f'E is numerically singular (rcond={rcond:.2e})')
    F = spla.lu_solve((lu, piv), model.A, check_finite=False)
    G = spla.lu_solve((lu, piv), model.B, check_finite=False).ravel()
    c = model.C.ravel()
    if model.is_real and not np.any(u.imag) and not np.any(x.imag):
        F, G, c, x, u = F.real, G.real, c.real, x.real, u.real
    y = np.empty(u.shape[0], dtype=x.dtype)
    for p, up in enumerate(u):
        y[p] = c @ x
        x = F @ x + G * up
    return y.astype(complex) + model.D * u


def bilinear_freq_map(omega: float, sample_time: float) -> complex:
    """Map a continuous frequency onto the unit circle, ``z = exp(j omega T_s)``."""
    if not 0 <= omega < np.pi / sample_time:
        raise AboveNyquist(f'omega={omega} is not in [0, pi/T_s) for T_s={sample_time}')
    return complex(np.exp(1j * omega * sample_time))


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Log-spaced candidate frequencies ``omega_1 < ... < omega_M`` (rad/s).

    ``points`` are the imaginary-axis values ``j omega``; ``eval_points`` are where
    transfer functions are evaluated, i.e. ``j omega`` for continuous models and
    ``exp(j omega T_s)`` when ``sample_time`` is set.
    """

    omega: np.ndarray
    sample_time: float | None = None

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float).ravel()
        if omega.size < 2:
            raise ConfigError('a frequency grid needs at least two points')
        if np.any(np.diff(omega) <= 0):
            raise ConfigError('grid frequencies must be strictly increasing')
        if np.any(omega < 0):
            raise ConfigError('grid frequencies must be nonnegative')
        if self.sample_time is not None and omega[-1] >= np.pi / self.sample_time:
            raise AboveNyquist(f'grid maximum {omega[-1]} exceeds Nyquist for T_s={self.sample_time}')
        omega.setflags(write=False)
        object.__setattr__(self, 'omega', omega)

    @classmethod
    def logspace(cls, wmin: float, wmax: float, num: int, sample_time: float | None = None):
        if not 0 < wmin < wmax:
            raise ConfigError(f'need 0 < wmin < wmax, got {wmin}, {wmax}')
        return cls(np.logspace(np.log10(wmin), np.log10(wmax), num), sample_time)

    def __len__(self):
        return self.omega.size

    @property
    def points(self) -> np.ndarray:
        return 1j * self.omega

    @property
    def eval_points(self) -> np.ndarray:
        return self.to_eval(self.points)

    def to_eval(self, points) -> np.ndarray:
        """Map imaginary-axis points ``j omega`` to transfer-function arguments."""
        points = np.asarray(points, dtype=complex)
        if self.sample_time is None:
            return points
        return np.exp(points * self.sample_time)


def make_penzl() -> StateSpace:
    """Order-1006 FOM benchmark with resonances at 100, 200 and 400 rad/s."""
    n = 1006
    A = np.zeros((n, n))
    for k, sig in enumerate((100.0, 200.0, 400.0)):
        i = 2 * k
        A[i:i + 2, i:i + 2] = [[-1.0, sig], [-sig, -1.0]]
    A[6:, 6:] = np.diag(-np.arange(1.0, 1001.0))
    b = np.ones(n)
    b[:6] = 10.0
    return StateSpace(np.eye(n), A, b.reshape(-1, 1), b.reshape(1, -1), 0.0, name='penzl')


def discretize(model: StateSpace, sample_time: float) -> StateSpace:
    """Zero-order-hold discretization of a continuous model with invertible ``E``."""
    if model.is_discrete:
        raise ConfigError('model is already discrete')
    n = model.order
    Ac = np.linalg.solve(model.E, model.A)
    Bc = np.linalg.solve(model.E, model.B)
    M = np.zeros((n + 1, n + 1), dtype=complex)
    M[:n, :n] = Ac * sample_time
    M[:n, n:] = Bc * sample_time
    Phi = spla.expm(M)
    Ad, Bd = Phi[:n, :n], Phi[:n, n:]
    if model.is_real:
        Ad, Bd = Ad.real, Bd.real
    return StateSpace(np.eye(n), Ad, Bd, model.C, model.D, sample_time, model.name)


def make_random_stable(n: int, seed: int, wmin: float = 1e-1, wmax: float = 1e3,
                       sample_time: float | None = None, damping=(1e-2, 1e-1)) -> StateSpace:
    """Random real stable plant of order ``n`` with modes spread over ``[wmin, wmax]``.

    The band is cut into ``n // 2`` log-equal strata and each receives one lightly
    damped complex pole pair; odd orders get an extra real pole. Modal input and
    output gains have magnitudes in ``[0.5, 2]`` so no mode is nearly invisible. A
    random orthogonal similarity hides the block structure. With ``sample_time`` the
    plant is discretized by zero-order hold, which keeps all poles in the unit disk.
    """
    if n < 1:
        raise ConfigError(f'order must be positive, got {n}')
    rng = np.random.default_rng(seed)
    lo, hi = np.log10(wmin), np.log10(wmax)
    # keep modes off the band edges so the band sees their full shape
    margin = 0.1 * (hi - lo)
    edges = np.linspace(lo + margin, hi - margin, n // 2 + 1)
    A = np.zeros((n, n))
    scale = np.ones(n)
    for k in range(n // 2):
        width = edges[k + 1] - edges[k]
        wn = 10 ** rng.uniform(edges[k] + 0.2 * width, edges[k + 1] - 0.2 * width)
        zeta = 10 ** rng.uniform(*np.log10(damping))
        re, im = -zeta * wn, wn * np.sqrt(1 - zeta ** 2)
        A[2 * k:2 * k + 2, 2 * k:2 * k + 2] = [[re, im], [-im, re]]
        scale[2 * k:2 * k + 2] = np.sqrt(wn)
    if n % 2:
        A[-1, -1] = -10 ** rng.uniform(lo + margin, hi - margin)
        scale[-1] = np.sqrt(-A[-1, -1])
    B = scale * rng.choice([-1.0, 1.0], n) * 10 ** rng.uniform(np.log10(0.5), np.log10(2), n)
    C = scale * rng.choice([-1.0, 1.0], n) * 10 ** rng.uniform(np.log10(0.5), np.log10(2), n)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    model = StateSpace(np.eye(n), Q.T @ A @ Q, Q.T @ B, C @ Q, 0.0, name=f'random-{n}-{seed}')
    if sample_time is not None:
        model = discretize(model, sample_time)
    return model


def make_time_benchmark(sample_time: float | None = None) -> StateSpace:
    """Order-12 real plant with six resonances between 1.5 and 500 rad/s.

    Every mode decays at 1 rad/s or faster, so two-tone experiments reach steady
    state within a few seconds. Discretized by zero-order hold when ``sample_time``
    is given.
    """
    wn = np.array([1.5, 5.0, 15.0, 50.0, 150.0, 500.0])
    zeta = np.array([0.7, 0.3, 0.15, 0.1, 0.05, 0.03])
    n = 2 * wn.size
    A = np.zeros((n, n))
    for k, (w, z) in enumerate(zip(wn, zeta)):
        re, im = -z * w, w * np.sqrt(1 - z ** 2)
        A[2 * k:2 * k + 2, 2 * k:2 * k + 2] = [[re, im], [-im, re]]
    gain = np.repeat(np.sqrt(wn), 2)
    B = (gain * np.tile([1.0, 0.5], wn.size)).reshape(-1, 1)
    C = (gain * np.tile([1.0, -0.3], wn.size)).reshape(1, -1)
    model = StateSpace(np.eye(n), A, B, C, 0.0, name='time-benchmark')
    if sample_time is not None:
        model = discretize(model, sample_time)
    return model
