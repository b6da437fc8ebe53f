"""Loewner pencils and interpolating realizations from transfer-function samples.

Left points ``lambda_j`` index the columns of the Loewner matrix and right points
``mu_i`` its rows::

    L[i, j]  = (H(lambda_j) - H(mu_i)) / (lambda_j - mu_i)
    Ls[i, j] = (lambda_j H(lambda_j) - mu_i H(mu_i)) / (lambda_j - mu_i)

The interpolant is ``W (Ls - s L)^{-1} V``, realized as ``E = -L``, ``A = -Ls``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg as spla

from loewnerid.exceptions import (CoincidentPoints, ConfigError, EmptyData, NotConjugateClosed,
                                  OddCount, SingularLoewner)
from loewnerid.lti import RCOND_MIN, StateSpace

#: default relative singular-value cutoff used by :func:`compress_realize`
RANK_TOL = 1e-10

_J2 = np.array([[1, -1j], [1, 1j]]) / np.sqrt(2)


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    """Interpolation points with measured values and an optional left/right partition."""

    points: np.ndarray
    values: np.ndarray
    left_idx: tuple | None = None
    right_idx: tuple | None = None

    def __post_init__(self):
        points = np.asarray(self.points, dtype=complex).ravel()
        values = np.asarray(self.values, dtype=complex).ravel()
        if points.shape != values.shape:
            raise ConfigError(f'{points.size} points but {values.size} values')
        if np.unique(points).size != points.size:
            raise ConfigError('interpolation points must be pairwise distinct')
        object.__setattr__(self, 'points', points)
        object.__setattr__(self, 'values', values)
        if (self.left_idx is None) != (self.right_idx is None):
            raise ConfigError('left_idx and right_idx must be given together')
        if self.left_idx is not None:
            left, right = tuple(self.left_idx), tuple(self.right_idx)
            if sorted(left + right) != list(range(points.size)):
                raise ConfigError('partition must be disjoint and cover every point')
            object.__setattr__(self, 'left_idx', left)
            object.__setattr__(self, 'right_idx', right)

    def __len__(self):
        return self.points.size

    @property
    def is_split(self) -> bool:
        return self.left_idx is not None

    @property
    def left(self):
        """``(lambda, H(lambda))`` arrays."""
        idx = list(self.left_idx)
        return self.points[idx], self.values[idx]

    @property
    def right(self):
        """``(mu, H(mu))`` arrays."""
        idx = list(self.right_idx)
        return self.points[idx], self.values[idx]


@dataclass(frozen=True, eq=False)
class LoewnerPencil:
    L: np.ndarray
    Ls: np.ndarray
    V: np.ndarray
    W: np.ndarray
    D: complex = 0.0
    lam: np.ndarray | None = None
    mu: np.ndarray | None = None
    # images of the all-ones vectors under a change of coordinates (None: all ones)
    ones_row: np.ndarray | None = None
    ones_col: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.L.shape[0]

    @property
    def ones(self) -> np.ndarray:
        return np.ones(self.L.shape[0])

    @property
    def e_row(self) -> np.ndarray:
        """Column vector multiplying ``D`` in ``V - e_row D``."""
        return np.ones((self.L.shape[0], 1)) if self.ones_row is None else self.ones_row

    @property
    def e_col(self) -> np.ndarray:
        """Row vector multiplying ``D`` in ``W - D e_col``."""
        return np.ones((1, self.L.shape[1])) if self.ones_col is None else self.ones_col

    @property
    def is_real(self) -> bool:
        return all(not np.any(M.imag) for M in (self.L, self.Ls, self.V, self.W))


def split_points(ms: MeasurementSet) -> MeasurementSet:
    """Interlace: sort by imaginary (then real) part, alternate left/right.

    The returned set is reordered by that sort; ranks 1, 3, 5, ... go left.
    """
    n = len(ms)
    if n % 2:
        raise OddCount(f'cannot interlace an odd number of points ({n})')
    order = np.lexsort((ms.points.real, ms.points.imag))
    return MeasurementSet(ms.points[order], ms.values[order],
                          tuple(range(0, n, 2)), tuple(range(1, n, 2)))


def conjugate_augment(ms: MeasurementSet) -> MeasurementSet:
    """Add the conjugate of every point (value conjugated) to the same side.

    Each conjugate is placed directly after its original so that consecutive pairs
    can be mapped to real coordinates. Points on the real axis are left single.
    """
    if not ms.is_split:
        ms = split_points(ms)
    points, values, left, right = [], [], [], []
    for side, idx in ((left, ms.left_idx), (right, ms.right_idx)):
        for i in idx:
            p, v = ms.points[i], ms.values[i]
            side.append(len(points))
            points.append(p)
            values.append(v)
            if p.imag != 0:
                side.append(len(points))
                points.append(np.conj(p))
                values.append(np.conj(v))
    return MeasurementSet(np.array(points), np.array(values), tuple(left), tuple(right))


def build_pencil(ms: MeasurementSet, D: complex = 0.0) -> LoewnerPencil:
    """Assemble Loewner and shifted Loewner matrices from partitioned data."""
    if not ms.is_split:
        raise ConfigError('measurement set has no left/right partition; call split_points first')
    lam, w = ms.left
    mu, v = ms.right
    denom = lam[None, :] - mu[:, None]
    if np.any(denom == 0):
        raise CoincidentPoints('a left point coincides with a right point')
    L = (w[None, :] - v[:, None]) / denom
    Ls = (lam[None, :] * w[None, :] - mu[:, None] * v[:, None]) / denom
    return LoewnerPencil(L, Ls, v.reshape(-1, 1), w.reshape(1, -1), complex(D), lam, mu)


def _shifted(p: LoewnerPencil):
    """Pencil data with the feed-through removed."""
    D, er, ec = p.D, p.e_row, p.e_col
    return p.L, p.Ls - D * (er @ ec), p.V - D * er, p.W - D * ec


def realize(p: LoewnerPencil, sample_time: float | None = None) -> StateSpace:
    """Interpolating realization ``(-L, -(Ls - D), V - D, W - D, D)`` of a square pencil."""
    if p.L.shape[0] != p.L.shape[1]:
        raise ConfigError(f'realize needs a square pencil, got {p.L.shape}; use compress_realize')
    L, Ls, V, W = _shifted(p)
    if L.size:
        s = np.linalg.svd(L, compute_uv=False)
        if s[0] == 0 or s[-1] < RCOND_MIN * s[0]:
            raise SingularLoewner(f'Loewner matrix is rank deficient (cond={s[0] / max(s[-1], 1e-300):.2e})')
    return StateSpace(-L, -Ls, V, W, p.D, sample_time)


def loewner_rank(p: LoewnerPencil, rank_tol: float = RANK_TOL) -> int:
    """Numerical rank of ``L`` relative to its largest singular value."""
    if p.L.size == 0:
        return 0
    s = np.linalg.svd(p.L, compute_uv=False)
    return int(np.sum(s > rank_tol * s[0])) if s[0] > 0 else 0


def compress_realize(p: LoewnerPencil, rank_tol: float = RANK_TOL,
                     sample_time: float | None = None) -> StateSpace:
    """Realization projected onto the dominant singular subspaces of the pencil.

    The left basis comes from ``[L, Ls]`` and the right basis from ``[L; Ls]``. The
    order is the number of singular values above ``rank_tol`` times the largest one,
    or times ``|D|`` if that is bigger (the smaller count of the two factorizations).
    """
    L, Ls, V, W = _shifted(p)
    if L.size == 0:
        raise EmptyData('cannot realize an empty pencil')
    Y, s_row, _ = spla.svd(np.hstack([L, Ls]), full_matrices=False)
    _, s_col, Xh = spla.svd(np.vstack([L, Ls]), full_matrices=False)
    # with a known feed-through, what is left after removing it is measured against |D|
    floor = abs(p.D)
    r = min(int(np.sum(s_row > rank_tol * max(s_row[0], floor))),
            int(np.sum(s_col > rank_tol * max(s_col[0], floor))))
    if s_row[0] == 0 or s_col[0] == 0:
        r = 0
    Yr = Y[:, :r]
    Xr = Xh[:r].conj().T
    E = -Yr.conj().T @ L @ Xr
    A = -Yr.conj().T @ Ls @ Xr
    B = Yr.conj().T @ V
    C = W @ Xr
    return StateSpace(E, A, B, C, p.D, sample_time)


def _pair_blocks(points) -> list:
    blocks, i = [], 0
    points = np.asarray(points)
    while i < points.size:
        if points[i].imag == 0:
            blocks.append(1)
            i += 1
        elif i + 1 < points.size and points[i + 1] == np.conj(points[i]):
            blocks.append(2)
            i += 2
        else:
            raise NotConjugateClosed(f'point {points[i]} is not followed by its conjugate')
    return blocks


def _unitary(blocks) -> np.ndarray:
    return spla.block_diag(*[_J2 if b == 2 else np.ones((1, 1)) for b in blocks]) if blocks \
        else np.zeros((0, 0))


def _drop_imag(mats, what):
    scale = max([np.abs(M).max() for M in mats if M.size] + [1.0])
    resid = max([np.abs(M.imag).max() for M in mats if M.size] + [0.0])
    if resid > 1e-6 * scale:
        raise NotConjugateClosed(f'{what}: residual imaginary part {resid:.2e} (scale {scale:.2e})')
    return [M.real.copy() for M in mats]


def realify_pencil(p: LoewnerPencil) -> LoewnerPencil:
    """Transform a pencil built from conjugate-paired data into real arithmetic.

    Requires the left and right points to come in consecutive conjugate pairs, as
    produced by :func:`conjugate_augment`.
    """
    if p.is_real and np.imag(p.D) == 0:
        return p
    if p.lam is None or p.mu is None:
        raise NotConjugateClosed('pencil carries no interpolation points')
    Tc = _unitary(_pair_blocks(p.lam))
    Tr = _unitary(_pair_blocks(p.mu))
    L, Ls, V, W, er, ec = _drop_imag([Tr.conj().T @ p.L @ Tc, Tr.conj().T @ p.Ls @ Tc,
                                      Tr.conj().T @ p.V, p.W @ Tc, Tr.conj().T @ p.e_row,
                                      p.e_col @ Tc], 'pencil')
    if abs(np.imag(p.D)) > 1e-6 * max(1.0, abs(p.D)):
        raise NotConjugateClosed('feed-through is not real')
    return replace(p, L=L, Ls=Ls, V=V, W=W, D=complex(p.D.real), ones_row=er, ones_col=ec)


def realify(m: StateSpace, row_blocks=None, col_blocks=None) -> StateSpace:
    """Real realization of a model whose coordinates come in conjugate pairs.

    ``row_blocks`` / ``col_blocks`` list the pair structure (2 for a conjugate pair,
    1 for a self-conjugate coordinate) of the equations and of the state; both
    default to consecutive pairs, the layout :func:`realize` produces from
    :func:`conjugate_augment`-ed data. Real models are returned unchanged.
    """
    if m.is_real:
        return m
    n = m.order
    if row_blocks is None or col_blocks is None:
        if n % 2:
            raise NotConjugateClosed(f'odd order {n} without explicit pair structure')
        row_blocks = row_blocks or [2] * (n // 2)
        col_blocks = col_blocks or [2] * (n // 2)
    if sum(row_blocks) != n or sum(col_blocks) != n:
        raise ConfigError('block structure does not match the model order')
    Tr, Tc = _unitary(list(row_blocks)), _unitary(list(col_blocks))
    E, A, B, C = _drop_imag([Tr.conj().T @ m.E @ Tc, Tr.conj().T @ m.A @ Tc,
                             Tr.conj().T @ m.B, m.C @ Tc], 'model')
    if abs(m.D.imag) > 1e-6 * max(1.0, abs(m.D)):
        raise NotConjugateClosed('feed-through is not real')
    return StateSpace(E, A, B, C, m.D.real, m.sample_time, m.name)


def loewner_model(points, values, D: complex = 0.0, rank_tol: float = RANK_TOL,
                  conjugate: bool = True, sample_time: float | None = None) -> StateSpace:
    """Interlace, optionally close under conjugation, and return the compressed realization.

    With ``conjugate=True`` the pencil is moved to real arithmetic before the SVD
    projection, so the result is a real model.
    """
    ms = split_points(MeasurementSet(points, values))
    if conjugate:
        ms = conjugate_augment(ms)
    pencil = build_pencil(ms, D)
    if conjugate:
        pencil = realify_pencil(pencil)
    return compress_realize(pencil, rank_tol, sample_time)
