"""Supports, partial inverses and the rank metric on M_n.

Everything here is exact arithmetic on integer ranks where possible: traces
of projections are :class:`fractions.Fraction` values ``k/n``.
"""

import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import IdempotencyError, UsageError
from .matcore import (
    adjoint, as_matrix, default_rank_tol, numerical_rank, pinv, svd, _rank_from_s,
)

__all__ = [
    "Projection", "PeirceBlocks", "IdempotentSplit", "AmbiguousRankWarning",
    "supports", "rank_norm", "rank_metric", "sv_function", "l0_norm",
    "peirce_decompose", "idempotent_split", "projection_conjugator",
    "support_normalizers", "proj_meet_join", "projection_close", "projection_leq",
]

PROJECTION_TOL = 1e-10
IDEMPOTENT_TOL = 1e-8


class AmbiguousRankWarning(UserWarning):
    """The singular-value gap at a rank cut is too small to trust the rank."""


def _projector(basis):
    return basis @ adjoint(basis)


@dataclass(frozen=True, eq=False)
class Projection:
    """An orthogonal projection snapped to exact eigenvalues {0, 1}."""

    matrix: np.ndarray
    rank: int

    @property
    def n(self):
        return self.matrix.shape[0]

    @property
    def trace(self):
        return Fraction(self.rank, self.n)

    @classmethod
    def from_matrix(cls, p, tol=PROJECTION_TOL):
        p = as_matrix(p, "p")
        idem = np.linalg.norm(p @ p - p)
        herm = np.linalg.norm(p - adjoint(p))
        if idem > tol or herm > tol:
            raise UsageError(
                f"not an orthogonal projection: |p^2-p|={idem:.3e}, |p-p*|={herm:.3e}"
            )
        w, v = np.linalg.eigh(0.5 * (p + adjoint(p)))
        basis = v[:, w > 0.5]
        return cls(_projector(basis), basis.shape[1])

    @classmethod
    def onto(cls, vectors, tol=None):
        """Projection onto the column span of ``vectors`` (rank by SVD cutoff)."""
        a = np.asarray(vectors, dtype=np.complex128)
        if a.ndim == 1:
            a = a[:, None]
        n = a.shape[0]
        if a.shape[1] == 0:
            return cls.zero(n)
        if tol is None:
            tol = default_rank_tol(max(a.shape))
        u, s, _ = np.linalg.svd(a, full_matrices=False)
        r = _rank_from_s(s, tol)
        return cls(_projector(u[:, :r]), r)

    @classmethod
    def zero(cls, n):
        return cls(np.zeros((n, n), dtype=np.complex128), 0)

    @classmethod
    def identity(cls, n):
        return cls(np.eye(n, dtype=np.complex128), n)

    def complement(self):
        return Projection(np.eye(self.n) - self.matrix, self.n - self.rank)

    def basis(self):
        """Orthonormal basis of the range, as an ``n x rank`` array."""
        w, v = np.linalg.eigh(self.matrix)
        return v[:, w > 0.5]

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def __repr__(self):
        return f"Projection(n={self.n}, rank={self.rank})"


def _as_projection(p, n=None):
    if not isinstance(p, Projection):
        p = Projection.from_matrix(p)
    if n is not None and p.n != n:
        raise UsageError(f"projection order {p.n} does not match matrix order {n}")
    return p


def projection_close(p, q, tol=1e-8):
    return np.linalg.norm(np.asarray(p) - np.asarray(q)) <= tol


def projection_leq(p, q, tol=1e-8):
    """``p <= q`` in the projection order, i.e. ``q p = p``."""
    p, q = np.asarray(p), np.asarray(q)
    return np.linalg.norm(q @ p - p) <= tol


def supports(x, tol=None):
    """Left and right supports ``(l(x), r(x))``."""
    x = as_matrix(x)
    if tol is None:
        tol = default_rank_tol(x.shape[0])
    u, s, v = svd(x)
    r = _rank_from_s(s, tol)
    return Projection(_projector(u[:, :r]), r), Projection(_projector(v[:, :r]), r)


def rank_norm(x, tol=None):
    """``rank(x)/n`` as an exact fraction."""
    x = as_matrix(x)
    return Fraction(numerical_rank(x, tol), x.shape[0])


def rank_metric(x, y, tol=None):
    """``rank(x - y)/n``."""
    x, y = as_matrix(x), as_matrix(y, "y")
    if x.shape != y.shape:
        raise UsageError(f"order mismatch: {x.shape[0]} vs {y.shape[0]}")
    return rank_norm(x - y, tol)


def sv_function(x, t):
    """Singular value function: the ``floor(t n)``-th singular value (0-based)."""
    x = as_matrix(x)
    if not 0 <= t < 1:
        raise UsageError(f"t must lie in [0, 1), got {t}")
    s = np.linalg.svd(x, compute_uv=False)
    return float(s[int(np.floor(t * x.shape[0]))])


def l0_norm(x):
    """``inf_{t>0} (t + mu(t; x))``, exact over the breakpoints ``k/n``.

    On ``[k/n, (k+1)/n)`` the function is ``t + s_{k+1}``; the infimum of each
    piece sits at its left end, and for ``t >= 1`` the value is ``t``.
    """
    x = as_matrix(x)
    n = x.shape[0]
    s = np.linalg.svd(x, compute_uv=False)
    candidates = np.append(np.arange(n) / n + s, 1.0)
    return float(candidates.min())


class PeirceBlocks(NamedTuple):
    p: Projection
    pxp: np.ndarray
    pxq: np.ndarray
    qxp: np.ndarray
    qxq: np.ndarray

    def reconstruct(self):
        return self.pxp + self.pxq + self.qxp + self.qxq


def peirce_decompose(x, p) -> PeirceBlocks:
    x = as_matrix(x)
    p = _as_projection(p, x.shape[0])
    pm = p.matrix
    qm = np.eye(x.shape[0]) - pm
    return PeirceBlocks(p, pm @ x @ pm, pm @ x @ qm, qm @ x @ pm, qm @ x @ qm)


class IdempotentSplit(NamedTuple):
    p: Projection
    u: np.ndarray


def idempotent_split(e, tol=IDEMPOTENT_TOL) -> IdempotentSplit:
    """Write an idempotent as ``e = l(e) + u`` with ``u = l(e) u (1 - l(e))``."""
    e = as_matrix(e, "e")
    residual = float(np.linalg.norm(e @ e - e))
    if residual > tol:
        raise IdempotencyError(f"not idempotent: |e^2 - e|_F = {residual:.3e}", residual)
    p, _ = supports(e, tol=1e-8)
    pm = p.matrix
    q = np.eye(e.shape[0]) - pm
    # u = e - p, cleaned into the p..q corner
    u = pm @ (e - pm) @ q
    return IdempotentSplit(p, u)


def projection_conjugator(e, tol=IDEMPOTENT_TOL):
    """Invertible ``a`` with ``a e a^{-1} = l(e)``, together with ``a^{-1}``.

    ``a = l(e) + u + (1 - l(e))`` and ``a^{-1} = l(e) - u + (1 - l(e))``
    since ``u^2 = 0``.
    """
    split = idempotent_split(e, tol)
    eye = np.eye(split.u.shape[0], dtype=np.complex128)
    return eye + split.u, eye - split.u


def _range_basis(projector, k):
    """Orthonormal basis of a projector's range via pivoted QR.

    Columns follow the pivot order and are phase-fixed so the R diagonal is
    positive real; a diagonal projector therefore yields unit vectors.
    """
    if k == 0:
        return np.zeros((projector.shape[0], 0), dtype=np.complex128)
    q, r, _ = scipy.linalg.qr(projector, pivoting=True)
    d = np.diag(r)[:k]
    phase = np.where(np.abs(d) > 0, d / np.where(np.abs(d) > 0, np.abs(d), 1), 1)
    return q[:, :k] * phase


def support_normalizers(x, tol=None):
    """Invertible ``(a, b)`` with ``x a = l(x)`` and ``b x = r(x)``.

    ``a = w + i(x)`` where ``w`` is a partial isometry from the range of
    ``1 - l(x)`` onto the range of ``1 - r(x)``.  The same element also
    satisfies ``a x = r(x)``, so ``b`` is returned equal to ``a``.
    """
    x = as_matrix(x)
    n = x.shape[0]
    if tol is None:
        tol = default_rank_tol(n)
    l, r = supports(x, tol)
    if l.rank == 0:
        raise UsageError("x = 0 has no invertible support normalizer")
    eye = np.eye(n)
    k = n - l.rank
    ker_adj = _range_basis(eye - l.matrix, k)   # range(1 - l(x)) = ker x*
    ker = _range_basis(eye - r.matrix, k)       # range(1 - r(x)) = ker x
    w = ker @ adjoint(ker_adj)
    a = w + pinv(x, tol)
    return a, a.copy()


def _join(p, q, tol, label):
    n = p.n
    stacked = np.hstack([p.basis(), q.basis()])
    if stacked.shape[1] == 0:
        return Projection.zero(n)
    u, s, _ = np.linalg.svd(stacked, full_matrices=False)
    r = _rank_from_s(s, tol)
    # relative gap between the last kept and first dropped singular value
    gap = (s[r - 1] - (s[r] if r < s.size else 0.0)) / s[0] if r else 1.0
    if gap < 1e-6:
        warnings.warn(
            f"{label}: singular-value gap {gap:.2e} at rank cut {r}",
            AmbiguousRankWarning, stacklevel=3,
        )
    return Projection(_projector(u[:, :r]), r)


def proj_meet_join(p, q, tol=1e-10):
    """Lattice meet and join of two projections.

    The join projects onto ``range(p) + range(q)``; the meet is
    ``1 - join(1 - p, 1 - q)``.
    """
    p, q = _as_projection(p), _as_projection(q)
    if p.n != q.n:
        raise UsageError(f"order mismatch: {p.n} vs {q.n}")
    join = _join(p, q, tol, "join")
    meet = _join(p.complement(), q.complement(), tol, "meet").complement()
    return meet, join
