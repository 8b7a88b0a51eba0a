"""Dense complex matrix kernel.

Matrices are plain ``numpy`` arrays of dtype ``complex128`` with shape
``(n, n)``.  :func:`as_matrix` is the single validation gate; every public
function in the package passes its inputs through it.

Rank decisions use a relative singular-value cutoff ``tol * s_max`` with
default ``tol = n * eps``; the same cutoff doubles as an absolute floor, so a
matrix whose largest singular value does not exceed ``tol`` has rank 0.
"""

import json
from typing import Callable, NamedTuple

import numpy as np
import scipy.linalg

from .errors import FactorizationError, IllConditionedSwapError, UsageError

EPS = np.finfo(float).eps

__all__ = [
    "EPS", "SVDResult", "SchurResult", "as_matrix", "adjoint", "ntrace",
    "matrix_unit", "default_rank_tol", "svd", "polar", "schur",
    "schur_reorder", "pinv", "numerical_rank", "matrix_to_json",
    "matrix_from_json", "load_matrix", "dump_matrix",
]


class SVDResult(NamedTuple):
    """``x = u @ diag(s) @ v.conj().T`` with ``s`` non-increasing."""

    u: np.ndarray
    s: np.ndarray
    v: np.ndarray


class SchurResult(NamedTuple):
    """``x = q @ t @ q.conj().T`` with ``t`` upper triangular."""

    q: np.ndarray
    t: np.ndarray
    eigenvalues: np.ndarray


def as_matrix(x, name="x"):
    """Return ``x`` as a finite square complex128 array, or raise UsageError."""
    a = np.asarray(x, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise UsageError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise UsageError(f"{name} has non-finite entries")
    return a


def adjoint(x):
    return np.conj(x).T


def ntrace(x):
    """Normalized trace (1/n) tr(x)."""
    x = np.asarray(x)
    return np.trace(x) / x.shape[0]


def matrix_unit(n, i, j):
    e = np.zeros((n, n), dtype=np.complex128)
    e[i, j] = 1.0
    return e


def default_rank_tol(n):
    return n * EPS


def svd(x) -> SVDResult:
    x = as_matrix(x)
    try:
        u, s, vh = np.linalg.svd(x)
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(f"SVD did not converge: {exc}") from exc
    return SVDResult(u, s, adjoint(vh))


def _rank_from_s(s, tol):
    if s.size == 0 or s[0] <= tol:
        return 0
    return int(np.count_nonzero(s > tol * s[0]))


def numerical_rank(x, tol=None):
    """Number of singular values above ``tol * s_max``.

    ``tol`` defaults to ``n * eps``.  It is also used as an absolute floor:
    if ``s_max <= tol`` the rank is 0.
    """
    x = as_matrix(x)
    if tol is None:
        tol = default_rank_tol(x.shape[0])
    s = np.linalg.svd(x, compute_uv=False)
    return _rank_from_s(s, tol)


def polar(x, tol=None, unitary=False):
    """Polar decomposition ``x = v @ absx``.

    By default ``v`` is the partial isometry with ``v v* = l(x)`` and
    ``v* v = r(x)``; singular directions below the rank cutoff are dropped.
    With ``unitary=True`` the isometry is completed to a unitary.
    ``absx`` is the positive square root of ``x* x``.
    """
    x = as_matrix(x)
    n = x.shape[0]
    if tol is None:
        tol = default_rank_tol(n)
    u, s, v = svd(x)
    if unitary:
        w = u @ adjoint(v)
    else:
        r = _rank_from_s(s, tol)
        w = u[:, :r] @ adjoint(v[:, :r])
    absx = (v * s) @ adjoint(v)
    absx = 0.5 * (absx + adjoint(absx))
    return w, absx


def schur(x) -> SchurResult:
    """Complex Schur form (LAPACK ``zgees`` through scipy)."""
    x = as_matrix(x)
    try:
        t, q = scipy.linalg.schur(x, output="complex")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise FactorizationError(f"Schur QR iteration failed: {exc}") from exc
    t = np.triu(t)
    return SchurResult(q, t, np.diag(t).copy())


def _swap(q, t, k, swap_tol):
    """Exchange the diagonal entries t[k,k] and t[k+1,k+1] in place."""
    a, b, c = t[k, k], t[k, k + 1], t[k + 1, k + 1]
    scale = max(1.0, np.abs(t).max())
    d = c - a
    if abs(d) <= swap_tol * scale:
        if abs(b) <= swap_tol * scale:
            # equal eigenvalues, negligible coupling: plain exchange
            perm = [k + 1, k]
            t[[k, k + 1], :] = t[perm, :]
            t[:, [k, k + 1]] = t[:, perm]
            q[:, [k, k + 1]] = q[:, perm]
            t[k + 1, k] = 0.0
            return
        raise IllConditionedSwapError(
            f"cannot swap eigenvalues {a!r} and {c!r} at positions {k},{k + 1}: "
            f"separation {abs(d):.3e} with coupling {abs(b):.3e}",
            pair=(a, c),
        )
    # (b, d) spans the eigenvector of the 2x2 block for eigenvalue c:
    # the 1x1 Sylvester solve a*z - z*c = -b gives z = b/d, vector (z, 1).
    h = np.hypot(abs(b), abs(d))
    v1, v2 = b / h, d / h
    g = np.array([[v1, -np.conj(v2)], [v2, np.conj(v1)]])
    t[k:k + 2, :] = adjoint(g) @ t[k:k + 2, :]
    t[:, k:k + 2] = t[:, k:k + 2] @ g
    q[:, k:k + 2] = q[:, k:k + 2] @ g
    t[k + 1, k] = 0.0
    t[k, k], t[k + 1, k + 1] = c, a


def schur_reorder(sr: SchurResult, select: Callable[[complex], bool], swap_tol=1e-12) -> SchurResult:
    """Move eigenvalues satisfying ``select`` to the leading diagonal positions.

    Uses adjacent unitary swaps only; ``q`` stays unitary and the relative
    order within the selected and within the unselected groups is kept.
    """
    q = np.array(sr.q, dtype=np.complex128)
    t = np.array(sr.t, dtype=np.complex128)
    n = t.shape[0]
    chosen = [bool(select(complex(z))) for z in np.diag(t)]
    head = 0
    for pos in range(n):
        if not chosen[pos]:
            continue
        for k in range(pos - 1, head - 1, -1):
            _swap(q, t, k, swap_tol)
            chosen[k], chosen[k + 1] = chosen[k + 1], chosen[k]
        head += 1
    t = np.triu(t)
    return SchurResult(q, t, np.diag(t).copy())


def pinv(x, tol=None):
    """Moore-Penrose pseudoinverse with the package rank cutoff.

    At matrix scale this is the partial inverse ``i(x)``:
    ``x i(x) = l(x)``, ``i(x) x = r(x)``, ``x i(x) x = x``,
    ``i(x) l(x) = i(x)`` and ``r(x) i(x) = i(x)``.
    """
    x = as_matrix(x)
    if tol is None:
        tol = default_rank_tol(x.shape[0])
    u, s, v = svd(x)
    r = _rank_from_s(s, tol)
    return (v[:, :r] / s[:r]) @ adjoint(u[:, :r])


# -- JSON interchange -------------------------------------------------------

def matrix_to_json(x):
    x = as_matrix(x)
    flat = x.reshape(-1)
    return {"n": int(x.shape[0]), "data": [[float(z.real), float(z.imag)] for z in flat]}


def matrix_from_json(obj):
    try:
        n = obj["n"]
        data = obj["data"]
    except (KeyError, TypeError) as exc:
        raise UsageError(f"matrix JSON needs 'n' and 'data': {exc}") from exc
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise UsageError(f"matrix JSON 'n' must be a positive integer, got {n!r}")
    if len(data) != n * n:
        raise UsageError(f"matrix JSON has {len(data)} entries, expected {n * n}")
    try:
        arr = np.array(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"matrix JSON entries must be [re, im] pairs: {exc}") from exc
    if arr.shape != (n * n, 2):
        raise UsageError("matrix JSON entries must be [re, im] pairs")
    if not np.all(np.isfinite(arr)):
        raise UsageError("matrix JSON has non-finite entries")
    return (arr[:, 0] + 1j * arr[:, 1]).reshape(n, n)


def load_matrix(path):
    with open(path) as fh:
        return matrix_from_json(json.load(fh))


def dump_matrix(x, path):
    with open(path, "w") as fh:
        json.dump(matrix_to_json(x), fh)
