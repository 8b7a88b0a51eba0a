"""Linear and conjugate-linear maps on M_n as n^2 x n^2 matrices.

A map acts on the column-major vectorization ``vec(x)``.  A conjugate-linear
map stores ``op`` with ``vec(f(x)) = op @ vec(conj(x))`` (entrywise
conjugate), so composition and inversion reduce to matrix algebra plus a
flag.

The preservation checkers are probabilistic for arbitrary maps.  Every probe
set includes the deterministic family of matrix units and their pairwise
sums, which settles the question for maps of the form ``a J(x) b``.
"""

import json
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Tuple

import numpy as np

from .errors import NonBijectiveError, UsageError
from .fkdet import brown_measure, fk_det
from .matcore import (
    adjoint, as_matrix, matrix_from_json, matrix_to_json, matrix_unit, numerical_rank,
)
from .regring import Projection, supports

__all__ = [
    "MatrixMap", "MapForm", "ProbeSet", "Verdict", "vec", "unvec",
    "identity_map", "transpose_map", "conjugation_map", "adjoint_map",
    "left_mult", "right_mult", "from_form", "compose", "invert",
    "is_bijective", "is_rank_isometry", "is_det_preserving",
    "is_multiplicative", "multiplicativity_residuals", "is_brown_preserving",
    "support_image", "commutation_matrix", "CHECK_RANK_TOL",
]

# Relative rank cutoff for images of probes under a map.  Images carry
# rounding of order eps * cond(op); n * eps is too tight for that.
CHECK_RANK_TOL = 1e-10
DET_TOL = 1e-8
MULT_TOL = 1e-8


def vec(x):
    return np.asarray(x).reshape(-1, order="F")


def unvec(v, n):
    return np.asarray(v).reshape((n, n), order="F")


def commutation_matrix(n):
    """Permutation ``K`` with ``K vec(x) = vec(x.T)``."""
    k = np.zeros((n * n, n * n))
    for i in range(n):
        for j in range(n):
            k[i * n + j, j * n + i] = 1.0
    return k


@dataclass(frozen=True, eq=False)
class MatrixMap:
    n: int
    op: np.ndarray
    conjugate: bool = False

    def __post_init__(self):
        op = np.asarray(self.op, dtype=np.complex128)
        if op.shape != (self.n * self.n, self.n * self.n):
            raise UsageError(f"operator shape {op.shape} does not match n={self.n}")
        object.__setattr__(self, "op", op)

    @property
    def kind(self):
        return "conjugate" if self.conjugate else "linear"

    def __call__(self, x):
        return self.apply(x)

    def apply(self, x):
        x = as_matrix(x)
        if x.shape[0] != self.n:
            raise UsageError(f"map of order {self.n} applied to matrix of order {x.shape[0]}")
        if self.conjugate:
            x = np.conj(x)
        return unvec(self.op @ vec(x), self.n)

    def to_json(self):
        flat = self.op.reshape(-1)
        return {"n": self.n, "kind": self.kind,
                "op": [[float(z.real), float(z.imag)] for z in flat]}

    @classmethod
    def from_json(cls, obj):
        try:
            n, kind, data = obj["n"], obj.get("kind", "linear"), obj["op"]
        except (KeyError, TypeError) as exc:
            raise UsageError(f"map JSON needs 'n' and 'op': {exc}") from exc
        if kind not in ("linear", "conjugate"):
            raise UsageError(f"map kind must be 'linear' or 'conjugate', got {kind!r}")
        if not isinstance(n, int) or n < 1 or len(data) != n ** 4:
            raise UsageError(f"map JSON needs n^4 = {n ** 4 if isinstance(n, int) else '?'} entries")
        arr = np.array(data, dtype=float)
        if arr.shape != (n ** 4, 2) or not np.all(np.isfinite(arr)):
            raise UsageError("map JSON entries must be finite [re, im] pairs")
        return cls(n, (arr[:, 0] + 1j * arr[:, 1]).reshape(n * n, n * n), kind == "conjugate")


def identity_map(n):
    return MatrixMap(n, np.eye(n * n))


def transpose_map(n):
    return MatrixMap(n, commutation_matrix(n))


def conjugation_map(n):
    """Entrywise complex conjugation (a conjugate-linear automorphism)."""
    return MatrixMap(n, np.eye(n * n), conjugate=True)


def adjoint_map(n):
    """``x -> x*`` (a conjugate-linear anti-automorphism)."""
    return MatrixMap(n, commutation_matrix(n), conjugate=True)


def left_mult(a):
    """``L_a(x) = a x``."""
    a = as_matrix(a, "a")
    return MatrixMap(a.shape[0], np.kron(np.eye(a.shape[0]), a))


def right_mult(b):
    """``R_b(x) = x b``."""
    b = as_matrix(b, "b")
    return MatrixMap(b.shape[0], np.kron(b.T, np.eye(b.shape[0])))


@dataclass(frozen=True, eq=False)
class MapForm:
    """``x -> a J(x) b``; J is the identity or the transpose, optionally
    preceded by entrywise conjugation."""

    a: np.ndarray
    b: np.ndarray
    jordan: str = "identity"
    conjugated: bool = False

    def __post_init__(self):
        if self.jordan not in ("identity", "transpose"):
            raise UsageError(f"jordan must be 'identity' or 'transpose', got {self.jordan!r}")
        a, b = as_matrix(self.a, "a"), as_matrix(self.b, "b")
        if a.shape != b.shape:
            raise UsageError("a and b must have the same order")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self):
        return self.a.shape[0]

    def realize(self):
        return from_form(self)

    def to_json(self):
        return {"a": matrix_to_json(self.a), "b": matrix_to_json(self.b),
                "jordan": self.jordan, "conjugated": self.conjugated}

    @classmethod
    def from_json(cls, obj):
        try:
            return cls(matrix_from_json(obj["a"]), matrix_from_json(obj["b"]),
                       obj.get("jordan", "identity"), bool(obj.get("conjugated", False)))
        except (KeyError, TypeError) as exc:
            raise UsageError(f"malformed map form JSON: {exc}") from exc


def from_form(form: MapForm) -> MatrixMap:
    n = form.n
    for name, m in (("a", form.a), ("b", form.b)):
        if numerical_rank(m) < n:
            raise UsageError(f"{name} is singular")
    # vec(a y b) = (b^T kron a) vec(y)
    op = np.kron(form.b.T, form.a)
    if form.jordan == "transpose":
        op = op @ commutation_matrix(n)
    return MatrixMap(n, op, form.conjugated)


def compose(f: MatrixMap, g: MatrixMap) -> MatrixMap:
    """``x -> f(g(x))``."""
    if f.n != g.n:
        raise UsageError(f"order mismatch: {f.n} vs {g.n}")
    inner = np.conj(g.op) if f.conjugate else g.op
    return MatrixMap(f.n, f.op @ inner, f.conjugate != g.conjugate)


def is_bijective(f: MatrixMap, tol=CHECK_RANK_TOL):
    return numerical_rank(f.op, tol) == f.n * f.n


def invert(f: MatrixMap) -> MatrixMap:
    if not is_bijective(f):
        raise NonBijectiveError("map is not bijective")
    inv = np.linalg.inv(f.op)
    return MatrixMap(f.n, np.conj(inv) if f.conjugate else inv, f.conjugate)


# -- probes -----------------------------------------------------------------

@dataclass(frozen=True)
class ProbeSet:
    """Structured probes plus ``count`` seeded random ones."""

    count: int = 64
    seed: int = 0
    pairs: bool = True

    def rng(self, stream=0):
        return np.random.default_rng([self.seed, stream])

    def structured(self, n):
        """Matrix units, then sums of two distinct matrix units."""
        units = [(i, j) for j in range(n) for i in range(n)]
        for i, j in units:
            yield matrix_unit(n, i, j)
        if self.pairs:
            for (i, j), (k, l) in combinations(units, 2):
                yield matrix_unit(n, i, j) + matrix_unit(n, k, l)

    def random(self, n, stream=0):
        """Alternating random low-rank and full-rank complex Gaussian matrices."""
        rng = self.rng(stream)
        for t in range(self.count):
            g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            if t % 2 == 0 and n > 1:
                k = int(rng.integers(1, n))
                h = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
                g = g[:, :k] @ h[:k, :]
            yield g

    def invertible(self, n, stream=1):
        """Deterministic invertible probes ``1`` and ``1 + e_ij``, then random ones."""
        eye = np.eye(n, dtype=np.complex128)
        yield eye
        for i in range(n):
            for j in range(n):
                yield eye + matrix_unit(n, i, j)
        rng = self.rng(stream)
        for _ in range(self.count):
            yield rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


@dataclass
class Verdict:
    passed: bool
    checked: int
    witness: Optional[Tuple[np.ndarray, ...]] = None
    detail: str = ""
    seed: Optional[int] = None

    def __bool__(self):
        return self.passed


def _require_bijective(f):
    if not is_bijective(f):
        raise NonBijectiveError("checker requires a bijective map")


def is_rank_isometry(f: MatrixMap, probes: ProbeSet = ProbeSet(), tol=CHECK_RANK_TOL) -> Verdict:
    """``rank(f(x) - f(y)) = rank(x - y)``, reduced by additivity to ``rank(f(z)) = rank(z)``.

    A failure's witness is ``(x, y)`` with ``z = x - y``.
    """
    _require_bijective(f)
    n = f.n
    checked = 0
    for z in _chain(probes.structured(n), probes.random(n)):
        checked += 1
        rz, rf = numerical_rank(z, tol), numerical_rank(f(z), tol)
        if rz != rf:
            return Verdict(False, checked, (z, np.zeros_like(z)),
                           f"rank {rz} maps to rank {rf}", probes.seed)
    return Verdict(True, checked, seed=probes.seed)


def _chain(*iters):
    for it in iters:
        yield from it


def is_det_preserving(f: MatrixMap, probes: ProbeSet = ProbeSet(), allow_conjugate=False,
                      tol=DET_TOL, rank_tol=CHECK_RANK_TOL) -> Verdict:
    """``det(f(x)) = det(x)`` on invertible probes and ``det(f(z)) = 0`` on singular ones."""
    if f.conjugate and not allow_conjugate:
        raise UsageError("determinant check is for linear maps; pass allow_conjugate=True")
    n = f.n
    checked = 0
    for x in probes.invertible(n):
        checked += 1
        d, df = fk_det(x, rank_tol), fk_det(f(x), rank_tol)
        if abs(df - d) > tol * max(1.0, d):
            return Verdict(False, checked, (x,), f"det {d:.6g} maps to {df:.6g}", probes.seed)
    singular = [matrix_unit(n, i, j) for i in range(n) for j in range(n)]
    singular += [z for z in probes.random(n, stream=2) if numerical_rank(z, rank_tol) < n]
    for z in singular:
        checked += 1
        df = fk_det(f(z), rank_tol)
        if df != 0.0:
            return Verdict(False, checked, (z,), f"singular probe maps to det {df:.6g}", probes.seed)
    return Verdict(True, checked, seed=probes.seed)


def multiplicativity_residuals(f: MatrixMap, probes: ProbeSet = ProbeSet()):
    """Worst relative residuals of ``f(xy) = f(x)f(y)`` and ``f(xy) = f(y)f(x)``.

    Returns ``(iso_residual, anti_residual, iso_witness, anti_witness)``.
    """
    n = f.n
    rng = probes.rng(3)
    worst = [0.0, 0.0]
    witness = [None, None]
    for _ in range(max(probes.count, 1)):
        x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        y = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        fxy, fx, fy = f(x @ y), f(x), f(y)
        scale = max(np.linalg.norm(fxy), np.finfo(float).tiny)
        for k, prod in enumerate((fx @ fy, fy @ fx)):
            r = np.linalg.norm(fxy - prod) / scale
            if r > worst[k]:
                worst[k], witness[k] = r, (x, y)
    return worst[0], worst[1], witness[0], witness[1]


def is_multiplicative(f: MatrixMap, probes: ProbeSet = ProbeSet(), tol=MULT_TOL) -> str:
    """Classify a bijective map as ``'iso'``, ``'anti'`` or ``'neither'``."""
    if f.n < 2:
        raise UsageError("on M_1 isomorphisms and anti-isomorphisms coincide")
    _require_bijective(f)
    iso, anti, _, _ = multiplicativity_residuals(f, probes)
    if iso <= tol:
        return "iso"
    if anti <= tol:
        return "anti"
    return "neither"


def is_brown_preserving(f: MatrixMap, probes: ProbeSet = ProbeSet(), tol=1e-6) -> Verdict:
    """Brown measure of ``f(x)`` matches that of ``x`` on random full-rank probes."""
    n = f.n
    rng = probes.rng(4)
    for t in range(probes.count):
        x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        if not brown_measure(f(x)).matches(brown_measure(x), tol):
            return Verdict(False, t + 1, (x,), "Brown measures differ", probes.seed)
    return Verdict(True, probes.count, seed=probes.seed)


def support_image(f: MatrixMap, p, tol=CHECK_RANK_TOL):
    """``(l(f(p)), r(f(p)))`` for a projection ``p``."""
    _require_bijective(f)
    pm = p.matrix if isinstance(p, Projection) else Projection.from_matrix(p).matrix
    return supports(f(pm), tol)


def dumps_map(f: MatrixMap):
    return json.dumps(f.to_json())
