"""Recovery of the canonical form ``x -> a J(x) b`` of a bijective map on M_n.

Pipeline: strip a conjugation flag, normalize to a unital map, classify it as
multiplicative or anti-multiplicative, undo a transpose in the anti case,
recover the implementing element by transporting matrix units, then
reassemble and measure the reconstruction residual on a basis.
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .errors import DegeneracyError, InconsistencyError, NonBijectiveError, UsageError
from .fkdet import fk_det
from .maps import (
    CHECK_RANK_TOL, DET_TOL, MapForm, MatrixMap, ProbeSet, adjoint_map, compose,
    conjugation_map, from_form, is_bijective, is_det_preserving, is_multiplicative,
    is_rank_isometry, multiplicativity_residuals, right_mult, transpose_map,
)
from .matcore import adjoint, matrix_to_json, matrix_unit, numerical_rank, polar

__all__ = [
    "DecompositionResult", "normalize_unital", "skolem_noether", "decompose",
    "reject_probe", "gauge_fix", "basis_residual",
]

CLASSIFICATIONS = ("isomorphism", "anti-isomorphism", "not-an-isometry", "not-bijective")
RESIDUAL_TOL = 1e-8
COLUMN_FLOOR = 1e-6


@dataclass
class DecompositionResult:
    classification: str
    form: Optional[MapForm] = None
    residual: float = float("nan")
    witness: Optional[Tuple[np.ndarray, ...]] = None
    seed: Optional[int] = None
    mode: str = "rank"
    detail: str = ""
    notes: dict = field(default_factory=dict)

    @property
    def is_jordan(self):
        return self.classification in ("isomorphism", "anti-isomorphism")

    def to_json(self):
        out = {
            "classification": self.classification,
            "mode": self.mode,
            "residual": None if np.isnan(self.residual) else float(self.residual),
            "form": None if self.form is None else self.form.to_json(),
            "witness": None if self.witness is None else [matrix_to_json(w) for w in self.witness],
            "seed": self.seed,
            "detail": self.detail,
        }
        return out


def _invertible(c, tol=CHECK_RANK_TOL):
    return numerical_rank(c, tol) == c.shape[0]


def normalize_unital(f: MatrixMap):
    """``(f1, c)`` with ``c = f(1)`` and ``f1 = R_{c^{-1}} f``, so ``f1(1) = 1``."""
    c = f(np.eye(f.n))
    if not _invertible(c):
        raise NonBijectiveError("f(1) is singular, so f cannot be a rank isometry")
    return compose(right_mult(np.linalg.inv(c)), f), c


def gauge_fix(a, b):
    """Scale ``(a, b) -> (a t, b / t)`` so ``|a|_F = 1`` and the first nonzero
    entry of ``a`` (row-major) is positive real."""
    norm = np.linalg.norm(a)
    flat = a.reshape(-1)
    lead = flat[np.flatnonzero(np.abs(flat) > 1e-12 * norm)[0]]
    t = np.conj(lead) / (abs(lead) * norm)
    return a * t, b / t


def skolem_noether(f: MatrixMap, tol=RESIDUAL_TOL):
    """Invertible ``s`` with ``f(x) = s x s^{-1}`` for a unital automorphism ``f``.

    Column ``j`` of ``s`` is ``f(e_j1) v`` where ``v`` is a nonzero column of
    the rank-one idempotent ``f(e_11)``.  The conjugation residual on each
    matrix unit is measured relative to ``max(1, |f(e_ij)|_F)``.
    """
    n = f.n
    f11 = f(matrix_unit(n, 0, 0))
    norms = np.linalg.norm(f11, axis=0)
    top = norms.max()
    if top <= 1e-12:
        raise DegeneracyError("image of e_11 is numerically zero")
    idx = np.flatnonzero(norms >= COLUMN_FLOOR * top)
    v = f11[:, idx[0] if idx.size else int(np.argmax(norms))]
    s = np.column_stack([f(matrix_unit(n, j, 0)) @ v for j in range(n)])
    if not _invertible(s):
        raise InconsistencyError("transported matrix units are dependent; f is not an automorphism")
    s, _ = gauge_fix(s, s)
    s_inv = np.linalg.inv(s)
    for i in range(n):
        for j in range(n):
            e = matrix_unit(n, i, j)
            fe = f(e)
            # relative to the image: f(e_ij) has norm up to cond(s)
            r = np.linalg.norm(fe - s @ e @ s_inv) / max(1.0, np.linalg.norm(fe))
            if r > tol:
                raise InconsistencyError(f"conjugation residual {r:.3e} at e_{i}{j}")
    return s


def _transport(h: MatrixMap):
    """Left factor ``a`` (up to scale) of ``h(x) = a x b``, read off ``h`` itself.

    ``h(e_j1) w = a_j (b_1^T w)``; taking ``w`` as the top right singular
    vector of ``h(e_11) = a_1 b_1^T`` makes the scalar as large as possible.
    Working on ``h`` rather than its unital normalization avoids the
    rounding carried by ``f(1)^{-1}``.
    """
    n = h.n
    _, _, vh = np.linalg.svd(h(matrix_unit(n, 0, 0)))
    w = np.conj(vh[0])
    return np.column_stack([h(matrix_unit(n, j, 0)) @ w for j in range(n)])


def basis_residual(f: MatrixMap, g: MatrixMap):
    """Largest relative discrepancy of ``f`` and ``g`` on ``e_ij`` and ``i e_ij``.

    The imaginary units separate linear from conjugate-linear behaviour.
    """
    n = f.n
    worst = 0.0
    for i in range(n):
        for j in range(n):
            for z in (matrix_unit(n, i, j), 1j * matrix_unit(n, i, j)):
                fz = f(z)
                scale = max(np.linalg.norm(fz), np.finfo(float).tiny)
                worst = max(worst, float(np.linalg.norm(fz - g(z)) / scale))
    return worst


def _star_twist(f: MatrixMap):
    """``x -> f(x*)*``."""
    return compose(adjoint_map(f.n), compose(f, adjoint_map(f.n)))


def _classify(f1, probes):
    """Return ``(kind, automorphism, twisted)`` for the unital map ``f1``."""
    kind = is_multiplicative(f1, probes)
    twisted = False
    g = f1
    if kind == "neither":
        g = _star_twist(f1)
        kind = is_multiplicative(g, probes)
        twisted = kind != "neither"
    if kind == "anti":
        g = compose(g, transpose_map(f1.n))
        if is_multiplicative(g, probes) != "iso":
            return "neither", None, twisted
    return kind, g, twisted


def _polar_rank_chain(f: MatrixMap, probes: ProbeSet):
    """Rank of ``x`` against rank of ``f(x)`` on probes ``x = u|x|`` of every rank.

    Determinant preservation gives ``det(f(x) - l f(u)) = det(|x| - l)`` for
    the unitary polar factor ``u``; equality of the resulting Brown measures
    forces equal kernel dimension.  Here the conclusion is checked directly.
    """
    n = f.n
    rng = probes.rng(5)
    for k in range(n + 1):
        for _ in range(max(1, probes.count // (n + 1))):
            g = rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k))
            h = rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n))
            u, absx = polar(g @ h, unitary=True)
            x = u @ absx
            if numerical_rank(x, CHECK_RANK_TOL) != numerical_rank(f(x), CHECK_RANK_TOL):
                return x
    return None


def decompose(f: MatrixMap, mode="rank", probes: Optional[ProbeSet] = None, seed=0):
    """Classify ``f`` and recover ``(a, b, J, conjugated)`` with ``f(x) = a J(x) b``."""
    if mode not in ("rank", "det"):
        raise UsageError(f"mode must be 'rank' or 'det', got {mode!r}")
    probes = probes or ProbeSet(seed=seed)
    res = dict(mode=mode, seed=probes.seed)
    if not is_bijective(f):
        return DecompositionResult("not-bijective", detail="operator is singular", **res)

    if mode == "det":
        v = is_det_preserving(f, probes, allow_conjugate=True)
        if not v:
            return DecompositionResult("not-an-isometry", witness=v.witness, detail=v.detail, **res)
        x = _polar_rank_chain(f, probes)
        if x is not None:
            return DecompositionResult("not-an-isometry", witness=(x,),
                                       detail="rank not preserved on a polar probe", **res)
    else:
        v = is_rank_isometry(f, probes)
        if not v:
            return DecompositionResult("not-an-isometry", witness=v.witness, detail=v.detail, **res)

    conjugated = f.conjugate
    g = compose(f, conjugation_map(f.n)) if conjugated else f
    f1, c = normalize_unital(g)
    if f.n == 1:
        kind, aut, twisted = "iso", f1, False
    else:
        kind, aut, twisted = _classify(f1, probes)
    if kind == "neither":
        iso, anti, wi, wa = multiplicativity_residuals(f1, probes)
        w = wi if iso <= anti else wa
        return DecompositionResult(
            "not-an-isometry", witness=w,
            detail=f"unital part is not multiplicative (residuals {iso:.3e}, {anti:.3e})", **res)

    try:
        s = skolem_noether(aut)
    except (DegeneracyError, InconsistencyError) as exc:
        return DecompositionResult("not-an-isometry", detail=str(exc), **res)
    if twisted:
        # f1(x) = (s J(x*) s^-1)* = s^{-*} J(x) s*
        s = adjoint(np.linalg.inv(s))
    else:
        s = _transport(compose(g, transpose_map(f.n)) if kind == "anti" else g)
    a, b = gauge_fix(s, np.linalg.solve(s, c))
    form = MapForm(a, b, "transpose" if kind == "anti" else "identity", conjugated)
    residual = basis_residual(f, from_form(form))
    classification = "isomorphism" if kind == "iso" else "anti-isomorphism"
    if residual > RESIDUAL_TOL:
        return DecompositionResult("not-an-isometry", form=None, residual=residual,
                                   detail=f"reconstruction residual {residual:.3e}", **res)
    return DecompositionResult(classification, form, residual, **res)


def reject_probe(f: MatrixMap, tol=DET_TOL):
    """First deterministic probe on which ``f`` breaks determinant or rank behaviour.

    Determinants are compared after dividing out ``det f(1)``, so every map
    ``a J(x) b`` passes.  Returns ``None`` when no violation is found.
    """
    if not is_bijective(f):
        raise NonBijectiveError("reject_probe requires a bijective map")
    n = f.n
    eye = np.eye(n, dtype=np.complex128)
    d0 = fk_det(f(eye), CHECK_RANK_TOL)
    if d0 == 0.0:
        return eye
    for i in range(n):
        for j in range(n):
            z = eye + matrix_unit(n, i, j)
            d = fk_det(z)
            if abs(fk_det(f(z), CHECK_RANK_TOL) / d0 - d) > tol * max(1.0, d):
                return z
    for z in ProbeSet(count=0).structured(n):
        if numerical_rank(z, CHECK_RANK_TOL) != numerical_rank(f(z), CHECK_RANK_TOL):
            return z
    return None
