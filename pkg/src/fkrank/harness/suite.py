"""Property suites and deterministic reports.

Each property is a function ``(rng, n, ctx) -> (residual, ok, witness)``.
Randomness for trial ``t`` of property ``name`` at order ``n`` comes from
``SeedSequence([seed, crc32(name), n, t])``, so any failing trial can be
replayed from the report alone.
"""

import json
import math
import os
import time
import zlib
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.integrate import quad

from ..decomp import decompose, reject_probe
from ..errors import UsageError
from ..fkdet import (
    GridSpec, brown_decompose, brown_from_grid, brown_measure, fk_det, fk_det_eps,
    fk_logdet, hs_projection,
)
from ..maps import (
    CHECK_RANK_TOL, MatrixMap, ProbeSet, from_form, is_det_preserving,
    multiplicativity_residuals,
)
from ..matcore import adjoint, matrix_to_json, matrix_unit, numerical_rank, pinv, polar
from ..regions import Disk, HalfPlane, Singleton
from ..regring import (
    Projection, idempotent_split, l0_norm, peirce_decompose, proj_meet_join,
    projection_conjugator, projection_leq, rank_metric, supports, support_normalizers,
)
from . import generators as gen

__all__ = ["Property", "SuiteConfig", "Record", "Report", "SUITES", "run_suite", "suite_names"]

ENV_SEED = "FKRANK_SEED"
ENV_TOL = "FKRANK_TOLERANCES"

DEFAULT_N = {
    "fk-axioms": (2, 4, 8, 16),
    "isometry-lemmas": (2, 4, 6),
    "decomposition-roundtrip": (2, 3, 4, 6, 8),
    "hk-theorem": (2, 3, 4, 6),
    "example53": (512,),
}


@dataclass(frozen=True)
class Property:
    name: str
    anchor: str
    fn: Callable
    tol: float = 0.0
    max_n: Optional[int] = None


@dataclass
class SuiteConfig:
    suite: str
    n_values: Optional[Tuple[int, ...]] = None
    trials: int = 20
    seed: int = 0
    tolerances: Dict[str, float] = field(default_factory=dict)
    output: Optional[str] = None
    options: Dict[str, object] = field(default_factory=dict)
    env: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.suite not in SUITES:
            raise UsageError(f"unknown suite {self.suite!r}; choose from {', '.join(SUITES)}")
        if self.n_values is None:
            self.n_values = DEFAULT_N.get(self.suite, (2, 4, 8))
        self.n_values = tuple(int(n) for n in self.n_values)
        if any(n < 1 for n in self.n_values):
            raise UsageError("n values must be positive")
        if self.trials < 0:
            raise UsageError("trials must be nonnegative")
        self.seed = int(self.seed) & (2 ** 64 - 1)

    @classmethod
    def from_json(cls, obj, suite=None):
        if not isinstance(obj, dict):
            raise UsageError("suite config must be a JSON object")
        known = {"suite", "n_values", "trials", "seed", "tolerances", "output", "options"}
        extra = set(obj) - known
        if extra:
            raise UsageError(f"unknown config keys: {sorted(extra)}")
        data = dict(obj)
        if suite is not None:
            data["suite"] = suite
        if "suite" not in data:
            raise UsageError("config needs a suite name")
        return cls(**data)

    def with_env(self, environ=None):
        """Apply ``FKRANK_SEED`` / ``FKRANK_TOLERANCES`` overrides, echoing them."""
        environ = os.environ if environ is None else environ
        if ENV_SEED in environ:
            try:
                self.seed = int(environ[ENV_SEED], 0) & (2 ** 64 - 1)
            except ValueError as exc:
                raise UsageError(f"{ENV_SEED} must be an integer") from exc
            self.env[ENV_SEED] = environ[ENV_SEED]
        if ENV_TOL in environ:
            try:
                self.tolerances.update({k: float(v) for k, v in json.loads(environ[ENV_TOL]).items()})
            except (ValueError, AttributeError) as exc:
                raise UsageError(f"{ENV_TOL} must be a JSON object of floats") from exc
            self.env[ENV_TOL] = environ[ENV_TOL]
        return self

    def to_json(self):
        d = asdict(self)
        d["n_values"] = list(self.n_values)
        return d


@dataclass
class Record:
    name: str
    anchor: str
    trials: int = 0
    failures: int = 0
    worst_residual: float = 0.0
    tolerance: float = 0.0
    witnesses: List[dict] = field(default_factory=list)

    def to_json(self):
        d = asdict(self)
        d["worst_residual"] = float(self.worst_residual)
        return d


@dataclass
class Report:
    config: SuiteConfig
    records: List[Record]
    wall_clock: float = 0.0

    @property
    def failures(self):
        return sum(r.failures for r in self.records)

    @property
    def trials(self):
        return sum(r.trials for r in self.records)

    @property
    def exit_code(self):
        return 0 if self.failures == 0 else 1

    def canonical(self):
        """The part of the report that is a pure function of the config."""
        return {
            "suite": self.config.suite,
            "config": self.config.to_json(),
            "trials": self.trials,
            "failures": self.failures,
            "records": [r.to_json() for r in self.records],
        }

    def canonical_json(self):
        return json.dumps(self.canonical(), sort_keys=True, indent=1)

    def to_json(self):
        return {"canonical": self.canonical(), "wall_clock": self.wall_clock}

    def to_text(self):
        lines = [f"suite {self.config.suite}: {self.trials} trials, {self.failures} failures, "
                 f"{self.wall_clock:.2f} s"]
        for r in self.records:
            tag = "PASS" if r.failures == 0 else "FAIL"
            lines.append(f"  {tag} {r.name:<28} trials={r.trials:<5} failures={r.failures:<4} "
                         f"worst={r.worst_residual:.3e}  [{r.anchor}]")
        return "\n".join(lines)

    def write(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, sort_keys=True, indent=1)
        with open(os.path.splitext(path)[0] + ".txt", "w") as fh:
            fh.write(self.to_text() + "\n")


# -- helpers -----------------------------------------------------------------

def _rank(x):
    return numerical_rank(x, CHECK_RANK_TOL)


def _lowrank(rng, n):
    k = int(rng.integers(0, n + 1))
    return gen.random_lowrank(rng, n, k)


def _wit(**mats):
    return {k: (matrix_to_json(v) if isinstance(v, np.ndarray) else v) for k, v in mats.items()}


def _exact(ok, **mats):
    return (0.0 if ok else 1.0), ok, (None if ok else _wit(**mats))


def _within(residual, tol, **mats):
    ok = bool(residual <= tol)
    return float(residual), ok, (None if ok else _wit(**mats))


def _rel(a, b):
    return abs(a - b) / max(abs(b), np.finfo(float).tiny)


def _unital_form(rng, n, conjugated=None, cond_max=1e2):
    return gen.canonical_form(rng, n, conjugated=conjugated, cond_max=cond_max, unital=True)


def _random_proj(rng, n, k=None):
    return gen.random_projection(rng, n, k)


# -- rank-axioms ---------------------------------------------------------------

def _metric_axioms(rng, n, ctx):
    x, y, z = _lowrank(rng, n), _lowrank(rng, n), _lowrank(rng, n)
    ok = (rank_metric(x, x) == 0 and rank_metric(x, y) == rank_metric(y, x)
          and rank_metric(x, z) <= rank_metric(x, y) + rank_metric(y, z))
    return _exact(ok, x=x, y=y, z=z)


def _product_bound(rng, n, ctx):
    x, y = _lowrank(rng, n), _lowrank(rng, n)
    return _exact(_rank(x @ y) <= min(_rank(x), _rank(y)), x=x, y=y)


def _sum_bound(rng, n, ctx):
    x, y = _lowrank(rng, n), _lowrank(rng, n)
    return _exact(_rank(x + y) <= _rank(x) + _rank(y), x=x, y=y)


def _unitary_invariance(rng, n, ctx):
    x = _lowrank(rng, n)
    u, v = gen.haar_unitary(rng, n), gen.haar_unitary(rng, n)
    r = _rank(x)
    return _exact(_rank(adjoint(x)) == r and _rank(u @ x @ v) == r, x=x)


def _support_trace(rng, n, ctx):
    x = _lowrank(rng, n)
    l, r = supports(x)
    return _exact(l.rank == r.rank == numerical_rank(x), x=x)


def _l0_limit(rng, n, ctx):
    # nonzero singular values in [1e-3, 1]
    k = int(rng.integers(0, n + 1))
    u, v = gen.haar_unitary(rng, n), gen.haar_unitary(rng, n)
    s = np.zeros(n)
    s[:k] = np.exp(rng.uniform(np.log(1e-3), 0, k))
    x = (u * s) @ v
    lam = 1e8
    return _within(abs(l0_norm(lam * x) - numerical_rank(x) / n), ctx.tol, x=x)


# -- regring-identities -----------------------------------------------------------

def _partial_inverse(rng, n, ctx):
    x = _lowrank(rng, n)
    i = pinv(x)
    l, r = supports(x)
    l, r = l.matrix, r.matrix
    nx, ni = max(np.linalg.norm(x), 1.0), max(np.linalg.norm(i), 1.0)
    res = max(
        np.linalg.norm(x @ i - l), np.linalg.norm(i @ x - r),
        np.linalg.norm(x @ i @ x - x) / nx,
        np.linalg.norm(i @ l - i) / ni, np.linalg.norm(r @ i - i) / ni,
    )
    return _within(res, ctx.tol, x=x)


def _support_normalizers(rng, n, ctx):
    x = _lowrank(rng, n)
    if _rank(x) == 0:
        x = gen.random_lowrank(rng, n, 1)
    a, b = support_normalizers(x)
    l, r = supports(x)
    res = max(np.linalg.norm(x @ a - l.matrix), np.linalg.norm(b @ x - r.matrix))
    if numerical_rank(a) < n:
        res = math.inf
    return _within(res, ctx.tol, x=x)


def _idempotent_split(rng, n, ctx):
    e = gen.random_idempotent(rng, n)
    p, u = idempotent_split(e)
    pm = p.matrix
    scale = max(1.0, np.linalg.norm(e))
    res = max(np.linalg.norm(pm + u - e), np.linalg.norm(pm @ u - u),
              np.linalg.norm(u @ pm), np.linalg.norm(u @ u)) / scale
    return _within(res, ctx.tol, e=e)


def _conjugator(rng, n, ctx):
    e = gen.random_idempotent(rng, n)
    a, a_inv = projection_conjugator(e)
    p, _ = supports(e, 1e-8)
    scale = max(1.0, np.linalg.norm(e)) ** 2
    res = max(np.linalg.norm(a @ e @ a_inv - p.matrix) / scale,
              np.linalg.norm(a @ a_inv - np.eye(n)) / scale)
    return _within(res, ctx.tol, e=e)


def _peirce(rng, n, ctx):
    x = gen.ginibre(rng, n)
    p = _random_proj(rng, n)
    blocks = peirce_decompose(x, p)
    return _within(np.linalg.norm(blocks.reconstruct() - x) / np.linalg.norm(x), ctx.tol, x=x)


def _meet_join(rng, n, ctx):
    # p and q share a random common subspace of dimension c
    u = gen.haar_unitary(rng, n)
    c = int(rng.integers(0, n + 1))
    kp = int(rng.integers(c, n + 1))
    kq = int(rng.integers(c, n + 1))
    common, rest = u[:, :c], u[:, c:]
    g1 = rest @ gen._gaussian(rng, (n - c, kp - c))
    g2 = rest @ gen._gaussian(rng, (n - c, kq - c))
    p = Projection.onto(np.hstack([common, g1]))
    q = Projection.onto(np.hstack([common, g2]))
    meet, join = proj_meet_join(p, q)
    ok = (meet.rank + join.rank == p.rank + q.rank
          and projection_leq(meet, p) and projection_leq(meet, q)
          and projection_leq(p, join) and projection_leq(q, join))
    return _exact(ok, p=p.matrix, q=q.matrix)


def _pxp_zero(rng, n, ctx):
    """If ``x = p x + q`` and ``tr l(x) = tr q`` then ``p x p = 0``; both directions
    are exercised: instances built to satisfy the rank condition, and generic
    instances where ``p x p != 0`` forces a strictly larger rank."""
    k = int(rng.integers(1, n)) if n > 1 else 1
    p = _random_proj(rng, n, k).matrix
    q = np.eye(n) - p
    g = gen.ginibre(rng, n)
    if rng.integers(2):
        x = p @ g @ q + q
        if np.linalg.norm(p @ x + q - x) > 1e-12 or _rank(x) != n - k:
            return _exact(False, x=x, p=p)
        return _within(np.linalg.norm(p @ x @ p), ctx.tol, x=x, p=p)
    x = p @ g + q
    return _exact(_rank(x) > n - k, x=x, p=p)


# -- fk-axioms --------------------------------------------------------------------

def _invertible(rng, n):
    return gen.random_invertible(rng, n, math.exp(rng.uniform(0, math.log(1e4))))


def _fk_mult(rng, n, ctx):
    x, y = _invertible(rng, n), _invertible(rng, n)
    return _within(_rel(fk_det(x @ y), fk_det(x) * fk_det(y)), ctx.tol, x=x, y=y)


def _fk_adjoint(rng, n, ctx):
    x = _invertible(rng, n)
    return _within(_rel(fk_det(adjoint(x)), fk_det(x)), ctx.tol, x=x)


def _fk_scalar(rng, n, ctx):
    lam = complex(*rng.standard_normal(2)) * 3
    return _within(_rel(fk_det(lam * np.eye(n)), abs(lam)), ctx.tol, lam=[lam.real, lam.imag])


def _fk_contraction(rng, n, ctx):
    u = gen.haar_unitary(rng, n)
    h = (u * rng.uniform(1e-3, 1.0, n)) @ adjoint(u)
    return _within(max(0.0, fk_det(h) - 1.0), ctx.tol, x=h)


def _fk_eps_limit(rng, n, ctx):
    x = _invertible(rng, n)
    d = fk_det(x)
    vals = [fk_det_eps(x, e) for e in (1e-2, 1e-6, 1e-12)]
    monotone = vals[0] >= vals[1] >= vals[2] >= d * (1 - 1e-12)
    res = _rel(vals[2], d) if monotone else math.inf
    return _within(res, ctx.tol, x=x)


def _fk_det_forms(rng, n, ctx):
    """Unital linear forms preserve det; the optional mutant ``2 f`` must not."""
    form = _unital_form(rng, n, conjugated=False)
    f = from_form(form)
    if ctx.options.get("inject_mutant"):
        f = MatrixMap(n, 2 * f.op, f.conjugate)
    v = is_det_preserving(f, ProbeSet(count=16, seed=int(rng.integers(2 ** 31))))
    if v:
        return 0.0, True, None
    return 1.0, False, _wit(probe=v.witness[0], detail=v.detail)


# -- brown-identities ----------------------------------------------------------

def _point_away(rng, eig, margin):
    radius = 1.5 * max(1.0, np.abs(eig).max())
    while True:
        lam = complex(*rng.uniform(-radius, radius, 2))
        if np.abs(eig - lam).min() >= margin:
            return lam


def _log_potential(rng, n, ctx):
    x = gen.ginibre(rng, n)
    mu = brown_measure(x)
    lam = _point_away(rng, mu.points(), 1e-3)
    atoms = mu.integrate(lambda t: math.log(abs(t - lam)))
    return _within(abs(fk_logdet(x - lam * np.eye(n)) - atoms), ctx.tol, x=x, lam=[lam.real, lam.imag])


def _brown_mass(rng, n, ctx):
    mu = brown_measure(gen.ginibre(rng, n))
    return _exact(sum(mu.weights) == 1)


def _nilpotent_origin(rng, n, ctx):
    x = gen.nilpotent_upper(rng, n)
    return _exact(brown_measure(x).mass(Singleton(0, 1e-8)) == 1, x=x)


def _normal_case(rng, n, ctx):
    d = gen._gaussian(rng, n)
    u = gen.haar_unitary(rng, n)
    x = (u * d) @ adjoint(u)
    return _within(brown_measure(x).distance(brown_measure(np.diag(d))), ctx.tol, x=x)


def _similarity(rng, n, ctx):
    x = gen.ginibre(rng, n)
    s = gen.random_invertible(rng, n, 10.0)
    y = s @ x @ np.linalg.inv(s)
    return _within(brown_measure(y).distance(brown_measure(x)), ctx.tol, x=x, s=s)


def _grid_mass(rng, n, ctx):
    x = gen.ginibre(rng, n) / 2
    half = 1.5 * max(1.0, np.abs(np.linalg.eigvals(x)).max())
    gm = brown_from_grid(x, GridSpec.square(-half, half, 48))
    return _within(abs(gm.total_mass - 1.0), ctx.tol, x=x)


# -- hs-projections ------------------------------------------------------------------

def _random_region(rng, eig, margin=1e-3):
    """A disk or half-plane at distance >= margin from every eigenvalue."""
    scale = max(1.0, np.abs(eig).max())
    while True:
        if rng.integers(2):
            region = Disk(complex(*rng.uniform(-scale, scale, 2)), float(rng.uniform(0.1, 1.5) * scale))
        else:
            normal = np.exp(1j * rng.uniform(0, 2 * np.pi))
            region = HalfPlane(complex(normal), float(rng.uniform(-scale, scale)))
        if min(region.boundary_distance(complex(z)) for z in eig) >= margin:
            return region


def _hs_projection(rng, n, ctx):
    x = gen.ginibre(rng, n)
    region = _random_region(rng, np.linalg.eigvals(x))
    r = hs_projection(x, region)
    res = r.invariance_residual / np.linalg.norm(x)
    ok = r.ok and res <= ctx.tol
    return float(res), ok, (None if ok else _wit(x=x, checks=r.checks))


def _measure_decomposition(rng, n, ctx):
    x = gen.ginibre(rng, n)
    eig = np.linalg.eigvals(x)
    for _ in range(100):
        region = _random_region(rng, eig)
        r = hs_projection(x, region)
        if 0 < r.p.rank < n:
            break
    else:
        return 0.0, True, None
    parts = brown_decompose(x, r.p)
    mixed = type(parts[0]).mixture(*parts)
    return _within(mixed.distance(brown_measure(x)), ctx.tol, x=x)


# -- isometry-lemmas -----------------------------------------------------------------

def _isometry(rng, n):
    """A unital rank isometry ``a J(x) a^{-1}``, possibly conjugate-linear."""
    return from_form(_unital_form(rng, n))


def _invertibility(rng, n, ctx):
    f = _isometry(rng, n)
    for _ in range(50):
        x = _lowrank(rng, n)
        if (_rank(x) == n) != (_rank(f(x)) == n):
            return _exact(False, x=x)
    return 0.0, True, None


def _order(rng, n, ctx):
    f = _isometry(rng, n)
    u = gen.haar_unitary(rng, n)
    k1 = int(rng.integers(0, n + 1))
    k2 = int(rng.integers(k1, n + 1))
    p, q = Projection.onto(u[:, :k1]), Projection.onto(u[:, :k2])
    lp, _ = supports(f(p.matrix), CHECK_RANK_TOL)
    lq, _ = supports(f(q.matrix), CHECK_RANK_TOL)
    res = float(np.linalg.norm(lq.matrix @ lp.matrix - lp.matrix))
    return _within(res, ctx.tol, p=p.matrix, q=q.matrix)


def _orthogonal_meets(rng, n, ctx):
    f = _isometry(rng, n)
    u = gen.haar_unitary(rng, n)
    k = int(rng.integers(0, n + 1))
    p, q = Projection.onto(u[:, :k]), Projection.onto(u[:, k:])
    lp, _ = supports(f(p.matrix), CHECK_RANK_TOL)
    lq, _ = supports(f(q.matrix), CHECK_RANK_TOL)
    meet, _ = proj_meet_join(lp, lq, tol=1e-8)
    return _exact(meet.rank == 0, p=p.matrix)


def _idempotents(rng, n, ctx):
    f = _isometry(rng, n)
    fe = f(gen.random_idempotent(rng, n))
    res = np.linalg.norm(fe @ fe - fe) / max(1.0, np.linalg.norm(fe)) ** 2
    return _within(res, ctx.tol)


def _zero_products(rng, n, ctx):
    f = _isometry(rng, n)
    side = None
    worst = 0.0
    for _ in range(10):
        x = _lowrank(rng, n)
        _, r = supports(x)
        y = (np.eye(n) - r.matrix) @ gen.ginibre(rng, n)
        fx, fy = f(x), f(y)
        scale = max(1.0, np.linalg.norm(fx) * np.linalg.norm(fy))
        rxy = np.linalg.norm(fx @ fy) / scale
        ryx = np.linalg.norm(fy @ fx) / scale
        if min(rxy, ryx) > ctx.tol:
            return _within(min(rxy, ryx), ctx.tol, x=x, y=y)
        worst = max(worst, min(rxy, ryx))
        # only pairs where exactly one product vanishes decide a side
        if (rxy <= ctx.tol) != (ryx <= ctx.tol):
            s = "xy" if rxy <= ctx.tol else "yx"
            if side is not None and s != side:
                return _exact(False, x=x, y=y)
            side = s
    return worst, True, None


def _corner_ideals(rng, n, ctx):
    """``f(e M)`` is ``l(f(e)) M`` or ``M r(f(e))``, with ``f(M e)`` the other one."""
    f = _isometry(rng, n)
    k = int(rng.integers(1, n + 1))
    e = _random_proj(rng, n, k).matrix
    lf, rf = supports(f(e), CHECK_RANK_TOL)
    lq, rq = np.eye(n) - lf.matrix, np.eye(n) - rf.matrix
    left = [f(e @ matrix_unit(n, i, j)) for i in range(n) for j in range(n)]
    right = [f(matrix_unit(n, i, j) @ e) for i in range(n) for j in range(n)]

    def lands(images, side):
        if side == "l":
            return max(np.linalg.norm(lq @ z) for z in images)
        return max(np.linalg.norm(z @ rq) for z in images)

    def span(images):
        return numerical_rank(np.array([z.reshape(-1) for z in images]), CHECK_RANK_TOL)

    a = max(lands(left, "l"), lands(right, "r"))
    b = max(lands(left, "r"), lands(right, "l"))
    res = min(a, b)
    ok = res <= ctx.tol and span(left) == span(right) == k * n
    return float(res), ok, (None if ok else _wit(e=e))


# -- decomposition-roundtrip ---------------------------------------------------------

def _roundtrip(rng, n, ctx):
    jordan = ("identity", "transpose")[ctx.trial % 2]
    conjugated = bool((ctx.trial // 2) % 2)
    form = gen.canonical_form(rng, n, jordan=jordan, conjugated=conjugated)
    r = decompose(from_form(form), probes=ProbeSet(count=16, seed=int(rng.integers(2 ** 31))))
    want = "isomorphism" if jordan == "identity" else "anti-isomorphism"
    ok = (r.classification == want and r.form.jordan == jordan
          and r.form.conjugated == conjugated and r.residual <= ctx.tol)
    return float(r.residual), ok, (None if ok else _wit(a=form.a, b=form.b, jordan=jordan,
                                                       conjugated=conjugated, got=r.classification))


def _perturbed(rng, n, ctx):
    f = gen.perturbed_form(rng, n, eps=1e-2)
    r = decompose(f, probes=ProbeSet(count=16, seed=int(rng.integers(2 ** 31))))
    ok = (not r.is_jordan) and (r.witness is not None) and reject_probe(f) is not None
    return _exact(ok)


def _exclusivity(rng, n, ctx):
    f = from_form(gen.canonical_form(rng, n))
    f = MatrixMap(n, f.op, False)
    iso, anti, _, _ = multiplicativity_residuals(f, ProbeSet(count=8, seed=int(rng.integers(2 ** 31))))
    return _exact(not (iso <= ctx.tol and anti <= ctx.tol))


# -- hk-theorem ------------------------------------------------------------------------

def _det_mode(rng, n, ctx):
    form = _unital_form(rng, n, conjugated=False)
    r = decompose(from_form(form), mode="det", probes=ProbeSet(count=16, seed=int(rng.integers(2 ** 31))))
    if not r.is_jordan:
        return _exact(False, a=form.a)
    ab = r.form.a @ r.form.b
    scalar = np.trace(ab) / n
    res = float(np.linalg.norm(ab - scalar * np.eye(n)) / np.linalg.norm(ab))
    return _within(res, ctx.tol, a=form.a)


def _polar_chain(rng, n, ctx):
    x = _lowrank(rng, n)
    u, absx = polar(x, unitary=True)
    worst = 0.0
    for _ in range(20):
        lam = complex(*rng.standard_normal(2))
        worst = max(worst, abs(fk_det(x - lam * u) - fk_det(absx - lam * np.eye(n))))
    return _within(worst, ctx.tol, x=x)


def _brown_preservation(rng, n, ctx):
    f = from_form(_unital_form(rng, n, conjugated=False))
    worst = 0.0
    for _ in range(20):
        x = gen.ginibre(rng, n)
        d = brown_measure(f(x)).distance(brown_measure(x))
        worst = max(worst, d)
        if d > ctx.tol:
            return _within(d, ctx.tol, x=x)
    return worst, True, None


def _jordan_det(rng, n, ctx):
    form = _unital_form(rng, n)
    f = from_form(form)
    r = decompose(f, probes=ProbeSet(count=8, seed=int(rng.integers(2 ** 31))))
    if not r.is_jordan:
        return _exact(False, a=form.a)
    v = is_det_preserving(f, ProbeSet(count=8, seed=int(rng.integers(2 ** 31))), allow_conjugate=True)
    return _exact(bool(v), a=form.a)


# -- example53 ---------------------------------------------------------------------------

def example53_target(lam):
    """``exp(int_0^1 log|t - lam| dt)`` by quadrature."""
    pts = [lam] if 0 < lam < 1 else None
    val, _ = quad(lambda t: math.log(abs(t - lam)), 0.0, 1.0, points=pts, limit=200)
    return val


def _example53(rng, n, ctx):
    x = gen.example53_discretization(n)
    worst = abs(fk_det(x) - math.exp(-1))
    for lam in (0.25, 0.5, 0.75):
        closed = math.exp(-1) * lam ** lam * (1 - lam) ** (1 - lam)
        worst = max(worst, abs(fk_det(x - lam * np.eye(n)) - closed))
    ok = worst <= ctx.tol
    far = abs(fk_logdet(x - 2 * np.eye(n)) - example53_target(2.0))
    ok = ok and far <= 1e-3
    return float(max(worst, far)), ok, None


# -- registry ---------------------------------------------------------------------------

SUITES: Dict[str, List[Property]] = {
    "rank-axioms": [
        Property("metric-axioms", "rank metric is a metric", _metric_axioms),
        Property("product-bound", "rank of a product is at most either rank", _product_bound),
        Property("sum-bound", "rank is subadditive", _sum_bound),
        Property("unitary-invariance", "rank is adjoint and unitarily invariant", _unitary_invariance),
        Property("support-trace", "left and right supports share the rank", _support_trace),
        Property("l0-rank-limit", "L0 norm of a large multiple tends to the rank", _l0_limit, 1e-6),
    ],
    "regring-identities": [
        Property("partial-inverse", "partial inverse identities", _partial_inverse, 1e-10),
        Property("support-normalizers", "invertible a with xa = l(x)", _support_normalizers, 1e-10),
        Property("idempotent-split", "idempotent = left support + nilpotent corner", _idempotent_split, 1e-10),
        Property("projection-conjugator", "idempotent is similar to its left support", _conjugator, 1e-10),
        Property("peirce", "Peirce corners recombine", _peirce, 1e-12),
        Property("meet-join", "projection lattice modular law", _meet_join),
        Property("pxp-zero", "x = px + q with rank tr(q) forces pxp = 0", _pxp_zero, 1e-10),
    ],
    "fk-axioms": [
        Property("multiplicativity", "det(xy) = det(x)det(y)", _fk_mult, 1e-8),
        Property("adjoint", "det(x*) = det(x)", _fk_adjoint, 1e-8),
        Property("scalar", "det(lambda 1) = |lambda|", _fk_scalar, 1e-8),
        Property("contraction", "det(x) <= 1 for 0 <= x <= 1", _fk_contraction, 1e-8),
        Property("epsilon-limit", "regularized det decreases to det", _fk_eps_limit, 1e-6),
        Property("det-preserving-forms", "a J(x) a^-1 preserves det", _fk_det_forms),
    ],
    "brown-identities": [
        Property("log-potential", "log det(x - lambda) integrates log|t - lambda|", _log_potential, 1e-8),
        Property("total-mass", "Brown measure is a probability measure", _brown_mass),
        Property("nilpotent-origin", "nilpotent Brown measure is the point mass at 0", _nilpotent_origin),
        Property("normal-case", "normal Brown measure is the spectral measure", _normal_case, 1e-8),
        Property("similarity", "Brown measure is similarity invariant", _similarity, 1e-6),
        Property("grid-mass", "lattice Laplacian of log det carries unit mass", _grid_mass, 5e-2, 8),
    ],
    "hs-projections": [
        Property("hs-projection", "invariant projection splitting the Brown measure", _hs_projection, 1e-8),
        Property("measure-decomposition", "corner measures recombine with weights tau(p), tau(q)",
                 _measure_decomposition, 1e-6),
    ],
    "isometry-lemmas": [
        Property("invertibility", "isometries preserve invertibility", _invertibility),
        Property("order", "support images are order preserving", _order, 1e-8),
        Property("orthogonal-meets", "orthogonal projections have disjoint support images", _orthogonal_meets),
        Property("idempotents", "isometries preserve idempotents", _idempotents, 1e-8),
        Property("pxp-zero", "x = px + q with rank tr(q) forces pxp = 0", _pxp_zero, 1e-10),
        Property("zero-products", "zero products map to zero products on a fixed side", _zero_products, 1e-8),
        Property("corner-ideals", "corner ideals map onto corner ideals", _corner_ideals, 1e-8, 6),
    ],
    "decomposition-roundtrip": [
        Property("roundtrip", "every isometry is a J(x) b", _roundtrip, 1e-8),
        Property("perturbed-rejection", "perturbed forms are not isometries", _perturbed),
        Property("exclusivity", "iso and anti are exclusive for n >= 2", _exclusivity, 1e-8),
    ],
    "hk-theorem": [
        Property("det-mode", "det preservers are a J(x) a^-1", _det_mode, 1e-8),
        Property("polar-chain", "det(x - lambda u) = det(|x| - lambda)", _polar_chain, 1e-8),
        Property("brown-preservation", "det preservers preserve Brown measures", _brown_preservation, 1e-6),
        Property("jordan-det", "unital Jordan forms preserve det", _jordan_det),
    ],
    "example53": [
        Property("det-curve", "determinant curve of the multiplication operator", _example53, 1e-2),
    ],
}


def suite_names():
    return list(SUITES)


@dataclass
class _Ctx:
    tol: float
    trial: int
    options: dict


def run_suite(config: SuiteConfig) -> Report:
    """Run every property of ``config.suite``; write the report if ``output`` is set."""
    start = time.perf_counter()
    records = []
    for prop in SUITES[config.suite]:
        tol = float(config.tolerances.get(prop.name, prop.tol))
        rec = Record(prop.name, prop.anchor, tolerance=tol)
        for n in config.n_values:
            if prop.max_n is not None and n > prop.max_n:
                continue
            # deterministic properties run once per n
            trials = min(config.trials, 1) if prop.fn is _example53 else config.trials
            for t in range(trials):
                ss = np.random.SeedSequence([config.seed, zlib.crc32(prop.name.encode()), n, t])
                rng = np.random.default_rng(ss)
                residual, ok, witness = prop.fn(rng, n, _Ctx(tol, t, config.options))
                rec.trials += 1
                if np.isfinite(residual):
                    rec.worst_residual = max(rec.worst_residual, float(residual))
                else:
                    rec.worst_residual = math.inf
                if not ok:
                    rec.failures += 1
                    if len(rec.witnesses) < 3:
                        rec.witnesses.append({"n": n, "trial": t, "payload": witness})
        records.append(rec)
    report = Report(config, records, time.perf_counter() - start)
    if config.output:
        try:
            report.write(config.output)
        except OSError as exc:
            raise UsageError(f"cannot write report: {exc}") from exc
    return report
