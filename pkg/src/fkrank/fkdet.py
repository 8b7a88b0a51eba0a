"""Fuglede-Kadison determinant, Brown measures and invariant projections on M_n.

On M_n the determinant is ``|det_n(x)|^(1/n)``, the geometric mean of the
singular values, and the Brown measure is the normalized eigenvalue counting
measure.  Both are computed from independent factorizations (SVD for the
determinant, Schur for the measure) so that identities linking them are
genuine cross-checks.
"""

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import exp1

from .errors import BoundaryAmbiguityError, InvarianceError, UsageError
from .matcore import _rank_from_s, adjoint, as_matrix, default_rank_tol, schur, schur_reorder
from .regions import Region
from .regring import Projection

__all__ = [
    "BrownMeasure", "HSProjectionResult", "GridSpec", "GridMeasure",
    "fk_det", "fk_logdet", "fk_det_eps", "log_norm", "brown_measure",
    "ldet_at", "brown_from_grid", "hs_projection", "brown_decompose",
    "quasinilpotent_check", "spectral_radius",
]

ATOM_ROUNDING = 10  # decimal places used to merge exactly coincident eigenvalues
GRID_SMOOTHING = 0.6  # Gaussian width of the grid potential, in grid steps


def _singular_values(x):
    return np.linalg.svd(as_matrix(x), compute_uv=False)


def fk_logdet(x, tol=None):
    """Mean of the log singular values; ``-inf`` when x is numerically singular."""
    x = as_matrix(x)
    n = x.shape[0]
    if tol is None:
        tol = default_rank_tol(n)
    s = _singular_values(x)
    if _rank_from_s(s, tol) < n:
        return -math.inf
    return float(np.mean(np.log(s)))


def fk_det(x, tol=None):
    """Fuglede-Kadison determinant; exactly 0 for numerically singular input."""
    ld = fk_logdet(x, tol)
    return 0.0 if ld == -math.inf else math.exp(ld)


def fk_det_eps(x, eps):
    """``exp(tau(log(|x| + eps)))``, decreasing to ``fk_det(x)`` as eps -> 0."""
    if not eps > 0:
        raise UsageError(f"eps must be positive, got {eps}")
    return math.exp(float(np.mean(np.log(_singular_values(x) + eps))))


def log_norm(x):
    """``tau(log(1 + |x|))``."""
    return float(np.mean(np.log1p(_singular_values(x))))


def ldet_at(x, lam):
    """``log det(x - lam)`` (may be ``-inf``)."""
    x = as_matrix(x)
    return fk_logdet(x - lam * np.eye(x.shape[0]))


def spectral_radius(x):
    return float(np.max(np.abs(schur(x).eigenvalues)))


def quasinilpotent_check(x, tol):
    """True iff every eigenvalue has modulus at most ``tol``."""
    return spectral_radius(x) <= tol


# -- Brown measures -----------------------------------------------------------

def _key(z):
    z = complex(z)
    return (round(z.real, ATOM_ROUNDING) + 0.0, round(z.imag, ATOM_ROUNDING) + 0.0)


@dataclass(frozen=True)
class BrownMeasure:
    """Atomic probability measure with weights ``count / n``.

    ``atoms`` is a tuple of ``(location, count)`` pairs whose counts sum to n.
    """

    n: int
    atoms: Tuple[Tuple[complex, int], ...]

    def __post_init__(self):
        total = sum(c for _, c in self.atoms)
        if total != self.n or any(c <= 0 for _, c in self.atoms):
            raise UsageError(f"atom counts must be positive and sum to n={self.n}, got {total}")

    @classmethod
    def from_points(cls, points):
        points = list(points)
        counts = Counter(_key(z) for z in points)
        atoms = tuple(sorted(((complex(*k), c) for k, c in counts.items()),
                             key=lambda a: (a[0].real, a[0].imag)))
        return cls(len(points), atoms)

    @property
    def weights(self):
        return [Fraction(c, self.n) for _, c in self.atoms]

    @property
    def locations(self):
        return [z for z, _ in self.atoms]

    def points(self, copies=1):
        """Atom locations repeated by count (times ``copies``)."""
        return np.array([z for z, c in self.atoms for _ in range(c * copies)], dtype=complex)

    def mass(self, region):
        return Fraction(sum(c for z, c in self.atoms if region(z)), self.n)

    def integrate(self, f):
        return sum(c * f(z) for z, c in self.atoms) / self.n

    @staticmethod
    def mixture(*parts):
        """Combine measures of corners of orders k_i into one of order sum(k_i).

        Each part enters with weight ``k_i / sum(k_i)``; counts carry over
        unchanged, so the weights stay exact.
        """
        pts = np.concatenate([p.points() for p in parts])
        return BrownMeasure.from_points(pts)

    def distance(self, other):
        """Bottleneck matching distance between the two atom multisets."""
        a, b = self._aligned(other)
        if a is None:
            return math.inf
        cost = np.abs(a[:, None] - b[None, :])
        levels = np.unique(cost)
        lo, hi = 0, len(levels) - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if _perfect_matching(cost <= levels[mid]):
                hi = mid
            else:
                lo = mid + 1
        return float(levels[lo])

    def matches(self, other, tol=1e-6):
        """Exact weights, atom locations matched within ``tol``."""
        a, b = self._aligned(other)
        if a is None:
            return False
        return _perfect_matching(np.abs(a[:, None] - b[None, :]) <= tol)

    def _aligned(self, other):
        m = math.lcm(self.n, other.n)
        a, b = self.points(m // self.n), other.points(m // other.n)
        if a.size != b.size:
            return None, None
        return a, b

    def to_json(self):
        return {"atoms": [{"loc": [z.real, z.imag], "num": c, "den": self.n} for z, c in self.atoms]}

    @classmethod
    def from_json(cls, obj):
        try:
            atoms = obj["atoms"]
            dens = {a["den"] for a in atoms}
            if len(dens) != 1:
                # bring everything to a common denominator
                m = math.lcm(*dens)
            else:
                (m,) = dens
            pts = []
            for a in atoms:
                count = Fraction(a["num"], a["den"]) * m
                if count.denominator != 1:
                    raise UsageError("atom weights must be multiples of 1/n")
                pts.extend([complex(*a["loc"])] * int(count))
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"malformed Brown measure JSON: {exc}") from exc
        return cls.from_points(pts)


def _perfect_matching(allowed):
    rows, cols = linear_sum_assignment(~allowed)
    return bool(np.all(allowed[rows, cols]))


def brown_measure(x):
    """Eigenvalue counting measure from the Schur form.

    Eigenvalues are merged into one atom only when they agree after rounding
    to 1e-10; no clustering radius is applied.
    """
    return BrownMeasure.from_points(schur(x).eigenvalues)


# -- Distributional Laplacian on a lattice ------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Square lattice of ``m x m`` nodes spanning ``[re_min, re_max] x [im_min, im_max]``."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float
    m: int

    def __post_init__(self):
        if self.m < 3 or not (self.re_max > self.re_min and self.im_max > self.im_min):
            raise UsageError("grid needs m >= 3 and positive extent")
        hx = (self.re_max - self.re_min) / (self.m - 1)
        hy = (self.im_max - self.im_min) / (self.m - 1)
        if not math.isclose(hx, hy, rel_tol=1e-9):
            raise UsageError(f"grid must be square: steps {hx} and {hy} differ")

    @classmethod
    def square(cls, lo, hi, m):
        return cls(lo, hi, lo, hi, m)

    @property
    def step(self):
        return (self.re_max - self.re_min) / (self.m - 1)

    def nodes(self):
        return (np.linspace(self.re_min, self.re_max, self.m),
                np.linspace(self.im_min, self.im_max, self.m))


@dataclass
class GridMeasure:
    """Cell masses ``mass[i, j]`` at node ``re[i] + 1j * im[j]``."""

    re: np.ndarray
    im: np.ndarray
    mass: np.ndarray
    clipped_mass: float
    smoothing: float = field(default=0.0)

    @property
    def total_mass(self):
        return float(self.mass.sum())

    def mass_near(self, z, radius):
        rr, ii = np.meshgrid(self.re, self.im, indexing="ij")
        return float(self.mass[np.abs(rr + 1j * ii - z) <= radius].sum())

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["re", "im", "mass"])
        for i, re in enumerate(self.re):
            for j, im in enumerate(self.im):
                w.writerow([f"{re:.15g}", f"{im:.15g}", f"{self.mass[i, j]:.15g}"])
        return buf.getvalue()


def _smoothed_log(s, sigma):
    """``log s`` convolved with a centred Gaussian of width ``sigma`` in the plane.

    Equals ``log s + E1(s^2 / 2 sigma^2) / 2``; finite at ``s = 0``.
    """
    u = s * s / (2.0 * sigma * sigma)
    small = u < 1e-8
    tail = np.where(small, -np.euler_gamma + u,
                    np.log(np.where(small, 1.0, u)) + exp1(np.where(small, 1.0, u)))
    return 0.5 * (np.log(2.0 * sigma * sigma) + tail)


def brown_from_grid(x, grid: GridSpec, smoothing=None):
    """Brown measure as the discrete Laplacian of ``lam -> log det(x - lam)``.

    The five-point stencil is applied to ``mean_i phi(s_i(x - lam))`` where
    ``phi`` is the logarithm smeared by a Gaussian of width ``smoothing``
    (default ``0.6 h``).  For normal ``x`` this is exactly the potential of
    the Brown measure convolved with that Gaussian; away from the spectrum
    it coincides with ``ldet_at``.  ``smoothing=0`` applies the stencil to
    ``ldet_at`` itself, which fails when a node hits an eigenvalue.

    Negative stencil values are discretization noise: they are clipped to
    zero and their total is reported as ``clipped_mass``.  Boundary nodes
    carry no mass.
    """
    x = as_matrix(x)
    n = x.shape[0]
    h = grid.step
    sigma = GRID_SMOOTHING * h if smoothing is None else smoothing
    re, im = grid.nodes()
    eig = schur(x).eigenvalues
    margin = 2 * h
    if (eig.real.min() < grid.re_min + margin or eig.real.max() > grid.re_max - margin
            or eig.imag.min() < grid.im_min + margin or eig.imag.max() > grid.im_max - margin):
        raise UsageError("grid does not cover the spectrum with a margin of two steps")

    logdet = np.empty((grid.m, grid.m))
    eye = np.eye(n)
    for i, a in enumerate(re):
        for j, b in enumerate(im):
            s = np.linalg.svd(x - (a + 1j * b) * eye, compute_uv=False)
            if sigma > 0:
                logdet[i, j] = np.mean(_smoothed_log(s, sigma))
            else:
                with np.errstate(divide="ignore"):
                    logdet[i, j] = np.mean(np.log(s))
    if not np.all(np.isfinite(logdet)):
        raise UsageError("a grid node hits the spectrum; use smoothing > 0")

    lap = np.zeros_like(logdet)
    lap[1:-1, 1:-1] = (logdet[2:, 1:-1] + logdet[:-2, 1:-1] + logdet[1:-1, 2:]
                       + logdet[1:-1, :-2] - 4.0 * logdet[1:-1, 1:-1])
    mass = lap / (2.0 * math.pi)
    clipped = float(-mass[mass < 0].sum())
    mass = np.where(mass < 0, 0.0, mass)
    return GridMeasure(re, im, mass, clipped, sigma)


# -- Invariant projections ---------------------------------------------------------

class HSProjectionResult(NamedTuple):
    p: Projection
    trace_p: Fraction
    mu_B: Fraction
    invariance_residual: float
    inside_spectrum: np.ndarray
    outside_spectrum: np.ndarray
    checks: dict

    @property
    def ok(self):
        return all(self.checks.values())


def hs_projection(x, region: Region, boundary_tol=1e-8, invariance_tol=1e-8) -> HSProjectionResult:
    """The x-invariant projection splitting the spectrum along ``region``.

    Computed as ``Q1 Q1*`` for the leading Schur vectors after moving the
    eigenvalues inside ``region`` to the front.  All four defining
    properties are re-verified and reported in ``checks``:
    ``invariant`` (x p = p x p), ``trace`` (tau(p) = mu_x(B)),
    ``inside`` and ``outside`` (spectra of the two compressions).
    """
    x = as_matrix(x)
    n = x.shape[0]
    sr = schur(x)
    close = [z for z in sr.eigenvalues if region.boundary_distance(complex(z)) < boundary_tol]
    if close:
        raise BoundaryAmbiguityError(
            f"{len(close)} eigenvalue(s) within {boundary_tol:g} of the region boundary", close)
    ordered = schur_reorder(sr, region)
    k = int(sum(region(z) for z in sr.eigenvalues))
    q1, q2 = ordered.q[:, :k], ordered.q[:, k:]
    p = Projection(q1 @ adjoint(q1), k)

    mu_b = brown_measure(x).mass(region)
    residual = float(np.linalg.norm(x @ p.matrix - p.matrix @ x @ p.matrix))
    inside = np.linalg.eigvals(adjoint(q1) @ x @ q1) if k else np.empty(0, complex)
    outside = np.linalg.eigvals(adjoint(q2) @ x @ q2) if k < n else np.empty(0, complex)
    checks = {
        "invariant": bool(residual <= invariance_tol * np.linalg.norm(x)),
        "trace": p.trace == mu_b,
        "inside": all(region(z) for z in inside),
        "outside": not any(region(z) for z in outside),
    }
    return HSProjectionResult(p, p.trace, mu_b, residual, inside, outside, checks)


def brown_decompose(x, p, invariance_tol=1e-8):
    """Brown measures of the two corners cut out by an x-invariant projection.

    Returns ``(mu_corner, mu_complement)`` for ``p x p`` on ``range(p)`` and
    ``(1-p) x (1-p)`` on its complement;
    ``BrownMeasure.mixture(mu_corner, mu_complement)`` recombines them with
    weights ``tau(p)`` and ``tau(1-p)``.
    """
    x = as_matrix(x)
    if not isinstance(p, Projection):
        p = Projection.from_matrix(p)
    if p.n != x.shape[0]:
        raise UsageError("projection order does not match")
    if p.rank in (0, p.n):
        raise UsageError("projection must be nontrivial")
    pm = p.matrix
    residual = float(np.linalg.norm(x @ pm - pm @ x @ pm))
    if residual > invariance_tol * max(1.0, np.linalg.norm(x)):
        raise InvarianceError(f"projection is not x-invariant: residual {residual:.3e}", residual)
    b1 = p.basis()
    b2 = p.complement().basis()
    return (brown_measure(adjoint(b1) @ x @ b1), brown_measure(adjoint(b2) @ x @ b2))
