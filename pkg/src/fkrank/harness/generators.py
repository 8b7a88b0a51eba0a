"""Deterministic random instances.

Every family is a pure function of ``(family, n, seed, params)``.  Complex
Gaussian entries have unit variance (real and imaginary parts each 1/2).
"""

import zlib

import numpy as np

from ..errors import UsageError
from ..maps import MapForm, MatrixMap, from_form
from ..regring import Projection


def rng_for(family, n, seed):
    return np.random.default_rng([int(seed) & (2 ** 64 - 1), zlib.crc32(family.encode()), n])


def _gaussian(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def ginibre(rng, n):
    return _gaussian(rng, (n, n))


def haar_unitary(rng, n):
    q, r = np.linalg.qr(_gaussian(rng, (n, n)))
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_projection(rng, n, k=None):
    if k is None:
        k = int(rng.integers(0, n + 1))
    if not 0 <= k <= n:
        raise UsageError(f"projection rank must lie in [0, {n}], got {k}")
    return Projection.onto(haar_unitary(rng, n)[:, :k])


def random_invertible(rng, n, cond_max=1e3):
    if not cond_max >= 1:
        raise UsageError(f"cond_max must be >= 1, got {cond_max}")
    s = np.exp(rng.uniform(-np.log(cond_max), 0, n))
    s[0], s[-1] = 1.0, 1.0 / cond_max
    return (haar_unitary(rng, n) * s) @ haar_unitary(rng, n)


def random_lowrank(rng, n, k=None):
    if k is None:
        k = int(rng.integers(0, n + 1))
    return _gaussian(rng, (n, k)) @ _gaussian(rng, (k, n))


def nilpotent_upper(rng, n):
    return np.triu(_gaussian(rng, (n, n)), 1)


def random_idempotent(rng, n, k=None):
    """``p + p g (1 - p)`` for a random projection ``p``."""
    p = random_projection(rng, n, k).matrix
    return p + p @ _gaussian(rng, (n, n)) @ (np.eye(n) - p)


def positive_diag(rng, n):
    return np.diag(rng.uniform(0.1, 2.0, n)).astype(np.complex128)


def example53_discretization(n):
    """Midpoint nodes ``diag((k - 1/2)/n)``, k = 1..n."""
    return np.diag((np.arange(1, n + 1) - 0.5) / n).astype(np.complex128)


def canonical_form(rng, n, jordan=None, conjugated=None, cond_max=1e3, unital=False):
    if jordan is None:
        jordan = "transpose" if rng.integers(2) else "identity"
    if conjugated is None:
        conjugated = bool(rng.integers(2))
    a = random_invertible(rng, n, cond_max)
    b = np.linalg.inv(a) if unital else random_invertible(rng, n, cond_max)
    return MapForm(a, b, jordan, bool(conjugated))


def perturbed_form(rng, n, eps=1e-2, **params):
    f = from_form(canonical_form(rng, n, **params))
    g = _gaussian(rng, f.op.shape)
    op = f.op + eps * np.linalg.norm(f.op) / np.linalg.norm(g) * g
    return MatrixMap(n, op, f.conjugate)


FAMILIES = (
    "ginibre", "haar_unitary", "random_projection", "random_invertible",
    "random_lowrank", "nilpotent_upper", "random_idempotent", "positive_diag",
    "example53_discretization", "canonical_form", "perturbed_form",
)


def generate_form(n, seed, **params):
    """The :class:`MapForm` behind ``generate('canonical_form', n, seed)``."""
    return canonical_form(rng_for("canonical_form", n, seed), n, **params)


def generate(family, n, seed=0, **params):
    """One instance of ``family`` at order ``n``."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise UsageError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    if family == "example53_discretization":
        return example53_discretization(n)
    if family == "canonical_form":
        return from_form(generate_form(n, seed, **params))
    table = {
        "ginibre": ginibre, "haar_unitary": haar_unitary,
        "random_projection": random_projection, "random_invertible": random_invertible,
        "random_lowrank": random_lowrank, "nilpotent_upper": nilpotent_upper,
        "random_idempotent": random_idempotent, "positive_diag": positive_diag,
        "perturbed_form": perturbed_form,
    }
    if family not in table:
        raise UsageError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
    try:
        return table[family](rng_for(family, n, seed), n, **params)
    except TypeError as exc:
        raise UsageError(f"bad parameters for {family}: {exc}") from exc
