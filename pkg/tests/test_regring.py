import warnings
from fractions import Fraction

import numpy as np
import pytest

from fkrank.errors import IdempotencyError, UsageError
from fkrank.matcore import adjoint, matrix_unit, numerical_rank, pinv
from fkrank.regring import (
    AmbiguousRankWarning, Projection, idempotent_split, l0_norm, peirce_decompose,
    proj_meet_join, projection_close, projection_conjugator, projection_leq, rank_metric,
    rank_norm, support_normalizers, supports, sv_function,
)

from conftest import ginibre

NILP = np.array([[0, 2], [0, 0]], dtype=complex)
E11 = np.diag([1.0, 0.0]).astype(complex)
E22 = np.diag([0.0, 1.0]).astype(complex)


def lowrank(rng, n, k):
    return ginibre(rng, n, k) @ ginibre(rng, k, n)


def l0_brute(x, grid=200001):
    """inf over t of t + mu(t), with mu read off a dense t grid including t = 1."""
    s = np.linalg.svd(x, compute_uv=False)
    n = len(s)
    t = np.linspace(0, 2, grid)[1:]
    idx = np.floor(t * n + 1e-12).astype(int)
    mu = np.where(idx < n, s[np.minimum(idx, n - 1)], 0.0)
    return float((t + mu).min())


def l0_lambda_form(x, grid=200001):
    """inf over lambda of lambda + tau(e_(lambda, inf)(|x|))."""
    s = np.linalg.svd(x, compute_uv=False)
    lam = np.linspace(0, s.max() + 1, grid)
    frac = (s[None, :] > lam[:, None]).mean(axis=1)
    return float((lam + frac).min())


# -- Projection ---------------------------------------------------------------

def test_projection_snaps_and_validates(rng):
    q, _ = np.linalg.qr(ginibre(rng, 4))
    p = q[:, :2] @ adjoint(q[:, :2])
    proj = Projection.from_matrix(p + 1e-12)
    assert proj.rank == 2 and proj.trace == Fraction(1, 2)
    assert np.linalg.norm(proj.matrix @ proj.matrix - proj.matrix) < 1e-14
    with pytest.raises(UsageError):
        Projection.from_matrix(np.array([[1, 1], [0, 0]]))
    assert Projection.identity(3).complement().rank == 0
    assert Projection.onto(np.zeros((3, 0))).rank == 0


# -- supports and rank metric ---------------------------------------------------

def test_supports_examples(rng):
    l, r = supports(NILP)
    assert np.allclose(l.matrix, E11) and np.allclose(r.matrix, E22)
    l, r = supports(ginibre(rng, 4))
    assert np.allclose(l.matrix, np.eye(4)) and np.allclose(r.matrix, np.eye(4))
    for k in range(5):
        l, r = supports(lowrank(rng, 5, k))
        assert l.trace == r.trace == Fraction(k, 5)


def test_rank_metric_examples():
    assert rank_metric(E11, np.zeros((2, 2))) == Fraction(1, 2)
    assert rank_metric(E11, E11) == 0
    n = 5
    assert rank_metric(np.eye(n), np.diag([1.0] + [0.0] * (n - 1))) == Fraction(n - 1, n)
    with pytest.raises(UsageError):
        rank_metric(np.eye(2), np.eye(3))


def test_rank_norm_properties(rng):
    for _ in range(30):
        n = 6
        x, y = lowrank(rng, n, rng.integers(0, 7)), lowrank(rng, n, rng.integers(0, 7))
        assert (rank_norm(x) == 0) == (np.linalg.norm(x) == 0)
        assert rank_norm(x + y) <= rank_norm(x) + rank_norm(y)
        assert rank_norm(x @ y) <= min(rank_norm(x), rank_norm(y))
        assert rank_norm(3.7j * x) == rank_norm(x)
        a, b = ginibre(rng, n), ginibre(rng, n)
        assert rank_norm(a @ x @ b) == rank_norm(x)
        if numerical_rank(x):
            l1, r1 = supports(x)
            l2, _ = supports(x @ b)
            _, r2 = supports(a @ x)
            assert projection_close(l1, l2) and projection_close(r1, r2)
    q, _ = np.linalg.qr(ginibre(rng, 6))
    p, pp = Projection.onto(q[:, :2]), Projection.onto(q[:, 2:5])
    assert rank_norm(p.matrix + pp.matrix) == rank_norm(p.matrix) + rank_norm(pp.matrix)


def test_block_rank_identity(rng):
    for _ in range(20):
        k, m = 3, 3
        a = lowrank(rng, k, rng.integers(0, 4))
        b = lowrank(rng, m, rng.integers(0, 4))
        c = ginibre(rng, m)
        block = np.block([[np.zeros((k, k)), a], [b, c]])
        assert numerical_rank(block) == m + numerical_rank(a @ np.linalg.inv(c) @ b)


# -- singular value function and L0 --------------------------------------------------

def test_sv_function_steps():
    x = np.diag([3.0, 1.0])
    assert sv_function(x, 0) == 3 and sv_function(x, 0.49) == 3
    assert sv_function(x, 0.5) == 1 and sv_function(x, 0.99) == 1
    with pytest.raises(UsageError):
        sv_function(x, 1.0)
    with pytest.raises(UsageError):
        sv_function(x, -0.1)
    assert sv_function(np.zeros((3, 3)), 0.2) == 0


def test_l0_norm_diag31():
    # minimum over breakpoints {0 + 3, 1/2 + 1, 1 + 0} is attained at t = 1
    x = np.diag([3.0, 1.0])
    assert l0_norm(x) == pytest.approx(1.0)
    assert l0_brute(x) == pytest.approx(1.0, abs=1e-4)
    assert l0_lambda_form(x) == pytest.approx(1.0, abs=1e-4)


def test_l0_norm_matches_brute_force(rng):
    assert l0_norm(np.zeros((3, 3))) == 0
    for _ in range(10):
        x = 0.3 * ginibre(rng, 4)
        assert l0_norm(x) == pytest.approx(l0_brute(x), abs=1e-4)
        assert l0_norm(x) == pytest.approx(l0_lambda_form(x), abs=1e-4)


def test_l0_large_multiple_gives_rank(rng):
    for k in range(5):
        q1, _ = np.linalg.qr(ginibre(rng, 4))
        q2, _ = np.linalg.qr(ginibre(rng, 4))
        s = np.zeros(4)
        s[:k] = rng.uniform(1e-3, 1, k)
        x = (q1 * s) @ q2
        assert abs(l0_norm(1e8 * x) - k / 4) <= 1e-6


# -- Peirce --------------------------------------------------------------------------

def test_peirce_examples(rng):
    q, _ = np.linalg.qr(ginibre(rng, 3))
    p = Projection.onto(q[:, :1])
    b = peirce_decompose(np.eye(3), p)
    assert np.allclose(b.pxp, p.matrix) and np.allclose(b.pxq, 0) and np.allclose(b.qxp, 0)
    assert np.allclose(b.qxq, np.eye(3) - p.matrix)
    x = ginibre(rng, 3)
    b = peirce_decompose(x, Projection.identity(3))
    assert np.allclose(b.pxp, x) and np.allclose(b.qxq, 0)
    x = ginibre(rng, 2)
    b = peirce_decompose(x, E11)
    mask = np.zeros((2, 2))
    mask[0, 0] = 1
    assert np.allclose(b.pxp, x * mask) and np.allclose(b.pxq[0, 1], x[0, 1])
    assert np.allclose(b.qxp[1, 0], x[1, 0]) and np.allclose(b.qxq[1, 1], x[1, 1])
    assert np.allclose(b.reconstruct(), x)
    with pytest.raises(UsageError):
        peirce_decompose(x, np.array([[1, 1], [0, 0]]))


# -- idempotents ----------------------------------------------------------------------

def test_idempotent_split_examples():
    e = np.array([[1, 1], [0, 0]], dtype=complex)
    p, u = idempotent_split(e)
    assert np.allclose(p.matrix, E11) and np.allclose(u, [[0, 1], [0, 0]])
    _, u = idempotent_split(E11)
    assert np.allclose(u, 0)
    # r(1 - e) = 1 - l(e)
    _, r = supports(np.eye(2) - e)
    assert np.allclose(r.matrix, np.eye(2) - p.matrix)
    with pytest.raises(IdempotencyError) as info:
        idempotent_split(2 * e)
    assert info.value.residual > 0


def test_projection_conjugator_examples(rng):
    e = np.array([[1, 1], [0, 0]], dtype=complex)
    a, a_inv = projection_conjugator(e)
    assert np.allclose(a, [[1, 1], [0, 1]])
    assert np.allclose(a @ e @ a_inv, E11)
    a, _ = projection_conjugator(E11)
    assert np.allclose(a, np.eye(2))
    q, _ = np.linalg.qr(ginibre(rng, 5))
    p = q[:, :2] @ adjoint(q[:, :2])
    e = p + p @ ginibre(rng, 5) @ (np.eye(5) - p)
    a, a_inv = projection_conjugator(e)
    pe, _ = supports(e, 1e-8)
    assert np.linalg.norm(a @ e @ a_inv - pe.matrix) <= 1e-10 * np.linalg.norm(e) ** 2


# -- support normalizers ----------------------------------------------------------------

def test_support_normalizers_examples(rng):
    a, b = support_normalizers(NILP)
    assert np.allclose(a, [[0, 1], [0.5, 0]])
    assert np.allclose(NILP @ a, E11)
    assert np.allclose(b @ NILP, E22)

    x = ginibre(rng, 3)
    a, b = support_normalizers(x)
    assert np.allclose(x @ a, np.eye(3)) and np.allclose(b @ x, np.eye(3))

    x = lowrank(rng, 4, 1)
    a, b = support_normalizers(x)
    l, r = supports(x)
    assert np.linalg.norm(x @ a - l.matrix) <= 1e-10
    assert np.linalg.norm(b @ x - r.matrix) <= 1e-10
    assert np.isfinite(np.linalg.cond(a)) and numerical_rank(a) == 4
    with pytest.raises(UsageError):
        support_normalizers(np.zeros((2, 2)))


def test_partial_inverse_identities(rng):
    for k in range(6):
        x = lowrank(rng, 5, k)
        i = pinv(x)
        l, r = supports(x)
        assert np.linalg.norm(x @ i - l.matrix) <= 1e-10
        assert np.linalg.norm(i @ x - r.matrix) <= 1e-10
        assert np.linalg.norm(x @ i @ x - x) <= 1e-10 * max(1, np.linalg.norm(x))
        assert np.linalg.norm(i @ l.matrix - i) <= 1e-10 * max(1, np.linalg.norm(i))
        assert np.linalg.norm(r.matrix @ i - i) <= 1e-10 * max(1, np.linalg.norm(i))


# -- lattice --------------------------------------------------------------------------------

def test_meet_join_examples(rng):
    q, _ = np.linalg.qr(ginibre(rng, 4))
    p1, p2 = Projection.onto(q[:, :1]), Projection.onto(q[:, 1:3])
    meet, join = proj_meet_join(p1, p2)
    assert meet.rank == 0 and projection_close(join, p1.matrix + p2.matrix)
    meet, join = proj_meet_join(p1, p1)
    assert projection_close(meet, p1) and projection_close(join, p1)
    shared = q[:, :1]
    a = Projection.onto(np.hstack([shared, ginibre(rng, 4, 1)]))
    b = Projection.onto(np.hstack([shared, ginibre(rng, 4, 1)]))
    meet, join = proj_meet_join(a, b)
    assert meet.trace + join.trace == a.trace + b.trace
    assert meet.rank == 1 and projection_leq(meet, a) and projection_leq(b, join)


def test_meet_join_ambiguity_warning():
    theta = 1e-9
    p = Projection.onto(np.array([1.0, 0.0]))
    q = Projection.onto(np.array([np.cos(theta), np.sin(theta)]))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        proj_meet_join(p, q)
    assert any(issubclass(w.category, AmbiguousRankWarning) for w in caught)
