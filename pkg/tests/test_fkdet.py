import json
import math
from fractions import Fraction

import numpy as np
import pytest

from fkrank.errors import BoundaryAmbiguityError, InvarianceError, UsageError
from fkrank.fkdet import (
    BrownMeasure, GridSpec, brown_decompose, brown_from_grid, brown_measure, fk_det,
    fk_det_eps, fk_logdet, hs_projection, ldet_at, log_norm, quasinilpotent_check,
    spectral_radius,
)
from fkrank.matcore import adjoint, numerical_rank
from fkrank.regions import Complement, Disk, HalfPlane, Singleton
from fkrank.regring import Projection

from conftest import ginibre

NILP = np.array([[0, 1], [0, 0]], dtype=complex)


def unitary(rng, n):
    q, r = np.linalg.qr(ginibre(rng, n))
    return q * (np.diag(r) / abs(np.diag(r)))


# -- determinant ------------------------------------------------------------------

def test_fk_det_examples(rng):
    assert fk_det(np.diag([1.0, 4.0])) == pytest.approx(2.0, rel=1e-15)
    assert fk_det(unitary(rng, 5)) == pytest.approx(1.0, rel=1e-12)
    assert fk_det(NILP) == 0.0
    assert fk_logdet(NILP) == -math.inf


def test_fk_det_agrees_with_lu_determinant(rng):
    for n in (1, 2, 5, 9):
        x = ginibre(rng, n)
        oracle = abs(np.linalg.det(x)) ** (1 / n)
        assert fk_det(x) == pytest.approx(oracle, rel=1e-10)


def test_fk_det_eps_examples():
    assert fk_det_eps(np.zeros((2, 2)), 0.5) == pytest.approx(0.5)
    d = np.diag([1.0, 4.0])
    vals = [fk_det_eps(d, e) for e in (1e-2, 1e-4, 1e-6)]
    assert vals[0] > vals[1] > vals[2] > 2
    for e, v in zip((1e-2, 1e-4, 1e-6), vals):
        assert v == pytest.approx(math.sqrt((1 + e) * (4 + e)), rel=1e-14)
    assert abs(vals[2] - 2) < 1e-3
    assert fk_det_eps(NILP, 1e-6) == pytest.approx(math.sqrt(1e-6 * (1 + 1e-6)), rel=1e-12)
    with pytest.raises(UsageError):
        fk_det_eps(d, 0)


def test_log_norm(rng):
    assert log_norm(np.zeros((3, 3))) == 0
    assert log_norm(np.diag([math.e - 1, math.e - 1])) == pytest.approx(1.0)
    for _ in range(20):
        x, y = ginibre(rng, 4), ginibre(rng, 4)
        assert log_norm(x + y) <= log_norm(x) + log_norm(y) + 1e-14


def test_ldet_examples():
    assert ldet_at(np.diag([0.0, 1.0]), 2) == pytest.approx(math.log(2) / 2)
    assert ldet_at(np.diag([0.0, 1.0]), 1) == -math.inf


def test_ldet_matches_atom_sum(rng):
    for _ in range(20):
        x = ginibre(rng, 6)
        ev = np.linalg.eigvals(x)
        lam = complex(*rng.standard_normal(2))
        if np.abs(ev - lam).min() < 1e-3:
            continue
        assert ldet_at(x, lam) == pytest.approx(np.mean(np.log(np.abs(ev - lam))), abs=1e-8)


def test_ldet_example53_midpoint():
    n = 512
    x = np.diag((np.arange(1, n + 1) - 0.5) / n)
    assert ldet_at(x, 0.5) == pytest.approx(math.log(math.exp(-1) / 2), abs=1e-2)


# -- Brown measure ---------------------------------------------------------------------

def test_brown_examples():
    mu = brown_measure(NILP)
    assert mu.atoms == ((0j, 2),) and mu.weights == [1]
    absu = np.diag([0.0, 1.0])
    assert brown_measure(absu).mass(Singleton(1)) == Fraction(1, 2)
    assert brown_measure(absu).mass(Singleton(0)) == Fraction(1, 2)
    mu = brown_measure(np.diag([1j, -1j]))
    assert sorted((z.imag, w) for z, w in zip(mu.locations, mu.weights)) == [
        (-1, Fraction(1, 2)), (1, Fraction(1, 2))]


def test_brown_atoms_not_clustered():
    mu = brown_measure(np.diag([1.0, 1.0 + 1e-7, 1.0]))
    assert len(mu.atoms) == 2
    assert sorted(c for _, c in mu.atoms) == [1, 2]


def test_brown_unitary_invariance_and_matching(rng):
    x = ginibre(rng, 6)
    u = unitary(rng, 6)
    a, b = brown_measure(x), brown_measure(u @ x @ adjoint(u))
    assert a.matches(b, 1e-6) and a.distance(b) < 1e-10
    assert not a.matches(brown_measure(x + 1e-3), 1e-6)
    assert not a.matches(brown_measure(ginibre(rng, 3)))


def test_brown_json_roundtrip(rng):
    mu = brown_measure(np.diag([1.0, 1.0, 2j, 0.5]))
    obj = json.loads(json.dumps(mu.to_json()))
    assert obj["atoms"][0].keys() == {"loc", "num", "den"}
    assert BrownMeasure.from_json(obj) == mu
    with pytest.raises(UsageError):
        BrownMeasure.from_json({"atoms": [{"loc": [0, 0]}]})


def test_lemma_rank_bound_for_equal_brown_measures(rng):
    # positive x and triangular y sharing its Brown measure: rank x <= rank y
    for _ in range(20):
        n = 5
        k = int(rng.integers(1, n + 1))
        d = np.zeros(n)
        d[:k] = rng.uniform(0.5, 2, k)
        u = unitary(rng, n)
        x = (u * d) @ adjoint(u)
        t = np.triu(ginibre(rng, n), 1) * rng.integers(0, 2, (n, n)) + np.diag(d)
        # kept triangular: a unitary frame would scatter the zero eigenvalues
        y = t
        assert brown_measure(x).matches(brown_measure(y))
        assert numerical_rank(x) <= numerical_rank(y)


def test_quasinilpotent(rng):
    assert quasinilpotent_check(np.triu(ginibre(rng, 5), 1), 1e-12)
    assert not quasinilpotent_check(np.eye(3), 0.5)
    assert spectral_radius(np.diag([1, -3j])) == pytest.approx(3)
    # normal with small spectral radius is small in norm
    for _ in range(10):
        u = unitary(rng, 4)
        x = (u * (1e-9 * ginibre(rng, 4, 1)[:, 0])) @ adjoint(u)
        tol = 1e-8
        if quasinilpotent_check(x, tol):
            assert np.linalg.norm(x) <= 4 * tol


# -- grid Laplacian ----------------------------------------------------------------------

def test_grid_two_atoms():
    x = np.diag([1.0, -1.0])
    gm = brown_from_grid(x, GridSpec.square(-2, 2, 64))
    assert abs(gm.total_mass - 1) <= 0.05
    h = 4 / 63
    for z in (1, -1):
        assert gm.mass_near(z, 2 * h) == pytest.approx(0.5, abs=0.05)


def test_grid_zero_matrix():
    gm = brown_from_grid(np.zeros((3, 3)), GridSpec.square(-1, 1, 21))
    i, j = np.unravel_index(np.argmax(gm.mass), gm.mass.shape)
    assert abs(complex(gm.re[i], gm.im[j])) < 1e-12
    assert gm.mass_near(0, 2 * 0.1) >= 0.95


def test_grid_ginibre_total_mass(rng):
    x = ginibre(rng, 8) / 4
    gm = brown_from_grid(x, GridSpec.square(-2, 2, 128))
    assert 0.95 <= gm.total_mass <= 1.05
    assert gm.clipped_mass >= 0


def test_grid_raw_mode_and_csv():
    gm = brown_from_grid(np.diag([1.0, -1.0]), GridSpec.square(-2, 2, 16), smoothing=0)
    assert gm.smoothing == 0
    lines = gm.to_csv().splitlines()
    assert lines[0] == "re,im,mass" and len(lines) == 1 + 16 * 16


def test_grid_coverage_checked():
    with pytest.raises(UsageError):
        brown_from_grid(np.diag([3.0, 0.0]), GridSpec.square(-1, 1, 16))
    with pytest.raises(UsageError):
        GridSpec.square(-1, 1, 2)


# -- invariant projections ----------------------------------------------------------------

def test_hs_projection_examples():
    x = np.array([[1, 5], [0, 3]], dtype=complex)
    r = hs_projection(x, Disk(1, 0.5))
    assert np.allclose(r.p.matrix, np.diag([1, 0]))
    assert r.trace_p == Fraction(1, 2) == r.mu_B and r.ok
    assert r.invariance_residual < 1e-14

    r = hs_projection(x, Disk(3, 0.5))
    v = np.array([5, 2]) / math.sqrt(29)
    assert np.allclose(r.p.matrix, np.outer(v, v))
    assert np.allclose(x @ np.array([5, 2]), 3 * np.array([5, 2]))
    assert r.ok

    assert np.allclose(hs_projection(x, Disk(0, 10)).p.matrix, np.eye(2))
    assert hs_projection(x, Disk(10, 1)).p.rank == 0


def test_hs_projection_boundary_ambiguity():
    with pytest.raises(BoundaryAmbiguityError) as info:
        hs_projection(np.diag([1.0, 2.0]), Disk(0, 1))
    assert len(info.value.eigenvalues) == 1


def test_hs_projection_complementary_traces(rng):
    for _ in range(20):
        x = ginibre(rng, 7)
        region = Disk(complex(*rng.standard_normal(2)) * 0.5, 1.0)
        if min(region.boundary_distance(z) for z in np.linalg.eigvals(x)) < 1e-3:
            continue
        a, b = hs_projection(x, region), hs_projection(x, Complement(region))
        assert a.trace_p + b.trace_p == 1
        assert a.ok and b.ok


def test_brown_decompose_examples(rng):
    x = np.array([[2, 7], [0, 0]], dtype=complex)
    mc, mq = brown_decompose(x, np.diag([1.0, 0.0]))
    assert mc.atoms == ((2 + 0j, 1),) and mq.atoms == ((0j, 1),)
    assert BrownMeasure.mixture(mc, mq) == brown_measure(x)

    t = np.triu(ginibre(rng, 6))
    r = hs_projection(t, HalfPlane(1, 0))
    if 0 < r.p.rank < 6:
        parts = brown_decompose(t, r.p)
        assert BrownMeasure.mixture(*parts).matches(brown_measure(t))

    a, b = ginibre(rng, 2), ginibre(rng, 3)
    x = np.zeros((5, 5), dtype=complex)
    x[:2, :2], x[2:, 2:] = a, b
    mc, mq = brown_decompose(x, np.diag([1, 1, 0, 0, 0]))
    assert mc.matches(brown_measure(a)) and mq.matches(brown_measure(b))


def test_brown_decompose_errors(rng):
    x = ginibre(rng, 3)
    with pytest.raises(InvarianceError):
        brown_decompose(x, np.diag([1.0, 0, 0]))
    with pytest.raises(UsageError):
        brown_decompose(x, np.eye(3))
    with pytest.raises(UsageError):
        brown_decompose(x, Projection.identity(2))
