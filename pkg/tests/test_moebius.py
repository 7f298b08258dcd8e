"""Tests for PSL(2,R) arithmetic."""

import math

import numpy as np
import pytest

from renormlab import moebius as mb
from renormlab.errors import DegenerateBreak, IdentityMap


def random_map(rng, scale=1.0):
    while True:
        a, b, c, d = rng.normal(size=4) * scale
        if a * d - b * c > 1e-6:
            return mb.MoebiusMap(a, b, c, d)


def random_hyperbolic(rng):
    while True:
        m = random_map(rng)
        if mb.trace(m) > 2.0 + 1e-3:
            return m


# -- construction invariants ------------------------------------------


def test_determinant_one_and_sign_canonical():
    rng = np.random.default_rng(0)
    for _ in range(200):
        m = random_map(rng, scale=rng.uniform(0.1, 10.0))
        a, b, c, d = m.entries
        assert abs(a * d - b * c - 1.0) < 1e-12
        for entry in (a, b, c):
            if abs(entry) > 1e-13:
                assert entry > 0.0
                break


def test_orientation_reversing_rejected():
    with pytest.raises(ValueError):
        mb.MoebiusMap(1.0, 0.0, 0.0, -1.0)


# -- apply --------------------------------------------------------------


def test_apply_identity():
    assert mb.apply(mb.identity(), 0.3) == pytest.approx(0.3, abs=1e-15)


def test_apply_diagonal_doubles():
    # diag(lam, 1/lam) with lam^2 = 2 acts as t -> 2t
    m = mb.diagonal(math.sqrt(2.0))
    assert mb.apply(m, 1.0) == pytest.approx(2.0, rel=1e-14)


def test_apply_rotation_at_infinity():
    # direct projective evaluation: (0*inf + 1)/(-inf + 0), i.e. a/c
    m = mb.MoebiusMap(0.0, 1.0, -1.0, 0.0)
    assert mb.apply(m, math.inf) == pytest.approx(m.a / m.c if m.c else math.inf)
    assert mb.apply(m, math.inf) == pytest.approx(0.0, abs=1e-15)


def test_apply_pole_goes_to_infinity():
    m = mb.MoebiusMap(1.0, 0.0, 1.0, 1.0)  # pole at x = -1
    assert math.isinf(mb.apply(m, -1.0))


# -- compose / inverse ---------------------------------------------------


def test_compose_with_inverse_is_identity():
    rng = np.random.default_rng(1)
    for _ in range(50):
        m = random_map(rng)
        assert mb.compose(m, mb.inverse(m)).is_identity(tol=1e-10)


def test_compose_affine_oracle():
    # matrix-product oracle: affine(l,t) o affine(u,s) = affine(l*u, l*s + t)
    rng = np.random.default_rng(2)
    for _ in range(50):
        lam, mu = rng.uniform(0.2, 5.0, size=2)
        t, s = rng.normal(size=2)
        got = mb.compose(mb.affine(lam, t), mb.affine(mu, s))
        want = mb.affine(lam * mu, lam * s + t)
        assert np.allclose(got.entries, want.entries, atol=1e-12)


def test_inverse_diagonal():
    lam = 1.7
    got = mb.inverse(mb.diagonal(lam))
    want = mb.diagonal(1.0 / lam)
    assert np.allclose(got.entries, want.entries, atol=1e-14)


def test_compose_associative_and_apply_homomorphism():
    rng = np.random.default_rng(3)
    for _ in range(100):
        m1, m2, m3 = (random_map(rng) for _ in range(3))
        lhs = mb.compose(mb.compose(m1, m2), m3)
        rhs = mb.compose(m1, mb.compose(m2, m3))
        assert np.allclose(lhs.entries, rhs.entries, atol=1e-12)
        x = rng.uniform(-2.0, 2.0)
        y2 = mb.apply(m2, x)
        if abs(y2) < 50 and abs(m1.c * y2 + m1.d) > 1e-3 and abs(m2.c * x + m2.d) > 1e-3:
            assert mb.apply(mb.compose(m1, m2), x) == pytest.approx(
                mb.apply(m1, y2), abs=1e-10
            )


# -- trace ----------------------------------------------------------------


def test_trace_examples():
    assert mb.trace(mb.identity()) == pytest.approx(2.0)
    # direct matrix-entry sum oracle: diag(2, 1/2) has trace 2 + 0.5
    assert mb.trace(mb.diagonal(2.0)) == pytest.approx(2.5, rel=1e-14)
    assert mb.trace(mb.MoebiusMap(0.0, 1.0, -1.0, 0.0)) == pytest.approx(0.0, abs=1e-15)


def test_trace_conjugation_invariant():
    rng = np.random.default_rng(4)
    for _ in range(100):
        m, g = random_map(rng), random_map(rng)
        assert mb.trace(mb.conjugate(m, g)) == pytest.approx(mb.trace(m), abs=1e-12 * m.norm() * g.norm() ** 2)


# -- fixed points ---------------------------------------------------------


def test_fixed_points_diagonal():
    lam = 1.5
    m = mb.diagonal(lam)
    pts = mb.fixed_points(m)
    assert len(pts) == 2
    finite = [p for p in pts if not math.isinf(p[0])]
    at_inf = [p for p in pts if math.isinf(p[0])]
    assert finite[0][0] == pytest.approx(0.0, abs=1e-15)
    assert finite[0][1] == pytest.approx(lam * lam, rel=1e-14)
    assert at_inf[0][1] == pytest.approx(1.0 / lam**2, rel=1e-14)


def test_fixed_points_elliptic_empty():
    theta = 0.7
    m = mb.MoebiusMap(math.cos(theta), -math.sin(theta), math.sin(theta), math.cos(theta))
    assert mb.fixed_points(m) == []


def test_fixed_points_identity_raises():
    with pytest.raises(IdentityMap):
        mb.fixed_points(mb.identity())


def test_fixed_points_quadratic_oracle():
    # roots of c x^2 + (d-a) x - b = 0, cross-checked by iterating the map
    m = mb.MoebiusMap(2.0, 1.0, 1.0, 1.0)
    pts = mb.fixed_points(m)
    assert len(pts) == 2
    for x, _ in pts:
        assert m.c * x * x + (m.d - m.a) * x - m.b == pytest.approx(0.0, abs=1e-12)
    # iterate towards the attracting fixed point
    z = 0.5
    for _ in range(200):
        z = mb.apply(m, z)
    attracting = [x for x, der in pts if der < 1.0]
    assert z == pytest.approx(attracting[0], abs=1e-10)


def test_hyperbolic_multiplier_product_is_one():
    rng = np.random.default_rng(5)
    for _ in range(100):
        m = random_hyperbolic(rng)
        pts = mb.fixed_points(m)
        assert len(pts) == 2
        assert pts[0][1] * pts[1][1] == pytest.approx(1.0, abs=1e-10)


# -- derivative -------------------------------------------------------------


def test_derivative_identity_and_diagonal():
    assert mb.derivative(mb.identity(), 0.77) == pytest.approx(1.0)
    lam = math.sqrt(3.0)
    assert mb.derivative(mb.diagonal(lam), 0.0) == pytest.approx(lam * lam, rel=1e-14)


def test_derivative_finite_difference():
    rng = np.random.default_rng(6)
    h = 1e-5
    for _ in range(10):
        m = random_map(rng)
        x = rng.uniform(-1.0, 1.0)
        if abs(m.c * x + m.d) < 0.1:
            continue
        fd = (mb.apply(m, x + h) - mb.apply(m, x - h)) / (2 * h)
        assert mb.derivative(m, x) == pytest.approx(fd, rel=1e-6)


# -- break-size trace -------------------------------------------------------


def test_trace_from_break_size_degenerate():
    with pytest.raises(DegenerateBreak):
        mb.trace_from_break_size(1.0)


def test_trace_from_break_size_oracle():
    # oracle: build diag(lam, 1/lam) with lam = sqrt(c); its derivative at the
    # fixed point 0 is lam^2 = c and its trace is read off the matrix.
    for c in (4.0, 2.0, 0.3, 9.7):
        m = mb.diagonal(math.sqrt(c))
        pts = dict((round(x, 8), der) for x, der in mb.fixed_points(m) if not math.isinf(x))
        assert pts[0.0] == pytest.approx(c, rel=1e-12)
        assert mb.trace_from_break_size(c) == pytest.approx(mb.trace(m), rel=1e-12)
    assert mb.trace_from_break_size(4.0) == pytest.approx(2.5, rel=1e-14)


def test_trace_from_break_size_symmetric():
    for c in (0.2, 3.7, 11.0):
        assert mb.trace_from_break_size(c) == pytest.approx(mb.trace_from_break_size(1.0 / c), rel=1e-12)


def test_trace_from_break_size_validated_on_random_hyperbolics():
    rng = np.random.default_rng(7)
    for _ in range(100):
        m = random_hyperbolic(rng)
        for x, der in mb.fixed_points(m):
            if math.isinf(x):
                continue
            assert mb.trace_from_break_size(der) == pytest.approx(mb.trace(m), abs=1e-9)


# -- affine tests, conjugation scaling --------------------------------------


def test_is_affine():
    assert mb.is_affine(mb.affine(2.0, -0.3))
    assert not mb.is_affine(mb.MoebiusMap(1.0, 0.0, 0.7, 1.0))


def test_scaling_conjugation_linear_decay():
    rng = np.random.default_rng(8)
    m = random_map(rng)
    lams = np.array([1e-1, 1e-2, 1e-3, 1e-4])
    defects = np.array([abs(mb.scaling_conjugation(m, lam).c) for lam in lams])
    slope = np.polyfit(np.log(lams), np.log(defects), 1)[0]
    assert slope == pytest.approx(1.0, abs=0.05)


def test_three_point_interpolation_reproduces():
    rng = np.random.default_rng(9)
    for _ in range(50):
        m = random_map(rng)
        xs = np.sort(rng.uniform(-1.0, 1.0, size=3))
        if np.min(np.diff(xs)) < 0.05 or any(abs(m.c * x + m.d) < 0.2 for x in xs):
            continue
        ys = tuple(mb.apply(m, x) for x in xs)
        if not ys[0] < ys[1] < ys[2]:
            continue
        got = mb.interpolate_three_points(tuple(xs), ys)
        assert np.allclose(got.entries, m.entries, atol=1e-9)
