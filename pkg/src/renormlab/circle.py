"""Circle diffeomorphisms with break points.

A map is stored through its lift: one strictly increasing branch per arc
between consecutive break points, with matching values at the breaks and
total winding one.  Break sizes are the jumps of the derivative.  Cutting
the circle at a break turns the map into a generalised interval exchange
with circular permutation, which drives rotation numbers, digit sequences
and renormalisation towers.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import giet as ge
from .branches import (
    AffinePiece,
    BranchFunction,
    BumpPiece,
    MoebiusPiece,
    log_derivative_variation,
    merge_pieces,
)
from .errors import (
    DiscontinuousAtBreak,
    NotDisjoint,
    RationalSuspected,
    SizeOne,
)
from .moebius import MoebiusMap

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
SILVER = math.sqrt(2.0) - 1.0
CONTINUITY_TOL = 1e-10


@dataclass(frozen=True)
class CircleDiffeoWithBreaks:
    """Lift of a circle homeomorphism, smooth between declared breaks.

    breaks: sorted points p_1 = 0 < ... < p_d < 1 (empty for a smooth map);
    branches: one BranchFunction per arc [p_i, p_{i+1}] of the lift, the
    last arc ending at 1 with value F(0) + 1.
    """

    breaks: tuple
    branches: tuple

    def __post_init__(self):
        object.__setattr__(self, "breaks", tuple(float(p) for p in self.breaks))
        object.__setattr__(self, "branches", tuple(self.branches))
        d = len(self.breaks)
        if d:
            if self.breaks[0] != 0.0:
                raise ValueError("the first break must sit at 0")
            if any(not 0.0 <= p < 1.0 for p in self.breaks):
                raise ValueError("breaks must lie in [0,1)")
            if list(self.breaks) != sorted(set(self.breaks)):
                raise ValueError("breaks must be strictly increasing")
        if len(self.branches) != max(d, 1):
            raise ValueError("need one branch per arc")
        edges = self.arc_edges
        for f, lo, hi in zip(self.branches, edges[:-1], edges[1:]):
            if abs(f.domain[0] - lo) > 1e-12 or abs(f.domain[1] - hi) > 1e-12:
                raise ValueError(f"branch domain {f.domain} != arc [{lo},{hi}]")
        for i in range(len(self.branches) - 1):
            left = self.branches[i].codomain[1]
            right = self.branches[i + 1].codomain[0]
            if abs(left - right) > CONTINUITY_TOL:
                raise DiscontinuousAtBreak(
                    f"lift jumps by {right - left} at break {edges[i + 1]}"
                )
        winding = self.branches[-1].codomain[1] - self.branches[0].codomain[0]
        if abs(winding - 1.0) > CONTINUITY_TOL:
            raise ValueError(f"total winding {winding} != 1")

    @property
    def arc_edges(self):
        return self.breaks + (1.0,) if self.breaks else (0.0, 1.0)

    @property
    def d(self):
        return len(self.breaks)

    def validate_sizes(self, allow_unit_sizes=False):
        if not allow_unit_sizes:
            for p, c in zip(self.breaks, self.break_sizes()):
                if abs(c - 1.0) < 1e-9:
                    raise SizeOne(f"break at {p} has size {c}")
        return self

    def break_sizes(self):
        """c_i = T'(p_i+) / T'(p_i-), with the left derivative read from the lift."""
        if not self.breaks:
            return ()
        sizes = []
        for i, p in enumerate(self.breaks):
            right = float(self.branches[i].d1(p))
            left_branch = self.branches[i - 1] if i else self.branches[-1]
            left = float(left_branch.d1(left_branch.domain[1]))
            sizes.append(right / left)
        return tuple(sizes)

    # -- evaluation ------------------------------------------------------

    def _arc_index(self, x):
        if not self.breaks:
            return 0
        return max(0, bisect.bisect_right(self.breaks, x) - 1)

    def lift(self, x):
        """The lift value F(x) for x in [0, 1]."""
        x = float(x)
        if x >= 1.0:
            return float(self.branches[-1].value(1.0)) + (x - 1.0 if x > 1.0 else 0.0)
        return float(self.branches[self._arc_index(x)].value(x))

    def apply(self, x):
        """The circle map, coordinates in [0, 1)."""
        if np.ndim(x) == 0:
            return self.lift(float(x) % 1.0) % 1.0
        x = np.asarray(x, dtype=float) % 1.0
        out = np.empty_like(x)
        if not self.breaks:
            out[:] = self.branches[0].value(x)
        else:
            idx = np.clip(np.searchsorted(self.breaks, x, side="right") - 1, 0, self.d - 1)
            for i, f in enumerate(self.branches):
                mask = idx == i
                if np.any(mask):
                    out[mask] = f.value(x[mask])
        return out % 1.0

    def apply_inverse(self, y):
        y = float(y) % 1.0
        for f in self.branches:
            y0, y1 = f.codomain
            for shift in (0.0, 1.0, -1.0):
                z = y + shift
                if y0 - 1e-12 <= z <= y1 + 1e-12:
                    return float(f.inverse_value(min(max(z, y0), y1))) % 1.0
        raise ValueError(f"{y} not in any branch image")

    def derivative(self, x):
        """One-sided (right) derivative of the circle map."""
        if np.ndim(x) == 0:
            x = float(x) % 1.0
            return float(self.branches[self._arc_index(x)].d1(x))
        x = np.asarray(x, dtype=float) % 1.0
        out = np.empty_like(x)
        if not self.breaks:
            out[:] = self.branches[0].d1(x)
        else:
            idx = np.clip(np.searchsorted(self.breaks, x, side="right") - 1, 0, self.d - 1)
            for i, f in enumerate(self.branches):
                mask = idx == i
                if np.any(mask):
                    out[mask] = f.d1(x[mask])
        return out

    def orbit(self, x0, n):
        """x0, T(x0), ..., T^(n-1)(x0)."""
        out = np.empty(n)
        x = float(x0) % 1.0
        for k in range(n):
            out[k] = x
            x = self.apply(x)
        return out


# -- constructors ---------------------------------------------------------


def rigid_rotation(alpha):
    f = BranchFunction.from_affine(1.0, alpha, (0.0, 1.0))
    return CircleDiffeoWithBreaks((), (f,))


def _moebius_arc(x0, x1, y0, y1, d1_left):
    """The Moebius branch [x0,x1] -> [y0,y1] with given left-end derivative."""
    span_x, span_y = x1 - x0, y1 - y0
    delta = d1_left * span_x / span_y  # left derivative of the [0,1] core map
    # core u -> delta u / (1 + (delta - 1) u) fixes 0 and 1 with core'(0) = delta
    core = MoebiusMap(delta, 0.0, delta - 1.0, 1.0)
    pre = AffinePiece(1.0 / span_x, -x0 / span_x)
    post = AffinePiece(span_y, y0)
    pieces = merge_pieces((pre, MoebiusPiece(core), post))
    return BranchFunction((x0, x1), pieces)


def _alternating_product(sizes, slopes):
    """A_i with delta_i = A_i * delta_0^((-1)^i); returns the list A_0..A_{d-1}."""
    d = len(sizes)
    acc = [1.0]
    for i in range(1, d):
        acc.append(sizes[i] * slopes[i - 1] ** 2 / acc[i - 1])
    return acc


def moebius_arc_map(breaks, images, sizes, d1_seed=1.0):
    """Piecewise-Moebius circle map with prescribed breaks and sizes.

    images[i] is the circle position of T(p_i); the one-turn lift is
    images + [images[0] + 1].  Derivative jumps at the breaks realise the
    requested sizes.  Going around the circle leaves one degree of freedom:
    for an odd number of breaks the left-end derivative of the first branch
    is forced (d1_seed is ignored) while all images are free; for an even
    number the last image is adjusted to close the derivative recursion and
    d1_seed scales the first branch derivative.
    """
    breaks = tuple(float(p) for p in breaks)
    d = len(breaks)
    if d == 0:
        raise ValueError("need at least one break; use rigid_rotation otherwise")
    images = [float(q) for q in images]
    if len(images) != d:
        raise ValueError("one image per break")
    sizes = [float(c) for c in sizes]
    if len(sizes) != d:
        raise ValueError("one size per break")
    if any(c <= 0.0 for c in sizes):
        raise ValueError("sizes must be positive")
    if any(abs(c - 1.0) < 1e-9 for c in sizes):
        raise SizeOne("requested break sizes contain 1")
    edges = list(breaks) + [1.0]

    def slope_list(imgs):
        lifted = list(imgs) + [imgs[0] + 1.0]
        if any(hi <= lo for lo, hi in zip(lifted[:-1], lifted[1:])):
            return None
        return [
            (lifted[i + 1] - lifted[i]) / (edges[i + 1] - edges[i]) for i in range(d)
        ]

    slopes = slope_list(images)
    if slopes is None:
        raise ValueError("break images must be increasing over one turn")

    if d % 2 == 0:
        # closure constraint: sizes[0] * slopes[-1]^2 == A_{d-1}; move the last image
        def residual(q_last):
            s = slope_list(images[:-1] + [q_last])
            if s is None:
                return math.nan
            acc = _alternating_product(sizes, s)
            return math.log(sizes[0] * s[-1] ** 2 / acc[-1])

        lo = (images[-2] if d > 1 else images[0]) + 1e-9
        hi = images[0] + 1.0 - 1e-9
        q_last = brentq(residual, lo + 1e-6 * (hi - lo), hi - 1e-6 * (hi - lo), xtol=1e-14)
        images[-1] = q_last
        slopes = slope_list(images)
        delta0 = float(d1_seed) * slopes[0]
    else:
        acc = _alternating_product(sizes, slopes)
        delta0 = math.sqrt(sizes[0] * slopes[-1] ** 2 / acc[-1])
    deltas = [delta0]
    for i in range(1, d):
        deltas.append(sizes[i] * slopes[i - 1] ** 2 / deltas[i - 1])
    lifted = images + [images[0] + 1.0]
    branches = tuple(
        _moebius_arc(edges[i], edges[i + 1], lifted[i], lifted[i + 1], deltas[i])
        for i in range(d)
    )
    T = CircleDiffeoWithBreaks(breaks, branches)
    got = T.break_sizes()
    if any(abs(g - c) > 1e-8 * max(1.0, c) for g, c in zip(got, sizes)):
        raise AssertionError(f"size solve failed: requested {sizes}, got {got}")
    return T


def one_break_family(size, beta):
    """Break at 0 with the given size; beta = T(0) steers the rotation number."""
    return moebius_arc_map((0.0,), (beta,), (size,))


def with_bump(T, arc_index, amplitude, shape=1):
    """Insert a compactly supported smooth perturbation into one arc.

    The bump vanishes to third order at the arc ends, so break positions,
    break values and break sizes are unchanged.
    """
    edges = T.arc_edges
    lo, hi = edges[arc_index], edges[arc_index + 1]
    bump = BumpPiece(amplitude, shape=shape, lo=lo, hi=hi)
    f = T.branches[arc_index]
    branches = list(T.branches)
    branches[arc_index] = BranchFunction(f.domain, (bump,) + f.pieces)
    return CircleDiffeoWithBreaks(T.breaks, tuple(branches))


def tune_to_rotation_number(builder, target, lo, hi, tol=1e-13, max_iter=200):
    """Bisection on a one-parameter family until the rotation number hits target.

    builder(s) must return a circle map whose rotation number is monotone
    non-decreasing in s.  Comparison uses continued-fraction digits, so the
    resolution improves automatically as the bisection converges.
    """
    t_digits = _digits_of_value(target, 48)

    def cmp(s):
        T = builder(s)
        digits, status = ge.mine_digits(to_giet(T), 40)
        if len(digits) < 2:
            rho = _birkhoff_estimate(T)
            return -1 if rho < target else 1
        return _compare_cf(digits, t_digits)

    a, b = lo, hi
    for _ in range(max_iter):
        mid = 0.5 * (a + b)
        side = cmp(mid)
        if side == 0 or b - a < tol:
            return builder(mid)
        if side < 0:
            a = mid
        else:
            b = mid
    return builder(0.5 * (a + b))


def _digits_of_value(x, n):
    digits = []
    y = x
    for _ in range(n):
        if y < 1e-12:
            break
        a = int(1.0 / y)
        digits.append(a)
        y = 1.0 / y - a
    return digits


def _compare_cf(da, db):
    """Compare values of two continued-fraction digit sequences."""
    for k in range(min(len(da), len(db))):
        if da[k] != db[k]:
            less = da[k] < db[k]
            # larger digit at even index (0-based) means smaller value
            return (1 if less else -1) * (1 if k % 2 == 0 else -1)
    if len(da) == len(db):
        return 0
    longer_is_a = len(da) > len(db)
    k = min(len(da), len(db))
    return (1 if longer_is_a else -1) * (-1 if k % 2 == 0 else 1)


def _birkhoff_estimate(T, n=4096):
    x, total = 0.0, 0.0
    for _ in range(n):
        y = T.lift(x)
        total += y - x
        x = y % 1.0
    return total / n


# -- cutting into a GIET -----------------------------------------------------


def to_giet(T, cut_break_index=0):
    """Cut the circle at a break and read the map as an interval exchange.

    Interval coordinate xi = x - p0 mod 1.  Top singularities are the
    remaining breaks together with the preimage of the cut point; branches
    are restrictions of the lift with explicit affine shifts, so piecewise
    Moebius maps stay piecewise Moebius.
    """
    p0 = T.breaks[cut_break_index % T.d] if T.d else 0.0
    pre_img = T.apply_inverse(p0)
    points = set()
    for p in T.breaks:
        xi = (p - p0) % 1.0
        if xi > 1e-13:
            points.add(round(xi, 15))
    points.add(round((pre_img - p0) % 1.0, 15))
    sings = sorted(points)
    edges = [0.0] + sings + [1.0]
    m = len(edges) - 1
    letters = tuple("ABCDEFGHIJKLMNOP"[:m])
    image_left = {}
    branches = {}
    for i in range(m):
        lo, hi = edges[i], edges[i + 1]
        pieces, y_lo, y_hi = _lift_pieces(T, p0 + lo, p0 + hi)
        y_lo -= p0
        y_hi -= p0
        wrap = math.floor(y_lo + 1e-9)
        chain = (AffinePiece(1.0, p0),) + tuple(pieces) + (
            AffinePiece(1.0, -p0 - wrap),
        )
        branches[letters[i]] = BranchFunction((lo, hi), merge_pieces(chain))
        image_left[letters[i]] = y_lo - wrap
    order = tuple(sorted(letters, key=lambda L: image_left[L]))
    perm = ge.MarkedPermutation(letters, order)
    bottom_edges = sorted(image_left.values()) + [1.0]
    return ge.Giet(perm, tuple(sings), tuple(bottom_edges[1:-1]), branches)


def _lift_pieces(T, x_lo, x_hi):
    """Chain pieces of the extended lift on [x_lo, x_hi] (no break inside)."""
    k = 1 if x_lo >= 1.0 - 1e-12 else 0
    lo, hi = x_lo - k, x_hi - k
    i = T._arc_index(min(max(lo, 0.0), 1.0 - 1e-15))
    f = T.branches[i]
    if lo < f.domain[0] - 1e-9 or hi > f.domain[1] + 1e-9:
        raise ValueError(f"[{x_lo},{x_hi}] crosses an arc boundary")
    pieces = []
    if k:
        pieces.append(AffinePiece(1.0, -float(k)))
    pieces.extend(f.pieces)
    if k:
        pieces.append(AffinePiece(1.0, float(k)))
    y_lo = float(f.value(min(max(lo, f.domain[0]), f.domain[1]))) + k
    y_hi = float(f.value(min(max(hi, f.domain[0]), f.domain[1]))) + k
    return pieces, y_lo, y_hi


def glued_circle_map(giet, p0=0.0):
    """The circle map obtained by gluing the interval ends back together."""

    def T(x):
        xi = (float(x) - p0) % 1.0
        return (giet.apply(xi) + p0) % 1.0

    return T


# -- rotation number ----------------------------------------------------------


@dataclass(frozen=True)
class RotationNumberEstimate:
    value: float
    method: str
    gap: float
    digits: tuple


def rotation_number(T, max_digits=40, budget=ge.DEFAULT_BUDGET):
    """Rotation number through induction digits, with a Birkhoff fallback.

    Digit sequences give certified convergents with error below 1/q_n^2.
    A singularity collision while the convergents are still coarse means a
    break orbit hit a singularity, so the rotation number is suspected
    rational and RationalSuspected is raised; a collision near the
    floating-point resolution floor just ends the digit supply.  If the
    digit grouping stalls on its step budget instead, the estimate falls
    back to averaging the lift along an orbit.
    """
    digits, status = ge.mine_digits(to_giet(T), max_digits, budget)
    q = ge.convergents(digits)[-1][1] if digits else 1
    if status == "collision" and q < 100_000:
        raise RationalSuspected(
            f"induction terminated after digits {digits}; denominator {q}"
        )
    if len(digits) >= 2 and status in ("ok", "floor", "collision"):
        (p1, q1), (p2, q2) = ge.convergents(digits)[-2:]
        return RotationNumberEstimate(
            p2 / q2, "digits", abs(p2 / q2 - p1 / q1), tuple(digits)
        )
    n = 1 << 14
    return RotationNumberEstimate(_birkhoff_estimate(T, n), "birkhoff", 1.0 / n, tuple(digits))


@dataclass(frozen=True)
class DecoratedRotationNumber:
    rho: float
    marks: tuple

    def __post_init__(self):
        if any(not 0.0 <= mk < 1.0 for mk in self.marks):
            raise ValueError("marks must lie in [0,1)")
        if list(self.marks) != sorted(self.marks):
            raise ValueError("marks must increase")


def decorated_rotation_number(T, n_orbit=200_000):
    """Rotation number plus the limiting visit frequencies of the break orbit.

    The conjugacy to the rigid rotation normalised by p_1 -> 0 sends p_i to
    the orbit frequency of [p_1, p_i), by unique ergodicity.
    """
    est = rotation_number(T)
    marks = ()
    if T.d >= 2:
        targets = np.asarray(T.breaks[1:])
        counts = np.zeros(len(targets))
        x = 0.0
        for _ in range(n_orbit):
            counts += x < targets
            x = T.apply(x)
        marks = tuple(counts / n_orbit)
    return DecoratedRotationNumber(est.value, marks)


# -- observables and ergodic-sum bounds ----------------------------------------


class LogDerivativeObservable:
    """log T' as a bounded-variation observable on the circle."""

    def __init__(self, T):
        self.T = T

    def values(self, x):
        return np.log(self.T.derivative(x))

    def total_variation(self):
        var = sum(log_derivative_variation(f) for f in self.T.branches)
        for c in self.T.break_sizes():
            var += abs(math.log(c))
        if not self.T.breaks:
            f = self.T.branches[0]
            var += abs(math.log(float(f.d1(1.0)) / float(f.d1(0.0))))
        return float(var)


@dataclass(frozen=True)
class ErgodicSumReport:
    n_index: int
    q_n: int
    max_abs_sum: float
    variation: float
    mean_residual: float
    bound: float
    passed: bool


def _orbit_mean(T, f, n_samples, batch=8, phase=0.0321):
    x = (np.linspace(0.0, 1.0, batch, endpoint=False) + phase) % 1.0
    per = max(1, n_samples // batch)
    total = 0.0
    for _ in range(per):
        total += float(np.sum(f.values(x)))
        x = T.apply(x)
    return total / (per * batch)


def denjoy_koksma_check(T, f=None, n_index=3, n_points=1000, mean_orbit=1_000_000, seed=0):
    """Birkhoff sums of a centered observable over q_n steps, against Var(f).

    The observable mean is removed with a Birkhoff estimate along long
    orbits; the residual (difference of two independent estimates) is
    folded into the bound as q_n * residual.
    """
    if f is None:
        f = LogDerivativeObservable(T)
    digits = ge.cf_digits(to_giet(T), n_index)
    q_n = ge.convergents(digits)[-1][1]
    mean = _orbit_mean(T, f, mean_orbit)
    residual = abs(mean - _orbit_mean(T, f, mean_orbit // 4, phase=0.567))
    rng = np.random.default_rng(seed)
    cur = rng.uniform(0.0, 1.0, size=n_points)
    sums = np.zeros(n_points)
    for _ in range(q_n):
        sums += f.values(cur) - mean
        cur = T.apply(cur)
    max_abs = float(np.max(np.abs(sums)))
    var = float(f.total_variation())
    bound = var + q_n * residual
    return ErgodicSumReport(
        n_index, q_n, max_abs, var, residual, bound, max_abs <= bound + 1e-12
    )


@dataclass(frozen=True)
class DistortionReport:
    n: int
    max_ratio: float
    bound: float
    slack: float
    passed: bool


def total_log_derivative_variation(T):
    """Integral over the circle of |d/dx log T'| (arc parts only, no jumps)."""
    return float(sum(log_derivative_variation(f) for f in T.branches))


def _arcs_overlap(a, b):
    s1, l1 = a
    s2, l2 = b
    return ((s2 - s1) % 1.0) < l1 - 1e-15 or ((s1 - s2) % 1.0) < l2 - 1e-15


def distortion_bound_check(T, interval, n, samples=16):
    """Distortion of T^n on an interval against exp of the derivative variation.

    Requires interval, T(interval), ..., T^n(interval) pairwise disjoint
    and free of break points; raises NotDisjoint otherwise.
    """
    lo, hi = float(interval[0]), float(interval[1])
    arcs = []
    start, length = lo % 1.0, hi - lo
    for _ in range(n + 1):
        arcs.append((start, length))
        end = T.apply((start + length) % 1.0)
        start = T.apply(start)
        length = (end - start) % 1.0
    for s, l in arcs:
        for p in T.breaks:
            if ((p - s) % 1.0) < l - 1e-13 and ((p - s) % 1.0) > 1e-13:
                raise NotDisjoint(f"break {p} inside orbit arc ({s},{s + l})")
    for i in range(len(arcs)):
        for j in range(i + 1, len(arcs)):
            if _arcs_overlap(arcs[i], arcs[j]):
                raise NotDisjoint(f"orbit arcs {i} and {j} overlap")
    xs = (lo + (hi - lo) * np.linspace(1e-6, 1.0 - 1e-6, samples)) % 1.0
    logd = np.zeros(samples)
    cur = xs.copy()
    for _ in range(n):
        logd += np.log(T.derivative(cur))
        cur = T.apply(cur)
    ratio = float(np.exp(np.max(logd) - np.min(logd)))
    bound = float(math.exp(total_log_derivative_variation(T)))
    return DistortionReport(n, ratio, bound, bound - ratio, ratio <= bound * (1.0 + 1e-9))
