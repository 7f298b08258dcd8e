"""Calculus on monotone interval maps stored as composition chains.

A branch is a chain of primitive pieces applied left to right.  Three
primitive families exist: restrictions of Moebius maps, affine maps, and
compactly supported C^3 bump perturbations x -> x + eps*s(x).  Derivatives
of a chain are propagated through the pieces with the first- and
second-order composition rules

    (g o f)'  = (g' o f) * f'
    (g o f)'' = (g'' o f) * f'^2 + (g' o f) * f''

so second derivatives of deep chains are exact up to rounding, and a chain
whose pieces are all projective stays exactly projective under composition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import moebius as mb
from .errors import DomainMismatch, NonMonotone, OutOfDomain

SNAP_TOL = 1e-10          # codomain/domain gap tolerance when composing
SUP_GRID = 64             # starting Chebyshev-Lobatto grid for sup norms
VAR_PANELS = 32           # starting panel count (8-point Gauss each) for variation
ADAPT_FACTOR = 4
ADAPT_RTOL = 1e-4
ADAPT_ROUNDS = 3

# max of |d/du (256 u^4 (1-u)^4)| on [0,1]; attained at u = 1/2 +- sqrt(7)/14
BUMP_SLOPE_MAX = 1024.0 * (27.0 / 2744.0) / math.sqrt(7.0)


# -- primitive pieces --------------------------------------------------


@dataclass(frozen=True)
class MoebiusPiece:
    m: mb.MoebiusMap

    def value(self, x):
        m = self.m
        return (m.a * x + m.b) / (m.c * x + m.d)

    value_s = value

    def d1(self, x):
        m = self.m
        den = m.c * x + m.d
        return 1.0 / (den * den)

    d1_s = d1

    def d2(self, x):
        m = self.m
        den = m.c * x + m.d
        return -2.0 * m.c / (den * den * den)

    def inverse_value(self, y):
        m = self.m
        return (m.d * y - m.b) / (-m.c * y + m.a)


@dataclass(frozen=True)
class AffinePiece:
    slope: float
    offset: float = 0.0

    def __post_init__(self):
        if self.slope <= 0.0:
            raise NonMonotone(f"affine piece with slope {self.slope}")

    def value(self, x):
        return self.slope * x + self.offset

    value_s = value

    def d1(self, x):
        return self.slope * np.ones_like(np.asarray(x, dtype=float))

    def d1_s(self, x):
        return self.slope

    def d2(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def inverse_value(self, y):
        return (y - self.offset) / self.slope

    def as_moebius(self):
        return mb.affine(self.slope, self.offset)


def _bump(u):
    w = u * (1.0 - u)
    return 256.0 * w**4


def _bump_d1(u):
    w = u * (1.0 - u)
    return 1024.0 * w**3 * (1.0 - 2.0 * u)


def _bump_d2(u):
    w = u * (1.0 - u)
    return 1024.0 * (3.0 * w**2 * (1.0 - 2.0 * u) ** 2 - 2.0 * w**3)


@dataclass(frozen=True)
class BumpPiece:
    """x -> x + amplitude * s(x) with s a train of C^3 polynomial bumps.

    The base bump 256 u^4 (1-u)^4 vanishes to fourth order at 0 and 1, so
    the piece extends by the identity outside [lo, hi] and stays C^3.
    ``shape`` copies of the bump with alternating signs are packed into the
    support.  Construction enforces sup |amplitude * s'| < 1/2, which keeps
    the piece a diffeomorphism with derivative in (1/2, 3/2).
    """

    amplitude: float
    shape: int = 1
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self):
        if self.shape < 1:
            raise ValueError("shape index must be >= 1")
        if self.hi <= self.lo:
            raise ValueError("empty bump support")
        guard = abs(self.amplitude) * BUMP_SLOPE_MAX * self.shape / (self.hi - self.lo)
        if guard >= 0.5:
            raise NonMonotone(
                f"bump amplitude {self.amplitude} too large for shape {self.shape}: sup|eps*s'|={guard:.3f}"
            )

    def _frame(self, x):
        u = (np.asarray(x, dtype=float) - self.lo) / (self.hi - self.lo)
        inside = (u > 0.0) & (u < 1.0)
        w = np.clip(u, 0.0, 1.0) * self.shape
        j = np.minimum(np.floor(w), self.shape - 1)
        frac = w - j
        sign = np.where(j % 2 == 0, 1.0, -1.0)
        return inside, frac, sign

    def value(self, x):
        inside, frac, sign = self._frame(x)
        s = np.where(inside, sign * _bump(frac), 0.0)
        return np.asarray(x, dtype=float) + self.amplitude * s

    def d1(self, x):
        inside, frac, sign = self._frame(x)
        scale = self.shape / (self.hi - self.lo)
        s1 = np.where(inside, sign * _bump_d1(frac) * scale, 0.0)
        return 1.0 + self.amplitude * s1

    def d2(self, x):
        inside, frac, sign = self._frame(x)
        scale = (self.shape / (self.hi - self.lo)) ** 2
        s2 = np.where(inside, sign * _bump_d2(frac) * scale, 0.0)
        return self.amplitude * s2

    def _frame_s(self, x):
        u = (x - self.lo) / (self.hi - self.lo)
        if not 0.0 < u < 1.0:
            return None
        w = u * self.shape
        j = min(int(w), self.shape - 1)
        return w - j, (1.0 if j % 2 == 0 else -1.0)

    def value_s(self, x):
        fr = self._frame_s(x)
        if fr is None:
            return x
        frac, sign = fr
        return x + self.amplitude * sign * _bump(frac)

    def d1_s(self, x):
        fr = self._frame_s(x)
        if fr is None:
            return 1.0
        frac, sign = fr
        return 1.0 + self.amplitude * sign * _bump_d1(frac) * self.shape / (self.hi - self.lo)


PROJECTIVE = (MoebiusPiece, AffinePiece)


def piece_matrix(piece):
    if isinstance(piece, MoebiusPiece):
        return piece.m
    if isinstance(piece, AffinePiece):
        return piece.as_moebius()
    raise TypeError(f"not a projective piece: {piece!r}")


def merge_pieces(pieces):
    """Multiply adjacent projective pieces into a single piece.

    A run of affine pieces stays affine; a run containing a Moebius piece
    collapses to one Moebius piece (the matrix product in application
    order).  Bump pieces act as barriers.
    """
    out = []
    run = []
    for p in pieces:
        if isinstance(p, PROJECTIVE):
            run.append(p)
        else:
            if run:
                out.append(_collapse(run))
                run = []
            out.append(p)
    if run:
        out.append(_collapse(run))
    return tuple(out)


def _collapse(run):
    if len(run) == 1:
        return run[0]
    if all(isinstance(p, AffinePiece) for p in run):
        slope, offset = 1.0, 0.0
        for p in run:
            slope, offset = p.slope * slope, p.slope * offset + p.offset
        return AffinePiece(slope, offset)
    m = piece_matrix(run[0])
    for p in run[1:]:
        m = mb.compose(piece_matrix(p), m)
    return MoebiusPiece(m)


# -- branch functions ---------------------------------------------------


def _chain_eval(pieces, x, order):
    if np.ndim(x) == 0 and order == 0:
        v = float(x)
        for p in pieces:
            v = p.value_s(v)
        return v
    if np.ndim(x) == 0 and order == 1:
        v, d1 = float(x), 1.0
        for p in pieces:
            d1 *= p.d1_s(v)
            v = p.value_s(v)
        return d1
    v = np.atleast_1d(np.asarray(x, dtype=float))
    scalar = np.ndim(x) == 0
    d1 = np.ones_like(v)
    d2 = np.zeros_like(v)
    for p in pieces:
        if order >= 1:
            p1 = p.d1(v)
            if order >= 2:
                d2 = p.d2(v) * d1 * d1 + d2 * p1
            d1 = d1 * p1
        v = p.value(v)
    res = (v, d1, d2)[order]
    return float(res[0]) if scalar else res


@dataclass(frozen=True)
class BranchFunction:
    """A strictly increasing map given by a chain of primitive pieces."""

    domain: tuple
    pieces: tuple

    def __post_init__(self):
        x0, x1 = self.domain
        if not x0 < x1:
            raise ValueError(f"empty domain {self.domain}")
        object.__setattr__(self, "pieces", tuple(self.pieces))

    # construction helpers

    @staticmethod
    def from_moebius(m, domain):
        return BranchFunction(tuple(domain), (MoebiusPiece(m),))

    @staticmethod
    def from_affine(slope, offset, domain):
        return BranchFunction(tuple(domain), (AffinePiece(slope, offset),))

    @staticmethod
    def identity(domain=(0.0, 1.0)):
        return BranchFunction(tuple(domain), (AffinePiece(1.0, 0.0),))

    # evaluation

    def value(self, x):
        return _chain_eval(self.pieces, x, 0)

    def d1(self, x):
        return _chain_eval(self.pieces, x, 1)

    def d2(self, x):
        return _chain_eval(self.pieces, x, 2)

    def eval(self, x, order=0, check_domain=True):
        if check_domain:
            x0, x1 = self.domain
            tol = 1e-9 * max(1.0, abs(x0), abs(x1))
            if np.any(np.asarray(x) < x0 - tol) or np.any(np.asarray(x) > x1 + tol):
                raise OutOfDomain(f"x={x} outside [{x0}, {x1}]")
        if order not in (0, 1, 2):
            raise ValueError("order must be 0, 1 or 2")
        return _chain_eval(self.pieces, x, order)

    @property
    def codomain(self):
        x0, x1 = self.domain
        return (float(self.value(x0)), float(self.value(x1)))

    def restrict(self, domain):
        return BranchFunction(tuple(domain), self.pieces)

    def simplify(self):
        return BranchFunction(self.domain, merge_pieces(self.pieces))

    def grid(self, n=SUP_GRID):
        """Chebyshev-Lobatto points on the domain, ascending, endpoints included."""
        x0, x1 = self.domain
        k = np.arange(n)
        return 0.5 * (x0 + x1) - 0.5 * (x1 - x0) * np.cos(np.pi * k / (n - 1))

    def check_monotone(self, n=SUP_GRID):
        if np.any(self.d1(self.grid(n)) <= 0.0):
            raise NonMonotone("derivative not positive on inspection grid")
        return self

    def inverse_value(self, y):
        """Solve value(x) = y on the domain (monotone; Newton with bisection guard)."""
        x0, x1 = self.domain
        if len(self.pieces) == 1 and isinstance(self.pieces[0], PROJECTIVE):
            return self.pieces[0].inverse_value(y)
        y0, y1 = self.codomain
        if not (min(y0, y1) - 1e-9 <= y <= max(y0, y1) + 1e-9):
            raise OutOfDomain(f"y={y} outside codomain [{y0}, {y1}]")
        lo, hi = x0, x1
        x = x0 + (x1 - x0) * (y - y0) / (y1 - y0)
        for _ in range(60):
            f = float(self.value(x)) - y
            if f > 0:
                hi = x
            else:
                lo = x
            df = float(self.d1(x))
            step = f / df
            x_new = x - step
            if not (lo <= x_new <= hi):
                x_new = 0.5 * (lo + hi)
            if abs(x_new - x) < 1e-15 * max(1.0, abs(x)):
                return x_new
            x = x_new
        return brentq(lambda t: float(self.value(t)) - y, x0, x1, xtol=1e-15)


def compose_chain(fs):
    """Compose branch functions applied in list order.

    Requires the codomain of each factor to match the next domain within
    SNAP_TOL; the result keeps the first factor's domain and merges
    adjacent projective pieces.
    """
    if not fs:
        raise ValueError("empty chain")
    pieces = list(fs[0].pieces)
    cur = fs[0]
    for nxt in fs[1:]:
        lo_gap = abs(cur.codomain[0] - nxt.domain[0])
        hi_gap = abs(cur.codomain[1] - nxt.domain[1])
        span = nxt.domain[1] - nxt.domain[0]
        if max(lo_gap, hi_gap) > SNAP_TOL * max(1.0, span):
            raise DomainMismatch(
                f"codomain {cur.codomain} does not match domain {nxt.domain}"
            )
        pieces.extend(nxt.pieces)
        cur = nxt
    return BranchFunction(fs[0].domain, merge_pieces(tuple(pieces)))


def normalise(f):
    """Rescale so domain and codomain are [0, 1].

    The affine pre- and post-factors are recorded explicitly at the ends of
    the chain, leaving the interior pieces untouched.
    """
    x0, x1 = f.domain
    y0, y1 = f.codomain
    pre = AffinePiece(x1 - x0, x0)
    post = AffinePiece(1.0 / (y1 - y0), -y0 / (y1 - y0))
    return BranchFunction((0.0, 1.0), (pre,) + f.pieces + (post,))


# -- norms --------------------------------------------------------------


@dataclass(frozen=True)
class IntervalNorms:
    sup_val: float
    sup_d1: float
    sup_d2: float
    inf_d1: float
    log_d1_variation: float


def _adaptive_sup(f, reducers):
    n = SUP_GRID
    prev = None
    for _ in range(ADAPT_ROUNDS + 1):
        xs = f.grid(n)
        v, d1, d2 = (_chain_eval(f.pieces, xs, k) for k in (0, 1, 2))
        cur = tuple(r(v, d1, d2) for r in reducers)
        if prev is not None and all(
            abs(c - p) <= ADAPT_RTOL * max(abs(c), 1e-30) for c, p in zip(cur, prev)
        ):
            return cur
        prev = cur
        n *= ADAPT_FACTOR
    return prev


def _gauss_panels(f, panels):
    nodes, weights = np.polynomial.legendre.leggauss(8)
    x0, x1 = f.domain
    edges = np.linspace(x0, x1, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * np.diff(edges)
    xs = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    ws = (half[:, None] * weights[None, :]).ravel()
    d1 = _chain_eval(f.pieces, xs, 1)
    d2 = _chain_eval(f.pieces, xs, 2)
    return float(np.sum(ws * np.abs(d2 / d1)))


def log_derivative_variation(f):
    """integral over the domain of |d/dx log f'| = |f''/f'|."""
    panels = VAR_PANELS
    prev = _gauss_panels(f, panels)
    for _ in range(ADAPT_ROUNDS):
        panels *= ADAPT_FACTOR
        cur = _gauss_panels(f, panels)
        if abs(cur - prev) <= ADAPT_RTOL * max(abs(cur), 1e-30):
            return cur
        prev = cur
    return prev


def norms(f):
    sup_val, sup_d1, sup_d2, inf_d1 = _adaptive_sup(
        f,
        (
            lambda v, d1, d2: float(np.max(np.abs(v))),
            lambda v, d1, d2: float(np.max(d1)),
            lambda v, d1, d2: float(np.max(np.abs(d2))),
            lambda v, d1, d2: float(np.min(d1)),
        ),
    )
    if inf_d1 <= 0.0:
        raise NonMonotone("derivative not positive on norm grid")
    return IntervalNorms(sup_val, sup_d1, sup_d2, inf_d1, log_derivative_variation(f))


# -- cross ratios --------------------------------------------------------


def cross_ratio(quad):
    a, b, c, d = quad
    return ((c - a) * (d - b)) / ((c - b) * (d - a))


def cross_ratio_distortion(f, quad):
    """cr(f(quad)) / cr(quad) for a strictly increasing quadruple in the domain."""
    a, b, c, d = quad
    if not a < b < c < d:
        raise ValueError("quadruple must be strictly increasing")
    x0, x1 = f.domain
    tol = 1e-9 * max(1.0, abs(x0), abs(x1))
    if a < x0 - tol or d > x1 + tol:
        raise OutOfDomain(f"quadruple {quad} outside [{x0}, {x1}]")
    image = tuple(float(f.value(t)) for t in quad)
    return cross_ratio(image) / cross_ratio(quad)
