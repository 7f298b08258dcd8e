"""Arithmetic in PSL(2,R).

A Moebius map is stored as a real 2x2 matrix with determinant 1, acting on
the extended real line by x -> (a x + b) / (c x + d).  The representative is
canonicalised so that the first nonzero entry among (a, b, c) is positive,
which fixes the sign ambiguity of PSL(2,R) and makes comparison stable.

All values are immutable and every operation is pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import DegenerateBreak, IdentityMap, PoleAt

DET_TOL = 1e-12
CLASSIFY_TOL = 1e-10
INF = math.inf


class MoebiusClass(Enum):
    HYPERBOLIC = "hyperbolic"
    PARABOLIC = "parabolic"
    ELLIPTIC = "elliptic"
    IDENTITY = "identity"


def _canonical(a, b, c, d):
    det = a * d - b * c
    if det <= 0.0:
        raise ValueError(f"matrix is orientation-reversing or singular (det={det})")
    s = 1.0 / math.sqrt(det)
    a, b, c, d = a * s, b * s, c * s, d * s
    scale = max(abs(a), abs(b), abs(c), abs(d))
    for entry in (a, b, c):
        if abs(entry) > 1e-14 * scale:
            if entry < 0.0:
                a, b, c, d = -a, -b, -c, -d
            break
    return a, b, c, d


@dataclass(frozen=True)
class MoebiusMap:
    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        a, b, c, d = _canonical(self.a, self.b, self.c, self.d)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    # -- basic queries ------------------------------------------------

    @property
    def entries(self):
        return (self.a, self.b, self.c, self.d)

    def norm(self):
        return math.sqrt(self.a**2 + self.b**2 + self.c**2 + self.d**2)

    def is_identity(self, tol=DET_TOL):
        return abs(self.b) < tol and abs(self.c) < tol and abs(self.a - 1.0) < tol

    def __call__(self, x):
        return apply(self, x)

    def __repr__(self):
        return f"MoebiusMap({self.a:.12g}, {self.b:.12g}, {self.c:.12g}, {self.d:.12g})"


def identity():
    return MoebiusMap(1.0, 0.0, 0.0, 1.0)


def affine(slope, offset=0.0):
    """The map x -> slope*x + offset as an element of PSL(2,R); slope > 0."""
    if slope <= 0.0:
        raise ValueError("affine slope must be positive")
    r = math.sqrt(slope)
    return MoebiusMap(r, offset / r, 0.0, 1.0 / r)


def diagonal(lam):
    """diag(lam, 1/lam), acting as x -> lam^2 x."""
    return MoebiusMap(lam, 0.0, 0.0, 1.0 / lam)


def inversion():
    """x -> -1/x (the rotation by pi/2 representative)."""
    return MoebiusMap(0.0, -1.0, 1.0, 0.0)


# -- operations -------------------------------------------------------


def apply(m, x):
    """Act on the extended real line; total, with infinity handled projectively."""
    if math.isinf(x):
        if m.c == 0.0:
            return INF
        return m.a / m.c
    den = m.c * x + m.d
    if den == 0.0:
        return INF
    return (m.a * x + m.b) / den


def compose(m1, m2):
    """Matrix product m1 * m2; as maps, m2 acts first."""
    return MoebiusMap(
        m1.a * m2.a + m1.b * m2.c,
        m1.a * m2.b + m1.b * m2.d,
        m1.c * m2.a + m1.d * m2.c,
        m1.c * m2.b + m1.d * m2.d,
    )


def inverse(m):
    return MoebiusMap(m.d, -m.b, -m.c, m.a)


def conjugate(m, g):
    """g m g^-1."""
    return compose(compose(g, m), inverse(g))


def trace(m):
    """Trace in PSL(2,R): absolute value of the matrix trace of the det-1 representative."""
    return abs(m.a + m.d)


def classify(m, tol=CLASSIFY_TOL):
    t = trace(m)
    if abs(t - 2.0) <= tol:
        if m.is_identity():
            return MoebiusClass.IDENTITY
        return MoebiusClass.PARABOLIC
    if t > 2.0:
        return MoebiusClass.HYPERBOLIC
    return MoebiusClass.ELLIPTIC


def derivative(m, x):
    """m'(x) = 1/(cx+d)^2 for the det-1 representative."""
    den = m.c * x + m.d
    if den == 0.0:
        raise PoleAt(f"derivative at pole x={x}")
    return 1.0 / (den * den)


def multiplier_at_infinity(m):
    """Derivative of the action at the fixed point infinity (requires c = 0)."""
    return m.d * m.d


def fixed_points(m, tol=1e-14):
    """Real fixed points with their derivatives.

    Returns a list of (point, derivative) pairs; the point may be inf, in
    which case the derivative is the multiplier in the chart 1/x.  Raises
    IdentityMap when every point is fixed.
    """
    if m.is_identity():
        raise IdentityMap("identity fixes every point")
    scale = m.norm()
    if abs(m.c) <= tol * scale:
        out = []
        if abs(m.d - m.a) > tol * scale:
            x = m.b / (m.d - m.a)
            out.append((x, derivative(m, x)))
        out.append((INF, multiplier_at_infinity(m)))
        return out
    disc = (m.d - m.a) ** 2 + 4.0 * m.b * m.c  # = trace^2 - 4
    if disc < -(tol * scale) ** 2:
        return []
    if disc <= (tol * scale) ** 2:
        x = (m.a - m.d) / (2.0 * m.c)
        return [(x, derivative(m, x))]
    r = math.sqrt(disc)
    xs = sorted([((m.a - m.d) - r) / (2.0 * m.c), ((m.a - m.d) + r) / (2.0 * m.c)])
    return [(x, derivative(m, x)) for x in xs]


def is_affine(m, tol=1e-9):
    """True when the lower-left entry vanishes relative to the matrix norm."""
    return abs(m.c) <= tol * m.norm()


def affine_defect(m):
    """Distance of the lower-left entry to 0, normalised by the matrix norm."""
    return abs(m.c) / m.norm()


def trace_from_break_size(c):
    """Trace of a hyperbolic map whose derivative at a fixed point equals c.

    A hyperbolic element is conjugate to diag(lam, 1/lam) acting as
    t -> lam^2 t, so the fixed-point derivative c equals lam^2 and the trace
    is lam + 1/lam = sqrt(c) + 1/sqrt(c).
    """
    if c <= 0.0:
        raise ValueError("break size must be positive")
    if abs(c - 1.0) < 1e-12:
        raise DegenerateBreak("break size 1 is excluded")
    r = math.sqrt(c)
    return r + 1.0 / r


def scaling_conjugation(m, lam):
    """Conjugate by the dilation x -> x/lam, the rescale of [0, lam] onto [0, 1].

    The lower-left entry picks up a factor lam, so for small lam the result
    approaches the affine subgroup at speed proportional to lam.
    """
    g = affine(1.0 / lam)
    return conjugate(m, g)


def interpolate_three_points(xs, ys):
    """The unique Moebius map sending xs[i] -> ys[i] for three distinct points.

    Points may include inf.  Built from the standard maps onto (0, 1, inf).
    """
    return compose(_inverse_to_std(ys), _to_std(xs))


def _to_std(triple):
    """The map sending (p, q, r) -> (0, 1, inf); needs cyclic orientation with det > 0."""
    p, q, r = triple
    if math.isinf(p):
        mat = (0.0, -(q - r), -1.0, r)
    elif math.isinf(q):
        mat = (1.0, -p, 1.0, -r)
    elif math.isinf(r):
        mat = (-1.0, p, 0.0, -(q - p))
    else:
        mat = (q - r, -p * (q - r), q - p, -r * (q - p))
    a, b, c, d = mat
    det = a * d - b * c
    if det == 0.0:
        raise ValueError("degenerate triple")
    if det < 0.0:
        raise ValueError("triple orientation incompatible with PSL(2,R)")
    return MoebiusMap(a, b, c, d)


def _inverse_to_std(triple):
    return inverse(_to_std(triple))
