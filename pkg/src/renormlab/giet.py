"""Generalised interval exchange transformations and Rauzy induction.

A GIET exchanges m = d+1 intervals of [0,1) by strictly increasing branch
maps, one per letter of a marked permutation.  The elementary Rauzy step is
the first-return map to the interval obtained by cutting at the larger of
the two rightmost singularities, affinely rescaled back to the unit
interval.  Grouping elementary steps by continued-fraction digit blocks of
the underlying circle dynamics gives the renormalisation operator; each
application consumes two digit blocks, so towers contract like the square
of the rotation-number convergents.
"""

from __future__ import annotations

import bisect
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .branches import AffinePiece, BranchFunction, merge_pieces
from .errors import (
    NonTerminating,
    NotCircular,
    PrecisionFloor,
    SingularityCollision,
)

COLLISION_TOL = 1e-12
SNAP_REL = 1e-8
DEFAULT_BUDGET = 1_000_000
FLOOR = 1e3 * np.finfo(float).eps


# -- marked permutations -------------------------------------------------


@dataclass(frozen=True)
class MarkedPermutation:
    top: tuple
    bottom: tuple

    def __post_init__(self):
        object.__setattr__(self, "top", tuple(self.top))
        object.__setattr__(self, "bottom", tuple(self.bottom))
        if sorted(self.top) != sorted(self.bottom):
            raise ValueError("top and bottom must order the same alphabet")
        if len(set(self.top)) != len(self.top):
            raise ValueError("letters must be distinct")

    @property
    def letters(self):
        return self.top

    def __len__(self):
        return len(self.top)

    def top_index(self, letter):
        return self.top.index(letter)

    def bottom_index(self, letter):
        return self.bottom.index(letter)

    def move(self, side):
        """Combinatorial Rauzy arrow; depends only on the permutation and the side."""
        top, bottom = list(self.top), list(self.bottom)
        if top[-1] == bottom[-1]:
            raise SingularityCollision("last letters agree; no Rauzy arrow", step=0)
        if side == "top":
            loser, winner = top[-1], bottom[-1]
            top.pop()
            top.insert(top.index(winner) + 1, loser)
        elif side == "bottom":
            loser, winner = bottom[-1], top[-1]
            bottom.pop()
            bottom.insert(bottom.index(winner) + 1, loser)
        else:
            raise ValueError(f"side must be 'top' or 'bottom', got {side!r}")
        return MarkedPermutation(tuple(top), tuple(bottom))

    def winner(self, side):
        return self.bottom[-1] if side == "top" else self.top[-1]


def circular_shift(perm):
    """Rotation amount r with bottom == top[r:] + top[:r], or None."""
    m = len(perm)
    for r in range(1, m):
        if perm.bottom == perm.top[r:] + perm.top[:r]:
            return r
    return None


def is_circular(perm):
    """True when the permutation is the rotation pattern cut from a circle map."""
    return circular_shift(perm) is not None


def circular_permutation(m, r=None, letters=None):
    """The m-letter circular permutation with rotation amount r (default m-1)."""
    letters = tuple(letters) if letters else tuple("ABCDEFGHIJKLMNOP"[:m])
    if r is None:
        r = m - 1
    if not 1 <= r <= m - 1:
        raise ValueError("rotation amount must be in 1..m-1")
    return MarkedPermutation(letters, letters[r:] + letters[:r])


# -- GIETs -----------------------------------------------------------------


@dataclass(frozen=True)
class RauzyMove:
    winner: str
    side: str


@dataclass(frozen=True)
class RauzyPath:
    start: MarkedPermutation
    moves: tuple
    end: MarkedPermutation = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "moves", tuple(self.moves))
        perm = self.start
        for mv in self.moves:
            if perm.winner(mv.side) != mv.winner:
                raise ValueError(f"move {mv} not admissible at {perm}")
            perm = perm.move(mv.side)
        object.__setattr__(self, "end", perm)

    def __len__(self):
        return len(self.moves)


@dataclass(frozen=True)
class Giet:
    perm: MarkedPermutation
    top_sing: tuple
    bottom_sing: tuple
    branches: dict
    domain: tuple = (0.0, 1.0)
    check: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "top_sing", tuple(float(u) for u in self.top_sing))
        object.__setattr__(self, "bottom_sing", tuple(float(v) for v in self.bottom_sing))
        m = len(self.perm)
        if len(self.top_sing) != m - 1 or len(self.bottom_sing) != m - 1:
            raise ValueError("need m-1 interior singularities on each side")
        for edges in (self.top_edges, self.bottom_edges):
            if np.any(np.diff(edges) <= 0):
                raise ValueError(f"singularities not increasing: {edges}")
        if not self.check:
            return
        a, b = self.domain
        tol = 1e-9 * max(1.0, b - a)
        for i, letter in enumerate(self.perm.top):
            f = self.branches[letter]
            lo, hi = self.top_edges[i], self.top_edges[i + 1]
            if abs(f.domain[0] - lo) > tol or abs(f.domain[1] - hi) > tol:
                raise ValueError(f"branch {letter} domain {f.domain} != [{lo},{hi}]")
        for j, letter in enumerate(self.perm.bottom):
            f = self.branches[letter]
            lo, hi = self.bottom_edges[j], self.bottom_edges[j + 1]
            y0, y1 = f.codomain
            if abs(y0 - lo) > tol or abs(y1 - hi) > tol:
                raise ValueError(f"branch {letter} image [{y0},{y1}] != [{lo},{hi}]")

    @property
    def top_edges(self):
        return (self.domain[0],) + self.top_sing + (self.domain[1],)

    @property
    def bottom_edges(self):
        return (self.domain[0],) + self.bottom_sing + (self.domain[1],)

    @property
    def letters(self):
        return self.perm.letters

    def top_interval(self, letter):
        i = self.perm.top_index(letter)
        return (self.top_edges[i], self.top_edges[i + 1])

    def bottom_interval(self, letter):
        j = self.perm.bottom_index(letter)
        return (self.bottom_edges[j], self.bottom_edges[j + 1])

    def lengths(self):
        return dict(zip(self.perm.top, np.diff(self.top_edges)))

    def letter_at(self, x):
        i = bisect.bisect_right(self.top_sing, x)
        return self.perm.top[i]

    def apply(self, x):
        if np.ndim(x) == 0:
            return float(self.branches[self.letter_at(float(x))].value(x))
        x = np.asarray(x, dtype=float)
        out = np.empty_like(x)
        idx = np.searchsorted(self.top_sing, x, side="right")
        for i, letter in enumerate(self.perm.top):
            mask = idx == i
            if np.any(mask):
                out[mask] = self.branches[letter].value(x[mask])
        return out

    def apply_inverse(self, y):
        j = bisect.bisect_right(self.bottom_sing, float(y))
        letter = self.perm.bottom[j]
        return float(self.branches[letter].inverse_value(float(y)))

    def iterate(self, x, n):
        x = float(x)
        if n >= 0:
            for _ in range(n):
                x = self.apply(x)
        else:
            for _ in range(-n):
                x = self.apply_inverse(x)
        return x

    def with_validation_relaxed(self):
        return self


def make_giet(perm, top_sing, branches, domain=(0.0, 1.0)):
    """Build a Giet, deriving the bottom singularities from the branch images."""
    edges = [domain[0]] + [float(u) for u in top_sing] + [domain[1]]
    images = {}
    for i, letter in enumerate(perm.top):
        images[letter] = branches[letter].codomain
    bedges = sorted(img[0] for img in images.values()) + [domain[1]]
    return Giet(perm, tuple(top_sing), tuple(bedges[1:-1]), dict(branches), tuple(domain))


def linear_rotation_giet(alpha):
    """The 2-interval exchange realising the rigid rotation by alpha."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0,1)")
    perm = MarkedPermutation(("A", "B"), ("B", "A"))
    f_a = BranchFunction.from_affine(1.0, alpha, (0.0, 1.0 - alpha))
    f_b = BranchFunction.from_affine(1.0, -(1.0 - alpha), (1.0 - alpha, 1.0))
    return Giet(perm, (1.0 - alpha,), (alpha,), {"A": f_a, "B": f_b})


# -- elementary induction ---------------------------------------------------


class _InductionState:
    """Mutable first-return bookkeeping rooted at a fixed base map.

    Edges and split points are tracked in the base map's own coordinates
    (orbits of the base compute split points exactly where chains would);
    branch chains are kept in the running normalised [0,1] chart.
    """

    def __init__(self, giet, root_times=None):
        a, b = giet.domain
        self.base = giet
        self.A = a
        self.span = b - a
        self.span0 = b - a
        self.perm = giet.perm
        self.top = np.array(giet.top_edges, dtype=float)
        self.bottom = np.array(giet.bottom_edges, dtype=float)
        self.times = {letter: 1 for letter in giet.letters}
        self.root_times = dict(root_times) if root_times else dict(self.times)
        if giet.domain == (0.0, 1.0):
            self.chains = dict(giet.branches)
        else:
            self.chains = {
                letter: _rescaled(f, a, b - a, a, b - a)
                for letter, f in giet.branches.items()
            }
        self.steps = 0

    @property
    def j_right(self):
        return float(self.top[-1])

    def _norm(self, x):
        return (x - self.A) / self.span

    def elementary_step(self):
        m = len(self.perm)
        u_t, u_b = float(self.top[-2]), float(self.bottom[-2])
        if abs(u_t - u_b) <= COLLISION_TOL * self.span:
            raise SingularityCollision(
                f"rightmost singularities collide at step {self.steps}", step=self.steps
            )
        old_span = self.span
        if u_t > u_b:
            side = "top"
            loser, winner = self.perm.top[-1], self.perm.bottom[-1]
            p = self.perm.top_index(winner)
            w = self.base.iterate(u_t, -self.times[winner])
            if not self.top[p] < w < self.top[p + 1]:
                raise SingularityCollision(
                    f"split point escaped the winner interval at step {self.steps}",
                    step=self.steps,
                )
            head = self.chains[winner].restrict((self._norm(self.top[p]), self._norm(w)))
            tail_dom = (self._norm(w), self._norm(self.top[p + 1]))
            tail = self.chains[winner].restrict(tail_dom)
            composed = BranchFunction(
                tail_dom, merge_pieces(tail.pieces + self.chains[loser].pieces)
            )
            self.chains[winner] = head
            self.chains[loser] = composed
            new_top = np.concatenate([self.top[: p + 1], [w], self.top[p + 1 : m]])
            new_bottom = np.concatenate([self.bottom[:m], [u_t]])
        else:
            side = "bottom"
            loser, winner = self.perm.bottom[-1], self.perm.top[-1]
            q = self.perm.bottom_index(winner)
            w = self.base.iterate(u_b, self.times[winner])
            if not self.bottom[q] < w < self.bottom[q + 1]:
                raise SingularityCollision(
                    f"split point escaped the winner image at step {self.steps}",
                    step=self.steps,
                )
            trimmed = self.chains[winner].restrict(
                (self._norm(self.top[m - 1]), self._norm(u_b))
            )
            lose_chain = self.chains[loser]
            composed = BranchFunction(
                lose_chain.domain,
                merge_pieces(lose_chain.pieces + self.chains[winner].pieces),
            )
            self.chains[winner] = trimmed
            self.chains[loser] = composed
            new_bottom = np.concatenate([self.bottom[: q + 1], [w], self.bottom[q + 1 : m]])
            new_top = np.concatenate([self.top[:m], [u_b]])
        self.times[loser] += self.times[winner]
        self.root_times[loser] += self.root_times[winner]
        self.perm = self.perm.move(side)
        self.top, self.bottom = new_top, new_bottom
        self.span = self.j_right - self.A
        fac = self.span / old_span
        pre, post = AffinePiece(fac, 0.0), AffinePiece(1.0 / fac, 0.0)
        lo_t = (self.top - self.A) / self.span
        rescaled = {}
        for i, letter in enumerate(self.perm.top):
            f = self.chains[letter]
            dom = (float(lo_t[i]), float(lo_t[i + 1]))
            rescaled[letter] = BranchFunction(
                dom, merge_pieces((pre,) + f.pieces + (post,))
            )
        self.chains = rescaled
        self.steps += 1
        return RauzyMove(winner=winner, side=side)

    def to_giet(self, check=True):
        top = (self.top - self.A) / self.span
        bottom = (self.bottom - self.A) / self.span
        return Giet(
            self.perm,
            tuple(top[1:-1]),
            tuple(bottom[1:-1]),
            dict(self.chains),
            (0.0, 1.0),
            check=check,
        )


def _rescaled(f, a, span, a_new, span_new):
    pre = AffinePiece(span, a)
    post = AffinePiece(1.0 / span_new, -a_new / span_new)
    dom = ((f.domain[0] - a_new) / span_new, (f.domain[1] - a_new) / span_new)
    return BranchFunction(dom, merge_pieces((pre,) + f.pieces + (post,)))


def elementary_rauzy_step(giet):
    """One step of Rauzy induction, rescaled to [0,1]."""
    state = _InductionState(giet)
    move = state.elementary_step()
    return state.to_giet(), move


def rescaling_factor(giet):
    """Length of the return interval cut by the next elementary step."""
    u_t, u_b = giet.top_edges[-2], giet.bottom_edges[-2]
    a = giet.domain[0]
    return (max(u_t, u_b) - a) / (giet.domain[1] - a)


def rauzy_path(giet, n_steps):
    """Record the moves of n_steps elementary inductions."""
    state = _InductionState(giet)
    moves = []
    for _ in range(n_steps):
        moves.append(state.elementary_step())
    return RauzyPath(giet.perm, tuple(moves))


def is_infinity_complete_probe(path):
    """Winner counts along a finite path: evidence, never proof."""
    return Counter(mv.winner for mv in path.moves)


# -- Rauzy diagrams ----------------------------------------------------------


def rauzy_diagram(perm):
    """The reachable component of the move graph, as {vertex: {side: target}}."""
    graph = {}
    frontier = [perm]
    while frontier:
        v = frontier.pop()
        if v in graph:
            continue
        arrows = {}
        if v.top[-1] != v.bottom[-1]:
            for side in ("top", "bottom"):
                w = v.move(side)
                arrows[side] = w
                if w not in graph:
                    frontier.append(w)
        graph[v] = arrows
    return graph


def rauzy_class(perm):
    return set(rauzy_diagram(perm))


# -- the renormalisation operator ---------------------------------------------


class _TwoLevelTracker:
    """The induced two-interval induction of a circular GIET.

    Tracks the two coarse singularities and coarse return times in base
    coordinates, and parses elementary coarse steps into digit blocks:
    a block is a run of same-side wins closed by one opposite-side win,
    of total length equal to one continued-fraction digit.
    """

    def __init__(self, giet):
        r = circular_shift(giet.perm)
        if r is None:
            raise NotCircular(f"permutation {giet.perm} is not circular")
        m = len(giet.perm)
        self.base = giet
        self.A = giet.domain[0]
        self.j_right = giet.domain[1]
        self.span0 = giet.domain[1] - giet.domain[0]
        self.s_t = giet.top_edges[r]
        self.s_b = giet.bottom_edges[m - r]
        self.r_x = 1
        self.r_y = 1
        self.body_side = "top"
        self.steps = 0
        self.evals = 0

    def side(self):
        if abs(self.s_t - self.s_b) <= COLLISION_TOL * (self.j_right - self.A):
            raise SingularityCollision(
                f"coarse singularities collide after {self.steps} coarse steps",
                step=self.steps,
            )
        return "top" if self.s_t > self.s_b else "bottom"

    def step(self):
        side = self.side()
        if side == "top":
            self.j_right = self.s_t
            self.s_t = self.base.iterate(self.s_t, -self.r_x)
            self.evals += self.r_x
            self.r_y += self.r_x
        else:
            self.j_right = self.s_b
            self.s_b = self.base.iterate(self.s_b, self.r_y)
            self.evals += self.r_y
            self.r_x += self.r_y
        self.steps += 1
        return side

    def next_block(self, budget):
        count = 0
        while self.side() == self.body_side:
            self.step()
            count += 1
            if self.evals > budget:
                raise NonTerminating(f"no digit block within {budget} base evaluations")
        self.step()
        self.body_side = "bottom" if self.body_side == "top" else "top"
        return count + 1

    def first_return_apply(self, xi):
        """The current coarse first-return map in the normalised chart."""
        span = self.j_right - self.A
        x = self.A + xi * span
        r = self.r_x if x < self.s_t else self.r_y
        return (self.base.iterate(x, r) - self.A) / span


@dataclass(frozen=True)
class RenormStep:
    giet: Giet
    elementary_steps: int
    digits: tuple
    scale: float
    moves: tuple


def renormalise(giet, budget=DEFAULT_BUDGET, _root_times=None, check=True):
    """One application of the renormalisation operator.

    Consumes two digit blocks of the coarse two-interval induction, applies
    full-alphabet elementary steps down to the same return interval, and
    rescales.  Returns a RenormStep carrying the new GIET, the two digits,
    the elementary step count and the contraction factor.
    """
    tracker = _TwoLevelTracker(giet)
    try:
        digits = (tracker.next_block(budget), tracker.next_block(budget))
    except SingularityCollision as exc:
        raise NonTerminating(
            f"digit grouping hit a singularity collision ({exc}); rational rotation number suspected"
        ) from exc
    target = tracker.j_right
    state = _InductionState(giet, root_times=_root_times)
    span = giet.domain[1] - giet.domain[0]
    tol = SNAP_REL * (target - giet.domain[0])
    moves = []
    while state.j_right > target + tol:
        moves.append(state.elementary_step())
        if state.steps > budget:
            raise NonTerminating(f"budget of {budget} elementary steps exhausted")
    if abs(state.j_right - target) > tol:
        raise AssertionError(
            f"full induction missed the coarse return interval: {state.j_right} vs {target}"
        )
    out = state.to_giet(check=check)
    if not is_circular(out.perm):
        raise AssertionError(f"renormalised permutation {out.perm} lost circularity")
    scale = (target - giet.domain[0]) / span
    return RenormStep(out, state.steps, digits, scale, tuple(moves)), state.root_times


def standard_renormalisation(giet, budget=DEFAULT_BUDGET):
    """Renormalise once; returns (new GIET, elementary steps consumed)."""
    step, _ = renormalise(giet, budget)
    return step.giet, step.elementary_steps


def tower(giet, depth, budget=DEFAULT_BUDGET):
    """Yield (level, giet, x_level, digits, root_times) up the renormalisation tower.

    x_level is the length of the level's return interval in the coordinates
    of the original map; root_times are return times with respect to it.
    Level 0 is the input itself.
    """
    x = 1.0
    root_times = {letter: 1 for letter in giet.letters}
    yield 0, giet, x, (), dict(root_times)
    current = giet
    for level in range(1, depth + 1):
        step, root_times_new = renormalise(current, budget, _root_times=root_times)
        x *= step.scale
        current = step.giet
        root_times = root_times_new
        yield level, current, x, step.digits, dict(root_times)


def cf_digits(giet, n, budget=DEFAULT_BUDGET):
    """The first n continued-fraction digits of the rotation number.

    Runs the coarse two-interval induction only; the digit sequence agrees
    with what repeated renormalisation consumes, at a fraction of the cost.
    """
    tracker = _TwoLevelTracker(giet)
    return [tracker.next_block(budget) for _ in range(n)]


def mine_digits(giet, max_digits=40, budget=DEFAULT_BUDGET, q_cap=None):
    """Extract digits until max_digits, a denominator cap, or a collision.

    Returns (digits, status) with status in {"ok", "floor", "collision",
    "budget"}.  The default cap is the square root of the floating-point
    resolution, past which digits would be rounding noise; tighter caps
    bound the orbit work, which grows linearly with the denominator.
    """
    if q_cap is None:
        q_cap = math.sqrt(4.0 / np.finfo(float).eps)
    tracker = _TwoLevelTracker(giet)
    digits = []
    status = "ok"
    q_prev, q = 0, 1
    while len(digits) < max_digits:
        try:
            a = tracker.next_block(budget)
        except SingularityCollision:
            status = "collision"
            break
        except NonTerminating:
            status = "budget"
            break
        digits.append(a)
        q_prev, q = q, a * q + q_prev
        if q > q_cap:
            status = "floor"
            break
    return digits, status


def convergents(digits):
    """Convergents p_n/q_n of [0; a1, a2, ...]."""
    p_prev, q_prev = 1, 0
    p, q = 0, 1
    out = []
    for a in digits:
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        out.append((p, q))
    return out


def value_from_digits(digits):
    p, q = convergents(digits)[-1]
    return p / q


# -- coarse projection ---------------------------------------------------------


class TwoGietView:
    """The two-interval coarsening of a circular GIET (a C^0 exchange).

    Adjacent intervals mapped to adjacent intervals are grouped; branches
    are evaluated through the underlying map, so the view equals the
    original pointwise.
    """

    def __init__(self, giet):
        r = circular_shift(giet.perm)
        if r is None:
            raise NotCircular(f"permutation {giet.perm} is not circular")
        m = len(giet.perm)
        self.base = giet
        self.perm = MarkedPermutation(("X", "Y"), ("Y", "X"))
        self.domain = giet.domain
        self.top_sing = (giet.top_edges[r],)
        self.bottom_sing = (giet.bottom_edges[m - r],)

    def apply(self, x):
        return self.base.apply(x)

    def iterate(self, x, n):
        return self.base.iterate(x, n)

    def renormalised(self, budget=DEFAULT_BUDGET):
        """Coarse renormalisation: the first-return map as a normalised callable."""
        tracker = _TwoLevelTracker(self.base)
        try:
            digits = (tracker.next_block(budget), tracker.next_block(budget))
        except SingularityCollision as exc:
            raise NonTerminating(str(exc)) from exc
        return tracker, digits


def project_to_2giet(giet):
    if len(giet.perm) == 2:
        return giet
    return TwoGietView(giet)


# -- dynamical partitions -------------------------------------------------------


@dataclass(frozen=True)
class DynamicalPartition:
    level: int
    base_intervals: dict
    return_times: dict
    intervals: tuple
    mesh: float

    def total_measure(self):
        return float(sum(b - a for a, b in self.intervals))


def push_interval(giet, interval):
    """Image of an interval containing no singularity in its interior."""
    lo, hi = interval
    branch = giet.branches[giet.letter_at(0.5 * (lo + hi))]
    return (float(branch.value(lo)), float(branch.value(hi)))


def _level_state(giet, n, budget=DEFAULT_BUDGET):
    levels = tower(giet, n, budget)
    for level, g, x, digits, times in levels:
        if level == n:
            return g, x, times
    raise AssertionError("unreachable")


def dynamical_partition(giet, n, budget=DEFAULT_BUDGET):
    """The level-n partition into pushed-forward return intervals of the base."""
    g, x, times = _level_state(giet, n, budget)
    a0 = giet.domain[0]
    base_intervals = {}
    for letter in g.letters:
        lo, hi = g.top_interval(letter)
        base_intervals[letter] = (a0 + lo * x, a0 + hi * x)
    intervals = []
    mesh = 0.0
    for letter in g.letters:
        iv = base_intervals[letter]
        for _ in range(times[letter]):
            intervals.append(iv)
            mesh = max(mesh, iv[1] - iv[0])
            iv = push_interval(giet, iv)
    return DynamicalPartition(n, base_intervals, dict(times), tuple(intervals), mesh)


def partition_mesh(giet, n, budget=DEFAULT_BUDGET):
    """The mesh of the level-n partition, without materialising it."""
    g, x, times = _level_state(giet, n, budget)
    a0 = giet.domain[0]
    mesh = 0.0
    for letter in g.letters:
        lo, hi = g.top_interval(letter)
        iv = (a0 + lo * x, a0 + hi * x)
        for _ in range(times[letter]):
            mesh = max(mesh, iv[1] - iv[0])
            iv = push_interval(giet, iv)
    return mesh


@dataclass(frozen=True)
class DecayFit:
    levels: tuple
    meshes: tuple
    alpha: float
    prefactor: float
    r_squared: float
    stop_level: int
    stop_reason: str


def partition_decay(giet, depth, budget=DEFAULT_BUDGET, skip=2):
    """Fit mesh(n) ~ prefactor * alpha^n on levels skip..depth.

    Stops early at the floating-point resolution floor; the fit uses
    whatever levels were computed.
    """
    levels, meshes = [], []
    x = 1.0
    root_times = {letter: 1 for letter in giet.letters}
    current = giet
    stop_level, stop_reason = depth, "completed"
    a0 = giet.domain[0]
    for n in range(1, depth + 1):
        step, root_times = renormalise(current, budget, _root_times=root_times)
        x *= step.scale
        current = step.giet
        mesh = 0.0
        for letter in current.letters:
            lo, hi = current.top_interval(letter)
            iv = (a0 + lo * x, a0 + hi * x)
            for _ in range(root_times[letter]):
                mesh = max(mesh, iv[1] - iv[0])
                iv = push_interval(giet, iv)
        if mesh < FLOOR:
            stop_level, stop_reason = n, "precision floor"
            break
        if n >= skip:
            levels.append(n)
            meshes.append(mesh)
    if len(levels) < 3:
        raise PrecisionFloor(
            f"only {len(levels)} usable levels before the resolution floor"
        )
    logs = np.log(meshes)
    slope, intercept = np.polyfit(levels, logs, 1)
    fitted = slope * np.asarray(levels) + intercept
    ss_res = float(np.sum((logs - fitted) ** 2))
    ss_tot = float(np.sum((logs - np.mean(logs)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(
        tuple(levels),
        tuple(meshes),
        float(math.exp(slope)),
        float(math.exp(intercept)),
        r2,
        stop_level,
        stop_reason,
    )
