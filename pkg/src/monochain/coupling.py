"""Order-preserving couplings driven by shared randomness.

Two copies of a chain start from an ordered pair x <= y and consume identical
random inputs; the construction keeps the dominance order after every step
while each coordinate still moves by its own exact kernel.  Coalescence (the
first step with equal states) therefore bounds the total variation distance
between the two laws.

Labels 1..N are reassigned fresh from the current pair at every step:
population 1 numbers its individuals through the species blocks in order;
population 2 reuses the shared labels where the counts agree and parks its
surplus individuals (one per unit of y_i - x_i, i < d) on population 1's
unused species-d labels in ascending species order.  Every label then either
carries the same species in both populations or species d in population 1 and
some species < d in population 2 -- the property all removal steps rely on.

Shared categorical decisions use one uniform each.  When the two populations
draw from different distributions p (population 1) and q (population 2) with
q dominating p off the last index, population 2 reads the uniform through
rearranged intervals: the p-intervals of the first d-1 indices first, then the
surplus segments q_i - p_i in index order, then the common tail.  Population 1
lands on index d exactly when the uniform leaves the shared prefix, in which
case population 2 may land anywhere, and on index i < d otherwise, in which
case population 2 lands on the same i.
"""
from __future__ import annotations

from typing import NamedTuple

import math

import numpy as np

from .errors import CouplingOrderError, ValidationError
from .kernels import (
    Ehrenfest,
    ModelSpec,
    MoranGeneral,
    MoranStandard,
    MutationMatrix,
    PolyaDownUp,
    PolyaLevel,
    PolyaUpDown,
    expand_standard,
    pick_index,
)
from .spectral import classify_conditions
from .statespace import Composition, partial_leq, validate_composition


class CoupledPair(NamedTuple):
    x: Composition
    y: Composition


class Labeling(NamedTuple):
    """Per-label species for both populations (0-based labels and species).

    Labels 0..k1+k2-1 carry equal species; labels k1+k2..N-1 carry species
    d-1 in population 1 and a species < d-1 in population 2.
    """

    pop1: tuple[int, ...]
    pop2: tuple[int, ...]
    k1: int
    k2: int

    @property
    def assignments(self) -> tuple[tuple[int, int], ...]:
        return tuple(zip(self.pop1, self.pop2))


def build_labeling(x: Composition, y: Composition) -> Labeling:
    """Deterministic shared labeling of an ordered pair (x <= y)."""
    x = validate_composition(x)
    y = validate_composition(y, sum(x), len(x))
    if not partial_leq(x, y):
        raise ValidationError(f"pair is not ordered: {x} !<= {y}")
    pop1, pop2, k1, k2 = _labels(x, y)
    return Labeling(tuple(pop1), tuple(pop2), k1, k2)


def _labels(x, y):
    """Unvalidated labeling core; returns lists for the hot path."""
    d = len(x)
    pop1 = []
    for sp in range(d):
        pop1 += [sp] * x[sp]
    k1 = len(pop1) - x[d - 1]
    k2 = y[d - 1]
    pop2 = pop1[: k1 + k2]
    for sp in range(d - 1):
        extra = y[sp] - x[sp]
        if extra:
            pop2 += [sp] * extra
    return pop1, pop2, k1, k2


def dominated_pick(v: float, w_low, w_high) -> tuple[int, int]:
    """Shared-uniform pick from two weight vectors with rearranged intervals.

    ``w_high`` must dominate ``w_low`` entrywise off the last index, with
    equal totals; ``v`` is a uniform scaled to that total.  Returns the pair
    (index for the low chain, index for the high chain).  The low pick is
    plain CDF inversion of w_low; the high pick reads the shared prefix
    first, then the surplus segments w_high - w_low in index order.  Ties at
    segment boundaries resolve to the lower index.
    """
    last = len(w_low) - 1
    cum = 0.0
    for t in range(last):
        cum += w_low[t]
        if v <= cum:
            return t, t
    # Past the shared prefix: the low chain takes the last index.
    for t in range(last):
        cum += w_high[t] - w_low[t]
        if v <= cum:
            return last, t
    return last, last


def _draw_distinct(rng, n: int, k: int) -> list[int]:
    """k distinct labels from range(n) via partial Fisher-Yates."""
    idx = list(range(n))
    for t in range(k):
        j = t + int(rng.integers(0, n - t))
        idx[t], idx[j] = idx[j], idx[t]
    return idx[:k]


def _check_order(x, y, last) -> None:
    for i in range(last):
        if x[i] > y[i]:
            raise CouplingOrderError(f"coupled step broke the order: {x} !<= {y}")


def coupled_moran_step(M: MutationMatrix, pair: CoupledPair,
                       rng: np.random.Generator) -> CoupledPair:
    """One coupled Moran step: shared death and parent labels, shared mutation uniform.

    Requires a mutation matrix with dominated last row (one of the
    monotonicity conditions); otherwise the rearranged mutation intervals are
    invalid.  Marginals follow the exact Moran row of each population.
    """
    x, y = pair
    d = M.d
    n = sum(x)
    rows = M.rows
    pop1, pop2, _, _ = _labels(x, y)

    death = int(rng.integers(0, n))
    parent = int(rng.integers(0, n))
    u = rng.random()

    s1 = pop1[parent]
    s2 = pop2[parent]
    if s1 == s2:
        # Shared label range: both offspring mutate through the same row.
        born1 = born2 = pick_index(u, rows[s1])
    else:
        # Extra label: population 1's parent is species d, population 2's is
        # s2 < d, whose row dominates row d off the last column.
        born1, born2 = dominated_pick(u, rows[d - 1], rows[s2])

    xn = list(x)
    xn[born1] += 1
    xn[pop1[death]] -= 1
    yn = list(y)
    yn[born2] += 1
    yn[pop2[death]] -= 1
    _check_order(xn, yn, d - 1)
    return CoupledPair(tuple(xn), tuple(yn))


def _coupled_adds(alpha, x, y, n_balls, s, rng, want_picks=False):
    """s shared reinforced additions from weights alpha + x vs alpha + y.

    Returns add counts for both populations and, when requested, the picked
    urn sequences (needed to extend the labeling over freshly added balls).
    """
    w1 = [a + c for a, c in zip(alpha, x)]
    w2 = [a + c for a, c in zip(alpha, y)]
    total = math.fsum(alpha) + n_balls
    d = len(w1)
    a1 = [0] * d
    a2 = [0] * d
    picks1: list[int] = []
    picks2: list[int] = []
    for _ in range(s):
        v = rng.random() * total
        i1, i2 = dominated_pick(v, w1, w2)
        w1[i1] += 1.0
        w2[i2] += 1.0
        a1[i1] += 1
        a2[i2] += 1
        if want_picks:
            picks1.append(i1)
            picks2.append(i2)
        total += 1.0
    return a1, a2, picks1, picks2


def coupled_polya_step(spec, pair: CoupledPair, rng: np.random.Generator) -> CoupledPair:
    """One coupled sequential-urn step (level, up-down, or down-up order).

    All three variants share mark labels and one uniform per reinforced draw;
    they differ only in when the marked balls leave relative to the
    additions.  The up-down variant extends the labeling over the s freshly
    added balls (which satisfy the same per-label species property) before
    marking out of N + s.
    """
    x, y = pair
    d = spec.d
    n = spec.N
    s = spec.s
    alpha = spec.alpha
    pop1, pop2, _, _ = _labels(x, y)

    if isinstance(spec, PolyaUpDown):
        a1, a2, picks1, picks2 = _coupled_adds(alpha, x, y, n, s, rng, want_picks=True)
        pop1 += picks1
        pop2 += picks2
        marks = _draw_distinct(rng, n + s, s)
        xn = [xi + ai for xi, ai in zip(x, a1)]
        yn = [yi + ai for yi, ai in zip(y, a2)]
        for lbl in marks:
            xn[pop1[lbl]] -= 1
            yn[pop2[lbl]] -= 1
    else:
        marks = _draw_distinct(rng, n, s)
        xn = list(x)
        yn = list(y)
        for lbl in marks:
            xn[pop1[lbl]] -= 1
            yn[pop2[lbl]] -= 1
        if isinstance(spec, PolyaLevel):
            # Additions reinforce the pre-removal weights (marked balls still
            # present while the draws happen).
            a1, a2, _, _ = _coupled_adds(alpha, x, y, n, s, rng)
        elif isinstance(spec, PolyaDownUp):
            a1, a2, _, _ = _coupled_adds(alpha, xn, yn, n - s, s, rng)
        else:
            raise ValidationError(f"not a Polya spec: {type(spec).__name__}")
        for i in range(d):
            xn[i] += a1[i]
            yn[i] += a2[i]
    _check_order(xn, yn, d - 1)
    return CoupledPair(tuple(xn), tuple(yn))


def coupled_ehrenfest_step(spec: Ehrenfest, pair: CoupledPair,
                           rng: np.random.Generator) -> CoupledPair:
    """One coupled redistribution step: shared removal labels, shared placements."""
    x, y = pair
    d = spec.d
    n = spec.N
    pop1, pop2, _, _ = _labels(x, y)
    marks = _draw_distinct(rng, n, spec.s)
    xn = list(x)
    yn = list(y)
    for lbl in marks:
        xn[pop1[lbl]] -= 1
        yn[pop2[lbl]] -= 1
    for _ in range(spec.s):
        t = pick_index(rng.random(), spec.p)
        xn[t] += 1
        yn[t] += 1
    _check_order(xn, yn, d - 1)
    return CoupledPair(tuple(xn), tuple(yn))


def coupled_step(spec: ModelSpec, pair: CoupledPair, rng: np.random.Generator) -> CoupledPair:
    """Dispatch one coupled step for any model spec."""
    spec = expand_standard(spec)
    if isinstance(spec, MoranGeneral):
        return coupled_moran_step(spec.M, pair, rng)
    if isinstance(spec, Ehrenfest):
        return coupled_ehrenfest_step(spec, pair, rng)
    return coupled_polya_step(spec, pair, rng)


def run_coupled(spec: ModelSpec, x0: Composition, y0: Composition,
                max_steps: int, rng: np.random.Generator
                ) -> tuple[list[CoupledPair], int | None]:
    """Run a coupled trajectory until coalescence or the step budget.

    Returns the trajectory (including the start pair) and the first step at
    which the chains coincide, or None if they never do within max_steps.
    Once equal the chains share every subsequent draw, so equality persists.
    """
    spec = expand_standard(spec)
    n, d = spec.N, spec.d
    x0 = validate_composition(x0, n, d)
    y0 = validate_composition(y0, n, d)
    if not partial_leq(x0, y0):
        raise ValidationError(f"start pair is not ordered: {x0} !<= {y0}")
    if isinstance(spec, MoranGeneral) and not classify_conditions(spec.M).any_holds:
        raise ValidationError(
            "coupled Moran steps need a mutation matrix satisfying a "
            "dominated-last-row monotonicity condition"
        )

    pair = CoupledPair(x0, y0)
    trajectory = [pair]
    if x0 == y0:
        return trajectory, 0
    for step in range(1, max_steps + 1):
        pair = coupled_step(spec, pair, rng)
        trajectory.append(pair)
        if pair.x == pair.y:
            return trajectory, step
    return trajectory, None


def trajectory_csv_rows(trajectory, coalesced_at: int | None):
    """CSV rows (step, x, y, coalesced) with semicolon-joined counts."""
    for step, pair in enumerate(trajectory):
        coalesced = int(coalesced_at is not None and step >= coalesced_at)
        yield (
            step,
            ";".join(str(c) for c in pair.x),
            ";".join(str(c) for c in pair.y),
            coalesced,
        )
