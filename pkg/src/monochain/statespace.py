"""Composition lattice: enumeration, ranking, and the dominance partial order.

A state is a weak composition of N into d parts: a tuple of d nonnegative
integers summing to N.  The lattice carries the partial order

    x <= y  iff  x_i <= y_i for every i < d,

which automatically forces x_d >= y_d.  Enumeration is colexicographic on the
first d-1 coordinates (first coordinate varies fastest), and rank/unrank use
exact integer binomial arithmetic so they stay correct at the cap boundary.
"""
from __future__ import annotations

import math
import numbers

from .errors import CapacityError, ValidationError

Composition = tuple[int, ...]

# Largest state space enumerate_states will materialize by default; keeps the
# dense machinery in the exact module at desk scale.
DEFAULT_STATE_CAP = 200_000


def state_count(n_total: int, d: int) -> int:
    """Number of compositions of n_total into d parts: C(n_total + d - 1, n_total)."""
    if n_total < 0 or d < 1:
        raise ValidationError(f"need n_total >= 0 and d >= 1, got N={n_total}, d={d}")
    return math.comb(n_total + d - 1, n_total)


def validate_composition(x, n_total: int | None = None, d: int | None = None) -> Composition:
    """Return x as a tuple after checking it is a valid composition.

    If n_total or d are given, the sum and length must match them.
    """
    raw = tuple(x)
    if len(raw) < 2:
        raise ValidationError(f"composition needs at least 2 parts, got {raw!r}")
    for c in raw:
        if isinstance(c, bool) or not isinstance(c, numbers.Integral):
            raise ValidationError(f"composition entries must be integers, got {raw!r}")
        if c < 0:
            raise ValidationError(f"composition entries must be >= 0, got {raw!r}")
    xt = tuple(int(c) for c in raw)
    if d is not None and len(xt) != d:
        raise ValidationError(f"composition {xt!r} has {len(xt)} parts, expected d={d}")
    if n_total is not None and sum(xt) != n_total:
        raise ValidationError(f"composition {xt!r} sums to {sum(xt)}, expected N={n_total}")
    return xt


def enumerate_states(n_total: int, d: int, cap: int | None = DEFAULT_STATE_CAP) -> list[Composition]:
    """All compositions of n_total into d parts, colex on the first d-1 coordinates.

    Raises CapacityError when the state space exceeds ``cap`` (pass None to
    disable the check).
    """
    if d < 2:
        raise ValidationError(f"need d >= 2, got d={d}")
    size = state_count(n_total, d)
    if cap is not None and size > cap:
        raise CapacityError(
            f"state space too large: {size} states for N={n_total}, d={d} "
            f"(cap {cap})"
        )

    states: list[Composition] = []

    # Coordinate d-2 (last prefix coordinate) in the outer loop, coordinate 0
    # innermost, matching colex order.
    def gen(k: int, remaining: int):
        if k == 0:
            yield ()
            return
        for last in range(remaining + 1):
            for rest in gen(k - 1, remaining - last):
                yield rest + (last,)

    for prefix in gen(d - 1, n_total):
        states.append(prefix + (n_total - sum(prefix),))
    return states


def rank(x: Composition) -> int:
    """Colex rank of x among the compositions of sum(x) into len(x) parts."""
    xt = validate_composition(x)
    d = len(xt)
    remaining = sum(xt)
    r = 0
    for k in range(d - 1, 0, -1):
        v = xt[k - 1]
        # Number of length-k prefixes with a smaller last coordinate:
        # sum_{t<v} C(remaining - t + k - 1, k - 1), telescoped.
        r += math.comb(remaining + k, k) - math.comb(remaining - v + k, k)
        remaining -= v
    return r


def unrank(index: int, n_total: int, d: int) -> Composition:
    """Inverse of rank: the composition at colex position ``index``."""
    if d < 2:
        raise ValidationError(f"need d >= 2, got d={d}")
    size = state_count(n_total, d)
    if not 0 <= index < size:
        raise ValidationError(f"index {index} out of range for {size} states")
    out = [0] * d
    remaining = n_total
    i = index
    for k in range(d - 1, 0, -1):
        cum = 0
        for t in range(remaining + 1):
            block = math.comb(remaining - t + k - 1, k - 1)
            if i < cum + block:
                out[k - 1] = t
                i -= cum
                remaining -= t
                break
            cum += block
    out[d - 1] = remaining
    return tuple(out)


def partial_leq(x: Composition, y: Composition) -> bool:
    """True iff x is dominated by y on the first d-1 coordinates."""
    if len(x) != len(y):
        raise ValidationError(f"dimension mismatch: {len(x)} vs {len(y)}")
    if sum(x) != sum(y):
        raise ValidationError(f"total mismatch: {sum(x)} vs {sum(y)}")
    for a, b in zip(x[:-1], y[:-1]):
        if a > b:
            return False
    return True


def minimal_element(n_total: int, d: int) -> Composition:
    """The unique minimum of the lattice: everything in the last part."""
    if d < 2:
        raise ValidationError(f"need d >= 2, got d={d}")
    if n_total < 0:
        raise ValidationError(f"need n_total >= 0, got {n_total}")
    return (0,) * (d - 1) + (n_total,)
