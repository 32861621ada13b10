"""Transition kernels for the five chain families.

Moran replacement chain on species counts: at each step one individual dies
(uniform), one reproduces (uniform, possibly the same), and the offspring
mutates from species k to species i with probability m_ki, giving

    K(x, x + e_i - e_j) = (x_j / N) * sum_k (x_k / N) m_ki,   i != j.

Urn families move s balls per step.  Their rows collapse to closed forms:
multivariate hypergeometric removals times (Dirichlet-)multinomial additions,
with the reinforced additions of the Polya variants evaluated through rising
factorials so non-integer urn weights work.  The closed forms are gated in the
test suite against brute-force enumeration of the ordered draw sequences.

``sample_step`` draws one transition generatively.  Every categorical decision
consumes exactly one uniform and inverts the CDF in index order, resolving
boundary ties to the lower index, so runs are reproducible given a seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Union

import numpy as np

from .errors import ValidationError
from .statespace import Composition, validate_composition

_ROW_SUM_TOL = 1e-10
_PROB_VEC_TOL = 1e-12


def _validate_prob_vector(p, name: str) -> tuple[float, ...]:
    pt = tuple(float(v) for v in p)
    if len(pt) < 2:
        raise ValidationError(f"{name} needs at least 2 entries, got {pt!r}")
    if any(v <= 0.0 for v in pt):
        raise ValidationError(f"{name} entries must be positive, got {pt!r}")
    if abs(math.fsum(pt) - 1.0) > _PROB_VEC_TOL:
        raise ValidationError(f"{name} must sum to 1, got sum {math.fsum(pt)!r}")
    return pt


def _validate_weights(alpha, name: str) -> tuple[float, ...]:
    at = tuple(float(v) for v in alpha)
    if len(at) < 2:
        raise ValidationError(f"{name} needs at least 2 entries, got {at!r}")
    if any(v <= 0.0 for v in at):
        raise ValidationError(f"{name} entries must be positive, got {at!r}")
    return at


class MutationMatrix:
    """Row-stochastic d x d mutation matrix, validated irreducible.

    Irreducibility is checked on the directed graph of strictly positive
    entries (reachability from and to vertex 0), matching the standing
    assumption that makes the replacement chain irreducible and aperiodic.
    """

    def __init__(self, entries):
        try:
            m = np.array(entries, dtype=float)
        except ValueError as exc:
            raise ValidationError(f"malformed mutation matrix: {exc}") from exc
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"mutation matrix must be square, got shape {m.shape}")
        d = m.shape[0]
        if d < 2:
            raise ValidationError("mutation matrix needs d >= 2")
        if np.any(m < 0.0):
            raise ValidationError("mutation matrix entries must be >= 0")
        sums = m.sum(axis=1)
        if np.max(np.abs(sums - 1.0)) > _PROB_VEC_TOL:
            raise ValidationError(f"mutation matrix rows must sum to 1, got {sums}")
        if not _strongly_connected(m > 0.0):
            raise ValidationError("mutation matrix is reducible")
        m.setflags(write=False)
        self.matrix = m
        self.d = d
        # Plain tuples for cheap scalar iteration in the sampling hot paths.
        self.rows = tuple(tuple(float(v) for v in row) for row in m)

    def __repr__(self) -> str:
        return f"MutationMatrix(d={self.d})"


def _strongly_connected(adj: np.ndarray) -> bool:
    """BFS reachability from vertex 0 in adj and its transpose."""
    d = adj.shape[0]

    def reaches_all(a) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in np.nonzero(a[u])[0]:
                if int(v) not in seen:
                    seen.add(int(v))
                    stack.append(int(v))
        return len(seen) == d

    return reaches_all(adj) and reaches_all(adj.T)


@dataclass(frozen=True, eq=False)
class MoranGeneral:
    """Moran chain with an arbitrary (irreducible) mutation matrix."""

    N: int
    M: MutationMatrix

    def __post_init__(self):
        if self.N < 1:
            raise ValidationError(f"need N >= 1, got N={self.N}")

    @property
    def d(self) -> int:
        return self.M.d


@dataclass(frozen=True)
class MoranStandard:
    """Moran chain with mutation matrix (1-m) I + m P, every row of P equal to p."""

    N: int
    m: float
    p: tuple[float, ...]

    def __post_init__(self):
        if self.N < 1:
            raise ValidationError(f"need N >= 1, got N={self.N}")
        if not 0.0 < self.m <= 1.0:
            raise ValidationError(f"mutation probability must be in (0, 1], got {self.m}")
        object.__setattr__(self, "p", _validate_prob_vector(self.p, "p"))

    @property
    def d(self) -> int:
        return len(self.p)

    def expand(self) -> MoranGeneral:
        d = self.d
        mat = (1.0 - self.m) * np.eye(d) + self.m * np.tile(self.p, (d, 1))
        return MoranGeneral(self.N, MutationMatrix(mat))


def _urn_post_init(spec):
    if spec.N < 1:
        raise ValidationError(f"need N >= 1, got N={spec.N}")
    if not 1 <= spec.s <= spec.N:
        raise ValidationError(f"need 1 <= s <= N, got s={spec.s}, N={spec.N}")


@dataclass(frozen=True)
class PolyaLevel:
    """Mark s balls, make s reinforced additions, then remove the marked balls."""

    N: int
    s: int
    alpha: tuple[float, ...]

    def __post_init__(self):
        _urn_post_init(self)
        object.__setattr__(self, "alpha", _validate_weights(self.alpha, "alpha"))

    @property
    def d(self) -> int:
        return len(self.alpha)


@dataclass(frozen=True)
class PolyaUpDown:
    """s reinforced additions first, then remove s balls uniformly out of N+s."""

    N: int
    s: int
    alpha: tuple[float, ...]

    def __post_init__(self):
        _urn_post_init(self)
        object.__setattr__(self, "alpha", _validate_weights(self.alpha, "alpha"))

    @property
    def d(self) -> int:
        return len(self.alpha)


@dataclass(frozen=True)
class PolyaDownUp:
    """Remove s balls uniformly, then make s reinforced additions."""

    N: int
    s: int
    alpha: tuple[float, ...]

    def __post_init__(self):
        _urn_post_init(self)
        object.__setattr__(self, "alpha", _validate_weights(self.alpha, "alpha"))

    @property
    def d(self) -> int:
        return len(self.alpha)


@dataclass(frozen=True)
class Ehrenfest:
    """Pick s balls uniformly and redistribute each independently by p."""

    N: int
    s: int
    p: tuple[float, ...]

    def __post_init__(self):
        _urn_post_init(self)
        object.__setattr__(self, "p", _validate_prob_vector(self.p, "p"))

    @property
    def d(self) -> int:
        return len(self.p)


ModelSpec = Union[MoranGeneral, MoranStandard, PolyaLevel, PolyaUpDown, PolyaDownUp, Ehrenfest]

_POLYA_SPECS = (PolyaLevel, PolyaUpDown, PolyaDownUp)

_MODEL_TAGS = {
    MoranGeneral: "moran_general",
    MoranStandard: "moran_standard",
    PolyaLevel: "polya_level",
    PolyaUpDown: "polya_updown",
    PolyaDownUp: "polya_downup",
    Ehrenfest: "ehrenfest",
}


def expand_standard(spec: ModelSpec) -> ModelSpec:
    """Replace a MoranStandard spec by its MoranGeneral expansion; pass others through."""
    if isinstance(spec, MoranStandard):
        return spec.expand()
    return spec


def spec_to_json(spec: ModelSpec) -> dict:
    """JSON document for a model spec (inverse of spec_from_json)."""
    tag = _MODEL_TAGS[type(spec)]
    doc: dict = {"model": tag, "N": spec.N}
    if isinstance(spec, MoranGeneral):
        doc["mutation_matrix"] = [list(row) for row in spec.M.rows]
    elif isinstance(spec, MoranStandard):
        doc["m"] = spec.m
        doc["p"] = list(spec.p)
    elif isinstance(spec, Ehrenfest):
        doc["s"] = spec.s
        doc["p"] = list(spec.p)
    else:
        doc["s"] = spec.s
        doc["alpha"] = list(spec.alpha)
    return doc


def spec_from_json(doc: dict) -> ModelSpec:
    """Parse a model spec from its JSON document."""
    if not isinstance(doc, dict) or "model" not in doc:
        raise ValidationError("model document must be an object with a 'model' tag")
    tag = doc["model"]
    try:
        if tag == "moran_general":
            return MoranGeneral(int(doc["N"]), MutationMatrix(doc["mutation_matrix"]))
        if tag == "moran_standard":
            return MoranStandard(int(doc["N"]), float(doc["m"]), tuple(doc["p"]))
        if tag == "polya_level":
            return PolyaLevel(int(doc["N"]), int(doc["s"]), tuple(doc["alpha"]))
        if tag == "polya_updown":
            return PolyaUpDown(int(doc["N"]), int(doc["s"]), tuple(doc["alpha"]))
        if tag == "polya_downup":
            return PolyaDownUp(int(doc["N"]), int(doc["s"]), tuple(doc["alpha"]))
        if tag == "ehrenfest":
            return Ehrenfest(int(doc["N"]), int(doc["s"]), tuple(doc["p"]))
    except KeyError as exc:
        raise ValidationError(f"model document missing field {exc}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"malformed model document: {exc}") from exc
    raise ValidationError(f"unknown model tag {tag!r}")


@dataclass(frozen=True)
class TransitionRow:
    """One row of a transition kernel: sparse map from successors to probabilities."""

    source: Composition
    probs: dict

    def __post_init__(self):
        n = sum(self.source)
        d = len(self.source)
        total = 0.0
        for succ, p in self.probs.items():
            if p <= 0.0:
                raise ValidationError(f"row entry for {succ!r} must be > 0, got {p}")
            if len(succ) != d or sum(succ) != n or any(c < 0 for c in succ):
                raise ValidationError(f"successor {succ!r} is not a valid composition")
            total += p
        if abs(total - 1.0) > _ROW_SUM_TOL:
            raise ValidationError(f"row from {self.source!r} sums to {total!r}")


def model_dims(spec: ModelSpec) -> tuple[int, int]:
    return spec.N, spec.d


# ---------------------------------------------------------------------------
# Exact rows
# ---------------------------------------------------------------------------

def moran_row(spec: MoranGeneral, x: Composition) -> TransitionRow:
    """One-step row of the Moran replacement chain from x."""
    if not isinstance(spec, MoranGeneral):
        raise ValidationError("moran_row needs a MoranGeneral spec (expand a standard one first)")
    N, d = spec.N, spec.d
    x = validate_composition(x, N, d)
    # Offspring species distribution: parent uniform, then one mutation step.
    target = spec.M.matrix.T @ (np.asarray(x, dtype=float) / N)
    probs: dict = {}
    off_total = 0.0
    for j in range(d):
        if x[j] == 0:
            continue
        death_frac = x[j] / N
        for i in range(d):
            if i == j:
                continue
            p = death_frac * float(target[i])
            if p > 0.0:
                succ = list(x)
                succ[i] += 1
                succ[j] -= 1
                succ = tuple(succ)
                probs[succ] = probs.get(succ, 0.0) + p
                off_total += p
    stay = 1.0 - off_total
    if stay > 1e-13:
        probs[x] = probs.get(x, 0.0) + stay
    return TransitionRow(x, probs)


def compositions_of(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All weak compositions of ``total`` into ``parts`` parts."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in compositions_of(total - first, parts - 1):
            yield (first,) + rest


def bounded_compositions(total: int, bounds: Composition) -> Iterator[tuple[int, ...]]:
    """Weak compositions of ``total`` with entrywise upper bounds."""
    if len(bounds) == 1:
        if total <= bounds[0]:
            yield (total,)
        return
    for first in range(min(total, bounds[0]) + 1):
        for rest in bounded_compositions(total - first, bounds[1:]):
            yield (first,) + rest


def _multinomial_coef(a: tuple[int, ...]) -> int:
    c = math.factorial(sum(a))
    for ai in a:
        c //= math.factorial(ai)
    return c


def _multinomial_pmf(a: tuple[int, ...], p: tuple[float, ...]) -> float:
    out = float(_multinomial_coef(a))
    for ai, pi in zip(a, p):
        out *= pi**ai
    return out


def _rising(b: float, k: int) -> float:
    out = 1.0
    for t in range(k):
        out *= b + t
    return out


def _dm_pmf(a: tuple[int, ...], beta: list[float], beta_total: float) -> float:
    """Dirichlet-multinomial pmf of counts a under weights beta (reinforced draws)."""
    out = float(_multinomial_coef(a))
    for ai, bi in zip(a, beta):
        out *= _rising(bi, ai)
    return out / _rising(beta_total, sum(a))


def _hypergeom_pmf(r: tuple[int, ...], x: Composition, denom: int) -> float:
    num = 1
    for ri, xi in zip(r, x):
        num *= math.comb(xi, ri)
    return num / denom


def ehrenfest_row(spec: Ehrenfest, x: Composition) -> TransitionRow:
    """Row of the redistribution chain: hypergeometric removal, multinomial addition."""
    N, d, s = spec.N, spec.d, spec.s
    x = validate_composition(x, N, d)
    denom = math.comb(N, s)
    adds = [(a, _multinomial_pmf(a, spec.p)) for a in compositions_of(s, d)]
    probs: dict = {}
    for r in bounded_compositions(s, x):
        pr = _hypergeom_pmf(r, x, denom)
        if pr == 0.0:
            continue
        base = tuple(xi - ri for xi, ri in zip(x, r))
        for a, pa in adds:
            succ = tuple(b + ai for b, ai in zip(base, a))
            probs[succ] = probs.get(succ, 0.0) + pr * pa
    return TransitionRow(x, probs)


def polya_row(spec, x: Composition) -> TransitionRow:
    """Row of a sequential Polya urn chain (level, up-down, or down-up order)."""
    if not isinstance(spec, _POLYA_SPECS):
        raise ValidationError(f"polya_row needs a Polya spec, got {type(spec).__name__}")
    N, d, s = spec.N, spec.d, spec.s
    x = validate_composition(x, N, d)
    alpha = spec.alpha
    alpha_total = math.fsum(alpha)
    probs: dict = {}

    if isinstance(spec, PolyaLevel):
        # Marks are drawn from the original configuration; additions reinforce
        # the full weights alpha + x (marked balls still present).
        denom = math.comb(N, s)
        beta = [a + xi for a, xi in zip(alpha, x)]
        adds = [(a, _dm_pmf(a, beta, alpha_total + N)) for a in compositions_of(s, d)]
        for r in bounded_compositions(s, x):
            pr = _hypergeom_pmf(r, x, denom)
            if pr == 0.0:
                continue
            base = tuple(xi - ri for xi, ri in zip(x, r))
            for a, pa in adds:
                succ = tuple(b + ai for b, ai in zip(base, a))
                probs[succ] = probs.get(succ, 0.0) + pr * pa
    elif isinstance(spec, PolyaDownUp):
        denom = math.comb(N, s)
        for r in bounded_compositions(s, x):
            pr = _hypergeom_pmf(r, x, denom)
            if pr == 0.0:
                continue
            base = tuple(xi - ri for xi, ri in zip(x, r))
            beta = [a + b for a, b in zip(alpha, base)]
            for a in compositions_of(s, d):
                pa = _dm_pmf(a, beta, alpha_total + N - s)
                succ = tuple(b + ai for b, ai in zip(base, a))
                probs[succ] = probs.get(succ, 0.0) + pr * pa
    else:  # PolyaUpDown
        denom = math.comb(N + s, s)
        beta = [a + xi for a, xi in zip(alpha, x)]
        for a in compositions_of(s, d):
            pa = _dm_pmf(a, beta, alpha_total + N)
            grown = tuple(xi + ai for xi, ai in zip(x, a))
            for r in bounded_compositions(s, grown):
                pr = _hypergeom_pmf(r, grown, denom)
                if pr == 0.0:
                    continue
                succ = tuple(g - ri for g, ri in zip(grown, r))
                probs[succ] = probs.get(succ, 0.0) + pa * pr
    return TransitionRow(x, probs)


def transition_row(spec: ModelSpec, x: Composition) -> TransitionRow:
    """Exact one-step row for any model spec."""
    spec = expand_standard(spec)
    if isinstance(spec, MoranGeneral):
        return moran_row(spec, x)
    if isinstance(spec, Ehrenfest):
        return ehrenfest_row(spec, x)
    return polya_row(spec, x)


def mean_drift(spec: MoranGeneral, x: Composition) -> np.ndarray:
    """Conditional mean of the next Moran state: ((1 - 1/N) I + M^T / N) x."""
    if isinstance(spec, MoranStandard):
        spec = spec.expand()
    N, d = spec.N, spec.d
    x = validate_composition(x, N, d)
    xv = np.asarray(x, dtype=float)
    return (1.0 - 1.0 / N) * xv + (spec.M.matrix.T @ xv) / N


# ---------------------------------------------------------------------------
# Generative sampling
# ---------------------------------------------------------------------------

def pick_index(v: float, weights) -> int:
    """CDF inversion in index order: smallest i with v <= cumsum(weights)[i].

    ``v`` is a uniform draw scaled to the weight total.  Boundary ties resolve
    to the lower index; shortfall of the float total falls through to the last
    index.
    """
    cum = 0.0
    last = len(weights) - 1
    for i in range(last):
        cum += weights[i]
        if v <= cum:
            return i
    return last


def _hypergeom_counts(rng, x: Composition, s: int) -> list[int]:
    """Counts of a uniform s-subset of balls per urn, drawn urn by urn."""
    remaining = sum(x)
    need = s
    r = [0] * len(x)
    for i, xi in enumerate(x):
        if need == 0:
            break
        rest = remaining - xi
        lo = max(0, need - rest)
        hi = min(need, xi)
        if lo == hi:
            k = lo
        else:
            denom = math.comb(remaining, need)
            weights = [math.comb(xi, k) * math.comb(rest, need - k) / denom
                       for k in range(lo, hi + 1)]
            k = lo + pick_index(rng.random(), weights)
        r[i] = k
        need -= k
        remaining -= xi
    return r


def _reinforced_add_counts(rng, base_weights: list[float], total: float, s: int) -> list[int]:
    """Counts of s sequential weighted draws, each adding unit weight to its urn."""
    w = list(base_weights)
    a = [0] * len(w)
    for _ in range(s):
        i = pick_index(rng.random() * total, w)
        w[i] += 1.0
        a[i] += 1
        total += 1.0
    return a


def sample_step(spec: ModelSpec, x: Composition, rng: np.random.Generator) -> Composition:
    """Draw one transition from the model's kernel at x.

    Deterministic given the generator state; distributed per the matching
    exact row.
    """
    spec = expand_standard(spec)
    N, d = spec.N, spec.d
    x = validate_composition(x, N, d)

    if isinstance(spec, MoranGeneral):
        death = pick_index(rng.random() * N, x)
        parent = pick_index(rng.random() * N, x)
        offspring = pick_index(rng.random(), spec.M.rows[parent])
        out = list(x)
        out[offspring] += 1
        out[death] -= 1
        return tuple(out)

    if isinstance(spec, Ehrenfest):
        r = _hypergeom_counts(rng, x, spec.s)
        out = [xi - ri for xi, ri in zip(x, r)]
        for _ in range(spec.s):
            out[pick_index(rng.random(), spec.p)] += 1
        return tuple(out)

    alpha = spec.alpha
    alpha_total = math.fsum(alpha)
    if isinstance(spec, PolyaLevel):
        r = _hypergeom_counts(rng, x, spec.s)
        a = _reinforced_add_counts(rng, [ai + xi for ai, xi in zip(alpha, x)],
                                   alpha_total + N, spec.s)
        return tuple(xi - ri + ai for xi, ri, ai in zip(x, r, a))
    if isinstance(spec, PolyaDownUp):
        r = _hypergeom_counts(rng, x, spec.s)
        base = [xi - ri for xi, ri in zip(x, r)]
        a = _reinforced_add_counts(rng, [ai + bi for ai, bi in zip(alpha, base)],
                                   alpha_total + N - spec.s, spec.s)
        return tuple(b + ai for b, ai in zip(base, a))
    # PolyaUpDown
    a = _reinforced_add_counts(rng, [ai + xi for ai, xi in zip(alpha, x)],
                               alpha_total + N, spec.s)
    grown = tuple(xi + ai for xi, ai in zip(x, a))
    r = _hypergeom_counts(rng, grown, spec.s)
    return tuple(g - ri for g, ri in zip(grown, r))
