"""Desk-scale ground truth: dense kernels, stationary laws, exact TV curves.

Everything here materializes the full state space, so it is gated by the
enumeration cap.  The stationary distribution comes from iterated squaring of
the kernel (the row-spread convergence criterion doubles as an aperiodicity
witness); TV curves use row-sparse vector products and never materialize K^n.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import StationaryConvergenceError, ValidationError
from .kernels import (
    ModelSpec,
    MoranGeneral,
    MoranStandard,
    TransitionRow,
    expand_standard,
    transition_row,
)
from .statespace import (
    DEFAULT_STATE_CAP,
    Composition,
    enumerate_states,
    validate_composition,
)

_STATIONARY_CHECK_TOL = 1e-12
_ROW_SPREAD_TOL = 1e-13
_MAX_SQUARINGS = 60


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Materialized kernel: states in enumeration order plus sparse row data."""

    spec: ModelSpec
    states: list[Composition]
    rows: list[TransitionRow]
    csr: sp.csr_matrix
    index: dict = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.states)


def build_matrix(spec: ModelSpec, cap: int | None = DEFAULT_STATE_CAP) -> TransitionMatrix:
    """Exact transition matrix of a model over its full state space."""
    expanded = expand_standard(spec)
    states = enumerate_states(expanded.N, expanded.d, cap=cap)
    index = {x: i for i, x in enumerate(states)}
    rows = [transition_row(expanded, x) for x in states]

    data, cols, indptr = [], [], [0]
    for row in rows:
        for succ, p in row.probs.items():
            cols.append(index[succ])
            data.append(p)
        indptr.append(len(cols))
    csr = sp.csr_matrix(
        (np.asarray(data), np.asarray(cols), np.asarray(indptr)),
        shape=(len(states), len(states)),
    )
    return TransitionMatrix(spec=spec, states=states, rows=rows, csr=csr, index=index)


def stationary(tm: TransitionMatrix) -> np.ndarray:
    """Stationary distribution by iterated squaring of the kernel.

    Squares K until all rows agree to within the spread tolerance (these rows
    are then pi), and verifies pi K = pi to 1e-12 in max norm.  Failure to
    converge indicates a reducible or periodic kernel.
    """
    a = tm.csr.toarray()
    for _ in range(_MAX_SQUARINGS):
        spread = float(np.max(a.max(axis=0) - a.min(axis=0)))
        if spread < _ROW_SPREAD_TOL:
            break
        a = a @ a
        # Renormalize rows to keep stochasticity from drifting under repeated
        # squaring.
        a /= a.sum(axis=1, keepdims=True)
    else:
        raise StationaryConvergenceError(
            f"row spreads did not fall below {_ROW_SPREAD_TOL} after "
            f"{_MAX_SQUARINGS} squarings; kernel may be reducible or periodic"
        )
    pi = a.mean(axis=0)
    pi /= pi.sum()
    residual = float(np.max(np.abs(pi @ tm.csr - pi)))
    if residual > _STATIONARY_CHECK_TOL:
        raise StationaryConvergenceError(
            f"stationarity residual {residual:.3e} exceeds {_STATIONARY_CHECK_TOL}"
        )
    return pi


def tv_curve(tm: TransitionMatrix, x0: Composition, n_max: int,
             pi: np.ndarray | None = None) -> np.ndarray:
    """Exact TV distance to stationarity after 0..n_max steps from x0."""
    x0 = validate_composition(x0, None, None)
    if x0 not in tm.index:
        raise ValidationError(f"start state {x0!r} is not in the state space")
    if n_max < 0:
        raise ValidationError(f"n_max must be >= 0, got {n_max}")
    if pi is None:
        pi = stationary(tm)
    kt = tm.csr.T.tocsr()
    v = np.zeros(tm.dim)
    v[tm.index[x0]] = 1.0
    out = np.empty(n_max + 1)
    for n in range(n_max + 1):
        out[n] = 0.5 * float(np.abs(v - pi).sum())
        if n < n_max:
            v = kt @ v
    return out


def check_irreducible_aperiodic(spec: MoranGeneral,
                                cap: int | None = DEFAULT_STATE_CAP) -> bool:
    """Whether the chain's state graph is strongly connected with a self-loop."""
    if not isinstance(spec, (MoranGeneral, MoranStandard)):
        raise ValidationError("check targets the Moran replacement chain")
    tm = build_matrix(spec, cap=cap)
    n_comp, _ = connected_components(tm.csr, directed=True, connection="strong")
    if n_comp != 1:
        return False
    return bool(np.any(tm.csr.diagonal() > 0.0))


@dataclass(frozen=True)
class MonotonicityAudit:
    """Result of a randomized stochastic-monotonicity audit."""

    trials: int
    comparable_pairs: int
    violations: int
    max_excess: float


def monotonicity_audit(tm: TransitionMatrix, trials: int, seed: int = 0,
                       tol: float = 1e-10) -> MonotonicityAudit:
    """Check Kg(x) <= Kg(y) for random monotone g over all comparable pairs x <= y.

    Test functions accumulate nonnegative increments along the coordinate
    grid of the first d-1 counts, so they are monotone by construction; the
    seed makes the audit deterministic.  A monotone kernel produces zero
    violations; a non-monotone one may be caught (the audit is a randomized
    search, not a proof of monotonicity).
    """
    if tm.dim > 2_000:
        raise ValidationError(f"audit limited to 2000 states, got {tm.dim}")
    states = np.asarray(tm.states, dtype=np.int64)
    d = states.shape[1]
    prefix = states[:, : d - 1]
    comparable = np.all(prefix[:, None, :] <= prefix[None, :, :], axis=2)
    np.fill_diagonal(comparable, False)
    n_pairs = int(comparable.sum())

    # Order states by prefix level so predecessors are filled first.
    order = np.argsort(prefix.sum(axis=1), kind="stable")
    rng = np.random.default_rng(seed)

    violations = 0
    max_excess = 0.0
    for _ in range(trials):
        increments = rng.random(tm.dim)
        g = np.zeros(tm.dim)
        for idx in order:
            x = tm.states[int(idx)]
            best = 0.0
            for i in range(d - 1):
                if x[i] > 0:
                    pred = list(x)
                    pred[i] -= 1
                    pred[d - 1] += 1
                    best = max(best, g[tm.index[tuple(pred)]])
            g[int(idx)] = best + increments[int(idx)]
        kg = tm.csr @ g
        excess = kg[:, None] - kg[None, :] - tol
        bad = comparable & (excess > 0.0)
        violations += int(bad.sum())
        if bad.any():
            max_excess = max(max_excess, float(excess[bad].max()))
    return MonotonicityAudit(
        trials=trials,
        comparable_pairs=n_pairs,
        violations=violations,
        max_excess=max_excess,
    )
