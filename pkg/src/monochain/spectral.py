"""Monotone eigenfunctions and the second eigenvalue for every model.

For the Moran chain the construction runs through the reduced matrix
M*_ij = m_ij - m_dj (i, j < d).  When the last mutation row is dominated by
the others, M* is nonnegative; its Perron eigenpair (lambda*, a*) yields the
linear eigenfunction

    f(x) = sum_{i<d} a*_i x_i + N a_d,    a_d = sum_{j<d} m_dj a*_j / (lambda* - 1),

with eigenvalue lambda = 1 - 1/N + lambda*/N.  f is strictly increasing along
the dominance order with minimal increment c1 = min a*_i and sup-norm c2.

The urn families admit the same linear form with a* = (1, ..., 1) and
closed-form second eigenvalues; see ``model_eigendata``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import (
    EigenConsistencyError,
    NoMonotoneConditionError,
    PerronConvergenceError,
    ValidationError,
)
from .kernels import (
    Ehrenfest,
    ModelSpec,
    MoranGeneral,
    MoranStandard,
    MutationMatrix,
    PolyaDownUp,
    PolyaLevel,
    PolyaUpDown,
)
from .statespace import Composition, minimal_element, validate_composition

_EIGEN_ROW_TOL = 1e-10
_PERRON_RESIDUAL_TOL = 1e-12
_PERRON_STEP_TOL = 1e-14
_PERRON_MAX_ITER = 100_000


@dataclass(frozen=True, eq=False)
class ConditionReport:
    """Which of the three dominated-row monotonicity conditions hold.

    strict: last row strictly below the columnwise minimum of the others.
    weak_irreducible: weak domination with an irreducible reduced matrix.
    weak_positive_eigenvector: weak domination and power iteration on the
    reduced matrix converges to a strictly positive vector.
    """

    c1_holds: bool
    c2_holds: bool
    c3_holds: bool
    reduced: np.ndarray

    @property
    def any_holds(self) -> bool:
        return self.c1_holds or self.c2_holds or self.c3_holds


def classify_conditions(M: MutationMatrix) -> ConditionReport:
    """Evaluate the three monotonicity conditions for a mutation matrix."""
    m = M.matrix
    d = M.d
    top = m[: d - 1, : d - 1]
    last = m[d - 1, : d - 1]
    reduced = top - last[np.newaxis, :]
    reduced.setflags(write=False)

    col_min = np.min(top, axis=0)
    weak = bool(np.all(last <= col_min))
    strict = bool(np.all(last < col_min))
    c2 = weak and kernels._strongly_connected(reduced > 0.0)
    c3 = False
    if weak:
        try:
            _, a_star = perron(reduced)
            c3 = bool(np.all(a_star > 0.0))
        except PerronConvergenceError:
            c3 = False
    return ConditionReport(strict, c2, c3, reduced)


def perron(m_star: np.ndarray,
           step_tol: float = _PERRON_STEP_TOL,
           max_iter: int = _PERRON_MAX_ITER) -> tuple[float, np.ndarray]:
    """Dominant eigenpair of the nonnegative reduced matrix by power iteration.

    Starts from the all-ones vector, normalizes by the max entry, and stops
    when successive iterates agree to ``step_tol`` in max norm.  The returned
    vector has max entry 1.  Raises PerronConvergenceError when the iteration
    oscillates (complex or tied dominant pair) or stalls.
    """
    a = np.asarray(m_star, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"reduced matrix must be square, got shape {a.shape}")
    if np.any(a < 0.0):
        raise ValidationError("reduced matrix must be nonnegative")
    k = a.shape[0]
    if not np.any(a):
        # Zero matrix: every positive vector is an eigenvector for 0.
        return 0.0, np.ones(k)

    v = np.ones(k)
    lam = 0.0
    for _ in range(max_iter):
        w = a @ v
        mx = float(np.max(w))
        if mx <= 0.0:
            raise PerronConvergenceError(
                "Perron iteration failed: iterate vanished (nilpotent reduced matrix?)"
            )
        w /= mx
        if float(np.max(np.abs(w - v))) < step_tol:
            lam = mx
            v = w
            break
        v = w
    else:
        raise PerronConvergenceError(
            f"Perron iteration failed to converge within {max_iter} iterations"
        )

    residual = float(np.max(np.abs(a @ v - lam * v)))
    if residual > _PERRON_RESIDUAL_TOL:
        raise PerronConvergenceError(
            f"Perron iteration converged to residual {residual:.3e} > {_PERRON_RESIDUAL_TOL}"
        )
    if not lam < 1.0:
        raise PerronConvergenceError(
            f"dominant reduced eigenvalue {lam} is not < 1; invalid mutation matrix?"
        )
    return lam, v


@dataclass(frozen=True)
class EigenData:
    """Second eigenvalue and strictly monotone linear eigenfunction.

    f(x) = sum_{i<d} a_star[i] * x_i + f0 with f0 = N * a_d; c1 is the minimal
    increment of f along the dominance order and c2 = sup |f|.
    """

    lam: float
    a_star: tuple[float, ...]
    a_d: float
    c1: float
    c2: float
    f0: float
    N: int

    def __post_init__(self):
        if not 0.0 <= self.lam < 1.0:
            raise ValidationError(f"second eigenvalue must be in [0, 1), got {self.lam}")
        if any(a <= 0.0 for a in self.a_star):
            raise ValidationError(f"a_star entries must be positive, got {self.a_star}")
        if self.c1 <= 0.0 or self.c2 <= 0.0:
            raise ValidationError("c1 and c2 must be positive")

    @property
    def d(self) -> int:
        return len(self.a_star) + 1

    def value(self, x: Composition) -> float:
        """Evaluate the eigenfunction at a state."""
        acc = self.f0
        for a, xi in zip(self.a_star, x):
            acc += a * xi
        return acc

    def to_json_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "a_star": list(self.a_star),
            "a_d": self.a_d,
            "c1": self.c1,
            "c2": self.c2,
            "f0": self.f0,
            "N": self.N,
            "d": self.d,
        }


def _check_rows(ed: EigenData, spec: MoranGeneral) -> None:
    """Spot-check the eigen identity sum_y K(x,y) f(y) = lam f(x) on a few states."""
    N, d = spec.N, spec.d
    probes = [minimal_element(N, d), (N,) + (0,) * (d - 1)]
    base, extra = divmod(N, d)
    probes.append(tuple(base + (1 if i < extra else 0) for i in range(d)))
    for x in probes:
        row = kernels.moran_row(spec, x)
        kf = math.fsum(p * ed.value(y) for y, p in row.probs.items())
        if abs(kf - ed.lam * ed.value(x)) > _EIGEN_ROW_TOL:
            raise EigenConsistencyError(
                f"eigen identity violated at {x}: Kf={kf!r}, lam*f={ed.lam * ed.value(x)!r}"
            )


def build_eigenfunction(M: MutationMatrix, n_total: int) -> EigenData:
    """Monotone eigenfunction of the Moran chain with mutation matrix M.

    Requires one of the monotonicity conditions; verifies the row-wise eigen
    identity on sample states before returning.
    """
    if n_total < 1:
        raise ValidationError(f"need N >= 1, got {n_total}")
    report = classify_conditions(M)
    if not report.any_holds:
        raise NoMonotoneConditionError(
            "mutation matrix fails the dominated-last-row monotonicity conditions "
            "(strict domination / weak + irreducible reduced / weak + positive eigenvector)"
        )
    lam_star, a_star = perron(report.reduced)
    d = M.d
    a_d = math.fsum(M.matrix[d - 1, j] * a_star[j] for j in range(d - 1)) / (lam_star - 1.0)
    if not a_d < 0.0:
        raise EigenConsistencyError(
            f"expected a negative shift for the last species, got a_d={a_d}"
        )
    lam = 1.0 - 1.0 / n_total + lam_star / n_total
    c1 = float(np.min(a_star))
    c2 = max(-n_total * a_d, n_total * (float(np.max(a_star)) + a_d))
    ed = EigenData(
        lam=lam,
        a_star=tuple(float(a) for a in a_star),
        a_d=a_d,
        c1=c1,
        c2=c2,
        f0=n_total * a_d,
        N=n_total,
    )
    _check_rows(ed, MoranGeneral(n_total, M))
    return ed


def model_eigendata(spec: ModelSpec) -> EigenData:
    """Second eigenvalue and monotone eigenfunction for any model spec.

    Urn families share the eigenfunction f(x) = sum_{i<d} x_i - N (1 - p_d)
    with p the normalized urn weights (Polya) or the redistribution law
    (Ehrenfest); the second eigenvalue follows the family formula.
    """
    if isinstance(spec, MoranGeneral):
        return build_eigenfunction(spec.M, spec.N)

    N = spec.N
    if isinstance(spec, MoranStandard):
        lam = 1.0 - spec.m / N
        p_last = spec.p[-1]
    elif isinstance(spec, Ehrenfest):
        lam = 1.0 - spec.s / N
        p_last = spec.p[-1]
    else:
        total = math.fsum(spec.alpha)
        s = spec.s
        if isinstance(spec, PolyaLevel):
            lam = 1.0 - (s * total) / (N * (N + total))
        elif isinstance(spec, PolyaDownUp):
            lam = 1.0 - (s * total) / (N * (N + total - s))
        elif isinstance(spec, PolyaUpDown):
            lam = 1.0 - (s * total) / ((N + s) * (N + total))
        else:
            raise ValidationError(f"unsupported model spec {type(spec).__name__}")
        p_last = spec.alpha[-1] / total

    a_d = -(1.0 - p_last)
    return EigenData(
        lam=lam,
        a_star=(1.0,) * (spec.d - 1),
        a_d=a_d,
        c1=1.0,
        c2=max(N * p_last, N * (1.0 - p_last)),
        f0=N * a_d,
        N=N,
    )


def eigen_residual(spec: ModelSpec, ed: EigenData, states) -> float:
    """Max-norm residual of Kf - lam f over the given states (exact rows)."""
    spec = kernels.expand_standard(spec)
    worst = 0.0
    for x in states:
        x = validate_composition(x, ed.N, ed.d)
        row = kernels.transition_row(spec, x)
        kf = math.fsum(p * ed.value(y) for y, p in row.probs.items())
        worst = max(worst, abs(kf - ed.lam * ed.value(x)))
    return worst
