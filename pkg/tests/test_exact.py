import math

import numpy as np
import pytest
import scipy.sparse as sp

from monochain import (
    Ehrenfest,
    MoranGeneral,
    MoranStandard,
    MutationMatrix,
    PolyaDownUp,
    PolyaLevel,
    PolyaUpDown,
    StationaryConvergenceError,
    TransitionRow,
    ValidationError,
    build_matrix,
    check_irreducible_aperiodic,
    crude_bound,
    dm_log_pmf,
    model_eigendata,
    monotonicity_audit,
    multinomial_log_pmf,
    stationary,
    tv_bound_coefficients,
    tv_curve,
)
from monochain.exact import TransitionMatrix
from helpers import delta_construction_matrix, random_positive_matrix


def test_build_matrix_shape_and_rows():
    tm = build_matrix(Ehrenfest(8, 1, (1 / 3, 1 / 3, 1 / 3)))
    assert tm.dim == 45  # C(10, 8)
    sums = np.asarray(tm.csr.sum(axis=1)).ravel()
    assert sums == pytest.approx(np.ones(45), abs=1e-12)


def test_standard_and_general_matrices_coincide():
    std = MoranStandard(5, 0.6, (0.3, 0.2, 0.5))
    tm1 = build_matrix(std)
    tm2 = build_matrix(std.expand())
    assert (tm1.csr != tm2.csr).nnz == 0


def _stationary_error(spec, log_pmf):
    tm = build_matrix(spec)
    pi = stationary(tm)
    return max(abs(p - math.exp(log_pmf(x))) for p, x in zip(pi, tm.states))


def test_stationary_matches_multinomial_for_ehrenfest():
    p = (0.25, 0.35, 0.4)
    err = _stationary_error(Ehrenfest(7, 2, p), lambda x: multinomial_log_pmf(x, 7, p))
    assert err <= 1e-10


def test_stationary_matches_dirichlet_multinomial_for_standard_moran():
    n, m, p = 6, 0.5, (0.3, 0.2, 0.5)
    alpha = tuple(n * m * pi / (1 - m) for pi in p)
    err = _stationary_error(MoranStandard(n, m, p), lambda x: dm_log_pmf(x, n, alpha))
    assert err <= 1e-10


def test_stationary_matches_multinomial_at_full_mutation():
    n, p = 5, (0.3, 0.2, 0.5)
    err = _stationary_error(MoranStandard(n, 1.0, p), lambda x: multinomial_log_pmf(x, n, p))
    assert err <= 1e-10


@pytest.mark.parametrize("ctor", [PolyaLevel, PolyaUpDown, PolyaDownUp])
def test_stationary_is_dirichlet_multinomial_for_all_polya_orders(ctor):
    # The reordered variants share the level model's stationary law; this is
    # what justifies reusing the Dirichlet-multinomial in their crude bounds.
    n, alpha = 6, (1.0, 2.0, 1.5)
    err = _stationary_error(ctor(n, 2, alpha), lambda x: dm_log_pmf(x, n, alpha))
    assert err <= 1e-10


def test_stationary_smallest_population():
    tm = build_matrix(Ehrenfest(1, 1, (0.25, 0.75)))
    pi = stationary(tm)
    assert dict(zip(tm.states, pi)) == pytest.approx({(1, 0): 0.25, (0, 1): 0.75})


def test_stationary_rejects_periodic_kernel():
    # Hand-built two-state flip: no valid model produces this, but the solver
    # must refuse rather than return garbage.
    states = [(0, 1), (1, 0)]
    rows = [TransitionRow((0, 1), {(1, 0): 1.0}), TransitionRow((1, 0), {(0, 1): 1.0})]
    csr = sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
    tm = TransitionMatrix(spec=None, states=states, rows=rows, csr=csr,
                          index={s: i for i, s in enumerate(states)})
    with pytest.raises(StationaryConvergenceError):
        stationary(tm)


def test_tv_curve_starts_at_complement_of_stationary_mass():
    spec = PolyaLevel(6, 1, (1.0, 2.0, 1.5))
    tm = build_matrix(spec)
    pi = stationary(tm)
    x0 = (2, 2, 2)
    curve = tv_curve(tm, x0, 0)
    assert curve[0] == pytest.approx(1.0 - pi[tm.index[x0]], abs=1e-12)


def test_tv_curve_deterministic():
    tm = build_matrix(Ehrenfest(6, 1, (0.3, 0.3, 0.4)))
    a = tv_curve(tm, (0, 0, 6), 50)
    b = tv_curve(tm, (0, 0, 6), 50)
    assert np.array_equal(a, b)


def test_tv_curve_within_bound_envelope():
    spec = Ehrenfest(8, 1, (0.25, 0.25, 0.5))
    tm = build_matrix(spec)
    ed = model_eigendata(spec)
    x0 = (4, 4, 0)
    lower, upper = tv_bound_coefficients(ed, x0)
    curve = tv_curve(tm, x0, 300)
    decay = 1.0
    for tv in curve:
        assert lower * decay - 1e-11 <= tv <= upper * decay + 1e-11
        decay *= ed.lam


def test_tv_curve_under_crude_bound():
    for spec in [Ehrenfest(6, 1, (0.25, 0.35, 0.4)), PolyaLevel(6, 2, (1.0, 2.0, 1.5))]:
        tm = build_matrix(spec)
        ed = model_eigendata(spec)
        x0 = (1, 2, 3)
        coeff = crude_bound(spec, x0)
        curve = tv_curve(tm, x0, 200)
        decay = 1.0
        for tv in curve:
            assert tv <= coeff * decay + 1e-11
            decay *= ed.lam


def test_eigen_identity_matrix_wise():
    # K f = lam f as one sparse product over the whole state space.
    for spec in [
        MoranGeneral(6, delta_construction_matrix(0.05)),
        PolyaUpDown(6, 2, (1.0, 2.0, 1.5)),
        Ehrenfest(6, 2, (0.25, 0.35, 0.4)),
    ]:
        tm = build_matrix(spec)
        ed = model_eigendata(spec)
        f = np.array([ed.value(x) for x in tm.states])
        assert np.max(np.abs(tm.csr @ f - ed.lam * f)) <= 1e-10


def test_tv_curve_nonincreasing():
    # Observational: distance to stationarity under the same kernel never
    # grows step over step (up to the double-precision floor).
    for spec in [PolyaUpDown(7, 2, (1.0, 2.0, 1.5)), Ehrenfest(7, 1, (0.3, 0.3, 0.4))]:
        curve = tv_curve(build_matrix(spec), (3, 3, 1), 300)
        assert np.all(np.diff(curve) <= 1e-12)


def test_tv_curve_rejects_foreign_state():
    tm = build_matrix(Ehrenfest(6, 1, (0.3, 0.3, 0.4)))
    with pytest.raises(ValidationError):
        tv_curve(tm, (7, 0, 0), 10)


def test_irreducible_aperiodic_for_random_mutation_matrices():
    rng = np.random.default_rng(22)
    for _ in range(10):
        d = int(rng.integers(2, 4))
        n = int(rng.integers(1, 7))
        spec = MoranGeneral(n, random_positive_matrix(rng, d))
        assert check_irreducible_aperiodic(spec)


def test_irreducible_aperiodic_accepts_standard_spec():
    assert check_irreducible_aperiodic(MoranStandard(4, 0.5, (0.4, 0.6)))


def test_monotone_families_pass_the_audit():
    for spec in [
        Ehrenfest(6, 1, (0.25, 0.35, 0.4)),
        PolyaDownUp(6, 2, (1.0, 2.0, 1.5)),
        MoranGeneral(6, delta_construction_matrix(0.05)),
    ]:
        tm = build_matrix(spec)
        report = monotonicity_audit(tm, trials=200, seed=0)
        assert report.violations == 0
        assert report.comparable_pairs > 0


def test_audit_runs_on_condition_violating_matrix():
    # Informative only: the audit may or may not find a witness, but it must
    # report coherently.
    bad = MoranGeneral(6, MutationMatrix([
        [0.2, 0.4, 0.4],
        [0.3, 0.4, 0.3],
        [0.5, 0.1, 0.4],
    ]))
    report = monotonicity_audit(build_matrix(bad), trials=50, seed=1)
    assert report.trials == 50
    assert report.violations >= 0
    if report.violations:
        assert report.max_excess > 0
