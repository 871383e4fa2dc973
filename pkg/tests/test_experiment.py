import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gpcls.basis import eval_tensor_batch
from gpcls.config import Config, ConfigError
from gpcls.errors import DegenerateInput
from gpcls.experiment import (
    RateReport,
    Row,
    basis_size,
    compare_schemes,
    derived_seed,
    fit_slope,
    prepare,
    recover_once,
    run_recovery_experiment,
    synth_function,
    validate,
)
from gpcls.indexing import AffineWeights, GeometricRho, IndexSet, smallest_m
from gpcls.least_squares import evaluate
from gpcls.sampling import draw_mu

SPEC = AffineWeights(GeometricRho(1.0, 2.0))
SMALL = {"experiment.target": "synthetic_scalar", "experiment.n_grid": [64, 128, 256], "basis.family": "jacobi"}


# -- synthetic targets ---------------------------------------------------------------


def test_synth_single_index():
    active = IndexSet([(2,)], [3.5])
    f = synth_function(SPEC, active, 4)
    assert abs(f[0, 0]) == pytest.approx(1 / 3.5, rel=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 60), st.integers(1, 4), st.integers(0, 2**40))
def test_synth_unit_norm(m, d, seed):
    active = smallest_m(SPEC, m)
    f = synth_function(SPEC, active, seed, d)
    assert f.shape == (m, d)
    assert np.sum((active.sigma_array()[:, None] * f) ** 2) == pytest.approx(1.0, abs=1e-12)
    assert np.array_equal(f, synth_function(SPEC, active, seed, d))


# -- slope fit ---------------------------------------------------------------------


def test_fit_exact_power_laws():
    ns = [64, 128, 256, 512]
    fit = fit_slope([(n, n**-1.0) for n in ns])
    assert fit["slope"] == pytest.approx(-1.0, abs=1e-12)
    fit = fit_slope([(n, 3 * n**-0.5) for n in ns])
    assert fit["slope"] == pytest.approx(-0.5, abs=1e-12)
    assert fit["intercept"] == pytest.approx(math.log(3), abs=1e-12)
    assert fit["ci"][0] <= fit["slope"] <= fit["ci"][1]


def test_fit_noisy_power_law():
    rng = np.random.default_rng(2024)
    ns = [2**k for k in range(4, 14)]
    fit = fit_slope([(n, n**-1.0 * rng.uniform(0.9, 1.1)) for n in ns])
    assert -1.1 <= fit["slope"] <= -0.9


@pytest.mark.parametrize("points", [[(1, 1), (2, 0.5)], [(1, 1), (2, 0), (4, 1)], [(2, 1), (2, 0.5), (2, 0.1)],
                                    [(1, 1), (2, math.nan), (3, 1)]])
def test_fit_degenerate(points):
    with pytest.raises(DegenerateInput):
        fit_slope(points)


# -- configuration checks ---------------------------------------------------------------


@pytest.mark.parametrize("override", [{"experiment.n_grid": [64, 64]}, {"weights.q": 2.0}, {"experiment.scheme": "iii"},
                                      {"experiment.target": "other"}, {"experiment.d": 0}])
def test_validate_rejects(override):
    with pytest.raises(ConfigError):
        validate(Config({**SMALL, **override}))


def test_basis_size():
    cfg = Config()
    assert basis_size(1024, "ii", cfg) == 1024
    assert basis_size(1024, "i", cfg) == math.floor(1024 / (20 * math.log(1024)))
    assert basis_size(8, "i", cfg) == 1


def test_derived_seed_is_stable_and_distinct():
    assert derived_seed(1, 2) == derived_seed(1, 2)
    assert derived_seed(1, 2) != derived_seed(2, 1)
    assert 0 <= derived_seed(5) < 2**63


# -- experiments ---------------------------------------------------------------------


def test_target_inside_the_space_is_exact():
    cfg = Config({**SMALL, "experiment.active_factor": 1})
    report = run_recovery_experiment(cfg)
    assert report.rows[-1].status == "exact" and report.rows[-1].rmse <= 1e-8


def test_small_rate_run_and_report_formats():
    report = run_recovery_experiment(Config({**SMALL, "experiment.n_grid": [64, 128, 256, 512, 1024]}))
    assert [r.n for r in report.rows] == [64, 128, 256, 512, 1024]
    assert all(r.status == "ok" for r in report.rows)
    assert report.fitted_slope < 0 and report.theory_slope == -1.0
    lines = report.to_csv().split("\r\n")
    assert lines[0] == "n,m,samples_used,lambda_min,rmse,stderr,status"
    assert len(lines) == 7 and lines[-1] == ""
    data = report.to_json()
    assert data["settings"]["log_factor"] == 20.0 and len(data["rows"]) == 5


def test_report_deterministic_and_thread_independent():
    cfg = Config({**SMALL, "experiment.target": "synthetic_bochner", "experiment.d": 3})
    a = run_recovery_experiment(cfg, threads=1)
    b = run_recovery_experiment(cfg, threads=3)
    assert a.to_csv() == b.to_csv() and a.dumps_json() == b.dumps_json()


def test_parseval_error_matches_monte_carlo():
    cfg = Config({**SMALL, "experiment.n_grid": [128]})
    prob = prepare(cfg)
    out = recover_once(prob, 128)
    J = max(prob.active.max_dim, 1)
    Y = draw_mu(prob.family, 20000, 77, J).points
    truth = eval_tensor_batch(prob.family, prob.active.indices, Y) @ prob.target
    err2 = np.sum((evaluate(out.approx, prob.family, Y) - truth) ** 2, axis=1)
    mc = math.sqrt(err2.mean())
    se = err2.std(ddof=1) / math.sqrt(len(err2)) / (2 * mc)
    assert abs(mc - out.row.rmse) <= 3 * se


def test_scheme_ii_run():
    cfg = Config({**SMALL, "experiment.n_grid": [16, 32, 64], "sampling.pool_factor": 8.0})
    report = run_recovery_experiment(cfg, scheme="ii")
    assert report.settings["scheme"] == "ii"
    for r in report.rows:
        assert r.m == r.n and r.samples_used <= math.ceil(1.2 * r.n) and r.lambda_min >= 1 / 66


def test_ill_conditioned_rows_are_recorded():
    cfg = Config({**SMALL, "sampling.lambda_floor": 50.0})
    report = run_recovery_experiment(cfg)
    assert all(r.status == "ill_conditioned" and math.isnan(r.rmse) for r in report.rows)
    assert report.fitted_slope is None


def test_compare_schemes_warns():
    rows_i = [Row(n, 1, n, 1.0, e, 0.0, "ok") for n, e in [(64, 1.0), (128, 0.5), (256, 0.25)]]
    better = [Row(n, n, n, 1.0, e / 2, 0.0, "ok") for n, e in [(64, 1.0), (128, 0.5), (256, 0.25)]]
    worse = [Row(n, n, n, 1.0, e * 2, 0.0, "ok") for n, e in [(64, 1.0), (128, 0.5), (256, 0.25)]]
    rep = lambda rows: RateReport(rows, None, None, -1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert compare_schemes(rep(rows_i), rep(better)) == 1.0
    with pytest.warns(UserWarning):
        assert compare_schemes(rep(rows_i), rep(worse)) == 0.0
