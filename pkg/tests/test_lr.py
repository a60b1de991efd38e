import math

import numpy as np
import pytest
from scipy.stats import chi2

import markerscreen as ms
from markerscreen._rng import substream
from markerscreen.errors import DegenerateData, RegimeViolation
from markerscreen.lr import _deviance_core

from _oracles import (
    grid_best_mixture_loglik,
    mixture_loglik_oracle,
    pooled_normal_oracle,
)


# ---------------------------------------------------------------- pooled fit

def test_pooled_fit_two_symmetric_points():
    fit = ms.fit_pooled_normal([0.0, 2.0])
    assert fit.mu == 1.0
    assert fit.sigma2 == 1.0


def test_pooled_fit_zero_variance_raises():
    with pytest.raises(DegenerateData):
        ms.fit_pooled_normal([5.0, 5.0, 5.0, 5.0])


def test_pooled_fit_matches_direct_formula_oracle():
    rng = np.random.default_rng(314)
    x = rng.normal(15.0, math.sqrt(2.23), size=20)
    mu_ref, s2_ref, ll_ref = pooled_normal_oracle(x)
    fit = ms.fit_pooled_normal(x)
    assert abs(fit.mu - mu_ref) < 1e-12
    assert abs(fit.sigma2 - s2_ref) < 1e-12
    assert abs(fit.loglik - ll_ref) < 1e-9


# ------------------------------------------------------------- mixture fit

def test_mixture_all_equal_raises():
    with pytest.raises(DegenerateData):
        ms.fit_mixture_fixed_weights([3.0] * 10, 5, 5)


def test_mixture_two_clusters_beats_grid_oracle():
    rng = np.random.default_rng(11)
    x = np.concatenate([
        np.zeros(5) + rng.uniform(-1e-3, 1e-3, 5),
        np.full(5, 10.0) + rng.uniform(-1e-3, 1e-3, 5),
    ])
    grid_best = grid_best_mixture_loglik(x, 5)

    fit = ms.fit_mixture_fixed_weights(x, 5, 5)
    lo, hi = sorted([fit.mu1, fit.mu2])
    assert abs(lo - 0.0) < 0.05
    assert abs(hi - 10.0) < 0.05
    assert fit.loglik >= grid_best - 1e-3
    pooled = ms.fit_pooled_normal(x)
    assert fit.loglik > pooled.loglik


def test_mixture_loglik_field_is_the_mixture_objective():
    rng = np.random.default_rng(21)
    x = rng.normal(0, 1, 12)
    fit = ms.fit_mixture_fixed_weights(x, 7, 5)
    ll_ref = mixture_loglik_oracle(x, 7 / 12, fit.mu1, fit.mu2,
                                   fit.sigma21, fit.sigma22)
    assert abs(fit.loglik - ll_ref) < 1e-9


def test_mixture_weights_fixed_by_design():
    rng = np.random.default_rng(3)
    x = rng.normal(0, 1, 10)
    fit = ms.fit_mixture_fixed_weights(x, 4, 6)
    assert fit.w1 == pytest.approx(0.4)
    assert fit.w2 == pytest.approx(0.6)


def test_mixture_nonconvergence_is_not_an_error():
    rng = np.random.default_rng(9)
    x = np.concatenate([rng.normal(0, 1, 6), rng.normal(8, 1, 6)])
    fit = ms.fit_mixture_fixed_weights(x, 6, 6, max_iter=1)
    assert fit.iterations <= 1
    assert isinstance(fit.converged, bool)


def test_mixture_monotone_debug_flag():
    rng = np.random.default_rng(17)
    x = np.concatenate([rng.normal(0, 1, 8), rng.normal(3, 2, 8)])
    fit = ms.fit_mixture_fixed_weights(x, 8, 8, debug_monotone=True)
    assert fit.loglik >= ms.fit_pooled_normal(x).loglik - 1e-8


def test_mixture_single_normal_null_tail():
    # 1000 null replicates: the deviance exceeds the chi2(2) 99.9% point
    # (13.8155) in at most 1% of them.
    cutoff = chi2.isf(0.001, df=2)
    rng = np.random.default_rng(2718)
    exceed = 0
    for _ in range(1000):
        x = rng.normal(15.0, math.sqrt(0.48), size=20)
        mix = ms.fit_mixture_fixed_weights(x, 10, 10)
        pooled = ms.fit_pooled_normal(x)
        dev = 2.0 * (mix.loglik - pooled.loglik)
        if dev > cutoff:
            exceed += 1
    assert exceed <= 10


# ----------------------------------------------------------------- deviance

def test_deviance_identical_halves_is_zero():
    score = ms.deviance_lr([0.0, 1.0, 0.0, 1.0], 2, 2)
    assert score.value == 0.0
    assert score.p_value == 1.0


def test_deviance_pvalue_closed_form():
    # chi2(2) survival is exp(-x/2); -2 ln(0.05) lands exactly on p = 0.05
    assert math.exp(-(-2.0 * math.log(0.05)) / 2.0) == pytest.approx(0.05)
    rng = np.random.default_rng(40)
    x = rng.normal(0, 1, 14)
    score = ms.deviance_lr(x, 7, 7)
    assert score.p_value == pytest.approx(math.exp(-score.value / 2.0), abs=1e-15)


def test_deviance_two_clusters_tiny_pvalue():
    rng = np.random.default_rng(12)
    x = np.concatenate([
        rng.uniform(-1e-3, 1e-3, 5),
        10.0 + rng.uniform(-1e-3, 1e-3, 5),
    ])
    score = ms.deviance_lr(x, 5, 5)
    assert score.p_value < 1e-10


def test_deviance_degenerate_data_scores_zero():
    score = ms.deviance_lr([4.0] * 12, 6, 6)
    assert score.value == 0.0
    assert score.p_value == 1.0


def test_deviance_nesting_identity():
    rng = np.random.default_rng(77)
    for _ in range(20):
        x = rng.normal(0, 1, 16) + rng.choice([0.0, 2.0]) * np.repeat([0, 1], 8)
        score = ms.deviance_lr(x, 8, 8)
        mix, pooled = score.fit_diagnostics
        assert mix.loglik >= pooled.loglik - 1e-8
        assert score.value == pytest.approx(
            max(0.0, 2.0 * (mix.loglik - pooled.loglik)), abs=1e-9)
        assert score.value >= 0.0


def test_label_swap_symmetry():
    rng = np.random.default_rng(101)
    x = np.concatenate([rng.normal(0, 1, 6), rng.normal(4, 2, 9)])
    fwd = ms.deviance_lr(x, 6, 9)
    swapped = ms.deviance_lr(np.concatenate([x[6:], x[:6]]), 9, 6)
    assert abs(fwd.value - swapped.value) < 1e-9
    m1, _ = fwd.fit_diagnostics
    m2, _ = swapped.fit_diagnostics
    assert m1.mu1 == pytest.approx(m2.mu2, abs=1e-9)
    assert m1.mu2 == pytest.approx(m2.mu1, abs=1e-9)
    assert m1.sigma21 == pytest.approx(m2.sigma22, abs=1e-9)
    assert m1.sigma22 == pytest.approx(m2.sigma21, abs=1e-9)


def test_affine_equivariance_of_deviance():
    rng = np.random.default_rng(55)
    x = np.concatenate([rng.normal(0, 1, 10), rng.normal(1.5, 1, 10)])
    base = ms.deviance_lr(x, 10, 10).value
    for a, b in [(2.0, 0.0), (-3.0, 7.0), (0.25, -40.0)]:
        transformed = ms.deviance_lr(a * x + b, 10, 10).value
        assert abs(transformed - base) < 1e-6


# ------------------------------------------------------------ matrix scoring

def _one_protein_matrix(x, n1):
    layout = np.array([1] * n1 + [2] * (len(x) - n1))
    return ms.ExpressionMatrix(values=np.asarray(x, float)[None, :],
                               layout=layout)


def test_score_matrix_composition_single_protein():
    rng = np.random.default_rng(8)
    x = np.concatenate([rng.normal(0, 1, 5), rng.normal(5, 1, 5)])
    direct = ms.deviance_lr(x, 5, 5)
    via_matrix = ms.score_matrix_lr(_one_protein_matrix(x, 5))
    assert len(via_matrix) == 1
    assert via_matrix[0].value == pytest.approx(direct.value, abs=1e-12)
    assert via_matrix[0].p_value == pytest.approx(direct.p_value, abs=1e-15)


def test_score_matrix_small_design_raises_without_override():
    rng = np.random.default_rng(2)
    m = _one_protein_matrix(rng.normal(0, 1, 6), 3)
    with pytest.raises(RegimeViolation):
        ms.score_matrix_lr(m)
    with pytest.warns(UserWarning):
        scores = ms.score_matrix_lr(m, override=True)
    assert len(scores) == 1


def test_score_matrix_handles_interleaved_layout():
    rng = np.random.default_rng(44)
    x = rng.normal(0, 1, 10)
    inter = ms.ExpressionMatrix(
        values=x[None, :],
        layout=np.array([1, 2, 1, 2, 1, 2, 1, 2, 1, 2]),
    )
    cond1_first = np.concatenate([x[::2], x[1::2]])
    want = ms.deviance_lr(cond1_first, 5, 5).value
    got = ms.score_matrix_lr(inter)[0].value
    assert got == pytest.approx(want, abs=1e-12)


def test_score_matrix_null_tail_near_nominal(null_matrix_n10):
    scores = ms.score_matrix_lr(null_matrix_n10.matrix)
    cutoff = chi2.isf(0.05, df=2)
    frac = np.mean([s.value > cutoff for s in scores])
    assert 0.05 <= frac <= 0.11


def test_permutation_collapses_true_markers():
    lab = ms.generate(ms.preset("water-n10", seed=7))
    dev, _ = _deviance_core(lab.matrix.values, lab.matrix.n1)
    true_median = float(np.median(dev[lab.truth]))
    null_median = float(np.median(dev[~lab.truth]))
    assert true_median > 15.0

    perm = substream(7, "perm:907").permutation(lab.matrix.N)
    dev_perm, _ = _deviance_core(lab.matrix.values[:, perm], lab.matrix.n1)
    perm_true_median = float(np.median(dev_perm[lab.truth]))
    assert perm_true_median < null_median
    assert perm_true_median < 2.0


# ------------------------------------------------------- chi2(2) calibration

def _null_tail(n, alpha, replicates=20000, seed_label=None):
    rng = substream(0, seed_label or f"cal-test:{n}")
    draws = rng.standard_normal((replicates, 2 * n))
    dev, _ = _deviance_core(draws, n)
    return float(np.mean(dev > chi2.isf(alpha, df=2)))


@pytest.mark.parametrize("n", [20, 30])
@pytest.mark.parametrize("alpha", [0.01, 0.05, 0.10])
def test_chi2_calibration_large_n(n, alpha):
    assert abs(_null_tail(n, alpha) - alpha) <= 0.03


@pytest.mark.xfail(
    strict=True,
    reason="n=10 exceedance at the 0.10 point measures ~0.136, outside the "
    "+-0.03 band; the statistic is anticonservative below n~15 "
    "(see decisions ledger D4)",
)
def test_chi2_calibration_n10_at_alpha10():
    assert abs(_null_tail(10, 0.10) - 0.10) <= 0.03
