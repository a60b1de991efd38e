import math

import numpy as np
import pytest
from scipy.stats import norm

import markerscreen as ms
from markerscreen.errors import DegenerateData
from markerscreen.ks import _null_table

from _oracles import bandwidth_oracle, kernel_cdf_oracle, ks_d_oracle


# ---------------------------------------------------------------- bandwidth

def test_bandwidth_matches_direct_formula():
    rng = np.random.default_rng(6)
    x = rng.standard_normal(6)
    ref = bandwidth_oracle(x)
    assert abs(ms.select_bandwidth(x) - ref) < 1e-12


def test_bandwidth_scale_equivariance():
    rng = np.random.default_rng(13)
    x = rng.standard_normal(8)
    h = ms.select_bandwidth(x)
    for c in (0.1, 3.0, 250.0):
        assert ms.select_bandwidth(c * x) == pytest.approx(c * h, rel=1e-12)


def test_bandwidth_constant_sample_raises():
    with pytest.raises(DegenerateData):
        ms.select_bandwidth([1.0, 1.0, 1.0])


def test_bandwidth_zero_iqr_falls_back_to_sd():
    # more than half the points tied: IQR = 0 but s > 0
    x = np.array([5.0, 5.0, 5.0, 5.0, 5.0, 9.0])
    s = float(np.std(x, ddof=1))
    assert ms.select_bandwidth(x) == pytest.approx(1.06 * s * 6 ** (-0.2))


# --------------------------------------------------------------- kernel CDF

def test_kernel_cdf_symmetry_half():
    est = ms.KernelEstimate(centers=np.array([-2.0, -1.0, 1.0, 2.0]),
                            bandwidth=0.7)
    assert ms.kernel_cdf(est, 0.0) == pytest.approx(0.5, abs=1e-12)


def test_kernel_cdf_upper_limit():
    est = ms.KernelEstimate(centers=np.array([0.0, 4.0, -3.0]), bandwidth=1.0)
    assert ms.kernel_cdf(est, 1e9) == pytest.approx(1.0, abs=1e-12)


def test_kernel_cdf_single_center_is_normal_cdf():
    ref = 0.5 * (1.0 + math.erf(1.0 / math.sqrt(2.0)))  # 0.8413...
    est = ms.KernelEstimate(centers=np.array([0.0]), bandwidth=1.0)
    assert ms.kernel_cdf(est, 1.0) == pytest.approx(ref, abs=1e-12)
    assert ref == pytest.approx(0.8413447460685429)


def test_kernel_cdf_matches_loop_oracle():
    rng = np.random.default_rng(23)
    centers = rng.normal(2.0, 3.0, 9)
    h = 0.9
    est = ms.KernelEstimate(centers=centers, bandwidth=h)
    for t in (-1.0, 0.0, 2.5, 7.0):
        ref = kernel_cdf_oracle(centers, h, t)
        assert abs(float(ms.kernel_cdf(est, t)) - ref) < 1e-12


def test_kernel_cdf_monotone_on_grid():
    rng = np.random.default_rng(31)
    est = ms.KernelEstimate(centers=rng.normal(0, 1, 7), bandwidth=0.5)
    grid = np.linspace(-4, 4, 200)
    vals = ms.kernel_cdf(est, grid)
    assert np.all(np.diff(vals) >= 0)


# ------------------------------------------------------------- d statistic

def test_ks_d_matches_loop_oracle():
    rng = np.random.default_rng(37)
    x = rng.normal(1.0, 2.0, 6)
    ref = ks_d_oracle(x)
    got = ms.ks_d_statistic(x)
    assert abs(got.d - ref) < 1e-12
    assert got.bandwidth_used == pytest.approx(bandwidth_oracle(x))


def test_ks_d_near_normal_quantiles_is_small():
    probs = (np.arange(1, 10) - 0.5) / 9.0
    x = norm.ppf(probs)
    assert ms.ks_d_statistic(x).d < 0.10


@pytest.mark.xfail(
    strict=True,
    reason="two tight 3+3 clusters measure d ~ 0.09 at any separation: the "
    "reference bandwidth over-smooths the kernel CDF toward the fitted "
    "normal at N=6 (see decisions ledger D4)",
)
def test_ks_d_separated_clusters_exceeds_015():
    rng = np.random.default_rng(41)
    x = np.concatenate([rng.uniform(-1e-3, 1e-3, 3),
                        10.0 + rng.uniform(-1e-3, 1e-3, 3)])
    assert ms.ks_d_statistic(x).d > 0.15


def test_ks_d_affine_invariance():
    rng = np.random.default_rng(43)
    x = rng.normal(0, 1, 6)
    d0 = ms.ks_d_statistic(x).d
    for a, b in [(2.0, 1.0), (0.5, -3.0), (100.0, 7.0)]:
        assert abs(ms.ks_d_statistic(a * x + b).d - d0) < 1e-9


# ----------------------------------------------------------- Lilliefors MC

def test_lilliefors_degenerate_endpoints():
    assert ms.lilliefors_pvalue(0.0, 6, replicates=1000, seed=0) == 1.0
    assert ms.lilliefors_pvalue(1.0, 6, replicates=1000, seed=0) == pytest.approx(
        1.0 / 1001.0)


def test_lilliefors_rejects_bad_inputs():
    with pytest.raises(ValueError):
        ms.lilliefors_pvalue(1.5, 6, replicates=1000)
    with pytest.raises(ValueError):
        ms.lilliefors_pvalue(0.5, 6, replicates=10)


def test_lilliefors_median_self_consistency():
    table = _null_table(6, 10000, 0)
    med = float(np.median(table))
    p = ms.lilliefors_pvalue(med, 6, replicates=10000, seed=0)
    assert abs(p - 0.5) < 0.05


def test_lilliefors_deterministic_given_seed():
    a = ms.lilliefors_pvalue(0.11, 6, replicates=2000, seed=9)
    b = ms.lilliefors_pvalue(0.11, 6, replicates=2000, seed=9)
    assert a == b


# ------------------------------------------------------------ matrix scoring

def _matrix(values, n1):
    n2 = values.shape[1] - n1
    return ms.ExpressionMatrix(values=values,
                               layout=np.array([1] * n1 + [2] * n2))


def test_score_matrix_ks_composition_single_protein():
    rng = np.random.default_rng(47)
    x = rng.normal(0, 1, 6)
    direct_d = ms.ks_d_statistic(x).d
    direct_p = ms.lilliefors_pvalue(direct_d, 6, replicates=2000, seed=0)
    got = ms.score_matrix_ks(_matrix(x[None, :], 3), replicates=2000, seed=0)
    assert len(got) == 1
    assert got[0].statistic_kind == "ks_d"
    assert got[0].value == pytest.approx(direct_d, abs=1e-12)
    assert got[0].p_value == pytest.approx(direct_p, abs=1e-15)


def test_score_matrix_ks_degenerate_row():
    rng = np.random.default_rng(53)
    values = np.vstack([np.full(6, 2.0), rng.normal(0, 1, 6)])
    got = ms.score_matrix_ks(_matrix(values, 3), replicates=1000, seed=0)
    assert got[0].value == 0.0
    assert got[0].p_value == 1.0
    assert got[1].value > 0.0


def test_score_matrix_ks_warns_in_lr_regime():
    rng = np.random.default_rng(59)
    with pytest.warns(UserWarning):
        ms.score_matrix_ks(_matrix(rng.normal(0, 1, (2, 12)), 6),
                           replicates=1000, seed=0)


def test_score_matrix_ks_null_calibration_and_uniformity():
    rng = np.random.default_rng(2024)
    values = rng.standard_normal((5000, 6))
    scores = ms.score_matrix_ks(_matrix(values, 3), replicates=10000, seed=0)
    pvals = np.sort([s.p_value for s in scores])
    frac = float(np.mean(pvals <= 0.05))
    assert abs(frac - 0.05) <= 0.02
    # Kolmogorov distance of the p-values to Uniform[0,1]
    k = pvals.size
    upper = np.max(np.arange(1, k + 1) / k - pvals)
    lower = np.max(pvals - np.arange(0, k) / k)
    assert max(upper, lower) < 0.03


@pytest.mark.xfail(
    strict=True,
    reason="heavy-tailed small-n matrices rank many null rows above true "
    "markers, so the sorted curve has no sharp drop near the true count "
    "(see decisions ledger D4)",
)
def test_score_matrix_ks_cauchy_sorted_drop_near_true_count():
    lab = ms.generate(ms.preset("cauchy-n3", seed=0))
    scores = ms.score_matrix_ks(lab.matrix, replicates=2000, seed=0)
    vals = np.sort([s.value for s in scores])[::-1]
    ratios = vals[:99] / vals[1:100]
    drop_at = int(np.argmax(ratios)) + 1
    assert 27 <= drop_at <= 33
