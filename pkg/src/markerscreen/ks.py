"""Small-sample screening statistic: kernel CDF vs fitted normal CDF.

For designs too small for the likelihood-ratio statistic (fewer than 5
samples per condition) each pooled row is tested for departure from
normality: a Gaussian-kernel CDF estimate of the N pooled observations is
compared against the normal CDF fitted to the same observations, and the
statistic d is the largest absolute difference over the observed points.
Because the reference normal's parameters are estimated from the sample,
the p-value comes from Monte-Carlo recalibration: standard-normal samples
of the same size are pushed through the identical pipeline (bandwidth
re-selected, normal re-fitted) and d is ranked against them.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import ndtr

from ._rng import substream
from .errors import DegenerateData
from .lr import ProteinScore
from .matrix import ExpressionMatrix

DEFAULT_REPLICATES = 10000


@dataclass
class KernelEstimate:
    """Gaussian kernel located at the observed points with one bandwidth."""

    centers: np.ndarray
    bandwidth: float
    kind: str = "gaussian"


@dataclass
class KsScore:
    d: float
    p_value: float | None
    bandwidth_used: float
    mc_replicates: int


def select_bandwidth(x) -> float:
    """Gaussian-reference bandwidth minimizing mean integrated squared error.

    h = 1.06 * min(s, IQR/1.349) * N^(-1/5), with s the ddof-1 standard
    deviation. When the IQR collapses to 0 but s > 0, s alone is used.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 3:
        raise ValueError("need at least 3 observations")
    s = float(np.std(x, ddof=1))
    if s == 0.0:
        raise DegenerateData("zero sample standard deviation")
    q75, q25 = np.percentile(x, [75, 25])
    iqr = float(q75 - q25)
    scale = min(s, iqr / 1.349) if iqr > 0 else s
    return 1.06 * scale * x.size ** (-1.0 / 5.0)


def kernel_cdf(est: KernelEstimate, t):
    """CDF of the kernel estimate: mean of Phi((t - x_k)/h) over centers."""
    t = np.asarray(t, dtype=float)
    z = (t[..., None] - est.centers) / est.bandwidth
    return ndtr(z).mean(axis=-1)


def _d_rows(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized statistic for (m, N) rows. Caller screens degenerate rows.

    Returns (d, h) per row. d compares the kernel CDF against the normal
    fitted with the MLE variance, evaluated at the observed points only.
    """
    N = rows.shape[1]
    s = rows.std(axis=1, ddof=1)
    q75, q25 = np.percentile(rows, [75, 25], axis=1)
    iqr = q75 - q25
    scale = np.where(iqr > 0, np.minimum(s, iqr / 1.349), s)
    h = 1.06 * scale * N ** (-1.0 / 5.0)
    z = (rows[:, :, None] - rows[:, None, :]) / h[:, None, None]
    g = ndtr(z).mean(axis=2)
    mu = rows.mean(axis=1, keepdims=True)
    sd = rows.std(axis=1, keepdims=True)  # MLE scale for the reference fit
    f = ndtr((rows - mu) / sd)
    return np.abs(g - f).max(axis=1), h


def ks_d_statistic(x) -> KsScore:
    """The statistic d for one pooled sample (p-value left unset)."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 3:
        raise ValueError("need at least 3 observations")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite observations")
    if np.std(x, ddof=1) == 0.0:
        raise DegenerateData("zero sample standard deviation")
    d, h = _d_rows(x[None, :])
    return KsScore(d=float(d[0]), p_value=None, bandwidth_used=float(h[0]),
                   mc_replicates=0)


@lru_cache(maxsize=32)
def _null_table(N: int, replicates: int, seed: int) -> np.ndarray:
    """Sorted null statistics for sample size N, derived from (seed, N)."""
    rng = substream(seed, f"ks-null:{N}:{replicates}")
    draws = rng.standard_normal((replicates, N))
    d, _ = _d_rows(draws)
    return np.sort(d)


def lilliefors_pvalue(d: float, N: int, replicates: int = DEFAULT_REPLICATES,
                      seed: int = 0) -> float:
    """Monte-Carlo p-value of d under the fitted-normal null.

    Simulates `replicates` standard-normal samples of size N through the
    full pipeline and returns (1 + #{D* >= d}) / (replicates + 1).
    Deterministic given seed; the null table is cached per (N, replicates,
    seed) so scoring a whole matrix reuses one table.
    """
    if not 0.0 <= d <= 1.0:
        raise ValueError("d must lie in [0, 1]")
    if replicates < 1000:
        raise ValueError("at least 1000 replicates")
    table = _null_table(N, replicates, seed)
    n_ge = table.size - int(np.searchsorted(table, d, side="left"))
    return (1.0 + n_ge) / (replicates + 1.0)


def score_matrix_ks(
    m: ExpressionMatrix,
    replicates: int = DEFAULT_REPLICATES,
    seed: int = 0,
) -> list[ProteinScore]:
    """Statistic d and Monte-Carlo p-value for every pooled protein row.

    Intended for very small designs (n < 5 per condition); larger matrices
    are allowed but draw a warning since the likelihood-ratio statistic is
    the better tool there. Degenerate rows get d = 0, p = 1. One shared
    null table serves all proteins (they share N).
    """
    if min(m.n1, m.n2) >= 5:
        warnings.warn(
            "small-sample KS scoring on a design with n >= 5 per condition; "
            "the likelihood-ratio statistic is preferred in this regime",
            stacklevel=2,
        )
    rows = m.values
    sd1 = rows.std(axis=1, ddof=1)
    degenerate = sd1 == 0.0
    d = np.zeros(m.p)
    if np.any(~degenerate):
        d[~degenerate], _ = _d_rows(rows[~degenerate])

    table = _null_table(m.N, replicates, seed)
    n_ge = table.size - np.searchsorted(table, d, side="left")
    pvals = (1.0 + n_ge) / (replicates + 1.0)
    pvals = np.where(degenerate, 1.0, pvals)
    d = np.where(degenerate, 0.0, d)

    return [
        ProteinScore(pid, "ks_d", float(d[j]), float(pvals[j]), None)
        for j, pid in enumerate(m.protein_ids)
    ]
