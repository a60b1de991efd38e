"""Truth-scored evaluation: sensitivity/FDR accounting, the Welch t-test
baseline, null-calibration tables, and the seeded multi-run benchmark."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from ._rng import derive_seed, substream
from .errors import MarkerScreenError, TruthMismatch
from .ks import score_matrix_ks
from .lr import ProteinScore, _deviance_core, score_matrix_lr
from .matrix import ExpressionMatrix
from .select import SelectionPolicy, SelectionResult, apply_policy
from .simulate import generate, presets

DEFAULT_ALPHAS = (0.01, 0.05, 0.10)
DEFAULT_N_VALUES = (3, 5, 8, 10, 15, 20, 30)


@dataclass
class TruthScore:
    sensitivity: float
    empirical_fdr: float
    selected_count: int
    tp: int
    fp: int


@dataclass
class EvalRun:
    method: str
    preset: str
    seed: int
    sensitivity: float
    empirical_fdr: float
    selected_count: int
    tp: int
    fp: int
    fallback_used: bool = False
    error: str | None = None  # set on flagged rows; metrics are NaN there


@dataclass
class EvalReport:
    runs: list[EvalRun] = field(default_factory=list)

    def aggregate(self) -> list[dict]:
        """Mean sensitivity/FDR per (method, preset), input order, flagged
        runs excluded from the averages but counted."""
        order: list[tuple[str, str]] = []
        groups: dict[tuple[str, str], list[EvalRun]] = {}
        for run in self.runs:
            key = (run.method, run.preset)
            if key not in groups:
                groups[key] = []
                order.append(key)
            groups[key].append(run)
        rows = []
        for method, preset_name in order:
            runs = groups[(method, preset_name)]
            ok = [r for r in runs if r.error is None]
            rows.append({
                "method": method,
                "preset": preset_name,
                "runs": len(runs),
                "flagged": len(runs) - len(ok),
                "sensitivity": float(np.mean([r.sensitivity for r in ok])) if ok else float("nan"),
                "empirical_fdr": float(np.mean([r.empirical_fdr for r in ok])) if ok else float("nan"),
                "selected": float(np.mean([r.selected_count for r in ok])) if ok else float("nan"),
            })
        return rows

    def to_text(self) -> str:
        header = f"{'method':<16} {'preset':<12} {'sens':>6} {'fdr':>6} {'sel':>7} {'runs':>5} {'flag':>5}"
        lines = [header, "-" * len(header)]
        for row in self.aggregate():
            lines.append(
                f"{row['method']:<16} {row['preset']:<12} "
                f"{row['sensitivity']:>6.3f} {row['empirical_fdr']:>6.3f} "
                f"{row['selected']:>7.1f} {row['runs']:>5d} {row['flagged']:>5d}"
            )
        return "\n".join(lines)


def score_against_truth(result: SelectionResult, truth: dict) -> TruthScore:
    """Sensitivity and empirical FDR of a selection against truth labels.

    truth maps every protein id to a bool. Empty selections score (0, 0).
    """
    unknown = [pid for pid in result.selected if pid not in truth]
    if unknown:
        raise TruthMismatch(
            f"selected ids missing from truth labels: {unknown[:5]}"
        )
    n_true = sum(1 for v in truth.values() if v)
    tp = sum(1 for pid in result.selected if truth[pid])
    selected = len(result.selected)
    fp = selected - tp
    sensitivity = tp / n_true if n_true else 0.0
    fdr = fp / max(1, selected)
    return TruthScore(sensitivity, fdr, selected, tp, fp)


def ttest_baseline(m: ExpressionMatrix) -> list[ProteinScore]:
    """Per-protein Welch two-sample t-test (two-sided).

    Unequal variances, Welch-Satterthwaite degrees of freedom. Rows where
    both sample variances vanish are unscorable and get t = 0, p = 1.
    """
    mask1, mask2 = m.condition_masks()
    x1, x2 = m.values[:, mask1], m.values[:, mask2]
    n1, n2 = x1.shape[1], x2.shape[1]
    if n1 < 2 or n2 < 2:
        raise ValueError("Welch test needs at least 2 samples per condition")
    v1 = x1.var(axis=1, ddof=1)
    v2 = x2.var(axis=1, ddof=1)
    se2 = v1 / n1 + v2 / n2
    degenerate = se2 == 0.0
    safe = np.where(degenerate, 1.0, se2)
    t = (x1.mean(axis=1) - x2.mean(axis=1)) / np.sqrt(safe)
    df_num = safe**2
    df_den = (v1 / n1) ** 2 / (n1 - 1) + (v2 / n2) ** 2 / (n2 - 1)
    df = df_num / np.where(df_den == 0.0, 1.0, df_den)
    p = 2.0 * stats.t.sf(np.abs(t), df)
    t = np.where(degenerate, 0.0, t)
    p = np.where(degenerate, 1.0, p)
    return [
        ProteinScore(pid, "welch_t", float(t[j]), float(min(p[j], 1.0)), None)
        for j, pid in enumerate(m.protein_ids)
    ]


def convergence_table(
    n_values=DEFAULT_N_VALUES,
    replicates: int = 20000,
    seed: int = 0,
    alphas=DEFAULT_ALPHAS,
) -> list[dict]:
    """Null tail probabilities of the deviance across per-condition sizes.

    For each n, `replicates` standard-normal null rows of width 2n are
    scored and the exceedance of the chi-square(2) alpha-quantile reported.
    The statistic is location-scale invariant, so standard-normal rows
    calibrate every normal-error configuration.
    """
    rows = []
    for n in n_values:
        if n < 2:
            raise ValueError("per-condition size must be >= 2")
        rng = substream(seed, f"null-calibration:{n}")
        draws = rng.standard_normal((replicates, 2 * n))
        dev, _ = _deviance_core(draws, n)
        for alpha in alphas:
            threshold = stats.chi2.isf(alpha, df=2)
            rows.append({
                "n": int(n),
                "alpha": float(alpha),
                "tail_prob": float(np.mean(dev > threshold)),
                "replicates": int(replicates),
            })
    return rows


def convergence_text(rows: list[dict]) -> str:
    alphas = sorted({r["alpha"] for r in rows})
    ns = sorted({r["n"] for r in rows})
    cell = {(r["n"], r["alpha"]): r["tail_prob"] for r in rows}
    head = "n     " + "  ".join(f"a={a:g}" for a in alphas)
    lines = [head]
    for n in ns:
        lines.append(
            f"{n:<5d} " + "  ".join(f"{cell[(n, a)]:.4f}" for a in alphas)
        )
    return "\n".join(lines)


def _policy_for(policy_spec: str, n_per_condition: int):
    """Parse a policy token: gap | bh | bh:<q> | fixed:<c>.

    The default BH level is 0.05, loosened to 0.1 for very small designs
    (n < 5 per condition), matching the benchmark configuration the
    comparison tables use. Returns (policy, fallback_q).
    """
    default_q = 0.1 if n_per_condition < 5 else 0.05
    if policy_spec == "gap":
        return SelectionPolicy(kind="gap_knee"), default_q
    if policy_spec == "bh" or policy_spec.startswith("bh:"):
        q = float(policy_spec.split(":", 1)[1]) if ":" in policy_spec else default_q
        return SelectionPolicy(kind="bh_fdr", q=q), default_q
    if policy_spec.startswith("fixed:"):
        return SelectionPolicy(kind="fixed_cutoff", c=float(policy_spec.split(":", 1)[1])), default_q
    raise ValueError(f"unknown policy spec: {policy_spec!r}")


def _run_method(method: str, labeled, ks_replicates: int, run_seed: int) -> SelectionResult:
    stat, _, policy_spec = method.partition("+")
    if not policy_spec:
        raise ValueError(f"method {method!r} must look like 'lr+gap' or 'ttest+bh:0.05'")
    m = labeled.matrix
    if stat == "lr":
        scores = score_matrix_lr(m)
    elif stat == "ks":
        scores = score_matrix_ks(m, replicates=ks_replicates, seed=run_seed)
    elif stat == "ttest":
        scores = ttest_baseline(m)
    else:
        raise ValueError(f"unknown statistic in method {method!r}")
    policy, fallback_q = _policy_for(policy_spec, m.n1)
    return apply_policy(scores, policy, fallback_q=fallback_q)


def benchmark(
    methods,
    preset_names,
    runs: int = 50,
    seed: int = 0,
    ks_replicates: int = 10000,
) -> EvalReport:
    """Full methods x presets cross, `runs` seeded replicates each.

    Per-run seeds derive from (seed, preset, run index) only, so every
    method sees the same matrices and comparisons are paired. Failing runs
    become flagged rows (error category recorded, metrics NaN); the matrix
    never aborts.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    available = presets()
    report = EvalReport()
    for preset_name in preset_names:
        if preset_name not in available:
            raise ValueError(f"unknown preset {preset_name!r}")
        for r in range(runs):
            run_seed = derive_seed(seed, f"bench:{preset_name}:{r}")
            labeled = generate(replace(available[preset_name], seed=run_seed))
            truth = labeled.truth_map()
            for method in methods:
                try:
                    result = _run_method(method, labeled, ks_replicates, run_seed)
                    scored = score_against_truth(result, truth)
                    report.runs.append(EvalRun(
                        method=method, preset=preset_name, seed=run_seed,
                        sensitivity=scored.sensitivity,
                        empirical_fdr=scored.empirical_fdr,
                        selected_count=scored.selected_count,
                        tp=scored.tp, fp=scored.fp,
                        fallback_used=result.fallback_used,
                    ))
                except MarkerScreenError as exc:
                    report.runs.append(EvalRun(
                        method=method, preset=preset_name, seed=run_seed,
                        sensitivity=float("nan"), empirical_fdr=float("nan"),
                        selected_count=0, tp=0, fp=0,
                        error=exc.category,
                    ))
    return report
