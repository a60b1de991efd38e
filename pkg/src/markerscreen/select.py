"""Cutoff selection over scored proteins.

Three policies: a fixed statistic cutoff, sudden-drop (gap) detection on the
descending sorted statistic curve, and Benjamini-Hochberg FDR thresholding
on p-values. Gap detection is deliberately conservative: sorted null order
statistics have a built-in elbow, so the rule fires only on drops where the
curve loses at least a third of its level in one step (ratio >= 1.5) and
raises NoGapFound otherwise. apply_policy implements the documented caller
behavior of falling back to BH selection when no gap is found.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NoGapFound
from .lr import ProteinScore

DEFAULT_TOP_WINDOW = 100
# A winning drop must be a >= 50% step down in level; smaller ratios are
# indistinguishable from the top-rank spacing noise of pure-null curves.
MIN_GAP_RATIO = 1.5
PREVIEW_SIZE = 100
FALLBACK_Q = 0.05


@dataclass(frozen=True)
class SelectionPolicy:
    kind: str  # "fixed_cutoff" | "gap_knee" | "bh_fdr"
    c: float | None = None
    top_window: int = DEFAULT_TOP_WINDOW
    q: float | None = None

    def __post_init__(self):
        if self.kind == "fixed_cutoff":
            if self.c is None or self.c <= 0:
                raise ValueError("fixed_cutoff needs c > 0")
        elif self.kind == "gap_knee":
            if self.top_window < 2:
                raise ValueError("gap_knee needs top_window >= 2")
        elif self.kind == "bh_fdr":
            if self.q is None or not 0 < self.q < 1:
                raise ValueError("bh_fdr needs q in (0, 1)")
        else:
            raise ValueError(f"unknown policy kind: {self.kind}")


@dataclass
class SelectionResult:
    selected: tuple[str, ...]  # protein ids, descending statistic order
    cutoff_used: float
    sorted_preview: tuple[tuple[float, str], ...]
    policy: SelectionPolicy
    fallback_used: bool = False

    @property
    def selected_set(self) -> frozenset:
        return frozenset(self.selected)


def _ranked(scores: list[ProteinScore]) -> list[ProteinScore]:
    # stable rank: descending value, id as the deterministic tie-break
    return sorted(scores, key=lambda s: (-s.value, s.protein_id))


def _preview(ranked: list[ProteinScore]) -> tuple[tuple[float, str], ...]:
    return tuple((s.value, s.protein_id) for s in ranked[:PREVIEW_SIZE])


def select_fixed(scores: list[ProteinScore], c: float) -> SelectionResult:
    """Select every protein whose statistic is >= c (ties at c included)."""
    if c <= 0:
        raise ValueError("cutoff must be positive")
    ranked = _ranked(scores)
    chosen = tuple(s.protein_id for s in ranked if s.value >= c)
    return SelectionResult(
        selected=chosen,
        cutoff_used=float(c),
        sorted_preview=_preview(ranked),
        policy=SelectionPolicy(kind="fixed_cutoff", c=float(c)),
    )


def select_gap(scores: list[ProteinScore],
               top_window: int = DEFAULT_TOP_WINDOW) -> SelectionResult:
    """Cut at the largest sudden drop of the descending statistic curve.

    Restricted to the top `top_window` sorted values (window clamped to p
    when the matrix is smaller), the rule takes the index i maximizing the
    step ratio s_i / s_{i+1} among steps clearing the additive guard
    s_i - s_{i+1} >= 0.1 * (s_1 - s_w) / w, ties to the smaller i, and
    requires the winning ratio to reach MIN_GAP_RATIO. Curves without such
    a cliff raise NoGapFound; callers fall back to BH selection
    (see apply_policy).
    """
    if top_window < 2:
        raise ValueError("top_window must be >= 2")
    if len(scores) < 2:
        raise ValueError("need at least 2 scores")
    ranked = _ranked(scores)
    w = min(top_window, len(ranked))
    top = np.array([s.value for s in ranked[:w]], dtype=float)

    span = top[0] - top[-1]
    if span <= 0:
        raise NoGapFound("statistic curve is flat over the window")
    guard = 0.1 * span / w
    drops = top[:-1] - top[1:]
    with np.errstate(divide="ignore"):
        ratios = np.where(top[1:] > 0, top[:-1] / top[1:], np.inf)
    ratios = np.where(drops >= guard, ratios, 0.0)
    i = int(np.argmax(ratios))  # first occurrence wins ties
    if ratios[i] < MIN_GAP_RATIO:
        raise NoGapFound(
            f"no drop with ratio >= {MIN_GAP_RATIO} in the top {w} values"
        )
    cutoff = 0.5 * (top[i] + top[i + 1])  # just below s_i
    chosen = tuple(s.protein_id for s in ranked if s.value >= cutoff)
    return SelectionResult(
        selected=chosen,
        cutoff_used=float(cutoff),
        sorted_preview=_preview(ranked),
        policy=SelectionPolicy(kind="gap_knee", top_window=top_window),
    )


def select_bh(scores: list[ProteinScore], q: float) -> SelectionResult:
    """Benjamini-Hochberg step-up on the scores' p-values at level q."""
    if not 0 < q < 1:
        raise ValueError("q must be in (0, 1)")
    if any(s.p_value is None for s in scores):
        raise ValueError("BH selection needs p-values on every score")
    m = len(scores)
    by_p = sorted(scores, key=lambda s: (s.p_value, s.protein_id))
    pvals = np.array([s.p_value for s in by_p])
    passing = np.flatnonzero(pvals <= (np.arange(1, m + 1) * q / m))
    k = int(passing[-1]) + 1 if passing.size else 0
    chosen = tuple(s.protein_id for s in by_p[:k])
    ranked = _ranked(scores)
    return SelectionResult(
        selected=chosen,
        cutoff_used=float(pvals[k - 1]) if k else float("nan"),
        sorted_preview=_preview(ranked),
        policy=SelectionPolicy(kind="bh_fdr", q=float(q)),
    )


def apply_policy(scores: list[ProteinScore], policy: SelectionPolicy,
                 fallback_q: float = FALLBACK_Q) -> SelectionResult:
    """Run a policy; for gap_knee, fall back to BH when no gap exists."""
    if policy.kind == "fixed_cutoff":
        return select_fixed(scores, policy.c)
    if policy.kind == "bh_fdr":
        return select_bh(scores, policy.q)
    try:
        return select_gap(scores, policy.top_window)
    except NoGapFound:
        result = select_bh(scores, fallback_q)
        result.fallback_used = True
        return result
