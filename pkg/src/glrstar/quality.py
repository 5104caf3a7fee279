"""Good/bad classification of the selected parse."""

from __future__ import annotations

from dataclasses import dataclass, field

from .scoring import PenaltyBreakdown

GOOD, BAD = "good", "bad"


@dataclass(frozen=True)
class QualityThresholds:
    t_abs: float = 5.0  # combined score
    t_rel: float = 0.35  # combined score per word

    def __post_init__(self) -> None:
        if self.t_abs < 0 or self.t_rel < 0:
            raise ValueError("quality thresholds must be >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> "QualityThresholds":
        return cls(**{k: float(d[k]) for k in ("t_abs", "t_rel") if k in d})


DEFAULT_THRESHOLDS = QualityThresholds()


@dataclass(frozen=True)
class QualityLabel:
    label: str
    reasons: tuple[str, ...] = field(default=())

    @property
    def good(self) -> bool:
        return self.label == GOOD


def classify(breakdown: PenaltyBreakdown | float, n: int, th: QualityThresholds = DEFAULT_THRESHOLDS) -> QualityLabel:
    """Bad when the combined score exceeds ``t_abs`` or its per-word value exceeds ``t_rel``."""
    if n < 1:
        raise ValueError("sentence length must be >= 1")
    combined = breakdown if isinstance(breakdown, (int, float)) else breakdown.combined
    reasons = []
    if combined > th.t_abs:
        reasons.append(f"absolute: {combined:.4g} > {th.t_abs:g}")
    if combined / n > th.t_rel:
        reasons.append(f"relative: {combined / n:.4g} > {th.t_rel:g} per word")
    return QualityLabel(BAD if reasons else GOOD, tuple(reasons))
