"""Adoption-dependent utility with quality decay past critical mass.

Individual utility of adopting path A at adoption level ``n`` is
``P(n) / C + r * n``.  Quality holds at ``q0`` up to ``n_dagger`` and decays
exponentially beyond it.  Per-capita collective welfare subtracts an
error-propagation externality whose reach grows with adoption, which is
what lets individually rational adoption coexist with collective decline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .errors import DomainError, InsufficientDataError, ParameterError


@dataclass(frozen=True)
class LockInParams:
    base_quality: float = 1.0
    process_cost: float = 1.0
    coordination_gain: float = 0.001
    critical_threshold: float = 1000.0
    decay_rate: float = 0.001
    switch_cost: float = 0.5
    externality: float = 1.0
    alternative_utility: Optional[float] = None

    def __post_init__(self):
        for name in ("base_quality", "process_cost", "critical_threshold", "decay_rate"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ParameterError(f"{name} must be finite and > 0, got {v!r}")
        for name in ("coordination_gain", "switch_cost", "externality"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ParameterError(f"{name} must be finite and >= 0, got {v!r}")

    @property
    def switch_utility(self) -> float:
        """Utility of the non-adopting alternative (defaults to the plateau ratio q0/C)."""
        if self.alternative_utility is not None:
            return self.alternative_utility
        return self.base_quality / self.process_cost


def _check_n(n: float) -> None:
    if not (n >= 0) or not math.isfinite(n):
        raise DomainError(f"adoption level must be finite and >= 0, got {n!r}")


def quality(n_a: float, p: LockInParams) -> float:
    _check_n(n_a)
    if n_a <= p.critical_threshold:
        return p.base_quality
    return p.base_quality * math.exp(-p.decay_rate * (n_a - p.critical_threshold))


def quality_derivative(n_a: float, p: LockInParams) -> float:
    """Right derivative of :func:`quality`."""
    _check_n(n_a)
    if n_a < p.critical_threshold:
        return 0.0
    return -p.decay_rate * quality(max(n_a, p.critical_threshold), p)


def utility(n_a: float, p: LockInParams) -> float:
    return quality(n_a, p) / p.process_cost + p.coordination_gain * n_a


def utility_derivative(n_a: float, p: LockInParams) -> float:
    return quality_derivative(n_a, p) / p.process_cost + p.coordination_gain


def arthur_baseline(n_a: float, p: LockInParams) -> float:
    """Constant-quality comparator with linear network returns."""
    _check_n(n_a)
    return p.base_quality / p.process_cost + p.coordination_gain * n_a


def error_propagation_rate(n_a: float, p: LockInParams) -> float:
    """Share of baseline quality lost to undetected errors, in [0, 1)."""
    return 1.0 - quality(n_a, p) / p.base_quality


def welfare(n_a: float, p: LockInParams) -> float:
    """Per-capita collective welfare: mean utility minus the propagated-error externality.

    The externality is ``externality * (n / n_dagger) * error_rate(n)``;
    errors reach further as more people pass on unchecked output.
    """
    return utility(n_a, p) - p.externality * (n_a / p.critical_threshold) * error_propagation_rate(n_a, p)


def best_response_is_adoption(n_a: float, p: LockInParams) -> bool:
    return utility(n_a, p) > p.switch_utility - p.switch_cost


@dataclass
class LockInReport:
    flagged: bool
    onset_step: Optional[int]
    flagged_steps: List[int]
    peak_step: int
    peak_n: float
    peak_welfare: float
    final_welfare: float
    decline: float
    relative_decline: float
    adoption_holds: List[bool] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "flagged": self.flagged,
            "onset_step": self.onset_step,
            "flagged_steps": len(self.flagged_steps),
            "peak_step": self.peak_step,
            "peak_n": self.peak_n,
            "peak_welfare": self.peak_welfare,
            "final_welfare": self.final_welfare,
            "decline": self.decline,
            "relative_decline": self.relative_decline,
        }


def detect_lockin(trajectory: Sequence[Tuple[float, float]], p: LockInParams, window: int = 5) -> LockInReport:
    """Flag steps where adoption stays the best response while welfare keeps falling.

    Step ``t`` is flagged when staying adopted beats switching net of the
    switch cost and welfare fell strictly at every step of the trailing
    ``window`` ending at ``t``.
    """
    if window < 2:
        raise ParameterError("window must be >= 2")
    if len(trajectory) < window:
        raise InsufficientDataError(f"trajectory has {len(trajectory)} points, window needs {window}")
    ns = [float(n) for n, _ in trajectory]
    ws = [float(w) for _, w in trajectory]
    holds = [best_response_is_adoption(n, p) for n in ns]
    flagged = []
    for t in range(window - 1, len(ws)):
        falling = all(ws[k] < ws[k - 1] for k in range(t - window + 2, t + 1))
        if holds[t] and falling:
            flagged.append(t)
    peak = max(range(len(ws)), key=lambda i: (ws[i], -i))
    final = ws[-1]
    decline = ws[peak] - final
    rel = decline / abs(ws[peak]) if ws[peak] != 0 else 0.0
    return LockInReport(bool(flagged), flagged[0] if flagged else None, flagged, peak, ns[peak],
                        ws[peak], final, decline, rel, holds)


def welfare_curve(ns: Sequence[float], p: LockInParams) -> List[Tuple[float, float]]:
    return [(float(n), welfare(n, p)) for n in ns]
