"""Individual policy-state model.

A user sits on a five-rung ladder running from reflective scrutiny (alpha)
to default acceptance (delta).  Each episode nature draws the AI
reliability state, the user's strategy maps it to an outcome vector, the
outcome moves the trust / error-salience / burden signal, and a
persistence-gated threshold rule (or its softmax relaxation) decides
whether the user climbs or descends one rung.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Dict, Iterable, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError, DomainError, InsufficientDataError, ParameterError


class Strategy(IntEnum):
    ALPHA = 0
    GAMMA = 1
    BETA = 2
    EPSILON = 3
    DELTA = 4

    @property
    def ordinal_rank(self) -> int:
        return int(self)

    @property
    def label(self) -> str:
        return self.name.lower()

    def toward_alpha(self) -> "Strategy":
        return Strategy(max(int(self) - 1, 0))

    def toward_delta(self) -> "Strategy":
        return Strategy(min(int(self) + 1, 4))

    @classmethod
    def parse(cls, value) -> "Strategy":
        if isinstance(value, Strategy):
            return value
        if isinstance(value, (int, np.integer)):
            return cls(int(value))
        key = str(value).strip().lower()
        if key in _GREEK:
            return _GREEK[key]
        try:
            return cls[key.upper()]
        except KeyError:
            raise DomainError(f"unknown strategy {value!r}") from None


_GREEK = {"α": Strategy.ALPHA, "γ": Strategy.GAMMA, "β": Strategy.BETA,
          "ε": Strategy.EPSILON, "δ": Strategy.DELTA}


class Regime(Enum):
    ADAPTIVE_RECALIBRATION = "AdaptiveRecalibration"
    THROUGHPUT_LOCK_IN = "ThroughputLockIn"
    MIXED_ASSURANCE = "MixedAssurance"


class Reliability(Enum):
    RELIABLE = "reliable"
    ERROR_PRONE = "error_prone"


class UserTypeVariant(Enum):
    REFLECTIVE = "reflective"
    THROUGHPUT = "throughput"
    ASSURANCE = "assurance"


def _check_unit(name: str, value: float) -> None:
    if not (math.isfinite(value) and 0.0 <= value <= 1.0):
        raise DomainError(f"{name} must be a finite value in [0, 1], got {value!r}")


@dataclass(frozen=True)
class SignalVector:
    trust: float
    error_salience: float
    burden: float

    def __post_init__(self):
        _check_unit("trust", self.trust)
        _check_unit("error_salience", self.error_salience)
        _check_unit("burden", self.burden)

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.trust, self.error_salience, self.burden)


@dataclass(frozen=True)
class OutcomeVector:
    """Consequence vector of one episode; always three components."""

    quality: float
    effort_cost: float
    epistemic_gain: float

    def __post_init__(self):
        _check_unit("quality", self.quality)
        _check_unit("epistemic_gain", self.epistemic_gain)
        if not (math.isfinite(self.effort_cost) and self.effort_cost >= 0.0):
            raise DomainError(f"effort_cost must be finite and >= 0, got {self.effort_cost!r}")

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.quality, self.effort_cost, self.epistemic_gain)


@dataclass(frozen=True)
class Thresholds:
    trust_hi: float
    trust_lo: float
    error_hi: float
    error_lo: float
    burden_hi: float
    burden_lo: float

    def __post_init__(self):
        for name in ("trust_hi", "trust_lo", "error_hi", "error_lo", "burden_hi", "burden_lo"):
            _check_unit(name, getattr(self, name))
        for lo, hi in (("trust_lo", "trust_hi"), ("error_lo", "error_hi"), ("burden_lo", "burden_hi")):
            if getattr(self, lo) > getattr(self, hi):
                raise ParameterError(f"{lo} must not exceed {hi}")


@dataclass(frozen=True)
class UserType:
    """Disposition of a user: signal weights, persistence and thresholds.

    The weights reshape the raw signal into the salience the user reacts to:
    component ``k`` is scaled by ``3 * weight_k`` and capped at 1, so uniform
    weights leave the signal untouched and a heavily weighted component
    saturates early.
    """

    variant: UserTypeVariant
    weight_trust: float
    weight_error: float
    weight_burden: float
    persistence_m: int
    thresholds: Thresholds

    def __post_init__(self):
        ws = (self.weight_trust, self.weight_error, self.weight_burden)
        if any(w < 0 or not math.isfinite(w) for w in ws):
            raise ParameterError("user-type weights must be finite and >= 0")
        if abs(sum(ws) - 1.0) > 1e-12:
            raise ParameterError(f"user-type weights must sum to 1, got {sum(ws)!r}")
        if int(self.persistence_m) != self.persistence_m or self.persistence_m < 1:
            raise ParameterError("persistence_m must be a positive integer")

    @property
    def gains(self) -> Tuple[float, float, float]:
        return (3.0 * self.weight_trust, 3.0 * self.weight_error, 3.0 * self.weight_burden)


def default_user_types() -> Dict[UserTypeVariant, UserType]:
    return {
        UserTypeVariant.REFLECTIVE: UserType(
            UserTypeVariant.REFLECTIVE, 0.3, 0.4, 0.3, 3,
            Thresholds(trust_hi=0.75, trust_lo=0.25, error_hi=0.4, error_lo=0.15,
                       burden_hi=0.45, burden_lo=0.15)),
        UserTypeVariant.THROUGHPUT: UserType(
            UserTypeVariant.THROUGHPUT, 0.4, 0.3, 0.3, 3,
            Thresholds(trust_hi=0.7, trust_lo=0.2, error_hi=0.6, error_lo=0.3,
                       burden_hi=0.25, burden_lo=0.05)),
        UserTypeVariant.ASSURANCE: UserType(
            UserTypeVariant.ASSURANCE, 0.2, 0.5, 0.3, 3,
            Thresholds(trust_hi=0.95, trust_lo=0.45, error_hi=0.3, error_lo=0.1,
                       burden_hi=0.8, burden_lo=0.2)),
    }


class HistoryRecord(NamedTuple):
    strategy: Strategy
    signal: SignalVector
    outcome: OutcomeVector


@dataclass(frozen=True)
class InteractionHistory:
    """Bounded window of past episodes plus an EWMA of their signals."""

    capacity: int = 16
    decay: float = 0.9
    window: Tuple[HistoryRecord, ...] = ()
    ewma_signal: Optional[SignalVector] = None

    def __post_init__(self):
        if self.capacity < 1:
            raise ParameterError("history capacity must be >= 1")
        if not (0.0 < self.decay <= 1.0):
            raise ParameterError("history decay must lie in (0, 1]")
        if len(self.window) > self.capacity:
            raise ParameterError("history window exceeds its capacity")

    def append(self, record: HistoryRecord) -> "InteractionHistory":
        window = (self.window + (record,))[-self.capacity:]
        z = record.signal
        if self.ewma_signal is None:
            ewma = z
        else:
            lam = self.decay
            e = self.ewma_signal
            ewma = SignalVector(
                min(1.0, lam * e.trust + (1.0 - lam) * z.trust),
                min(1.0, lam * e.error_salience + (1.0 - lam) * z.error_salience),
                min(1.0, lam * e.burden + (1.0 - lam) * z.burden),
            )
        return InteractionHistory(self.capacity, self.decay, window, ewma)


@dataclass(frozen=True)
class OutcomeCell:
    mean: Tuple[float, float, float]
    noise: Tuple[float, float, float] = (0.0, 0.0, 0.0)


@dataclass
class OutcomeTable:
    """Per (strategy, reliability) outcome distribution and per-strategy error detection.

    The shipped numbers are modelling defaults, not measured data; anything
    quoting results should cite the table it ran with.
    """

    cells: Dict[Tuple[Strategy, Reliability], OutcomeCell]
    detection: Dict[Strategy, float] = field(default_factory=dict)

    def cell(self, strategy: Strategy, theta: Reliability) -> OutcomeCell:
        try:
            return self.cells[(Strategy.parse(strategy), theta)]
        except KeyError:
            raise ConfigurationError(
                f"outcome table has no cell for ({Strategy.parse(strategy).label}, {theta.value})"
            ) from None

    def detection_probability(self, strategy: Strategy) -> float:
        try:
            return self.detection[strategy]
        except KeyError:
            raise ConfigurationError(f"no detection probability for {strategy.label}") from None


DEFAULT_OUTCOME_MEANS = {
    Strategy.ALPHA: ((0.90, 0.80, 0.90), (0.85, 0.90, 0.80)),
    Strategy.GAMMA: ((0.90, 0.60, 0.70), (0.70, 0.70, 0.60)),
    Strategy.BETA: ((0.88, 0.55, 0.50), (0.80, 0.70, 0.45)),
    Strategy.EPSILON: ((0.85, 0.30, 0.35), (0.55, 0.40, 0.25)),
    Strategy.DELTA: ((0.80, 0.05, 0.05), (0.30, 0.05, 0.00)),
}
DEFAULT_DETECTION = {
    Strategy.ALPHA: 0.95, Strategy.GAMMA: 0.8, Strategy.BETA: 0.9,
    Strategy.EPSILON: 0.5, Strategy.DELTA: 0.1,
}


def default_outcome_table(noise: float = 0.05) -> OutcomeTable:
    cells = {}
    for s, (rel, err) in DEFAULT_OUTCOME_MEANS.items():
        cells[(s, Reliability.RELIABLE)] = OutcomeCell(rel, (noise,) * 3)
        cells[(s, Reliability.ERROR_PRONE)] = OutcomeCell(err, (noise,) * 3)
    return OutcomeTable(cells, dict(DEFAULT_DETECTION))


def _clamp01(x: float) -> float:
    return min(1.0, max(0.0, x))


def sample_outcome(strategy: Strategy, theta: Reliability, rng_stream, table: Optional[OutcomeTable] = None) -> OutcomeVector:
    """Draw one outcome from the (strategy, theta) cell.

    Each component is ``mean + width * (2u - 1)`` with ``u`` uniform, then
    clamped to its range.  Three draws are always consumed.
    """
    table = table if table is not None else default_outcome_table()
    cell = table.cell(strategy, theta)
    vals = [m + w * (2.0 * rng_stream.random() - 1.0) for m, w in zip(cell.mean, cell.noise)]
    return OutcomeVector(_clamp01(vals[0]), max(0.0, vals[1]), _clamp01(vals[2]))


def error_detected(strategy: Strategy, theta: Reliability, rng_stream, table: Optional[OutcomeTable] = None) -> bool:
    """Whether the user's own checking catches an error this episode."""
    table = table if table is not None else default_outcome_table()
    u = rng_stream.random()
    return theta is Reliability.ERROR_PRONE and u < table.detection_probability(Strategy.parse(strategy))


def signal_from_outcome(outcome: OutcomeVector, theta: Reliability, prev: SignalVector, *,
                        detected: Optional[bool] = None, learning_rate: float = 0.3,
                        effort_scale: float = 1.0) -> SignalVector:
    """Convex update of the signal toward what the episode revealed.

    Error salience is pulled toward 1 only for a *detected* error; pass
    ``detected=None`` to treat every error-prone episode as detected.
    """
    eta = learning_rate
    if not (0.0 <= eta <= 1.0):
        raise ParameterError("learning_rate must lie in [0, 1]")
    if effort_scale <= 0:
        raise ParameterError("effort_scale must be positive")
    if detected is None:
        detected = theta is Reliability.ERROR_PRONE
    err_target = 1.0 if (theta is Reliability.ERROR_PRONE and detected) else 0.0
    burden_target = min(1.0, outcome.effort_cost / effort_scale)
    keep = 1.0 - eta
    # the clamp only absorbs rounding above 1
    return SignalVector(
        min(1.0, keep * prev.trust + eta * outcome.quality),
        min(1.0, keep * prev.error_salience + eta * err_target),
        min(1.0, keep * prev.burden + eta * burden_target),
    )


def weighted_signal(z: SignalVector, omega: UserType) -> Tuple[float, float, float]:
    gt, ge, gb = omega.gains
    return (min(1.0, z.trust * gt), min(1.0, z.error_salience * ge), min(1.0, z.burden * gb))


def verification_pressure(w: Sequence[float], th: Thresholds) -> float:
    """Positive iff the verification condition holds (error spike or distrust)."""
    wt, we, _ = w
    return max(we - th.error_hi, th.trust_lo - wt)


def delegation_pressure(w: Sequence[float], th: Thresholds) -> float:
    """Positive iff high trust and high burden meet a quiet error signal."""
    wt, we, wb = w
    return min(wt - th.trust_hi, wb - th.burden_hi, th.error_lo - we)


def _streaks(s: Strategy, z: SignalVector, h: InteractionHistory, omega: UserType) -> Tuple[int, int]:
    """Consecutive episodes at ``s`` (current one included) meeting each condition."""
    th = omega.thresholds
    m = omega.persistence_m
    signals = [z]
    for rec in reversed(h.window):
        if len(signals) >= m or rec.strategy != s:
            break
        signals.append(rec.signal)
    nv = nd = 0
    v_open = d_open = True
    for sig in signals:
        w = weighted_signal(sig, omega)
        v_open = v_open and verification_pressure(w, th) > 0
        d_open = d_open and delegation_pressure(w, th) > 0
        nv += v_open
        nd += d_open
    return nv, nd


def transition_deterministic(s: Strategy, z: SignalVector, h: InteractionHistory, omega: UserType) -> Strategy:
    """Threshold form of the transition rule.

    A streak counts only episodes spent at the current strategy, so after a
    move the new rung has to earn its own ``persistence_m`` episodes before
    the next move.  Verification pressure wins over delegation pressure.
    """
    s = Strategy.parse(s)
    nv, nd = _streaks(s, z, h, omega)
    if nv >= omega.persistence_m:
        return s.toward_alpha()
    if nd >= omega.persistence_m:
        return s.toward_delta()
    return s


MOVES = ("toward_alpha", "stay", "toward_delta")


def transition_scores(s: Strategy, z: SignalVector, h: InteractionHistory, omega: UserType,
                      allowed_moves: Iterable[str] = MOVES) -> Tuple[Tuple[Strategy, ...], Tuple[float, ...]]:
    """Candidate successors and their affinity scores.

    Staying scores 0.  A move scores its pressure margin; a positive margin
    is discounted by how much of the persistence requirement is met.
    """
    s = Strategy.parse(s)
    allowed = set(allowed_moves)
    w = weighted_signal(z, omega)
    th = omega.thresholds
    m = omega.persistence_m
    nv, nd = _streaks(s, z, h, omega)
    v = verification_pressure(w, th)
    d = delegation_pressure(w, th)
    v_score = v * min(1.0, nv / m) if v > 0 else v
    d_score = d * min(1.0, nd / m) if d > 0 else d
    cands, scores = [], []
    if "toward_alpha" in allowed and s != Strategy.ALPHA:
        cands.append(s.toward_alpha())
        scores.append(v_score)
    if "stay" in allowed:
        cands.append(s)
        scores.append(0.0)
    if "toward_delta" in allowed and s != Strategy.DELTA:
        cands.append(s.toward_delta())
        scores.append(d_score)
    if not cands:
        raise ConfigurationError(f"no admissible move from {s.label} under {sorted(allowed)}")
    return tuple(cands), tuple(scores)


def softmax_index(scores: Sequence[float], u: float, temperature: float) -> int:
    if not temperature > 0:
        raise ParameterError(f"temperature must be positive, got {temperature!r}")
    sc = np.asarray(scores, dtype=np.float64)
    p = np.exp((sc - sc.max()) / temperature)
    cum = np.cumsum(p) / p.sum()
    for i, c in enumerate(cum):
        if u < c:
            return i
    return len(scores) - 1


def transition_stochastic(s: Strategy, z: SignalVector, h: InteractionHistory, omega: UserType, rng_stream,
                          temperature: float = 0.1, allowed_moves: Iterable[str] = MOVES) -> Strategy:
    if not temperature > 0:
        raise ParameterError(f"temperature must be positive, got {temperature!r}")
    cands, scores = transition_scores(s, z, h, omega, allowed_moves)
    u = rng_stream.random()
    if len(cands) == 1:
        return cands[0]
    return cands[softmax_index(scores, u, temperature)]


def occupancy_entropy(window: Sequence[Strategy]) -> float:
    counts = np.bincount([int(x) for x in window], minlength=5)
    p = counts[counts > 0] / len(window)
    return float(-(p * np.log2(p)).sum()) + 0.0


def detect_metastable(trajectory: Sequence[Strategy], window_w: int, entropy_threshold: float = 1.0) -> Optional[Regime]:
    """Regime label of the trailing window, or None if it has not settled.

    The window must be concentrated (occupancy entropy strictly below
    ``entropy_threshold`` bits).  Alpha/beta-modal tails are mixed
    assurance, delta-modal tails throughput lock-in, and epsilon/gamma-modal
    tails count as adaptive recalibration only if they still touch a
    verification rung (beta or alpha) somewhere in the window.
    """
    if window_w < 2:
        raise ParameterError("window_w must be >= 2")
    if len(trajectory) < window_w:
        raise InsufficientDataError(f"trajectory has {len(trajectory)} entries, window needs {window_w}")
    tail = [Strategy.parse(x) for x in trajectory[-window_w:]]
    if occupancy_entropy(tail) >= entropy_threshold:
        return None
    counts = np.bincount([int(x) for x in tail], minlength=5)
    modal = Strategy(int(np.argmax(counts)))  # argmax picks the lowest rank on ties
    if modal in (Strategy.ALPHA, Strategy.BETA):
        return Regime.MIXED_ASSURANCE
    if modal is Strategy.DELTA:
        return Regime.THROUGHPUT_LOCK_IN
    if counts[Strategy.BETA] > 0 or counts[Strategy.ALPHA] > 0:
        return Regime.ADAPTIVE_RECALIBRATION
    return None
