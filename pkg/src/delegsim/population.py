"""Distributional scaling: simplex points, macro projection, replicator and imitation dynamics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .errors import DimensionError, DomainError, ParameterError
from .games import DEFAULT_TOL, SymmetricGame, simplex_grid
from .strategy_core import Regime

SIMPLEX_TOL = 1e-12


@dataclass(frozen=True)
class RegimeSet:
    regimes: Tuple[Regime, ...] = (
        Regime.ADAPTIVE_RECALIBRATION,
        Regime.THROUGHPUT_LOCK_IN,
        Regime.MIXED_ASSURANCE,
    )

    def __post_init__(self):
        if not self.regimes:
            raise DomainError("regime set must be nonempty")
        if len(set(self.regimes)) != len(self.regimes):
            raise DomainError("regime labels must be unique")

    def __len__(self):
        return len(self.regimes)

    def index(self, r: Regime) -> int:
        return self.regimes.index(r)


@dataclass(frozen=True)
class PopulationDistribution:
    weights: Tuple[float, ...]

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        if not w:
            raise DimensionError("distribution needs at least one weight")
        if any(not math.isfinite(x) or x < 0.0 for x in w):
            raise DomainError(f"weights must be finite and >= 0, got {w}")
        if abs(math.fsum(w) - 1.0) > SIMPLEX_TOL:
            raise DomainError(f"weights must sum to 1, got {math.fsum(w)!r}")
        object.__setattr__(self, "weights", w)

    @classmethod
    def normalized(cls, values: Sequence[float]) -> "PopulationDistribution":
        total = math.fsum(values)
        if total <= 0:
            raise DomainError("cannot normalise a zero vector")
        return cls(tuple(v / total for v in values))

    @classmethod
    def vertex(cls, k: int, i: int) -> "PopulationDistribution":
        return cls(tuple(1.0 if j == i else 0.0 for j in range(k)))

    def __len__(self):
        return len(self.weights)

    def __getitem__(self, i):
        return self.weights[i]


@dataclass(frozen=True)
class MacroState:
    mean_output_quality: float
    error_propagation_rate: float
    epistemic_capacity: float

    def __post_init__(self):
        for name in ("mean_output_quality", "error_propagation_rate", "epistemic_capacity"):
            v = getattr(self, name)
            if not (math.isfinite(v) and 0.0 <= v <= 1.0):
                raise DomainError(f"{name} must lie in [0, 1], got {v!r}")

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.mean_output_quality, self.error_propagation_rate, self.epistemic_capacity)


# per-regime macro coefficients, ordered as RegimeSet()
DEFAULT_REGIME_COEFFS = (
    MacroState(0.85, 0.10, 0.80),  # adaptive recalibration
    MacroState(0.70, 0.60, 0.20),  # throughput lock-in
    MacroState(0.88, 0.05, 0.60),  # mixed assurance
)


def aggregate_macro(pi: PopulationDistribution, coeffs: Sequence[MacroState]) -> MacroState:
    """Linear mixing of per-basis macro coefficients by the distribution."""
    if len(coeffs) != len(pi.weights):
        raise DimensionError(f"{len(pi.weights)} weights but {len(coeffs)} coefficient vectors")
    acc = [0.0, 0.0, 0.0]
    for w, c in zip(pi.weights, coeffs):
        for j, v in enumerate(c.as_tuple()):
            acc[j] += w * v
    return MacroState(*(min(1.0, max(0.0, a)) for a in acc))


def _step_raw(w: List[float], A: Sequence[Sequence[float]], dt: float) -> List[float]:
    k = len(w)
    f = [sum(A[i][j] * w[j] for j in range(k)) for i in range(k)]
    fbar = sum(w[i] * f[i] for i in range(k))
    nxt = [max(0.0, w[i] + dt * w[i] * (f[i] - fbar)) for i in range(k)]
    total = sum(nxt)
    return [x / total for x in nxt]


def replicator_step(pi: PopulationDistribution, g: SymmetricGame, dt: float) -> PopulationDistribution:
    """One explicit-Euler step of the replicator equation, clamped and renormalised."""
    if not dt > 0:
        raise ParameterError(f"dt must be positive, got {dt!r}")
    if len(pi.weights) != g.k:
        raise DimensionError("distribution and game disagree on the number of actions")
    return PopulationDistribution(tuple(_step_raw(list(pi.weights), g.payoff, dt)))


@dataclass(frozen=True)
class Trajectory:
    """Recorded replicator path: ``steps[i]`` is the step index of ``weights[i]``."""

    steps: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.steps)

    def __getitem__(self, i) -> PopulationDistribution:
        return PopulationDistribution(tuple(self.weights[i]))

    @property
    def final(self) -> PopulationDistribution:
        return self[-1]


def integrate_replicator(pi0: PopulationDistribution, g: SymmetricGame, dt: float = 0.01,
                         steps: int = 1000, thin: int = 1) -> Trajectory:
    """Iterate :func:`replicator_step`; record step 0, every ``thin``-th step and the last."""
    if steps < 1:
        raise ParameterError("steps must be >= 1")
    if thin < 1:
        raise ParameterError("thin must be >= 1")
    if not dt > 0:
        raise ParameterError(f"dt must be positive, got {dt!r}")
    if len(pi0.weights) != g.k:
        raise DimensionError("distribution and game disagree on the number of actions")
    A = g.payoff
    w = list(pi0.weights)
    idx, rec = [0], [tuple(w)]
    for t in range(1, steps + 1):
        w = _step_raw(w, A, dt)
        if t % thin == 0 or t == steps:
            idx.append(t)
            rec.append(tuple(w))
    return Trajectory(np.array(idx), np.array(rec, dtype=np.float64))


def replicator_field(x: np.ndarray, A: np.ndarray) -> np.ndarray:
    f = A @ x
    return x * (f - x @ f)


def proportional_imitation(types: np.ndarray, fitness: np.ndarray, payoff_range: float,
                           rate: float, rng: np.random.Generator) -> np.ndarray:
    """One synchronous round of pairwise proportional imitation.

    Each agent is selected with probability ``rate``, samples a uniform role
    model and copies it with probability ``max(0, f_model - f_self) / range``.
    """
    n = len(types)
    selected = rng.random(n) < rate
    role = rng.integers(0, n, n)
    u = rng.random(n)
    if payoff_range <= 0:
        return types.copy()
    gain = fitness[types[role]] - fitness[types]
    copy = selected & (u < np.clip(gain / payoff_range, 0.0, 1.0))
    return np.where(copy, types[role], types)


def imitation_step(agents: Sequence[int], g: SymmetricGame, imitation_rate: float, rng_stream) -> np.ndarray:
    """Finite-population update over pure actions given as action indices."""
    types = np.asarray(agents, dtype=np.int64)
    if types.size == 0:
        raise DomainError("population is empty")
    if not (0.0 < imitation_rate <= 1.0):
        raise ParameterError("imitation_rate must lie in (0, 1]")
    if types.min() < 0 or types.max() >= g.k:
        raise DomainError("agent action index out of range")
    rng = rng_stream if isinstance(rng_stream, np.random.Generator) else np.random.default_rng(rng_stream)
    mix = np.bincount(types, minlength=g.k) / types.size
    fitness = g.matrix @ mix
    return proportional_imitation(types, fitness, g.payoff_range, imitation_rate, rng)


def _dedupe(points: List[np.ndarray], tol: float) -> List[np.ndarray]:
    out: List[np.ndarray] = []
    for p in points:
        if not any(np.max(np.abs(p - q)) <= tol for q in out):
            out.append(p)
    return out


def find_rest_points(g: SymmetricGame, grid_density: int = 101, tol: float = DEFAULT_TOL,
                     bisect_iters: int = 80) -> List[PopulationDistribution]:
    """Grid search for zeros of the replicator field, refined along grid edges.

    Grid points with field norm below ``tol`` are kept directly (vertices
    always qualify).  Along every edge between neighbouring grid points that
    moves mass from action ``a`` to ``b``, a strict sign change of
    ``f_a - f_b`` is bisected; the refined point is kept if its field norm
    is also below ``tol``.
    """
    if grid_density < 2:
        raise ParameterError("grid_density must be >= 2")
    A = g.matrix
    k = g.k
    h = 1.0 / (grid_density - 1)
    found = [np.eye(k)[i] for i in range(k)]
    grid = list(simplex_grid(k, grid_density))
    for x in grid:
        if np.max(np.abs(replicator_field(x, A))) < tol:
            found.append(x)
    for x in grid:
        for a in range(k):
            for b in range(k):
                if a == b or x[b] < h - 1e-12:
                    continue
                step = np.zeros(k)
                step[a], step[b] = h, -h
                y = x + step
                ga = (A @ x)[a] - (A @ x)[b]
                gb = (A @ y)[a] - (A @ y)[b]
                if not ga * gb < 0:
                    continue
                lo, hi = 0.0, 1.0
                for _ in range(bisect_iters):
                    mid = 0.5 * (lo + hi)
                    p = x + mid * step
                    gm = (A @ p)[a] - (A @ p)[b]
                    if gm * ga > 0:
                        lo = mid
                    else:
                        hi = mid
                p = np.clip(x + 0.5 * (lo + hi) * step, 0.0, None)
                p = p / p.sum()
                if np.max(np.abs(replicator_field(p, A))) < tol:
                    found.append(p)
    pts = _dedupe(found, 1e-9)
    pts.sort(key=lambda p: tuple(p))
    return [PopulationDistribution(tuple(p / p.sum())) for p in pts]
