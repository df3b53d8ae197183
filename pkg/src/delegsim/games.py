"""Normal-form games and equilibrium predicates.

Symmetric two-player games are stored row = own action, column = opponent
action.  ``is_nash`` and ``is_ess`` work on mixed actions; the invasion
oracle is a finite-population brute-force check of the ESS predicate.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionError, DomainError, ParameterError

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class SymmetricGame:
    payoff: Tuple[Tuple[float, ...], ...]
    labels: Tuple[str, ...] = ()
    defect_action: Optional[int] = None

    def __post_init__(self):
        rows = tuple(tuple(float(x) for x in row) for row in self.payoff)
        k = len(rows)
        if k < 2 or any(len(r) != k for r in rows):
            raise DimensionError("payoff must be a square matrix with k >= 2")
        if not all(math.isfinite(x) for r in rows for x in r):
            raise DomainError("payoff entries must be finite")
        object.__setattr__(self, "payoff", rows)
        labels = tuple(self.labels) or tuple(str(i) for i in range(k))
        if len(labels) != k:
            raise DimensionError("one label per action required")
        object.__setattr__(self, "labels", labels)
        if self.defect_action is not None and not (0 <= self.defect_action < k):
            raise DomainError("defect_action out of range")

    @property
    def k(self) -> int:
        return len(self.payoff)

    @property
    def matrix(self) -> np.ndarray:
        return np.array(self.payoff, dtype=np.float64)

    @property
    def payoff_range(self) -> float:
        flat = [x for r in self.payoff for x in r]
        return max(flat) - min(flat)

    def expected(self, x: Sequence[float], y: Sequence[float]) -> float:
        """Payoff of mixed action ``x`` against mixed action ``y``."""
        return float(np.asarray(x, dtype=np.float64) @ self.matrix @ np.asarray(y, dtype=np.float64))


@dataclass(frozen=True)
class PdMatrix:
    T: float = 5.0
    R: float = 3.0
    P: float = 1.0
    S: float = 0.0

    def __post_init__(self):
        if not (self.T > self.R > self.P > self.S):
            raise ParameterError(f"prisoner's dilemma needs T > R > P > S, got {self}")

    def as_game(self) -> SymmetricGame:
        return SymmetricGame(((self.R, self.S), (self.T, self.P)), ("C", "D"), defect_action=1)


@dataclass(frozen=True)
class CoordinationMatrix:
    A: float = 4.0
    B: float = 2.0
    C: float = 0.0
    D: float = 1.0

    def __post_init__(self):
        if not (self.A > self.B and self.A > self.D and self.B > self.C):
            raise ParameterError(f"coordination game needs A > B, A > D, B > C, got {self}")

    def as_game(self) -> SymmetricGame:
        # L plays the role of the defecting (low-integrity) action
        return SymmetricGame(((self.A, self.C), (self.D, self.B)), ("H", "L"), defect_action=1)

    def mixed_equilibrium(self) -> float:
        """Share of H at which both actions earn the same."""
        return (self.B - self.C) / ((self.A - self.D) + (self.B - self.C))


@dataclass(frozen=True)
class NPlayerPdParams:
    n: int
    benefit_b: float
    cost_c: float

    def __post_init__(self):
        if self.n < 2:
            raise ParameterError("n-player PD needs n >= 2")
        if not (self.benefit_b > self.cost_c > self.benefit_b / self.n and self.cost_c > 0):
            raise ParameterError("n-player PD needs b > c > b/n > 0")


def _action(a: str, allowed: str) -> str:
    a = str(a).upper()
    if a not in allowed:
        raise DomainError(f"action must be one of {tuple(allowed)}, got {a!r}")
    return a


def pd_payoff(a1: str, a2: str, m: PdMatrix) -> Tuple[float, float]:
    a1, a2 = _action(a1, "CD"), _action(a2, "CD")
    table = {("C", "C"): (m.R, m.R), ("C", "D"): (m.S, m.T),
             ("D", "C"): (m.T, m.S), ("D", "D"): (m.P, m.P)}
    return table[(a1, a2)]


def coordination_payoff(a1: str, a2: str, m: CoordinationMatrix) -> Tuple[float, float]:
    a1, a2 = _action(a1, "HL"), _action(a2, "HL")
    table = {("H", "H"): (m.A, m.A), ("L", "L"): (m.B, m.B),
             ("H", "L"): (m.C, m.D), ("L", "H"): (m.D, m.C)}
    return table[(a1, a2)]


def n_player_pd_payoffs(actions: Sequence[str], p: NPlayerPdParams) -> list:
    """Linear public-goods payoffs: ``b * cooperators / n - c * [cooperated]``."""
    if len(actions) != p.n:
        raise DimensionError(f"expected {p.n} actions, got {len(actions)}")
    acts = [_action(a, "CD") for a in actions]
    share = p.benefit_b * acts.count("C") / p.n
    return [share - (p.cost_c if a == "C" else 0.0) for a in acts]


def _check_simplex(x: Sequence[float], k: int, tol: float) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (k,):
        raise DimensionError(f"mixed action must have {k} components")
    if not np.all(np.isfinite(x)) or np.any(x < -tol) or abs(x.sum() - 1.0) > max(tol, 1e-12):
        raise DomainError(f"{x.tolist()} is not on the simplex")
    return x


def is_nash(profile: Tuple[Sequence[float], Sequence[float]], g: SymmetricGame, tol: float = DEFAULT_TOL) -> bool:
    """No pure deviation improves either player's expected payoff by more than ``tol``."""
    A = g.matrix
    x = _check_simplex(profile[0], g.k, tol)
    y = _check_simplex(profile[1], g.k, tol)
    f1 = A @ y  # row player's pure payoffs against y
    f2 = A @ x
    return bool(f1.max() - x @ f1 <= tol and f2.max() - y @ f2 <= tol)


def simplex_grid(k: int, density: int):
    """All points of the simplex whose coordinates are multiples of 1/(density-1)."""
    steps = density - 1
    for cut in itertools.combinations(range(steps + k - 1), k - 1):
        parts, prev = [], -1
        for c in cut:
            parts.append(c - prev - 1)
            prev = c
        parts.append(steps + k - 2 - prev)
        yield np.array(parts, dtype=np.float64) / steps


def is_ess(candidate: Sequence[float], g: SymmetricGame, tol: float = DEFAULT_TOL, grid_density: int = 101) -> bool:
    """Maynard Smith / Price conditions against vertex and grid mutants.

    Mutants are every pure action plus every point of a simplex grid with
    ``grid_density`` points per axis; mutants within ``tol`` of the candidate
    are skipped.
    """
    A = g.matrix
    c = _check_simplex(candidate, g.k, tol)
    e_cc = c @ A @ c
    mutants = [np.eye(g.k)[i] for i in range(g.k)]
    if grid_density >= 2:
        mutants.extend(simplex_grid(g.k, grid_density))
    for m in mutants:
        if np.max(np.abs(m - c)) <= tol:
            continue
        e_mc = m @ A @ c
        if e_cc > e_mc + tol:
            continue
        if abs(e_cc - e_mc) <= tol and c @ A @ m > m @ A @ m + tol:
            continue
        return False
    return True


def ess_invasion_oracle(candidate: Sequence[float], mutant: Sequence[float], g: SymmetricGame,
                        pop_n: int = 1000, invader_frac: float = 0.01, steps: int = 200,
                        rng_stream=None, imitation_rate: float = 1.0) -> bool:
    """Brute-force invasion test in a finite, well-mixed population.

    Agents carry either the candidate or the mutant (possibly mixed) action
    and revise by pairwise proportional imitation.  Returns True iff the
    mutant share at the horizon is below its initial share; an identical
    mutant is vacuously repelled.
    """
    from .population import proportional_imitation

    if pop_n < 100:
        raise ParameterError("pop_n must be >= 100")
    if not (0.0 < invader_frac < 0.5):
        raise ParameterError("invader_frac must lie in (0, 0.5)")
    if steps < 1:
        raise ParameterError("steps must be >= 1")
    c = _check_simplex(candidate, g.k, 1e-9)
    m = _check_simplex(mutant, g.k, 1e-9)
    if np.allclose(c, m, atol=1e-12, rtol=0.0):
        return True
    rng = rng_stream if isinstance(rng_stream, np.random.Generator) else np.random.default_rng(rng_stream)
    n_mut = max(1, int(round(invader_frac * pop_n)))
    types = np.zeros(pop_n, dtype=np.int64)
    types[:n_mut] = 1
    kinds = np.stack([c, m])
    A = g.matrix
    for _ in range(steps):
        share_m = types.mean()
        mix = (1.0 - share_m) * c + share_m * m
        fitness = kinds @ A @ mix
        types = proportional_imitation(types, fitness, g.payoff_range, imitation_rate, rng)
        if not types.any():
            break
    return int(types.sum()) < n_mut
