"""Institutional environments: payoff transforms, audits and the institutional macro map."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import FrozenSet, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, ParameterError
from .games import PdMatrix, SymmetricGame
from .network import DEFAULT_SIGNAL_MODEL, AgentState, InteractionGraph, SignalModel, measure_local_norm
from .population import MacroState, PopulationDistribution, aggregate_macro
from .strategy_core import SignalVector, Strategy

# strategies counted as cooperative (responsible) use in the two-action games
DEFAULT_COOPERATIVE: FrozenSet[Strategy] = frozenset({Strategy.ALPHA, Strategy.BETA, Strategy.EPSILON})


@dataclass(frozen=True)
class InstitutionalEnvironment:
    """Exogenous rules acting on payoffs, agents and the macro projection.

    ``sanction_salience`` is the error-salience bump a sanctioned agent
    receives.  ``provenance_compliance`` sets how strongly a provenance
    requirement suppresses error propagation, and ``alignment_strength`` how
    far observed disclosure/verification norms lift epistemic capacity.
    """

    disclosure_required: bool = False
    provenance_required: bool = False
    audit_probability: float = 0.0
    penalty_defect: float = 0.0
    reward_cooperate: float = 0.0
    mandate: Optional[Strategy] = None
    sanction_salience: float = 0.5
    provenance_compliance: float = 1.0
    alignment_strength: float = 0.5
    disclosure_compliance: float = 1.0

    def __post_init__(self):
        for name in ("audit_probability", "sanction_salience", "provenance_compliance",
                     "alignment_strength", "disclosure_compliance"):
            v = getattr(self, name)
            if not (math.isfinite(v) and 0.0 <= v <= 1.0):
                raise ParameterError(f"{name} must lie in [0, 1], got {v!r}")
        for name in ("penalty_defect", "reward_cooperate"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0.0):
                raise ParameterError(f"{name} must be finite and >= 0, got {v!r}")

    @property
    def is_null(self) -> bool:
        return (not self.disclosure_required and not self.provenance_required
                and self.audit_probability == 0.0 and self.penalty_defect == 0.0
                and self.reward_cooperate == 0.0 and self.mandate is None)

    @property
    def provenance_strength(self) -> float:
        return self.provenance_compliance if self.provenance_required else 0.0

    @property
    def expected_penalty(self) -> float:
        return self.audit_probability * self.penalty_defect


NULL_INSTITUTION = InstitutionalEnvironment()


def apply_institution(g: SymmetricGame, inst: InstitutionalEnvironment) -> SymmetricGame:
    """Expected-value payoff transform; the input game is left untouched."""
    if g.defect_action is None:
        raise DomainError("game has no designated defect action")
    cut = inst.expected_penalty
    rows = []
    for a, row in enumerate(g.payoff):
        delta = -cut if a == g.defect_action else inst.reward_cooperate
        rows.append(tuple(x + delta for x in row))
    return SymmetricGame(tuple(rows), g.labels, g.defect_action)


def flip_bound(m: PdMatrix) -> float:
    """Expected sanction plus reward above which cooperation strictly dominates."""
    return max(m.T - m.R, m.P - m.S)


def cooperation_dominant(g: SymmetricGame) -> bool:
    """Whether every cooperative row strictly beats the defect row column by column."""
    A = g.matrix
    d = g.defect_action
    return all(bool(np.all(A[a] > A[d])) for a in range(g.k) if a != d)


def violates(strategy: Strategy, inst: InstitutionalEnvironment,
             cooperative: FrozenSet[Strategy] = DEFAULT_COOPERATIVE) -> bool:
    """Below the mandate floor (toward delta); without a mandate, any non-cooperative strategy."""
    if inst.mandate is not None:
        return int(strategy) > int(inst.mandate)
    return strategy not in cooperative


def audit_and_sanction(agent: AgentState, inst: InstitutionalEnvironment, rng_stream,
                       cooperative: FrozenSet[Strategy] = DEFAULT_COOPERATIVE) -> Tuple[AgentState, bool, float]:
    u = rng_stream.random()
    if not (u < inst.audit_probability and violates(agent.strategy, inst, cooperative)):
        return agent, False, 0.0
    z = agent.signal
    bumped = SignalVector(z.trust, min(1.0, z.error_salience + inst.sanction_salience), z.burden)
    out = replace(agent, signal=bumped, payoff=agent.payoff - inst.penalty_defect)
    return out, True, inst.penalty_defect


def compliance_estimates(graph: Optional[InteractionGraph], agents: Optional[Sequence[AgentState]],
                         model: SignalModel = DEFAULT_SIGNAL_MODEL) -> Tuple[float, float]:
    """Mean disclosure rate and verification-norm strength over non-isolated nodes."""
    if graph is None or agents is None:
        return 0.0, 0.0
    norms = [measure_local_norm(i, graph, agents, model) for i in range(graph.node_count)]
    norms = [n for n in norms if not n.isolated]
    if not norms:
        return 0.0, 0.0
    return (sum(n.disclosure_rate for n in norms) / len(norms),
            sum(n.verification_norm_strength for n in norms) / len(norms))


def institutional_modifiers(base: MacroState, inst: InstitutionalEnvironment,
                            disclosure: float, verification: float) -> MacroState:
    error = base.error_propagation_rate * (1.0 - inst.provenance_strength)
    lift = 0.0
    if inst.disclosure_required:
        lift += 0.5 * disclosure
    if inst.audit_probability > 0.0 or inst.mandate is not None:
        lift += 0.5 * verification
    cap = base.epistemic_capacity + inst.alignment_strength * lift * (1.0 - base.epistemic_capacity)
    return MacroState(
        min(1.0, max(0.0, base.mean_output_quality)),
        min(1.0, max(0.0, error)),
        min(1.0, max(0.0, cap)),
    )


def institutional_macro(pi: PopulationDistribution, coeffs: Sequence[MacroState], inst: InstitutionalEnvironment,
                        graph: Optional[InteractionGraph] = None, agents: Optional[Sequence[AgentState]] = None,
                        model: SignalModel = DEFAULT_SIGNAL_MODEL) -> MacroState:
    """Linear macro projection followed by the institution's modifiers.

    Error propagation shrinks by the provenance strength; epistemic capacity
    moves toward 1 in proportion to observed disclosure (if disclosure is
    required) and verification-norm strength (if audits or a mandate are in
    force).  A null institution returns the plain projection.
    """
    base = aggregate_macro(pi, coeffs)
    if inst.is_null:
        return base
    d, v = compliance_estimates(graph, agents, model)
    return institutional_modifiers(base, inst, d, v)
