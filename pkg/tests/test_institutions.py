import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from delegsim.errors import DomainError, ParameterError
from delegsim.games import PdMatrix, SymmetricGame
from delegsim.institutions import (
    NULL_INSTITUTION,
    InstitutionalEnvironment,
    apply_institution,
    audit_and_sanction,
    cooperation_dominant,
    flip_bound,
    institutional_macro,
    violates,
)
from delegsim.network import AgentState, Disclosure, InteractionGraph
from delegsim.population import DEFAULT_REGIME_COEFFS, PopulationDistribution, aggregate_macro, integrate_replicator
from delegsim.strategy_core import InteractionHistory, SignalVector, Strategy, UserTypeVariant, default_user_types

PD = PdMatrix()
THROUGHPUT = default_user_types()[UserTypeVariant.THROUGHPUT]
PI = PopulationDistribution((0.2, 0.5, 0.3))


def agent(s, payoff=1.0):
    return AgentState(0, s, THROUGHPUT, InteractionHistory(), Disclosure.DISCLOSE, 0.5,
                      SignalVector(0.6, 0.2, 0.5), payoff)


def test_environment_validation():
    with pytest.raises(ParameterError):
        InstitutionalEnvironment(audit_probability=1.5)
    with pytest.raises(ParameterError):
        InstitutionalEnvironment(penalty_defect=-1.0)
    with pytest.raises(ParameterError):
        InstitutionalEnvironment(reward_cooperate=float("inf"))
    assert NULL_INSTITUTION.is_null


# ---- payoff transform


def test_null_transform_is_identity():
    g = PD.as_game()
    assert apply_institution(g, NULL_INSTITUTION) == g


def test_full_audit_penalty_three():
    g = PD.as_game()
    out = apply_institution(g, InstitutionalEnvironment(audit_probability=1.0, penalty_defect=3.0))
    assert out.payoff == ((3.0, 0.0), (2.0, -2.0))
    assert cooperation_dominant(out)
    assert g.payoff == ((3.0, 0.0), (5.0, 1.0))  # original untouched


def test_half_audit_penalty_five():
    out = apply_institution(PD.as_game(), InstitutionalEnvironment(audit_probability=0.5, penalty_defect=5.0))
    assert out.payoff[1] == (2.5, -1.5)
    assert cooperation_dominant(out)


def test_reward_raises_cooperative_row():
    out = apply_institution(PD.as_game(), InstitutionalEnvironment(reward_cooperate=1.0))
    assert out.payoff[0] == (4.0, 1.0)


def test_transform_needs_defect_action():
    with pytest.raises(DomainError):
        apply_institution(SymmetricGame(((1.0, 0.0), (0.0, 1.0))), NULL_INSTITUTION)


@st.composite
def pd_and_institution(draw):
    s = draw(st.floats(-3, 3))
    p = s + draw(st.floats(0.1, 3))
    r = p + draw(st.floats(0.1, 3))
    t = r + draw(st.floats(0.1, 3))
    inst = InstitutionalEnvironment(audit_probability=draw(st.floats(0, 1)), penalty_defect=draw(st.floats(0, 8)),
                                    reward_cooperate=draw(st.floats(0, 3)))
    return PdMatrix(t, r, p, s), inst


@given(pd_and_institution())
def test_flip_matches_closed_form(case):
    m, inst = case
    pressure = inst.expected_penalty + inst.reward_cooperate
    if abs(pressure - flip_bound(m)) < 1e-9:
        return
    assert cooperation_dominant(apply_institution(m.as_game(), inst)) == (pressure > flip_bound(m))


def test_penalty_sweep_flip_point():
    # closed form with audit 0.5: penalty > 2 * max(T-R, P-S) = 4
    penalties = np.linspace(0.0, 10.0, 21)
    step = penalties[1] - penalties[0]
    coop = []
    for pen in penalties:
        g = apply_institution(PD.as_game(), InstitutionalEnvironment(audit_probability=0.5, penalty_defect=pen))
        coop.append(integrate_replicator(PopulationDistribution((0.5, 0.5)), g, 0.01, 5000).final[0] > 0.999)
    first = penalties[coop.index(True)]
    assert all(coop[coop.index(True):])
    assert abs(first - 2 * flip_bound(PD)) <= step


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 6), st.floats(0.05, 0.95))
def test_monotone_sanction_pressure(a1, a2, pen, x0):
    lo, hi = sorted((a1, a2))
    start = PopulationDistribution((x0, 1 - x0))

    def defectors(a):
        g = apply_institution(PD.as_game(), InstitutionalEnvironment(audit_probability=a, penalty_defect=pen))
        return integrate_replicator(start, g, 0.01, 1000).final[1]

    assert defectors(hi) <= defectors(lo) + 1e-12


# ---- audits


def test_zero_audit_never_sanctions():
    inst = InstitutionalEnvironment(audit_probability=0.0, penalty_defect=3.0, mandate=Strategy.BETA)
    rng = random.Random(0)
    assert not any(audit_and_sanction(agent(Strategy.DELTA), inst, rng)[1] for _ in range(200))


def test_certain_audit_sanctions_violator():
    inst = InstitutionalEnvironment(audit_probability=1.0, penalty_defect=3.0, mandate=Strategy.BETA)
    out, hit, amount = audit_and_sanction(agent(Strategy.DELTA), inst, random.Random(0))
    assert hit and amount == 3.0
    assert out.payoff == -2.0
    assert out.signal.error_salience == pytest.approx(0.7)


def test_certain_audit_spares_compliant():
    inst = InstitutionalEnvironment(audit_probability=1.0, penalty_defect=3.0, mandate=Strategy.BETA)
    a = agent(Strategy.ALPHA)
    out, hit, amount = audit_and_sanction(a, inst, random.Random(0))
    assert not hit and amount == 0.0 and out is a


def test_violation_without_mandate_uses_cooperative_set():
    assert violates(Strategy.DELTA, NULL_INSTITUTION)
    assert violates(Strategy.GAMMA, NULL_INSTITUTION)
    assert not violates(Strategy.EPSILON, NULL_INSTITUTION)
    assert violates(Strategy.EPSILON, InstitutionalEnvironment(mandate=Strategy.BETA))


def test_audit_is_seeded():
    inst = InstitutionalEnvironment(audit_probability=0.4, penalty_defect=1.0)
    runs = [[audit_and_sanction(agent(Strategy.DELTA), inst, r)[1] for _ in range(30)]
            for r in (random.Random(5), random.Random(5))]
    assert runs[0] == runs[1]
    assert 0 < sum(runs[0]) < 30


# ---- macro


def test_null_institution_macro_identity():
    assert institutional_macro(PI, DEFAULT_REGIME_COEFFS, NULL_INSTITUTION) == aggregate_macro(PI, DEFAULT_REGIME_COEFFS)


def test_full_provenance_zeroes_error_propagation():
    inst = InstitutionalEnvironment(provenance_required=True, provenance_compliance=1.0)
    assert institutional_macro(PI, DEFAULT_REGIME_COEFFS, inst).error_propagation_rate == 0.0


def test_half_provenance_frozen():
    # error 0.335 * (1 - 0.5); quality and capacity pass through
    inst = InstitutionalEnvironment(provenance_required=True, provenance_compliance=0.5)
    out = institutional_macro(PI, DEFAULT_REGIME_COEFFS, inst)
    assert out.as_tuple() == pytest.approx((0.784, 0.1675, 0.44), abs=1e-12)


def test_disclosure_requirement_lifts_capacity():
    agents = [AgentState(i, Strategy.BETA, THROUGHPUT, InteractionHistory(), Disclosure.DISCLOSE, 0.8)
              for i in range(3)]
    g = InteractionGraph.from_edges(3, [(0, 1, 0.5), (1, 2, 0.5), (2, 0, 0.5)])
    inst = InstitutionalEnvironment(disclosure_required=True, alignment_strength=0.5)
    out = institutional_macro(PI, DEFAULT_REGIME_COEFFS, inst, g, agents)
    # full disclosure: lift 0.5, capacity 0.44 + 0.5 * 0.5 * 0.56
    assert out.epistemic_capacity == pytest.approx(0.58, abs=1e-12)
