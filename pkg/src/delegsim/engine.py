"""Scenario orchestration.

One run is a strict episode loop over a population whose per-agent step is
the strategy-core model; the population update is vectorised over agents
and reads a frozen snapshot, so results do not depend on update order.
:func:`run_isolated_agent` is the scalar reference built directly on the
strategy-core functions; in isolation (no graph, or zero weights) the two
agree bit for bit.

Per agent and episode ``t`` (1-based) the order is: reliability draw,
outcome, own error detection, signal update, audit, individual transition,
social correction from neighbours' signals, history bookkeeping, optional
disclosure conformity.  Every random number comes from the counter stream
``(seed, agent, t, purpose, index)``.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import rng as crng
from .config import STRATEGY_NAMES, ScenarioConfig, config_hash
from .errors import InsufficientDataError, StateError
from .games import CoordinationMatrix, PdMatrix
from .institutions import InstitutionalEnvironment, audit_and_sanction, institutional_modifiers, violates
from .lockin import LockInParams, LockInReport, detect_lockin, welfare
from .network import (
    AgentState,
    Disclosure,
    InteractionGraph,
    SignalModel,
    complete_graph,
    load_edge_list,
    ring_lattice,
    watts_strogatz,
)
from .population import MacroState, PopulationDistribution, aggregate_macro
from .strategy_core import (
    HistoryRecord,
    InteractionHistory,
    OutcomeCell,
    OutcomeTable,
    Regime,
    Reliability,
    SignalVector,
    Strategy,
    Thresholds,
    UserType,
    UserTypeVariant,
    detect_metastable,
    error_detected,
    sample_outcome,
    signal_from_outcome,
    transition_deterministic,
    transition_stochastic,
)

log = logging.getLogger(__name__)

_DISCLOSURES = (Disclosure.DISCLOSE, Disclosure.CONCEAL, Disclosure.MISDIRECT)


class CollectiveEquilibriumLabel(enum.Enum):
    DELEGATION_LOCK_IN = "DelegationLockIn"
    STRATIFIED_ASSURANCE = "StratifiedAssurance"
    HIGH_INTEGRITY_PROVENANCE = "HighIntegrityProvenance"
    UNCLASSIFIED = "Unclassified"


@dataclass
class Scenario:
    """A validated config compiled into model objects and per-agent arrays."""

    config: ScenarioConfig
    user_types: Dict[str, UserType]
    outcome_table: OutcomeTable
    graph: Optional[InteractionGraph]
    institution: InstitutionalEnvironment
    lockin: LockInParams
    signal_model: SignalModel
    macro_coeffs: Tuple[MacroState, ...]
    cooperative: frozenset
    pd: PdMatrix
    coordination: CoordinationMatrix
    agent_type: np.ndarray          # index into TYPE_ORDER
    agent_cohort: np.ndarray
    initial_strategy: np.ndarray
    initial_signal: np.ndarray      # (N, 3)
    initial_disclosure: np.ndarray  # index into _DISCLOSURES


TYPE_ORDER = ("reflective", "throughput", "assurance")


def _user_type(name: str, b) -> UserType:
    th = Thresholds(b.trust_hi, b.trust_lo, b.error_hi, b.error_lo, b.burden_hi, b.burden_lo)
    return UserType(UserTypeVariant(name), b.weights[0], b.weights[1], b.weights[2], b.persistence, th)


def _apportion(total: int, shares: Sequence[float]) -> List[int]:
    """Largest-remainder split of ``total`` items; ties go to the earlier share."""
    raw = [total * s for s in shares]
    base = [int(math.floor(r)) for r in raw]
    left = total - sum(base)
    order = sorted(range(len(shares)), key=lambda i: (-(raw[i] - base[i]), i))
    for i in order[:left]:
        base[i] += 1
    return base


def build_graph(cfg: ScenarioConfig, base_dir: Optional[Path] = None) -> Optional[InteractionGraph]:
    g = cfg.graph
    n = cfg.population
    weight = None if g.weight < 0 else g.weight
    if g.kind == "none":
        return None
    if g.kind == "complete":
        return complete_graph(n, weight)
    if g.kind == "ring":
        return ring_lattice(n, g.degree, weight)
    if g.kind == "watts_strogatz":
        return watts_strogatz(n, g.degree, g.rewire, seed=cfg.seed, weight=weight)
    p = Path(g.path)
    if base_dir is not None and not p.is_absolute():
        p = base_dir / p
    graph = load_edge_list(p, node_count=n)
    return graph if weight is None else InteractionGraph(n, {e: weight for e in graph.edges})


def compile_scenario(cfg: ScenarioConfig, base_dir: Optional[Path] = None) -> Scenario:
    types = {name: _user_type(name, getattr(cfg.user_types, name)) for name in TYPE_ORDER}
    cells = {}
    for s in Strategy:
        row = getattr(cfg.outcomes, s.label)
        cells[(s, Reliability.RELIABLE)] = OutcomeCell(tuple(row.reliable.mean), tuple(row.reliable.noise))
        cells[(s, Reliability.ERROR_PRONE)] = OutcomeCell(tuple(row.error_prone.mean), tuple(row.error_prone.noise))
    table = OutcomeTable(cells, {s: getattr(cfg.detection, s.label) for s in Strategy})
    ib = cfg.institution
    inst = InstitutionalEnvironment(
        ib.disclosure_required, ib.provenance_required, ib.audit_probability, ib.penalty_defect,
        ib.reward_cooperate, Strategy.parse(ib.mandate) if ib.mandate else None, ib.sanction_salience,
        ib.provenance_compliance, ib.alignment_strength, ib.disclosure_compliance)
    lb = cfg.lockin
    lock = LockInParams(lb.base_quality, lb.process_cost, lb.coordination_gain, lb.critical_threshold,
                        lb.decay_rate, lb.switch_cost, lb.externality)
    gb = cfg.graph
    model = SignalModel({s: getattr(gb.valence, s.label) for s in Strategy}, gb.misdirect_discount,
                        Strategy.parse(gb.misdirect_claim))
    coeffs = tuple(MacroState(*getattr(cfg.macro, s.label)) for s in Strategy)

    n = cfg.population
    sizes = _apportion(n, [c.share for c in cfg.cohorts])
    a_type, a_cohort, a_s, a_z, a_d = [], [], [], [], []
    for ci, (c, size) in enumerate(zip(cfg.cohorts, sizes)):
        mix = c.disclosure
        kinds = _apportion(size, [mix.disclose, mix.conceal, mix.misdirect])
        a_type += [TYPE_ORDER.index(c.user_type)] * size
        a_cohort += [ci] * size
        a_s += [int(Strategy.parse(c.initial_strategy))] * size
        a_z += [tuple(c.initial_signal)] * size
        for k, cnt in enumerate(kinds):
            a_d += [k] * cnt
    g = cfg.games
    return Scenario(
        cfg, types, table, build_graph(cfg, base_dir), inst, lock, model, coeffs,
        frozenset(Strategy.parse(x) for x in g.cooperative),
        PdMatrix(g.pd.T, g.pd.R, g.pd.P, g.pd.S),
        CoordinationMatrix(g.coordination.A, g.coordination.B, g.coordination.C, g.coordination.D),
        np.array(a_type, dtype=np.int64), np.array(a_cohort, dtype=np.int64),
        np.array(a_s, dtype=np.int64), np.array(a_z, dtype=np.float64).reshape(n, 3),
        np.array(a_d, dtype=np.int64),
    )


def initial_disclosure(sc: Scenario, seed: int) -> np.ndarray:
    """Cohort disclosure mix, overridden to disclose for compliers under a disclosure rule."""
    d = sc.initial_disclosure.copy()
    inst = sc.institution
    if inst.disclosure_required:
        u = crng.counter_uniforms(seed, np.arange(len(d)), 0, crng.DISCLOSURE, 0)
        d[u < inst.disclosure_compliance] = 0
    return d


@dataclass
class SimResult:
    name: str
    seed: int
    config_hash: str
    population: int
    horizon: int
    counts: np.ndarray              # (H+1, 5); row 0 is the initial state
    omega: np.ndarray               # (H+1, 3)
    strategies: np.ndarray          # (H+1, N)
    disclosure: np.ndarray          # terminal, index into (disclose, conceal, misdirect)
    signals: np.ndarray             # terminal (N, 3)
    payoff: np.ndarray
    transitions: np.ndarray
    sanctions: np.ndarray
    agent_type: np.ndarray
    agent_cohort: np.ndarray
    regimes: List[Optional[Regime]]
    events: List[dict]
    institution_active: bool
    lockin: Optional[LockInReport]
    completed: bool = True
    classification: Optional["Classification"] = None

    @property
    def shares(self) -> np.ndarray:
        return self.counts / float(self.population)

    @property
    def disclosure_rate(self) -> float:
        return float(np.mean(self.disclosure == 0))

    def agent_trajectory(self, i: int) -> List[Strategy]:
        return [Strategy(int(x)) for x in self.strategies[:, i]]


@dataclass
class Classification:
    label: CollectiveEquilibriumLabel
    predicates: Dict[str, bool]
    stats: Dict[str, float]
    cutoffs: Dict[str, float] = field(default_factory=dict)


def _omega(counts: np.ndarray, sc: Scenario, psi: np.ndarray, disc: np.ndarray,
           dense: Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]]) -> Tuple[float, float, float]:
    pi = PopulationDistribution.normalized([float(c) for c in counts])
    base = aggregate_macro(pi, sc.macro_coeffs)
    inst = sc.institution
    if inst.is_null:
        return base.as_tuple()
    d_rate = v_rate = 0.0
    if dense is not None:
        W, A, deg = dense
        live = deg > 0
        if live.any():
            d_rate = float(np.mean((A @ (disc == 0).astype(np.float64))[live] / deg[live]))
            mass = W @ np.abs(psi)
            neg = W @ np.maximum(0.0, -psi)
            v = np.divide(neg, mass, out=np.zeros_like(mass), where=mass > 0)
            v_rate = float(np.mean(v[live]))
    m = institutional_modifiers(base, inst, d_rate, v_rate)
    return (m.mean_output_quality, m.error_propagation_rate, m.epistemic_capacity)


def _type_arrays(sc: Scenario):
    ts = [sc.user_types[name] for name in TYPE_ORDER]
    gains = np.array([t.gains for t in ts])
    th = np.array([(t.thresholds.trust_hi, t.thresholds.trust_lo, t.thresholds.error_hi,
                    t.thresholds.error_lo, t.thresholds.burden_hi, t.thresholds.burden_lo) for t in ts])
    m = np.array([t.persistence_m for t in ts], dtype=np.int64)
    k = sc.agent_type
    return gains[k], th[k], m[k]


def run_scenario(cfg: ScenarioConfig, seed: Optional[int] = None, base_dir: Optional[Path] = None,
                 scenario: Optional[Scenario] = None) -> SimResult:
    """Run one seeded scenario; ``seed`` overrides the configured seed."""
    sc = scenario if scenario is not None else compile_scenario(cfg, base_dir)
    seed = cfg.seed if seed is None else int(seed)
    dyn = cfg.dynamics
    rel = cfg.reliability
    inst = sc.institution
    n, H = cfg.population, cfg.horizon
    ids = np.arange(n)
    rows = np.arange(n)

    gains, th, m = _type_arrays(sc)
    trust_hi, trust_lo, error_hi, error_lo, burden_hi, burden_lo = th.T
    mean = np.zeros((5, 2, 3))
    noise = np.zeros((5, 2, 3))
    for s in Strategy:
        for r, theta in enumerate((Reliability.RELIABLE, Reliability.ERROR_PRONE)):
            c = sc.outcome_table.cell(s, theta)
            mean[s, r] = c.mean
            noise[s, r] = c.noise
    detect_p = np.array([sc.outcome_table.detection_probability(s) for s in Strategy])
    violating = np.array([violates(s, inst, sc.cooperative) for s in Strategy])
    valence = sc.signal_model.valence_array()
    misdirect_psi = sc.signal_model.misdirect_discount * valence[int(sc.signal_model.misdirect_claim)]
    allow_a = "toward_alpha" in dyn.allowed_moves
    allow_stay = "stay" in dyn.allowed_moves
    allow_d = "toward_delta" in dyn.allowed_moves
    eta = dyn.learning_rate
    keep = 1.0 - eta
    stochastic = dyn.mode == "stochastic"
    T = dyn.temperature

    graph = sc.graph
    dense = None
    if graph is not None:
        W = graph.weight_matrix()
        A = graph.adjacency_matrix()
        dense = (W, A, A.sum(axis=1))
    thr = cfg.graph.influence_threshold
    follow = cfg.graph.disclosure_following and graph is not None
    flip_thr = cfg.graph.disclosure_flip_threshold
    want_events = cfg.output.events

    s = sc.initial_strategy.copy()
    z = sc.initial_signal.copy()
    disc = initial_disclosure(sc, seed)
    nv = np.zeros(n, dtype=np.int64)
    nd = np.zeros(n, dtype=np.int64)
    theta_rel = np.ones(n, dtype=bool)
    payoff = np.zeros(n)
    n_trans = np.zeros(n, dtype=np.int64)
    n_sanc = np.zeros(n, dtype=np.int64)

    counts = np.zeros((H + 1, 5), dtype=np.int64)
    omega = np.zeros((H + 1, 3))
    traj = np.zeros((H + 1, n), dtype=np.int8)
    counts[0] = np.bincount(s, minlength=5)
    omega[0] = _omega(counts[0], sc, np.zeros(n), disc, dense)
    traj[0] = s
    events: List[dict] = []

    for t in range(1, H + 1):
        # reliability
        u = crng.counter_uniforms(seed, ids, t, crng.THETA)
        if rel.process == "iid" or t == 1:
            theta_rel = u < rel.reliable_rate
        else:
            p_rel = np.where(theta_rel, rel.stay_reliable, 1.0 - rel.stay_error_prone)
            theta_rel = u < p_rel
        r_idx = (~theta_rel).astype(np.int64)
        cm = mean[s, r_idx]
        cw = noise[s, r_idx]
        out = np.empty((n, 3))
        for k in range(3):
            uk = crng.counter_uniforms(seed, ids, t, crng.OUTCOME, k)
            out[:, k] = cm[:, k] + cw[:, k] * (2.0 * uk - 1.0)
        q = np.minimum(1.0, np.maximum(0.0, out[:, 0]))
        effort = np.maximum(0.0, out[:, 1])
        u = crng.counter_uniforms(seed, ids, t, crng.DETECT)
        detected = (~theta_rel) & (u < detect_p[s])
        # signal update
        err_target = detected.astype(np.float64)
        burden_target = np.minimum(1.0, effort / dyn.effort_scale)
        z = np.stack([
            np.minimum(1.0, keep * z[:, 0] + eta * q),
            np.minimum(1.0, keep * z[:, 1] + eta * err_target),
            np.minimum(1.0, keep * z[:, 2] + eta * burden_target),
        ], axis=1)
        ep_pay = q - effort
        # audit
        u = crng.counter_uniforms(seed, ids, t, crng.AUDIT)
        audited = u < inst.audit_probability
        sanctioned = audited & violating[s]
        if sanctioned.any():
            z[:, 1] = np.where(sanctioned, np.minimum(1.0, z[:, 1] + inst.sanction_salience), z[:, 1])
            ep_pay = ep_pay - np.where(sanctioned, inst.penalty_defect, 0.0)
            n_sanc += sanctioned
        payoff += ep_pay
        # individual transition
        w = np.minimum(1.0, z * gains)
        vp = np.maximum(w[:, 1] - error_hi, trust_lo - w[:, 0])
        dp = np.minimum(np.minimum(w[:, 0] - trust_hi, w[:, 2] - burden_hi), error_lo - w[:, 1])
        nv = np.minimum(np.where(vp > 0, nv + 1, 0), m)
        nd = np.minimum(np.where(dp > 0, nd + 1, 0), m)
        down = np.maximum(s - 1, 0)
        up = np.minimum(s + 1, 4)
        if stochastic:
            v_score = np.where(vp > 0, vp * np.minimum(1.0, nv / m), vp)
            d_score = np.where(dp > 0, dp * np.minimum(1.0, nd / m), dp)
            ok_a = (s != 0) & allow_a
            ok_d = (s != 4) & allow_d
            sc3 = np.stack([np.where(ok_a, v_score, -np.inf),
                            np.full(n, 0.0 if allow_stay else -np.inf),
                            np.where(ok_d, d_score, -np.inf)], axis=1)
            p = np.exp((sc3 - sc3.max(axis=1, keepdims=True)) / T)
            cum = np.cumsum(p, axis=1) / p.sum(axis=1, keepdims=True)
            u = crng.counter_uniforms(seed, ids, t, crng.TRANSITION)
            pick = np.argmax(u[:, None] < cum, axis=1)
            none = ~(u[:, None] < cum).any(axis=1)
            if none.any():
                valid = np.isfinite(sc3)
                last = 2 - np.argmax(valid[:, ::-1], axis=1)
                pick = np.where(none, last, pick)
            cand = np.choose(pick, [down, s, up])
            cause_ind = np.where(cand != s, 3, 0)
        else:
            go_a = nv >= m
            go_d = (~go_a) & (nd >= m)
            cand = np.where(go_a, down, np.where(go_d, up, s))
            # a disallowed move means staying
            if not allow_a:
                cand = np.where(go_a, s, cand)
            if not allow_d:
                cand = np.where(go_d, s, cand)
            cause_ind = np.where(cand != s, np.where(go_a, 1, 2), 0)
        # social correction from the frozen snapshot (strategy played, this episode's output)
        new = cand
        social = np.zeros(n, dtype=np.int64)
        if graph is not None:
            psi = np.where(disc == 0, valence[s] * q, np.where(disc == 1, 0.0, misdirect_psi * q))
            psi = np.minimum(1.0, np.maximum(-1.0, psi))
            infl = dense[0] @ psi
            to_d = infl > thr
            to_a = (~to_d) & (infl < -thr)
            new = np.where(to_d, np.minimum(cand + 1, 4), np.where(to_a, np.maximum(cand - 1, 0), cand))
            social = np.where(to_d, 1, np.where(to_a, 2, 0))
        else:
            psi = np.zeros(n)
        moved = new != s
        if want_events:
            for i in np.nonzero(audited)[0]:
                events.append({"episode": t, "agent": int(i), "kind": "audit", "cause": "random_audit",
                               "strategy": STRATEGY_NAMES[s[i]]})
                if sanctioned[i]:
                    events.append({"episode": t, "agent": int(i), "kind": "sanction",
                                   "cause": "mandate_floor" if inst.mandate is not None else "non_cooperative",
                                   "strategy": STRATEGY_NAMES[s[i]], "penalty": inst.penalty_defect})
            for i in np.nonzero(moved)[0]:
                causes = []
                if cause_ind[i]:
                    causes.append(("", "verification_threshold", "delegation_threshold", "stochastic")[cause_ind[i]])
                if social[i]:
                    causes.append(("", "social_toward_delta", "social_toward_alpha")[social[i]])
                events.append({"episode": t, "agent": int(i), "kind": "transition", "cause": "+".join(causes),
                               "from": STRATEGY_NAMES[s[i]], "to": STRATEGY_NAMES[new[i]]})
        n_trans += moved
        nv = np.where(moved, 0, nv)
        nd = np.where(moved, 0, nd)
        if follow:
            W, A, deg = dense
            share = np.divide(A @ (disc == 0).astype(np.float64), deg, out=np.zeros(n), where=deg > 0)
            disc = np.where((deg > 0) & (share >= flip_thr), 0, disc)
        s = new
        counts[t] = np.bincount(s, minlength=5)
        omega[t] = _omega(counts[t], sc, psi, disc, dense)
        traj[t] = s

    regimes = []
    for i in rows:
        try:
            regimes.append(detect_metastable([int(x) for x in traj[:, i]], cfg.regimes.window,
                                             cfg.regimes.entropy_threshold))
        except InsufficientDataError:
            regimes.append(None)
    rep = None
    if H + 1 >= cfg.lockin.window:
        nA = counts[:, 4] * cfg.lockin.adoption_scale
        rep = detect_lockin([(float(x), welfare(float(x), sc.lockin)) for x in nA], sc.lockin, cfg.lockin.window)
    res = SimResult(cfg.name, seed, config_hash(cfg), n, H, counts, omega, traj, disc, z, payoff, n_trans,
                    n_sanc, sc.agent_type, sc.agent_cohort, regimes, events, not inst.is_null, rep)
    res.classification = classify_collective(res, cfg)
    return res


def run_isolated_agent(sc: Scenario, agent: int, seed: int, horizon: Optional[int] = None) -> Tuple[List[Strategy], List[SignalVector]]:
    """Scalar reference: one agent on its own, built purely on strategy-core calls.

    Uses the same counter-stream slots as :func:`run_scenario`, so an
    isolated population run reproduces it trajectory for trajectory.
    Audits are included; network influence is not.
    """
    cfg = sc.config
    dyn, rel = cfg.dynamics, cfg.reliability
    H = cfg.horizon if horizon is None else horizon
    omega = sc.user_types[TYPE_ORDER[int(sc.agent_type[agent])]]
    s = Strategy(int(sc.initial_strategy[agent]))
    z = SignalVector(*[float(x) for x in sc.initial_signal[agent]])
    hist = InteractionHistory(dyn.history_capacity, dyn.ewma_decay)
    st = AgentState(agent, s, omega, hist, _DISCLOSURES[int(initial_disclosure(sc, seed)[agent])], 0.0, z)
    inst = sc.institution
    traj, sigs = [s], [z]
    reliable = True
    for t in range(1, H + 1):
        u = crng.counter_uniform(seed, agent, t, crng.THETA)
        if rel.process == "iid" or t == 1:
            reliable = u < rel.reliable_rate
        else:
            reliable = u < (rel.stay_reliable if reliable else 1.0 - rel.stay_error_prone)
        theta = Reliability.RELIABLE if reliable else Reliability.ERROR_PRONE
        out = sample_outcome(s, theta, crng.CounterStream(seed, agent, t, crng.OUTCOME), sc.outcome_table)
        det = error_detected(s, theta, crng.CounterStream(seed, agent, t, crng.DETECT), sc.outcome_table)
        z = signal_from_outcome(out, theta, z, detected=det, learning_rate=dyn.learning_rate,
                                effort_scale=dyn.effort_scale)
        if inst.audit_probability > 0:
            st.strategy, st.signal = s, z
            st, _, _ = audit_and_sanction(st, inst, crng.CounterStream(seed, agent, t, crng.AUDIT), sc.cooperative)
            z = st.signal
        if dyn.mode == "stochastic":
            new = transition_stochastic(s, z, hist, omega, crng.CounterStream(seed, agent, t, crng.TRANSITION),
                                        dyn.temperature, dyn.allowed_moves)
        else:
            new = transition_deterministic(s, z, hist, omega)
            if (new < s and "toward_alpha" not in dyn.allowed_moves) or (new > s and "toward_delta" not in dyn.allowed_moves):
                new = s
        hist = hist.append(HistoryRecord(s, z, out))
        s = new
        traj.append(s)
        sigs.append(z)
    return traj, sigs


def _stationary(shares: np.ndarray, window: int, tol: float) -> bool:
    """Half-window means of every strategy share agree within ``tol``."""
    if shares.shape[0] < 2 * max(1, window // 2):
        return False
    tail = shares[-window:]
    half = tail.shape[0] // 2
    a = tail[:half].mean(axis=0)
    b = tail[-half:].mean(axis=0)
    return bool(np.all(np.abs(a - b) <= tol))


def classify_collective(result: SimResult, cfg: Optional[ScenarioConfig] = None) -> Classification:
    """Single collective label by priority provenance > stratified > lock-in; all predicates are logged."""
    if not result.completed:
        raise StateError("cannot classify an incomplete run")
    from .config import validate

    c = (cfg if cfg is not None else validate({})).classification
    term = result.shares[-1]
    delta = float(term[4])
    ab = float(term[0] + term[2])
    stationary = _stationary(result.shares, c.stationary_window, c.stationary_tol)
    preds = {
        "HighIntegrityProvenance": bool(result.institution_active and delta <= c.provenance_delta_share
                                        and result.disclosure_rate >= c.provenance_disclosure),
        "StratifiedAssurance": bool(c.stratified_min <= ab <= c.stratified_max and delta < c.lockin_delta_share
                                    and stationary),
        "DelegationLockIn": bool(delta >= c.lockin_delta_share),
    }
    label = CollectiveEquilibriumLabel.UNCLASSIFIED
    for name in ("HighIntegrityProvenance", "StratifiedAssurance", "DelegationLockIn"):
        if preds[name]:
            label = CollectiveEquilibriumLabel(name)
            break
    log.info("collective predicates %s -> %s", preds, label.value)
    stats = {"delta_share": delta, "alpha_beta_share": ab, "disclosure_rate": result.disclosure_rate,
             "stationary": float(stationary)}
    return Classification(label, preds, stats, c.model_dump())


def flatten_grid(grid: Dict[str, object], prefix: str = "") -> Dict[str, object]:
    """Nested tables become dotted keys, so ``[institution] audit_probability = [...]`` works."""
    out: Dict[str, object] = {}
    for k, v in grid.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(flatten_grid(v, key + "."))
        else:
            out[key] = v
    return out


def sweep_grid(grid: Dict[str, list]) -> List[Dict[str, object]]:
    """Cartesian product in file order, last key varying fastest."""
    import itertools

    grid = flatten_grid(grid)
    keys = list(grid)
    if not keys or any(not isinstance(grid[k], list) or not grid[k] for k in keys):
        raise ValueError("grid must map each key to a nonempty list")
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


CANONICAL_PATHS = {"A": "path_a", "B": "path_b", "C": "path_c"}
EXPECTED_REGIME = {"A": Regime.ADAPTIVE_RECALIBRATION, "B": Regime.THROUGHPUT_LOCK_IN,
                   "C": Regime.MIXED_ASSURANCE}


def load_preset(name: str) -> ScenarioConfig:
    from .config import preset_raw, resolve_preset, validate

    return validate(resolve_preset(preset_raw(name)))


def run_canonical_path(path: str, seed: Optional[int] = None) -> Tuple[List[Strategy], Optional[Regime]]:
    """Single-agent run of a canonical path preset; returns its trajectory and regime label."""
    key = str(path).strip().upper()
    if key not in CANONICAL_PATHS:
        raise KeyError(f"unknown path {path!r}; expected one of {sorted(CANONICAL_PATHS)}")
    cfg = load_preset(CANONICAL_PATHS[key])
    res = run_scenario(cfg, seed=seed)
    return res.agent_trajectory(0), res.regimes[0]


@dataclass
class SweepRow:
    index: int
    params: Dict[str, object]
    status: str
    label: Optional[str] = None
    stats: Dict[str, float] = field(default_factory=dict)
    error: str = ""


def sweep(raw: Dict[str, object], grid: Dict[str, list], base_dir: Optional[Path] = None) -> List[SweepRow]:
    """Run every grid point; failures become rows instead of aborting.

    All points share the scenario's seed (common random numbers) unless the
    grid itself varies ``seed``.
    """
    from .config import set_dotted, validate
    from .errors import ConfigValidationError, SimulationError

    rows = []
    for k, point in enumerate(sweep_grid(grid)):
        override = raw
        for key, value in point.items():
            override = set_dotted(override, key, value)
        try:
            cfg = validate(override, base_dir)
            res = run_scenario(cfg, base_dir=base_dir)
        except ConfigValidationError as exc:
            rows.append(SweepRow(k, point, "invalid", error="; ".join(f"{l}: {m}" for l, m in exc.problems)))
            continue
        except (SimulationError, ValueError, KeyError, RuntimeError) as exc:
            rows.append(SweepRow(k, point, "error", error=str(exc)))
            continue
        rows.append(SweepRow(k, point, "ok", res.classification.label.value, summary_stats(res)))
    return rows


def summary_stats(res: SimResult) -> Dict[str, float]:
    term = res.shares[-1]
    out = {f"share_{name}": float(term[i]) for i, name in enumerate(STRATEGY_NAMES)}
    q, e, c = res.omega[-1]
    out.update(omega_quality=float(q), omega_error=float(e), omega_capacity=float(c),
               disclosure_rate=res.disclosure_rate, mean_payoff=float(res.payoff.mean()))
    return out
