"""Norm diffusion on a weighted interaction graph.

An edge ``(i, j, w)`` means agent ``i`` watches agent ``j`` with weight
``w``; ``N(i)`` is the set of nodes ``i`` watches.  Neighbour signals are a
signed valence in [-1, 1]: positive advertises delegation, negative
advertises verification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, NodeLookupError, ParameterError
from .strategy_core import (
    InteractionHistory,
    SignalVector,
    Strategy,
    UserType,
    transition_deterministic,
)


class Disclosure(Enum):
    DISCLOSE = "disclose"
    CONCEAL = "conceal"
    MISDIRECT = "misdirect"


@dataclass(frozen=True)
class InteractionGraph:
    node_count: int
    edges: Mapping[Tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        if self.node_count < 1:
            raise DomainError("graph needs at least one node")
        clean: Dict[Tuple[int, int], float] = {}
        for (i, j), w in dict(self.edges).items():
            i, j, w = int(i), int(j), float(w)
            if i == j:
                raise DomainError(f"self-loop at node {i}")
            if not (0 <= i < self.node_count and 0 <= j < self.node_count):
                raise DomainError(f"edge ({i}, {j}) references a node outside 0..{self.node_count - 1}")
            if not (math.isfinite(w) and w >= 0.0):
                raise DomainError(f"edge ({i}, {j}) has invalid weight {w!r}")
            clean[(i, j)] = w
        object.__setattr__(self, "edges", clean)
        adj: Dict[int, List[Tuple[int, float]]] = {i: [] for i in range(self.node_count)}
        for (i, j), w in sorted(clean.items()):
            adj[i].append((j, w))
        object.__setattr__(self, "_adj", adj)

    @classmethod
    def from_edges(cls, node_count: int, triples: Iterable[Tuple[int, int, float]]) -> "InteractionGraph":
        edges: Dict[Tuple[int, int], float] = {}
        for i, j, w in triples:
            if (int(i), int(j)) in edges:
                raise DomainError(f"duplicate edge ({i}, {j})")
            edges[(int(i), int(j))] = float(w)
        return cls(node_count, edges)

    def neighbors(self, i: int) -> List[Tuple[int, float]]:
        if i not in self._adj:
            raise NodeLookupError(i)
        return self._adj[i]

    def weight_matrix(self) -> np.ndarray:
        W = np.zeros((self.node_count, self.node_count))
        for (i, j), w in self.edges.items():
            W[i, j] = w
        return W

    def adjacency_matrix(self) -> np.ndarray:
        M = np.zeros((self.node_count, self.node_count))
        for (i, j) in self.edges:
            M[i, j] = 1.0
        return M

    def scaled(self, factor: float) -> "InteractionGraph":
        return InteractionGraph(self.node_count, {e: w * factor for e, w in self.edges.items()})


def _from_undirected(n: int, pairs: Iterable[Tuple[int, int]], weight: Optional[float]) -> InteractionGraph:
    nbrs: Dict[int, set] = {i: set() for i in range(n)}
    for a, b in pairs:
        if a != b:
            nbrs[a].add(b)
            nbrs[b].add(a)
    edges = {}
    for i, js in nbrs.items():
        for j in js:
            edges[(i, j)] = weight if weight is not None else 1.0 / len(js)
    return InteractionGraph(n, edges)


def complete_graph(n: int, weight: Optional[float] = None) -> InteractionGraph:
    """Everybody watches everybody; default weights ``1/(n-1)`` per watcher."""
    return _from_undirected(n, ((i, j) for i in range(n) for j in range(i + 1, n)), weight)


def ring_lattice(n: int, k: int = 4, weight: Optional[float] = None) -> InteractionGraph:
    """Each node tied to its ``k/2`` nearest nodes on either side."""
    if k % 2 or k < 2:
        raise ParameterError("ring lattice degree must be an even number >= 2")
    half = min(k // 2, (n - 1) // 2) if n > 2 else 1
    pairs = [(i, (i + d) % n) for i in range(n) for d in range(1, half + 1)] if n > 1 else []
    return _from_undirected(n, pairs, weight)


def watts_strogatz(n: int, k: int = 4, p: float = 0.1, seed: int = 0, weight: Optional[float] = None) -> InteractionGraph:
    import networkx as nx

    if not (0.0 <= p <= 1.0):
        raise ParameterError("rewiring probability must lie in [0, 1]")
    G = nx.watts_strogatz_graph(n, k, p, seed=seed)
    return _from_undirected(n, G.edges(), weight)


def load_edge_list(path, node_count: Optional[int] = None) -> InteractionGraph:
    """Read ``i j w`` triples (zero-indexed, whitespace separated, ``#`` comments)."""
    triples = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise DomainError(f"{path}:{lineno}: expected 'i j w', got {line!r}")
        triples.append((int(parts[0]), int(parts[1]), float(parts[2])))
    if node_count is None:
        node_count = 1 + max((max(i, j) for i, j, _ in triples), default=0)
    return InteractionGraph.from_edges(node_count, triples)


@dataclass
class AgentState:
    id: int
    strategy: Strategy
    user_type: UserType
    history: InteractionHistory
    disclosure: Disclosure = Disclosure.DISCLOSE
    y: float = 0.0
    signal: SignalVector = SignalVector(0.5, 0.0, 0.5)
    payoff: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.y) and 0.0 <= self.y <= 1.0):
            raise DomainError(f"observable output y must lie in [0, 1], got {self.y!r}")


DEFAULT_VALENCE = {
    Strategy.ALPHA: -1.0, Strategy.GAMMA: -0.5, Strategy.BETA: -0.5,
    Strategy.EPSILON: 0.5, Strategy.DELTA: 1.0,
}


@dataclass(frozen=True)
class SignalModel:
    """How a neighbour's posture translates into a signal.

    ``misdirect_claim`` is the posture a misdirecting agent pretends to hold;
    its signal is discounted by ``misdirect_discount``.
    """

    valence: Mapping[Strategy, float] = field(default_factory=lambda: dict(DEFAULT_VALENCE))
    misdirect_discount: float = 0.5
    misdirect_claim: Strategy = Strategy.BETA

    def __post_init__(self):
        if not (0.0 <= self.misdirect_discount <= 1.0):
            raise ParameterError("misdirect_discount must lie in [0, 1]")
        for s in Strategy:
            v = self.valence.get(s)
            if v is None or not (-1.0 <= v <= 1.0):
                raise ParameterError(f"valence for {s.label} must be given and lie in [-1, 1]")

    def valence_array(self) -> np.ndarray:
        return np.array([self.valence[s] for s in Strategy])


DEFAULT_SIGNAL_MODEL = SignalModel()


def neighbor_signal(j: AgentState, model: SignalModel = DEFAULT_SIGNAL_MODEL) -> float:
    if j.disclosure is Disclosure.CONCEAL:
        return 0.0
    if j.disclosure is Disclosure.MISDIRECT:
        psi = model.misdirect_discount * model.valence[model.misdirect_claim] * j.y
    else:
        psi = model.valence[j.strategy] * j.y
    return min(1.0, max(-1.0, psi))


def _check_node(i: int, graph: InteractionGraph) -> None:
    if not (isinstance(i, (int, np.integer)) and 0 <= i < graph.node_count):
        raise NodeLookupError(i)


def influence_sum(i: int, graph: InteractionGraph, agents: Sequence[AgentState],
                  model: SignalModel = DEFAULT_SIGNAL_MODEL) -> float:
    """``sum_{j in N(i)} w_ij * psi_j``; zero for an isolated node."""
    _check_node(i, graph)
    total = 0.0
    for j, w in graph.neighbors(i):
        total += w * neighbor_signal(agents[j], model)
    return total


def social_correction(candidate: Strategy, influence: float, influence_threshold: float) -> Tuple[Strategy, Optional[str]]:
    if influence > influence_threshold:
        return candidate.toward_delta(), "social_toward_delta"
    if influence < -influence_threshold:
        return candidate.toward_alpha(), "social_toward_alpha"
    return candidate, None


def network_transition(i: int, agents: Sequence[AgentState], graph: InteractionGraph,
                       influence_threshold: float = 0.3, model: SignalModel = DEFAULT_SIGNAL_MODEL) -> Strategy:
    """Individual threshold move followed by a one-rung social correction."""
    _check_node(i, graph)
    a = agents[i]
    candidate = transition_deterministic(a.strategy, a.signal, a.history, a.user_type)
    return social_correction(candidate, influence_sum(i, graph, agents, model), influence_threshold)[0]


@dataclass(frozen=True)
class ThresholdProfile:
    k_values: Tuple[float, ...]
    mode: str = "count"

    def __post_init__(self):
        if self.mode not in ("count", "fraction"):
            raise ParameterError("mode must be 'count' or 'fraction'")
        if any(k < 0 or not math.isfinite(k) for k in self.k_values):
            raise ParameterError("k-values must be finite and >= 0")


def threshold_cascade(graph: InteractionGraph, profile: ThresholdProfile, seeds: Iterable[int] = (),
                      asynchronous: bool = False, rng_stream=None) -> List[FrozenSet[int]]:
    """Adopter set after each round, starting with the seeds.

    A node adopts once the count (or fraction) of adopters among the nodes
    it watches reaches its k-value.  Adoption is permanent and the run stops
    at the first round that adds nobody.  In asynchronous mode each round
    visits nodes in a seeded random order and sees adoptions immediately.
    """
    n = graph.node_count
    if len(profile.k_values) != n:
        raise DomainError(f"profile has {len(profile.k_values)} k-values for {n} nodes")
    active = set()
    for s in seeds:
        _check_node(s, graph)
        active.add(int(s))
    rng = np.random.default_rng(rng_stream) if asynchronous and not isinstance(rng_stream, np.random.Generator) else rng_stream
    nbrs = [[j for j, _ in graph.neighbors(i)] for i in range(n)]

    def ready(i, adopters):
        cnt = sum(1 for j in nbrs[i] if j in adopters)
        level = cnt if profile.mode == "count" else (cnt / len(nbrs[i]) if nbrs[i] else 0.0)
        return level >= profile.k_values[i]

    rounds = [frozenset(active)]
    for _ in range(n):
        if asynchronous:
            new = set(active)
            for i in rng.permutation(n):
                if i not in new and ready(int(i), new):
                    new.add(int(i))
        else:
            new = active | {i for i in range(n) if i not in active and ready(i, active)}
        if new == active:
            break
        active = new
        rounds.append(frozenset(active))
    return rounds


@dataclass(frozen=True)
class NormState:
    modal_strategy: Strategy
    disclosure_rate: float
    verification_norm_strength: float
    isolated: bool = False


def measure_local_norm(i: int, graph: InteractionGraph, agents: Sequence[AgentState],
                       model: SignalModel = DEFAULT_SIGNAL_MODEL) -> NormState:
    """Modal neighbour strategy, disclosure rate and share of negative signal mass.

    An isolated node gets a neutral norm (its own strategy, zero rates)
    flagged ``isolated=True``.
    """
    _check_node(i, graph)
    nb = graph.neighbors(i)
    if not nb:
        return NormState(agents[i].strategy, 0.0, 0.0, isolated=True)
    counts = [0] * 5
    disclosing = 0
    neg = mass = 0.0
    for j, w in nb:
        a = agents[j]
        counts[int(a.strategy)] += 1
        disclosing += a.disclosure is Disclosure.DISCLOSE
        psi = neighbor_signal(a, model)
        mass += w * abs(psi)
        neg += w * max(0.0, -psi)
    modal = Strategy(counts.index(max(counts)))
    return NormState(modal, disclosing / len(nb), neg / mass if mass > 0 else 0.0)
