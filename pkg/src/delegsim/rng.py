"""Counter-based random streams.

Every draw is a pure function of ``(seed, agent, episode, purpose, index)``:
the five integers are folded through the SplitMix64 finalizer and the top
53 bits of the result become a double in [0, 1).  Nothing is carried between
draws, so adding agents or skipping a draw never shifts anybody else's
numbers, and the scalar and vectorised paths see the same values.
"""

from __future__ import annotations

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV_2_53 = 1.0 / 9007199254740992.0

# purpose codes; part of the documented counter layout
THETA = 1
OUTCOME = 2
DETECT = 3
AUDIT = 4
TRANSITION = 5
DISCLOSURE = 6


def _mix(x: int) -> int:
    z = (x + _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * _M1) & _MASK
    z = ((z ^ (z >> 27)) * _M2) & _MASK
    return z ^ (z >> 31)


def counter_uniform(seed: int, agent: int, episode: int, purpose: int, index: int = 0) -> float:
    seed, agent, episode, purpose, index = int(seed), int(agent), int(episode), int(purpose), int(index)
    h = _mix(seed & _MASK)
    h = _mix(h ^ (agent & _MASK))
    h = _mix(h ^ (episode & _MASK))
    h = _mix(h ^ (((purpose & 0xFFFFFFFF) << 32) | (index & 0xFFFFFFFF)))
    return (h >> 11) * _INV_2_53


_NG = np.uint64(_GOLDEN)
_NM1 = np.uint64(_M1)
_NM2 = np.uint64(_M2)
_S30, _S27, _S31, _S11 = np.uint64(30), np.uint64(27), np.uint64(31), np.uint64(11)


def _mix_array(x: np.ndarray) -> np.ndarray:
    z = x + _NG
    z = (z ^ (z >> _S30)) * _NM1
    z = (z ^ (z >> _S27)) * _NM2
    return z ^ (z >> _S31)


def counter_uniforms(seed: int, agents: np.ndarray, episode: int, purpose: int, index: int = 0) -> np.ndarray:
    """Vectorised :func:`counter_uniform` over an array of agent ids."""
    with np.errstate(over="ignore"):
        h = np.uint64(_mix(seed & _MASK))
        h = _mix_array(np.asarray(agents, dtype=np.uint64) ^ h)
        h = _mix_array(h ^ np.uint64(episode & _MASK))
        h = _mix_array(h ^ np.uint64(((purpose & 0xFFFFFFFF) << 32) | (index & 0xFFFFFFFF)))
    return (h >> _S11).astype(np.float64) * _INV_2_53


class CounterStream:
    """Sequential view on one ``(seed, agent, episode, purpose)`` key.

    ``random()`` walks the index; it satisfies the same tiny protocol as
    :class:`random.Random`, so the scalar model functions accept either.
    """

    __slots__ = ("seed", "agent", "episode", "purpose", "_index")

    def __init__(self, seed: int, agent: int, episode: int, purpose: int):
        self.seed = seed
        self.agent = agent
        self.episode = episode
        self.purpose = purpose
        self._index = 0

    def random(self) -> float:
        u = counter_uniform(self.seed, self.agent, self.episode, self.purpose, self._index)
        self._index += 1
        return u


def derive_seed(root: int, *keys: int) -> int:
    """Deterministic 63-bit child seed of ``root`` for the given integer keys."""
    h = _mix(root & _MASK)
    for k in keys:
        h = _mix(h ^ (k & _MASK))
    return h >> 1
