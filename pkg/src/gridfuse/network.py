"""Communication graph and per-round Bernoulli link activation.

Every potential link carries its own random stream, independent of every
other link and of the agents' data/batch streams, so changing optimizer
settings never perturbs the communication schedule. Delivery is same-round
and whole-message: an active link hands the receiver an immutable snapshot
of the sender's round-start parameters and counts.
"""

from dataclasses import dataclass

import numpy as np

from .optimizer import ReceivedMessage

COMM_MODES = ("symmetric", "directed")


@dataclass(frozen=True)
class CommGraph:
    n_agents: int
    edges: tuple  # unordered pairs (i, j) with i < j
    mode: str = "symmetric"

    def __post_init__(self):
        if self.n_agents < 1:
            raise ValueError("need at least one agent")
        if self.mode not in COMM_MODES:
            raise ValueError(f"unknown mode {self.mode!r}, expected one of {COMM_MODES}")
        seen = set()
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self-edge ({i},{j}) not allowed")
            if not (0 <= i < self.n_agents and 0 <= j < self.n_agents):
                raise ValueError(f"edge ({i},{j}) references unknown agent")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate edge ({i},{j})")
            seen.add(key)
        object.__setattr__(self, "edges",
                           tuple(sorted((min(i, j), max(i, j)) for i, j in self.edges)))

    @classmethod
    def complete(cls, n_agents: int, mode: str = "symmetric"):
        edges = tuple((i, j) for i in range(n_agents) for j in range(i + 1, n_agents))
        return cls(n_agents, edges, mode)

    def potential_neighbors(self, agent_id: int):
        out = [j if i == agent_id else i for (i, j) in self.edges if agent_id in (i, j)]
        return sorted(out)

    def directed_pairs(self):
        """Ordered (receiver, sender) pairs, canonical order."""
        pairs = []
        for i, j in self.edges:
            pairs.append((i, j))
            pairs.append((j, i))
        return sorted(pairs)


class LinkSchedule:
    """Per-round Bernoulli activation of a graph's links at a success rate.

    In symmetric mode one draw per unordered edge activates both directions;
    in directed mode each ordered pair draws independently. Streams are
    spawned per link from a single schedule seed, so identical seeds give
    identical schedules.
    """

    def __init__(self, graph: CommGraph, rate: float, seed: int):
        if not (0.0 < rate <= 1.0):
            raise ValueError(f"communication success rate must be in (0, 1], got {rate}")
        self.graph = graph
        self.rate = float(rate)
        self.seed = int(seed)
        if graph.mode == "symmetric":
            self._keys = list(graph.edges)
        else:
            self._keys = graph.directed_pairs()
        children = np.random.SeedSequence(self.seed).spawn(max(len(self._keys), 1))
        self._streams = {k: np.random.default_rng(ss) for k, ss in zip(self._keys, children)}
        self.rounds_sampled = 0

    def sample(self):
        """Draw one round of activations.

        Returns (neighbor_sets, active_map): neighbor_sets[i] is the sorted
        tuple of senders agent i hears from this round; active_map maps each
        unordered edge (symmetric) or (receiver, sender) pair (directed) to
        its activation flag.
        """
        active_map = {}
        neighbor_sets = {i: [] for i in range(self.graph.n_agents)}
        for key in self._keys:
            active = bool(self._streams[key].random() < self.rate)
            active_map[key] = active
            if not active:
                continue
            if self.graph.mode == "symmetric":
                i, j = key
                neighbor_sets[i].append(j)
                neighbor_sets[j].append(i)
            else:
                receiver, sender = key
                neighbor_sets[receiver].append(sender)
        self.rounds_sampled += 1
        return {i: tuple(sorted(v)) for i, v in neighbor_sets.items()}, active_map


def sample_active_links(schedule: LinkSchedule):
    """Per-agent active neighbor sets for the next round."""
    neighbor_sets, _ = schedule.sample()
    return neighbor_sets


def exchange(states, neighbor_sets, round_index: int):
    """Deliver round-start snapshots over the active links.

    states maps agent id to an object with .params and .counts. Each agent i
    receives one immutable ReceivedMessage per sender in neighbor_sets[i].
    Snapshots are copies: later mutation of the sender's state cannot alter
    a delivered message.
    """
    inbox = {}
    for i, senders in neighbor_sets.items():
        inbox[i] = [
            ReceivedMessage.snapshot(j, states[j].params, states[j].counts, round_index)
            for j in senders
        ]
    return inbox
