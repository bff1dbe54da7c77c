"""Dragonfly+ fabric model.

Four wings of leaf switches hang off a shared core layer; traffic between
nodes on the same leaf never leaves the switch, intra-wing traffic crosses
the wing's core uplinks at 1:1, and inter-wing traffic is squeezed through
the core-to-core mesh at an effective 2:1 blocking ratio.  The model keeps
just enough structure to answer locality questions (wing membership, hop
counts, blocking) and to hand out free nodes for placement; it does not
simulate links or routing tables.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class PlacementPolicy(Enum):
    """How select_nodes picks free nodes."""

    ANY = "any"            # lowest node id first, wings ignored
    PACK_BY_WING = "pack"  # fill a single wing before spilling into the next


@dataclass(frozen=True)
class TopologyConfig:
    """Static description of the fabric.

    The defaults describe the full machine: 4 wings, 84 leaf and 72 core
    switches (36 ports each), 1500 nodes, at most 432 nodes per wing, and
    2:1 effective blocking between wings.
    """

    wings: int = 4
    leaf_switches: int = 84
    core_switches: int = 72
    switch_ports: int = 36
    nodes: int = 1500
    max_nodes_per_wing: int = 432
    intra_wing_blocking: float = 1.0
    inter_wing_blocking: float = 2.0

    def validate(self) -> list[str]:
        """Return a list of problems; empty means the config is usable."""
        problems = []
        if self.wings < 1:
            problems.append("topology: wings must be >= 1")
        if self.leaf_switches < 1:
            problems.append("topology: leaf_switches must be >= 1")
        if self.core_switches < 1:
            problems.append("topology: core_switches must be >= 1")
        if self.switch_ports < 1:
            problems.append("topology: switch_ports must be >= 1")
        if self.nodes < 1:
            problems.append("topology: nodes must be >= 1")
        if self.wings >= 1 and self.leaf_switches < self.wings:
            problems.append("topology: need at least one leaf switch per wing")
        if self.nodes > self.wings * self.max_nodes_per_wing:
            problems.append(
                f"topology: {self.nodes} nodes exceed capacity "
                f"{self.wings} wings x {self.max_nodes_per_wing} nodes/wing"
            )
        if self.intra_wing_blocking < 1.0:
            problems.append("topology: intra_wing_blocking must be >= 1.0")
        if self.inter_wing_blocking < 1.0:
            problems.append("topology: inter_wing_blocking must be >= 1.0")
        return problems


class Topology:
    """Built fabric: node->leaf->wing maps plus free/busy bookkeeping.

    Structure is immutable after build; only the free/busy sets change, and
    only through mark_busy/mark_free driven by the (single-threaded)
    simulation loop.
    """

    def __init__(self, cfg: TopologyConfig):
        problems = cfg.validate()
        if problems:
            raise ValueError("; ".join(problems))
        self.cfg = cfg

        # Leaves are dealt round-robin to wings, then nodes round-robin to
        # wings and to the leaves within their wing.  The published switch
        # counts do not divide evenly into the node count, so leaf
        # populations are allowed to be unequal.
        self._leaf_wing = [leaf % cfg.wings for leaf in range(cfg.leaf_switches)]
        wing_leaves: list[list[int]] = [[] for _ in range(cfg.wings)]
        for leaf, wing in enumerate(self._leaf_wing):
            wing_leaves[wing].append(leaf)
        self._wing_leaves = wing_leaves

        self._node_wing = []
        self._node_leaf = []
        per_wing_count = [0] * cfg.wings
        for node in range(cfg.nodes):
            wing = node % cfg.wings
            leaves = wing_leaves[wing]
            leaf = leaves[per_wing_count[wing] % len(leaves)]
            per_wing_count[wing] += 1
            self._node_wing.append(wing)
            self._node_leaf.append(leaf)

        self._wing_nodes = [
            tuple(n for n in range(cfg.nodes) if self._node_wing[n] == w)
            for w in range(cfg.wings)
        ]
        for w, members in enumerate(self._wing_nodes):
            if len(members) > cfg.max_nodes_per_wing:
                raise ValueError(f"wing {w} exceeds max_nodes_per_wing")

        self._free = [set(members) for members in self._wing_nodes]
        self._busy: set[int] = set()

    # -- structure queries ------------------------------------------------

    def _check_node(self, node: int) -> None:
        if not 0 <= node < self.cfg.nodes:
            raise ValueError(f"unknown node id {node}")

    def wing_of(self, node: int) -> int:
        self._check_node(node)
        return self._node_wing[node]

    def leaf_of(self, node: int) -> int:
        self._check_node(node)
        return self._node_leaf[node]

    def hop_count(self, a: int, b: int) -> int:
        """Switch hops on the shortest path: 0 same node, 2 same leaf,
        4 same wing across leaves, 6 across wings (leaf-core-core-leaf)."""
        self._check_node(a)
        self._check_node(b)
        if a == b:
            return 0
        if self._node_leaf[a] == self._node_leaf[b]:
            return 2
        if self._node_wing[a] == self._node_wing[b]:
            return 4
        return 6

    def blocking_factor(self, nodes) -> float:
        """Effective blocking ratio seen by a node set: intra-wing if all
        nodes share a wing, inter-wing otherwise."""
        nodes = list(nodes)
        if not nodes:
            raise ValueError("blocking_factor of an empty node set")
        wings = {self.wing_of(n) for n in nodes}
        if len(wings) == 1:
            return self.cfg.intra_wing_blocking
        return self.cfg.inter_wing_blocking

    def wing_populations(self) -> list[int]:
        return [len(members) for members in self._wing_nodes]

    def wing_nodes(self, wing: int) -> tuple[int, ...]:
        if not 0 <= wing < self.cfg.wings:
            raise ValueError(f"unknown wing id {wing}")
        return self._wing_nodes[wing]

    def all_nodes(self) -> range:
        return range(self.cfg.nodes)

    # -- free/busy bookkeeping -------------------------------------------

    def is_free(self, node: int) -> bool:
        self._check_node(node)
        return node in self._free[self._node_wing[node]]

    def free_count(self) -> int:
        return sum(len(f) for f in self._free)

    def free_nodes(self) -> list[int]:
        """All free node ids, ascending."""
        out = []
        for f in self._free:
            out.extend(f)
        out.sort()
        return out

    def free_in(self, nodes) -> list[int]:
        """Sorted free node ids among the given candidates."""
        return sorted(n for n in nodes if n in self._free[self._node_wing[n]])

    def select_nodes(
        self,
        n: int,
        policy: PlacementPolicy = PlacementPolicy.PACK_BY_WING,
        wing_restriction: int | None = None,
        *,
        exclude: frozenset[int] = frozenset(),
    ) -> frozenset[int] | None:
        """Pick n free nodes without mutating state.

        PACK_BY_WING places the whole job in the lowest-id wing that can
        hold it, and otherwise fills the fullest wings first; ANY takes the
        lowest free ids regardless of wing.  Nodes in `exclude` are treated
        as unavailable.  Returns None when not enough free nodes qualify.
        """
        if n < 1:
            raise ValueError("must request at least one node")
        if wing_restriction is not None:
            if not 0 <= wing_restriction < self.cfg.wings:
                raise ValueError(f"unknown wing id {wing_restriction}")
            wings = [wing_restriction]
        else:
            wings = list(range(self.cfg.wings))

        avail = {w: sorted(self._free[w] - exclude) for w in wings}
        if sum(len(v) for v in avail.values()) < n:
            return None

        if policy is PlacementPolicy.ANY:
            pool = sorted(node for v in avail.values() for node in v)
            return frozenset(pool[:n])

        for w in wings:
            if len(avail[w]) >= n:
                return frozenset(avail[w][:n])
        picked: list[int] = []
        for w in sorted(wings, key=lambda w: (-len(avail[w]), w)):
            take = min(n - len(picked), len(avail[w]))
            picked.extend(avail[w][:take])
            if len(picked) == n:
                break
        return frozenset(picked)

    def mark_busy(self, nodes) -> None:
        nodes = list(nodes)
        for node in nodes:
            self._check_node(node)
            if node in self._busy:
                raise ValueError(f"node {node} already busy")
        for node in nodes:
            self._free[self._node_wing[node]].discard(node)
            self._busy.add(node)

    def mark_free(self, nodes) -> None:
        nodes = list(nodes)
        for node in nodes:
            self._check_node(node)
            if node not in self._busy:
                raise ValueError(f"node {node} is not busy")
        for node in nodes:
            self._busy.discard(node)
            self._free[self._node_wing[node]].add(node)

    # -- locality summary -------------------------------------------------

    def locality(self, nodes) -> tuple[int, float, int]:
        """(wing span, blocking factor, max pairwise hop count) for a set."""
        nodes = list(nodes)
        if not nodes:
            raise ValueError("locality of an empty node set")
        wings = {self.wing_of(n) for n in nodes}
        leaves = {self.leaf_of(n) for n in nodes}
        if len(wings) > 1:
            hops = 6
        elif len(leaves) > 1:
            hops = 4
        elif len(nodes) > 1:
            hops = 2
        else:
            hops = 0
        blocking = (
            self.cfg.intra_wing_blocking if len(wings) == 1
            else self.cfg.inter_wing_blocking
        )
        return len(wings), blocking, hops


def build_topology(cfg: TopologyConfig | None = None) -> Topology:
    """Build and validate a fabric from its config (stock shape if None)."""
    return Topology(cfg if cfg is not None else TopologyConfig())
