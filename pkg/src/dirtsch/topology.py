"""Node layout, radius graph, convergecast tree and top-subtrees."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np


class TopologyError(ValueError):
    """Invalid layout, unknown node, or unreachable nodes."""


Position = tuple[float, float]


@dataclass(frozen=True)
class Topology:
    """Node positions (index = node id), the sink id and a uniform radius."""

    positions: tuple[Position, ...]
    radius: float
    area: tuple[float, float]
    sink: int = 0
    _adjacency: tuple[frozenset[int], ...] = field(
        default=(), init=False, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise TopologyError(f"radius must be positive, got {self.radius}")
        if self.area[0] <= 0 or self.area[1] <= 0:
            raise TopologyError(f"area must be positive, got {self.area}")
        if not self.positions:
            raise TopologyError("topology needs at least the sink")
        if not 0 <= self.sink < len(self.positions):
            raise TopologyError(f"sink {self.sink} not among {len(self.positions)} nodes")
        pos = tuple((float(x), float(y)) for x, y in self.positions)
        for i, (x, y) in enumerate(pos):
            if not (0.0 <= x <= self.area[0] and 0.0 <= y <= self.area[1]):
                raise TopologyError(f"node {i} at {(x, y)} lies outside area {self.area}")
        object.__setattr__(self, "positions", pos)

        # closed ball: distance == radius counts as a link
        adj: list[set[int]] = [set() for _ in pos]
        for i in range(len(pos)):
            for j in range(i + 1, len(pos)):
                if math.dist(pos[i], pos[j]) <= self.radius:
                    adj[i].add(j)
                    adj[j].add(i)
        object.__setattr__(self, "_adjacency", tuple(frozenset(a) for a in adj))

    @property
    def n(self) -> int:
        return len(self.positions)

    @property
    def nodes(self) -> range:
        return range(len(self.positions))

    def position(self, node: int) -> Position:
        self._check(node)
        return self.positions[node]

    def distance(self, a: int, b: int) -> float:
        self._check(a)
        self._check(b)
        return math.dist(self.positions[a], self.positions[b])

    def neighbors(self, node: int) -> frozenset[int]:
        self._check(node)
        return self._adjacency[node]

    def in_range(self, a: int, b: int) -> bool:
        return b in self.neighbors(a)

    def is_connected(self) -> bool:
        return not unreachable(self)

    def _check(self, node: int) -> None:
        if not isinstance(node, (int, np.integer)) or not 0 <= node < len(self.positions):
            raise TopologyError(f"unknown node id {node!r}")

    def dumps(self) -> str:
        """Stable text form: a header line then ``id,x,y`` per node."""
        lines = [
            f"# sink={self.sink} radius={self.radius!r} area={self.area[0]!r}x{self.area[1]!r}"
        ]
        lines += [f"{i},{x!r},{y!r}" for i, (x, y) in enumerate(self.positions)]
        return "\n".join(lines) + "\n"


def neighbors(topology: Topology, node: int) -> frozenset[int]:
    return topology.neighbors(node)


def build_topology(
    n: int,
    area: tuple[float, float] = (1000.0, 1000.0),
    radius: float = 350.0,
    seed: int = 0,
    sink_position: Position | None = None,
    placement: str = "uniform",
    max_attempts: int = 1000,
) -> Topology:
    """Place the sink (node 0) and ``n - 1`` nodes uniformly in ``area``.

    ``placement="uniform-connected"`` redraws the non-sink positions from the
    same seeded stream until the radius graph is connected.
    """
    if n < 1:
        raise TopologyError(f"need at least one node, got {n}")
    if radius <= 0 or area[0] <= 0 or area[1] <= 0:
        raise TopologyError(f"area {area} and radius {radius} must be positive")
    if placement not in ("uniform", "uniform-connected"):
        raise TopologyError(f"unknown placement {placement!r}")
    if sink_position is None:
        sink_position = (area[0] / 2.0, area[1] / 2.0)

    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        pts = rng.uniform((0.0, 0.0), area, size=(n - 1, 2))
        positions = (tuple(sink_position),) + tuple((float(x), float(y)) for x, y in pts)
        topo = Topology(positions=positions, radius=radius, area=tuple(area), sink=0)
        if placement == "uniform" or topo.is_connected():
            return topo
    raise TopologyError(
        f"no connected layout of {n} nodes with radius {radius} in {max_attempts} draws"
    )


def load_topology(text: str, radius: float, area: tuple[float, float] | None = None,
                  sink: int = 0) -> Topology:
    """Parse ``id,x,y`` lines (``#`` comments allowed); ids must be 0..N-1."""
    rows: dict[int, Position] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 3:
            raise TopologyError(f"line {lineno}: expected 'id,x,y', got {raw!r}")
        try:
            node, x, y = int(parts[0]), float(parts[1]), float(parts[2])
        except ValueError as exc:
            raise TopologyError(f"line {lineno}: {exc}") from None
        if node in rows:
            raise TopologyError(f"line {lineno}: duplicate node id {node}")
        rows[node] = (x, y)
    if sorted(rows) != list(range(len(rows))):
        raise TopologyError(f"node ids must be 0..{len(rows) - 1}, got {sorted(rows)}")
    positions = tuple(rows[i] for i in range(len(rows)))
    if area is None:
        area = (
            max(1.0, max(x for x, _ in positions)),
            max(1.0, max(y for _, y in positions)),
        )
    return Topology(positions=positions, radius=radius, area=area, sink=sink)


def unreachable(topology: Topology) -> list[int]:
    seen = {topology.sink}
    frontier = [topology.sink]
    while frontier:
        nxt = []
        for u in frontier:
            for v in topology.neighbors(u):
                if v not in seen:
                    seen.add(v)
                    nxt.append(v)
        frontier = nxt
    return [v for v in topology.nodes if v not in seen]


@dataclass(frozen=True)
class Tree:
    """Convergecast tree: ``parent`` maps every non-sink node to its parent."""

    sink: int
    parent: Mapping[int, int]
    level: Mapping[int, int]

    @property
    def children(self) -> dict[int, tuple[int, ...]]:
        kids: dict[int, list[int]] = {v: [] for v in self.level}
        for child, par in sorted(self.parent.items()):
            kids[par].append(child)
        return {v: tuple(c) for v, c in kids.items()}

    @property
    def depth(self) -> int:
        return max(self.level.values(), default=0)

    def path_to_sink(self, node: int) -> list[int]:
        path = [node]
        while path[-1] != self.sink:
            path.append(self.parent[path[-1]])
        return path

    def validate(self, topology: Topology) -> None:
        if self.level.get(self.sink) != 0 or self.sink in self.parent:
            raise TopologyError("sink must be the unique root at level 0")
        if set(self.level) != set(topology.nodes):
            raise TopologyError("tree must span every node of the topology")
        for child, par in self.parent.items():
            if not topology.in_range(child, par):
                raise TopologyError(f"tree edge {child}->{par} exceeds the radius")
            if self.level[child] != self.level[par] + 1:
                raise TopologyError(f"level of {child} inconsistent with parent {par}")

    def dumps(self) -> str:
        lines = [f"# sink={self.sink}"]
        for v in sorted(self.level):
            par = self.parent.get(v, -1)
            lines.append(f"{v},{par},{self.level[v]}")
        return "\n".join(lines) + "\n"


def tree_from_parents(topology: Topology, parent: Mapping[int, int]) -> Tree:
    """Build and validate a tree from an explicit parent map."""
    level = {topology.sink: 0}

    def lvl(v: int, trail: tuple[int, ...] = ()) -> int:
        if v in level:
            return level[v]
        if v in trail or v not in parent:
            raise TopologyError(f"node {v} has no path to the sink")
        level[v] = lvl(parent[v], trail + (v,)) + 1
        return level[v]

    for v in topology.nodes:
        lvl(v)
    tree = Tree(sink=topology.sink, parent=dict(parent), level=level)
    tree.validate(topology)
    return tree


def build_tree(topology: Topology) -> Tree:
    """Shortest-hop tree rooted at the sink; ties go to the lowest parent id."""
    lost = unreachable(topology)
    if lost:
        raise TopologyError(f"radius graph is disconnected; unreachable nodes: {lost}")
    level = {topology.sink: 0}
    parent: dict[int, int] = {}
    layer = [topology.sink]
    depth = 0
    while layer:
        depth += 1
        nxt: dict[int, int] = {}
        for u in sorted(layer):
            for v in topology.neighbors(u):
                if v not in level and v not in nxt:
                    nxt[v] = u  # u ascends, so first claimant is the lowest id
        for v, u in nxt.items():
            parent[v] = u
            level[v] = depth
        layer = list(nxt)
    return Tree(sink=topology.sink, parent=parent, level=level)


@dataclass(frozen=True)
class TopSubtree:
    root: int
    members: frozenset[int]


def top_subtrees(tree: Tree) -> list[TopSubtree]:
    kids = tree.children
    out = []
    for root in kids.get(tree.sink, ()):
        members = {root}
        stack = [root]
        while stack:
            for c in kids[stack.pop()]:
                members.add(c)
                stack.append(c)
        out.append(TopSubtree(root=root, members=frozenset(members)))
    return out


def eligible_subtrees(tree: Tree, backlog: Mapping[int, int]) -> list[TopSubtree]:
    """Top-subtrees whose root holds at least one packet."""
    return [ts for ts in top_subtrees(tree) if backlog.get(ts.root, 0) > 0]
