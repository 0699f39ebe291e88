"""Pinned layouts reproducing the worked examples.

``TREE16`` is a 16-node field whose shortest-hop tree is the example tree:
n1, n2, n3 hang off the sink, n4-n6 off n1, n7-n9 off n2, n10-n12 off n3,
and n13, n14, n15 sit one level deeper. n0-n3 all hear each other, and the
links n2->n0, n4->n1 and n10->n3 use beam pairs (1,3), (1,3) and (2,4).
"""

from __future__ import annotations

from .topology import Topology, Tree, tree_from_parents

# offsets keep every coordinate inside the 400 x 400 field
_OX, _OY = 200.0, 300.0
_TREE16_RAW = [
    (0, 0), (66, -44), (-3, -28), (4, -73), (8, -118), (149, -34), (138, -4),
    (-73, -76), (-35, -109), (-63, -96), (32, -154), (-44, -148), (-7, -143),
    (45, -205), (-90, -185), (-124, -184),
]
TREE16_POSITIONS = tuple((x + _OX, y + _OY) for x, y in _TREE16_RAW)
TREE16_RADIUS = 100.0
TREE16_PARENTS = {1: 0, 2: 0, 3: 0, 4: 1, 5: 1, 6: 1, 7: 2, 8: 2, 9: 2,
                  10: 3, 11: 3, 12: 3, 13: 4, 14: 8, 15: 11}

# backlogs that make n2, then n1, then n3 expire at level 1 and n4 lead level 2
WALKTHROUGH_LOADS = {1: 3, 2: 5, 3: 1, 4: 4, 5: 2, 6: 1, 7: 1, 10: 2, 13: 1}

THREE_TX_LINKS = ((2, 0), (4, 1), (10, 3))
THREE_TX_LOADS = {2: 1, 4: 1, 10: 1}


def tree16() -> Topology:
    return Topology(positions=TREE16_POSITIONS, radius=TREE16_RADIUS,
                    area=(400.0, 400.0), sink=0)


# Four nodes on a 50 m square: B (sink, id 0), A (1), D (2), C (3).
# A sends east to B, C sends west to D; every pair is within range.
FOUR_NODE_POSITIONS = ((50.0, 0.0), (0.0, 0.0), (0.0, 50.0), (50.0, 50.0))
FOUR_NODE_NAMES = {0: "B", 1: "A", 2: "D", 3: "C"}
FOUR_NODE_PARENTS = {1: 0, 2: 0, 3: 2}
FOUR_NODE_LOADS = {1: 4, 3: 4}
FOUR_NODE_SLOTFRAME = 4


def four_node() -> tuple[Topology, Tree]:
    topo = Topology(positions=FOUR_NODE_POSITIONS, radius=100.0, area=(100.0, 100.0), sink=0)
    return topo, tree_from_parents(topo, FOUR_NODE_PARENTS)
