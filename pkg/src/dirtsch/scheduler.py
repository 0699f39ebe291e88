"""Level-based, timer-driven distributed scheduling.

Every data slot of the slotframe is negotiated in one round. A round walks
the tree level by level; each level gets a scheduling slot in which its
nodes run a backlog-dependent timer. When a node's timer expires it either
asks its parent for a cell (RTS), or, if the parent is already taken or it
has nothing to send, switches to receiving mode and announces that to its
children (AVAILABLE). A parent grants with a CTS, the requester confirms
with a NAV. All control traffic is omni-directional and every node updates
only its own state from messages it physically hears.

Nodes are modelled as pure transition functions over ``NodeSchedState``;
``schedule_period`` is the engine that fires timers and delivers messages.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from types import MappingProxyType
from enum import Enum
from typing import Mapping, NamedTuple

import numpy as np

from . import kernels
from .antenna import BeamConfig, Mode, beam_of
from .schedule import Cell, Schedule
from .topology import Position, Topology, Tree, TopologyError

SCHED_SLOTS = 3


class NodeMode(str, Enum):
    IDLE = "idle"
    TIMING = "timing"
    SENDING = "sending"
    RECEIVING = "receiving"


class MsgKind(str, Enum):
    RTS = "RTS"
    CTS = "CTS"
    NAV = "NAV"
    AVAILABLE = "AVAILABLE"
    SCHED_ADVERT = "SCHED_ADVERT"


_KIND_ORDER = {k: i for i, k in enumerate(MsgKind)}


@dataclass(frozen=True)
class SchedMessage:
    kind: MsgKind
    src: int
    dst: int | None = None
    slot: int = 0
    cell: Cell | None = None
    channels: tuple[int, ...] = ()
    cells: tuple[Cell, ...] = ()

    def sort_key(self) -> tuple[int, int]:
        return self.src, _KIND_ORDER[self.kind]

    def describe(self) -> str:
        dst = "*" if self.dst is None else str(self.dst)
        extra = ""
        if self.kind is MsgKind.RTS:
            extra = " ch=" + ":".join(map(str, self.channels))
        elif self.cell is not None:
            extra = " cell=" + self.cell.dump()
        elif self.cells:
            extra = " cells=" + ";".join(c.dump() for c in self.cells)
        return f"{self.kind.value} {self.src}->{dst}{extra}"


@dataclass(frozen=True)
class TimerPolicy:
    base: int = 60
    ticks_per_slot: int = 64

    def __post_init__(self) -> None:
        if not 1 <= self.base <= self.ticks_per_slot:
            raise ValueError(f"timer base {self.base} must lie in 1..{self.ticks_per_slot}")


def timer_value(backlog_packets: int, policy: TimerPolicy = TimerPolicy()) -> int:
    """Micro-ticks until expiry: ``base // (1 + backlog)``, at least 1."""
    if backlog_packets < 0:
        raise ValueError(f"backlog must be non-negative, got {backlog_packets}")
    return max(1, policy.base // (1 + backlog_packets))


@dataclass(frozen=True)
class LocalContext:
    """What a node knows without talking: its own tree links and the
    GPS positions of the nodes it can hear."""

    node: int
    parent: int | None
    parent_is_sink: bool
    children: tuple[int, ...]
    positions: Mapping[int, Position]
    radius: float
    mode: Mode
    beam_config: BeamConfig
    num_channels: int

    @property
    def is_sink(self) -> bool:
        return self.parent is None

    def beam_toward(self, a: int, b: int) -> int | None:
        if self.mode is Mode.OMNI:
            return None
        return beam_of(self.positions[a], self.positions[b], self.beam_config)

    def reaches(self, tx: int, tx_beam: int | None, victim: int) -> bool:
        """Would ``tx`` radiating on ``tx_beam`` hit ``victim``?

        Nodes outside hearing range are unknown here, and by construction
        they are also outside interference range.
        """
        if tx == victim:
            return False
        pa = self.positions.get(tx)
        pb = self.positions.get(victim)
        if pa is None or pb is None or math.dist(pa, pb) > self.radius:
            return False
        if self.mode is Mode.OMNI or tx_beam is None:
            return True
        return beam_of(pa, pb, self.beam_config) == tx_beam

    def make_cell(self, slot: int, channel: int, tx: int, rx: int) -> Cell:
        if self.mode is Mode.OMNI:
            return Cell(slot, channel, tx, rx)
        return Cell(slot, channel, tx, rx, self.beam_toward(tx, rx), self.beam_toward(rx, tx))


def hearing_range(topology: Topology, cfg: BeamConfig) -> float:
    return topology.radius * cfg.interference_factor


def local_context(topology: Topology, tree: Tree, node: int, mode: Mode,
                  beam_config: BeamConfig = BeamConfig(), num_channels: int = 1) -> LocalContext:
    reach = hearing_range(topology, beam_config)
    me = topology.position(node)
    visible = {v: topology.positions[v] for v in topology.nodes
               if math.dist(me, topology.positions[v]) <= reach}
    parent = tree.parent.get(node)
    return LocalContext(
        node=node,
        parent=parent,
        parent_is_sink=parent == tree.sink,
        children=tree.children.get(node, ()),
        positions=visible,
        radius=reach,
        mode=Mode(mode),
        beam_config=beam_config,
        num_channels=num_channels,
    )


class NodeSchedState(NamedTuple):
    """One node's protocol state; ``known_cells`` is its adjacency table of
    cells overheard so far (the cell-allocation and beam matrices)."""

    node: int
    level: int
    mode: NodeMode = NodeMode.IDLE
    timer: int = 0
    backlog: int = 0
    demand: int = 0
    slot: int = 0
    awaiting: bool = False
    reserved: Cell | None = None
    parent_status: str = "unknown"
    neighbor_modes: Mapping[int, str] = MappingProxyType({})
    known_cells: frozenset[Cell] = frozenset()
    owned: tuple[Cell, ...] = ()
    diagnostics: tuple[str, ...] = ()

    def cells_in_slot(self) -> list[Cell]:
        return sorted(c for c in self.known_cells if c.slot == self.slot)


def _note(state: NodeSchedState, src: int, what: str, **changes) -> NodeSchedState:
    modes = dict(state.neighbor_modes)
    modes[src] = what
    return state._replace(neighbor_modes=modes, **changes)


def _drop(state: NodeSchedState, msg: SchedMessage, why: str):
    return state._replace(diagnostics=state.diagnostics + (f"dropped {msg.describe()}: {why}",)), []


def begin_slot(state: NodeSchedState, ctx: LocalContext, slot: int) -> NodeSchedState:
    """Reset per-round fields; the sink always starts out listening."""
    if ctx.is_sink:
        mode, status = NodeMode.RECEIVING, "none"
    else:
        mode, status = NodeMode.IDLE, "available" if ctx.parent_is_sink else "unknown"
    return state._replace(mode=mode, timer=0, slot=slot, awaiting=False, reserved=None,
                          parent_status=status, neighbor_modes={})


def start_timer(state: NodeSchedState, policy: TimerPolicy = TimerPolicy()) -> NodeSchedState:
    return state._replace(mode=NodeMode.TIMING, timer=timer_value(state.backlog, policy))


def _become_receiving(state: NodeSchedState, slot: int):
    state = state._replace(mode=NodeMode.RECEIVING, awaiting=False)
    return state, [SchedMessage(MsgKind.AVAILABLE, state.node, None, slot)]


def fire_timer(state: NodeSchedState, ctx: LocalContext):
    """Timer expiry: request a cell from the parent or turn receiver."""
    if state.mode is not NodeMode.TIMING:
        return state, []
    if state.demand > 0 and state.parent_status == "available" and ctx.parent is not None:
        beam = ctx.beam_toward(state.node, ctx.parent)
        busy = {
            c.channel for c in state.cells_in_slot()
            if ctx.reaches(state.node, beam, c.rx)
        }
        allowed = tuple(ch for ch in range(ctx.num_channels) if ch not in busy)
        if allowed:
            rts = SchedMessage(MsgKind.RTS, state.node, ctx.parent, state.slot, channels=allowed)
            return state._replace(awaiting=True), [rts]
    return _become_receiving(state, state.slot)


def cts_timeout(state: NodeSchedState, ctx: LocalContext):
    """No grant came back for our RTS."""
    if not state.awaiting:
        return state, []
    return _become_receiving(state, state.slot)


def _grant_channel(state: NodeSchedState, ctx: LocalContext, msg: SchedMessage) -> int | None:
    current = state.cells_in_slot()
    if any(msg.src in (c.tx, c.rx) for c in current):
        return None
    for ch in msg.channels:
        if not 0 <= ch < ctx.num_channels:
            continue
        if not any(c.channel == ch and ctx.reaches(c.tx, c.tx_beam, state.node) for c in current):
            return ch
    return None


def handle_message(state: NodeSchedState, msg: SchedMessage, ctx: LocalContext):
    """Pure transition: returns ``(new_state, outgoing_messages)``."""
    if msg.src == state.node or msg.src not in ctx.positions:
        return _drop(state, msg, "not receivable here")
    if msg.kind in (MsgKind.CTS, MsgKind.NAV) and msg.cell is None:
        return _drop(state, msg, "missing cell")
    if msg.kind is MsgKind.RTS and (msg.dst is None or not msg.channels):
        return _drop(state, msg, "RTS without addressee or channels")

    me = state.node
    if msg.kind is MsgKind.RTS:
        state = _note(state, msg.src, "requesting")
        if msg.dst != me:
            return state, []
        if state.mode is not NodeMode.RECEIVING or state.reserved is not None:
            return state, []
        if msg.slot != state.slot or ctx.parent == msg.src:
            return state, []
        ch = _grant_channel(state, ctx, msg)
        if ch is None:
            return state, []
        cell = ctx.make_cell(state.slot, ch, msg.src, me)
        state = state._replace(reserved=cell, owned=state.owned + (cell,),
                               known_cells=state.known_cells | {cell})
        return state, [SchedMessage(MsgKind.CTS, me, msg.src, state.slot, cell=cell)]

    if msg.kind is MsgKind.CTS:
        cell = msg.cell
        state = _note(state, msg.src, "reserved", known_cells=state.known_cells | {cell})
        out: list[SchedMessage] = []
        if cell.tx == me and msg.dst == me:
            if state.awaiting:
                state = state._replace(mode=NodeMode.SENDING, awaiting=False, reserved=cell,
                                       owned=state.owned + (cell,))
                out.append(SchedMessage(MsgKind.NAV, me, None, state.slot, cell=cell))
            # a second grant while already sending is ignored
        elif msg.src == ctx.parent:
            state = state._replace(parent_status="busy")
        return state, out

    if msg.kind is MsgKind.NAV:
        state = _note(state, msg.src, "sending", known_cells=state.known_cells | {msg.cell})
        if msg.src == ctx.parent:
            state = state._replace(parent_status="busy")
        return state, []

    if msg.kind is MsgKind.AVAILABLE:
        state = _note(state, msg.src, "receiving")
        if msg.src == ctx.parent and state.parent_status != "busy":
            state = state._replace(parent_status="available")
        return state, []

    if msg.kind is MsgKind.SCHED_ADVERT:
        return state._replace(known_cells=state.known_cells | set(msg.cells)), []

    return _drop(state, msg, "unknown kind")


def end_slot(state: NodeSchedState, packets_per_cell: int = 1) -> NodeSchedState:
    cell = state.reserved
    if cell is not None and cell.tx == state.node:
        return state._replace(demand=max(0, state.demand - 1),
                              backlog=max(0, state.backlog - packets_per_cell))
    return state


def local_schedule(state: NodeSchedState, topology: Topology, mode: Mode,
                   slotframe_length: int, num_channels: int,
                   beam_config: BeamConfig = BeamConfig()) -> Schedule:
    """The node's own view: owned cells plus everything it overheard."""
    sched = Schedule(topology, mode, slotframe_length, num_channels, beam_config,
                     cells=state.owned)
    return sched.merge_advert(state.known_cells - set(state.owned))


@dataclass
class PeriodResult:
    schedule: Schedule
    trace: list[str]
    states: dict[int, NodeSchedState]
    unserved: dict[int, int]
    inbox: dict[int, list[tuple]] | None = None

    @property
    def diagnostics(self) -> list[str]:
        return self.schedule.diagnostics


def cells_needed(backlog: int, packets_per_cell: int) -> int:
    return -(-backlog // packets_per_cell) if backlog > 0 else 0


def schedule_period(
    topology: Topology,
    tree: Tree,
    loads: Mapping[int, int],
    mode: Mode = Mode.DIRECTIONAL,
    policy: TimerPolicy = TimerPolicy(),
    beam_config: BeamConfig = BeamConfig(),
    num_channels: int = 1,
    slotframe_length: int = 16,
    packets_per_cell: int = 1,
    adverts: bool = True,
    record_inbox: bool = False,
    record_trace: bool = True,
    contexts: Mapping[int, LocalContext] | None = None,
    control_loss: float = 0.0,
    rng: np.random.Generator | None = None,
) -> PeriodResult:
    """Run one scheduling period and return the union of confirmed cells.

    ``loads`` maps node to queued packets. Each node asks for
    ``ceil(load / packets_per_cell)`` uplink cells towards its parent.
    ``control_loss`` drops each (message, hearer) delivery independently;
    cells that then collide are reported in the diagnostics, not allocated.
    """
    mode = Mode(mode)
    if not 0.0 <= control_loss < 1.0:
        raise ValueError(f"control loss must lie in [0, 1), got {control_loss}")
    if control_loss > 0 and rng is None:
        raise ValueError("a lossy control plane needs an rng")
    if mode is Mode.DIRECTIONAL:
        beam_config.require_even()
    if tree.sink != topology.sink:
        raise TopologyError("tree and topology disagree on the sink")
    tree.validate(topology)
    if contexts is None:
        contexts = {v: local_context(topology, tree, v, mode, beam_config, num_channels)
                    for v in topology.nodes}
    hearers = {v: sorted(u for u in contexts[v].positions if u != v) for v in topology.nodes}
    states = {
        v: NodeSchedState(node=v, level=tree.level[v], backlog=int(loads.get(v, 0)),
                          demand=cells_needed(int(loads.get(v, 0)), packets_per_cell))
        for v in topology.nodes
    }
    states[tree.sink] = states[tree.sink]._replace(backlog=0, demand=0)
    by_level: dict[int, list[int]] = {}
    for v, lvl in tree.level.items():
        if lvl > 0:
            by_level.setdefault(lvl, []).append(v)

    trace: list[str] = []
    inbox: dict[int, list[tuple]] | None = (
        {v: [] for v in topology.nodes} if record_inbox else None
    )
    schedule = Schedule(topology, mode, slotframe_length, num_channels, beam_config)

    def log_input(v: int, what: tuple) -> None:
        if inbox is not None:
            inbox[v].append(what)

    def deliver(first: list[SchedMessage], stamp: str) -> None:
        wave = first
        while wave:
            wave.sort(key=SchedMessage.sort_key)
            nxt: list[SchedMessage] = []
            for msg in wave:
                if record_trace:
                    trace.append(f"{stamp} {msg.describe()}")
                for u in hearers[msg.src]:
                    if control_loss and rng.random() < control_loss:
                        continue
                    log_input(u, ("msg", msg))
                    states[u], out = handle_message(states[u], msg, contexts[u])
                    nxt.extend(out)
            wave = nxt

    for slot in range(slotframe_length):
        if not any(s.demand for s in states.values()):
            break
        for v in topology.nodes:
            log_input(v, ("begin", slot))
            states[v] = begin_slot(states[v], contexts[v], slot)
        for lvl in sorted(by_level):
            label = (lvl - 1) % SCHED_SLOTS
            members = by_level[lvl]
            for v in members:
                log_input(v, ("start",))
                states[v] = start_timer(states[v], policy)
            # equal expiry ticks: the larger backlog goes first, then the lower id
            order = sorted(members, key=lambda v: (states[v].timer, -states[v].backlog, v))
            for v in order:
                stamp = f"{slot} {label} {states[v].timer}"
                log_input(v, ("fire",))
                states[v], out = fire_timer(states[v], contexts[v])
                deliver(out, stamp)
                if states[v].awaiting:
                    log_input(v, ("timeout",))
                    states[v], out = cts_timeout(states[v], contexts[v])
                    deliver(out, stamp)
        for v in topology.nodes:
            cell = states[v].reserved
            if cell is not None and cell.tx == v:
                if states[cell.rx].reserved != cell:
                    raise RuntimeError(f"receiver {cell.rx} did not record {cell}")
                if control_loss:
                    clash = schedule.conflicts(cell)
                    if clash:
                        schedule.diagnostics.append(
                            f"collision: {cell.dump()} overlaps "
                            + " ".join(c.cell.dump() for c in clash))
                    else:
                        schedule.allocate(cell)
                else:
                    schedule.allocate(cell)
            log_input(v, ("end",))
            states[v] = end_slot(states[v], packets_per_cell)

    if adverts:
        stamp = "advert"
        msgs = [SchedMessage(MsgKind.SCHED_ADVERT, v, None, 0, cells=tuple(sorted(
                    c for c in states[v].owned if c.tx == v)))
                for v in topology.nodes if any(c.tx == v for c in states[v].owned)]
        deliver(msgs, stamp)

    unserved = {v: s.demand for v, s in sorted(states.items()) if s.demand > 0}
    for v, left in unserved.items():
        schedule.diagnostics.append(
            f"node {v}: {left} cell(s) to {tree.parent.get(v)} unscheduled "
            f"within a slotframe of {slotframe_length}")
    return PeriodResult(schedule, trace, states, unserved, inbox)


def run_scheduling_period(topology: Topology, tree: Tree, loads: Mapping[int, int],
                          mode: Mode = Mode.DIRECTIONAL, policy: TimerPolicy = TimerPolicy(),
                          beam_config: BeamConfig = BeamConfig(), **kwargs) -> Schedule:
    return schedule_period(topology, tree, loads, mode, policy, beam_config, **kwargs).schedule


def omni_baseline(topology: Topology, tree: Tree, loads: Mapping[int, int],
                  policy: TimerPolicy = TimerPolicy(), **kwargs) -> Schedule:
    return run_scheduling_period(topology, tree, loads, Mode.OMNI, policy, **kwargs)


def replay_node(ctx: LocalContext, initial: NodeSchedState, inputs: list[tuple],
                policy: TimerPolicy = TimerPolicy(), packets_per_cell: int = 1):
    """Re-run one node in isolation on its recorded inputs.

    Returns the final state and every message the node emitted, which must
    match what the node did inside the full engine run.
    """
    state = initial
    emitted: list[SchedMessage] = []
    for item in inputs:
        kind = item[0]
        if kind == "begin":
            state = begin_slot(state, ctx, item[1])
        elif kind == "start":
            state = start_timer(state, policy)
        elif kind == "fire":
            state, out = fire_timer(state, ctx)
            emitted += out
        elif kind == "timeout":
            state, out = cts_timeout(state, ctx)
            emitted += out
        elif kind == "msg":
            state, out = handle_message(state, item[1], ctx)
            emitted += out
        elif kind == "end":
            state = end_slot(state, packets_per_cell)
    return state, emitted


def geometry_tables(topology: Topology, mode: Mode,
                    beam_config: BeamConfig = BeamConfig()):
    """``(beams, reach)``: the beam each node uses towards each other node,
    and ``reach[a, b, c]``, whether ``a`` radiating towards ``b`` hits ``c``."""
    n = topology.n
    reach_r = hearing_range(topology, beam_config)
    pos = topology.positions
    beams = np.zeros((n, n), dtype=np.int64)
    near = np.zeros((n, n), dtype=bool)
    for a in range(n):
        for b in range(n):
            if a != b:
                near[a, b] = math.dist(pos[a], pos[b]) <= reach_r
                if mode is Mode.DIRECTIONAL:
                    beams[a, b] = beam_of(pos[a], pos[b], beam_config)
    if mode is Mode.OMNI:
        reach = np.broadcast_to(near[:, None, :], (n, n, n))
    else:
        reach = near[:, None, :] & (beams[:, :, None] == beams[:, None, :])
    return beams, np.ascontiguousarray(reach, dtype=np.uint8)


class PeriodPlanner:
    """Computes the same schedules as ``schedule_period`` through the
    negotiation kernel, reusing geometry across periods."""

    def __init__(self, topology: Topology, tree: Tree, mode: Mode = Mode.DIRECTIONAL,
                 policy: TimerPolicy = TimerPolicy(), beam_config: BeamConfig = BeamConfig(),
                 num_channels: int = 1, slotframe_length: int = 16,
                 packets_per_cell: int = 1, negotiate=None):
        self.mode = Mode(mode)
        if self.mode is Mode.DIRECTIONAL:
            beam_config.require_even()
        tree.validate(topology)
        self.topology = topology
        self.tree = tree
        self.policy = policy
        self.beam_config = beam_config
        self.num_channels = num_channels
        self.slotframe_length = slotframe_length
        self.packets_per_cell = packets_per_cell
        self.negotiate = negotiate or kernels.negotiate
        n = topology.n
        self.parent = np.array([tree.parent.get(v, -1) for v in range(n)], dtype=np.int64)
        self.level = np.array([tree.level[v] for v in range(n)], dtype=np.int64)
        self.beams, self.reach = geometry_tables(topology, self.mode, beam_config)

    def raw(self, loads: Mapping[int, int]):
        backlog = np.zeros(self.topology.n, dtype=np.int64)
        for v, b in loads.items():
            backlog[v] = b
        return self.negotiate(self.parent, self.level, self.reach, backlog,
                              self.packets_per_cell, self.num_channels,
                              self.slotframe_length, self.policy.base)

    def cells(self, loads: Mapping[int, int]) -> list[Cell]:
        raw, _ = self.raw(loads)
        if self.mode is Mode.OMNI:
            return [Cell(s, ch, tx, rx) for s, ch, tx, rx in raw]
        b = self.beams
        return [Cell(s, ch, tx, rx, int(b[tx, rx]), int(b[rx, tx])) for s, ch, tx, rx in raw]

    def plan(self, loads: Mapping[int, int]) -> Schedule:
        raw, demand = self.raw(loads)
        sched = Schedule(self.topology, self.mode, self.slotframe_length, self.num_channels,
                         self.beam_config)
        b = self.beams
        for s, ch, tx, rx in raw:
            if self.mode is Mode.OMNI:
                sched.allocate(Cell(s, ch, tx, rx))
            else:
                sched.allocate(Cell(s, ch, tx, rx, int(b[tx, rx]), int(b[rx, tx])))
        for v, left in enumerate(demand):
            if left > 0:
                sched.diagnostics.append(
                    f"node {v}: {left} cell(s) to {self.tree.parent.get(v)} unscheduled "
                    f"within a slotframe of {self.slotframe_length}")
        return sched
