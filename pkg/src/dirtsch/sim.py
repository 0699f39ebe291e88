"""Slot-stepped convergecast simulation and its metrics.

Time advances in data slots. Every ``reschedule_period`` slotframes a
scheduling period is run on the current buffer backlogs; it takes no
simulated time. Inside a slot each scheduled cell moves up to
``packets_per_cell`` packets one hop, FIFO, then new packets arrive.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Iterable, NamedTuple

import numpy as np

from .antenna import BeamConfig, Mode
from .link_model import LinkModelParams, link_tx_power, max_link_delay, tx_energy
from .schedule import Cell, Schedule
from .scheduler import PeriodPlanner, TimerPolicy
from .topology import Topology, TopologyError, Tree


class SimError(ValueError):
    pass


class Traffic(str, Enum):
    CBR = "cbr"
    POISSON = "poisson"


@dataclass(frozen=True)
class Packet:
    id: int
    source: int
    created_at: float
    size: int = 127
    delivered_at: float | None = None


@dataclass(frozen=True)
class SimConfig:
    duration: float = 300.0
    timeslot: float = 0.010
    mac_rate: float = 2e6
    packet_size: int = 127
    traffic: Traffic = Traffic.CBR
    rate: float = 50.0  # packets/s per source node
    buffer_capacity: int = 256
    seed: int = 0
    mode: Mode = Mode.DIRECTIONAL
    reschedule_period: int = 1
    slotframe_length: int = 16
    num_channels: int = 1
    idle_energy: float = 0.0  # J per node per slot without a transmission

    def __post_init__(self) -> None:
        object.__setattr__(self, "traffic", Traffic(self.traffic))
        object.__setattr__(self, "mode", Mode(self.mode))
        if not self.duration > 0 or not self.timeslot > 0:
            raise SimError("duration and timeslot must be positive")
        if self.buffer_capacity < 1:
            raise SimError("buffer capacity must be at least 1")
        if self.rate < 0 or self.idle_energy < 0:
            raise SimError("traffic rate and idle energy must be non-negative")
        if self.packet_size < 1 or self.mac_rate <= 0:
            raise SimError("packet size and MAC rate must be positive")
        if self.reschedule_period < 1 or self.slotframe_length < 1 or self.num_channels < 1:
            raise SimError("reschedule period, slotframe length and channels must be >= 1")
        if self.packets_per_cell < 1:
            raise SimError("one timeslot at the MAC rate cannot carry a single packet")

    @property
    def packets_per_cell(self) -> int:
        return math.floor(self.mac_rate * self.timeslot / (8 * self.packet_size))

    @property
    def num_slots(self) -> int:
        # round first so 300 / 0.01 does not become 29999.999...
        return math.floor(round(self.duration / self.timeslot, 9))


def generate_traffic(rng: np.random.Generator, traffic: Traffic, rate: float, node: int,
                     slot: int, timeslot: float) -> list[float]:
    """Creation times of the packets ``node`` produces during ``slot``.

    CBR packets fall at exact multiples of ``1/rate``; Poisson counts are
    drawn per slot with uniform offsets, which gives exponential gaps.
    """
    if rate <= 0:
        return []
    start, end = slot * timeslot, (slot + 1) * timeslot
    if Traffic(traffic) is Traffic.CBR:
        first = math.ceil(round(start * rate, 9))
        last = math.ceil(round(end * rate, 9))
        return [k / rate for k in range(first, last)]
    count = int(rng.poisson(rate * timeslot))
    if count == 0:
        return []
    return sorted(start + timeslot * rng.random(count))


class EventKind(str, Enum):
    GEN = "gen"
    DROP = "drop"
    TX = "tx"
    HOP = "hop"
    DELIVER = "deliver"
    SCHED = "sched"


class Event(NamedTuple):
    """One log line. ``value`` is energy (J) for ``tx`` and the schedule
    length for ``sched``; unused fields are -1 or empty."""

    time: float
    kind: str
    src: int
    dst: int = -1
    packet: int = -1
    cell: str = ""
    value: float = 0.0

    def dump(self) -> str:
        return (f"{self.time!r},{self.kind},{self.src},{self.dst},{self.packet},"
                f"{self.cell},{self.value!r}")


EVENT_HEADER = "time,kind,src,dst,packet,cell,value"


@dataclass(frozen=True)
class RunInfo:
    """What the collector needs besides the events themselves."""

    mode: str
    seed: int
    duration: float
    timeslot: float
    num_slots: int
    num_nodes: int
    sink: int
    packet_size: int
    mac_rate: float
    uplink_access_time: float = 0.0
    downlink_access_time: float = 0.0
    idle_energy: float = 0.0


@dataclass
class EventLog:
    info: RunInfo
    events: list[Event] = field(default_factory=list)

    def dumps(self) -> str:
        head = "".join(f"# {k}={v!r}\n" for k, v in asdict(self.info).items())
        return head + EVENT_HEADER + "\n" + "".join(e.dump() + "\n" for e in self.events)


def parse_event_log(text: str) -> EventLog:
    meta: dict[str, object] = {}
    events = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            meta[key] = json.loads(val.replace("'", '"'))
            continue
        if line == EVENT_HEADER:
            continue
        parts = line.split(",")
        if len(parts) != 7:
            raise SimError(f"event line {lineno}: expected 7 fields, got {raw!r}")
        try:
            events.append(Event(float(parts[0]), parts[1], int(parts[2]), int(parts[3]),
                                int(parts[4]), parts[5], float(parts[6])))
        except ValueError as exc:
            raise SimError(f"event line {lineno}: {exc}") from None
    try:
        info = RunInfo(**meta)
    except TypeError as exc:
        raise SimError(f"event log header incomplete: {exc}") from None
    return EventLog(info, events)


@dataclass
class MetricsReport:
    mode: str
    seed: int
    duration: float
    generated: int
    delivered: int
    dropped: int
    in_buffers: int
    delivered_bits: int
    aggregate_throughput: float  # bits/s arriving at the sink
    link_throughput: dict[str, float]
    delay_mean: float | None
    delay_p50: float | None
    delay_p95: float | None
    delay_max: float | None
    max_uplink_delay: float
    max_downlink_delay: float
    peak_buffer: dict[str, int]
    tx_energy: dict[str, float]
    idle_energy: float
    energy_total: float
    transmissions: int
    schedule_length_max: int
    schedule_length_mean: float

    @property
    def delivery_ratio(self) -> float | None:
        return self.delivered / self.generated if self.generated else None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["delivery_ratio"] = self.delivery_ratio
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_tsv(self) -> str:
        rows = []
        for key, val in sorted(self.to_dict().items()):
            if isinstance(val, dict):
                rows.extend(f"{key}.{k}\t{_fmt(v)}" for k, v in sorted(val.items(), key=_natural))
            else:
                rows.append(f"{key}\t{_fmt(val)}")
        return "metric\tvalue\n" + "\n".join(rows) + "\n"


def _natural(item):
    return [int(p) if p.isdigit() else p for p in item[0].replace("->", " ").split()]


def _fmt(v) -> str:
    return "n/a" if v is None else repr(v)


class MetricsCollector:
    """Single pass over events; ``report()`` may be called at any point."""

    def __init__(self, info: RunInfo):
        self.info = info
        self.created: dict[int, float] = {}
        self.location: dict[int, int] = {}
        self.buffers = [0] * info.num_nodes
        self.peaks = [0] * info.num_nodes
        self.delays: list[float] = []
        self.link_bits: dict[tuple[int, int], int] = {}
        self.energy = [0.0] * info.num_nodes
        self.tx_count = [0] * info.num_nodes
        self.dropped = 0
        self.lengths: list[int] = []
        self._bits = 8 * info.packet_size
        self._pending: int | None = None

    def _enqueue(self, node: int) -> None:
        self._commit()
        self.buffers[node] += 1
        self._pending = node

    def _commit(self) -> None:
        # a refused packet is logged as arrival then drop; the peak only
        # counts arrivals that were not taken straight back out
        v = self._pending
        if v is not None:
            self._pending = None
            if self.buffers[v] > self.peaks[v]:
                self.peaks[v] = self.buffers[v]

    def feed(self, ev: Event) -> None:
        kind = ev.kind
        if kind != "drop":
            self._commit()
        if kind == "hop":
            where = self.location.get(ev.packet)
            if where != ev.src:
                raise SimError(f"packet {ev.packet} hops from {ev.src} but sits at {where}")
            self.buffers[ev.src] -= 1
            self.location[ev.packet] = ev.dst
            key = (ev.src, ev.dst)
            self.link_bits[key] = self.link_bits.get(key, 0) + self._bits
            if ev.dst != self.info.sink:
                self._enqueue(ev.dst)
        elif kind == "gen":
            if ev.packet in self.created:
                raise SimError(f"packet {ev.packet} generated twice")
            self.created[ev.packet] = ev.time
            self.location[ev.packet] = ev.src
            self._enqueue(ev.src)
        elif kind == "deliver":
            if self.location.get(ev.packet) != self.info.sink:
                raise SimError(f"packet {ev.packet} delivered without reaching the sink")
            self.delays.append(ev.time - self.created[ev.packet])
            self.location[ev.packet] = -2
        elif kind == "drop":
            where = self.location.get(ev.packet)
            if where is None:
                raise SimError(f"drop of unknown packet {ev.packet}")
            if where != ev.src:
                raise SimError(f"packet {ev.packet} dropped at {ev.src} but sits at {where}")
            self.buffers[ev.src] -= 1
            if self._pending != ev.src:
                self._commit()
            self._pending = None
            self.location[ev.packet] = -1
            self.dropped += 1
        elif kind == "tx":
            self.energy[ev.src] += ev.value
            self.tx_count[ev.src] += 1
        elif kind == "sched":
            self.lengths.append(int(ev.value))
        else:
            raise SimError(f"unknown event kind {kind!r}")

    def report(self) -> MetricsReport:
        self._commit()
        info = self.info
        sink = info.sink
        delivered = len(self.delays)
        generated = len(self.created)
        in_buffers = sum(b for v, b in enumerate(self.buffers) if v != sink)
        delivered_bits = delivered * self._bits
        if self.delays:
            arr = np.sort(np.asarray(self.delays))
            mean = float(arr.mean())
            p50, p95 = (float(x) for x in np.percentile(arr, [50, 95]))
            dmax = float(arr[-1])
        else:
            mean = p50 = p95 = dmax = None
        peak_bits = {v: self.peaks[v] * self._bits for v in range(info.num_nodes) if v != sink}
        rates = {v: info.mac_rate for v in peak_bits}
        idle = [info.idle_energy * (info.num_slots - self.tx_count[v])
                for v in range(info.num_nodes)]
        return MetricsReport(
            mode=info.mode,
            seed=info.seed,
            duration=info.duration,
            generated=generated,
            delivered=delivered,
            dropped=self.dropped,
            in_buffers=in_buffers,
            delivered_bits=delivered_bits,
            aggregate_throughput=delivered_bits / info.duration,
            link_throughput={f"{a}->{b}": bits / info.duration
                             for (a, b), bits in sorted(self.link_bits.items())},
            delay_mean=mean,
            delay_p50=p50,
            delay_p95=p95,
            delay_max=dmax,
            max_uplink_delay=max_link_delay(peak_bits, rates, info.uplink_access_time),
            max_downlink_delay=max_link_delay(peak_bits, rates, info.downlink_access_time),
            peak_buffer={str(v): self.peaks[v] for v in range(info.num_nodes) if v != sink},
            tx_energy={str(v): self.energy[v] for v in range(info.num_nodes)},
            idle_energy=float(sum(idle)),
            energy_total=float(sum(self.energy) + sum(idle)),
            transmissions=sum(self.tx_count),
            schedule_length_max=max(self.lengths, default=0),
            schedule_length_mean=(sum(self.lengths) / len(self.lengths)) if self.lengths else 0.0,
        )


def collect_metrics(log: EventLog | Iterable[Event], info: RunInfo | None = None) -> MetricsReport:
    """Recompute a report from a complete event log."""
    if isinstance(log, EventLog):
        info, events = log.info, log.events
    else:
        events = log
    if info is None:
        raise SimError("a bare event sequence needs its RunInfo")
    col = MetricsCollector(info)
    for ev in events:
        col.feed(ev)
    return col.report()


@dataclass
class SimRun:
    report: MetricsReport
    log: EventLog | None
    schedules: list[tuple[int, Schedule]]  # (first slot, schedule) per scheduling period
    peak_history: list[int] = field(default_factory=list)


def simulate(config: SimConfig, topology: Topology, tree: Tree,
             link_params: LinkModelParams = LinkModelParams(),
             policy: TimerPolicy = TimerPolicy(), beam_config: BeamConfig = BeamConfig(),
             record_events: bool = False, keep_schedules: bool = False,
             check_conservation: bool = False) -> SimRun:
    """Run the data loop; see ``run`` for the report-only form."""
    try:
        planner = PeriodPlanner(topology, tree, config.mode, policy, beam_config,
                                num_channels=config.num_channels,
                                slotframe_length=config.slotframe_length,
                                packets_per_cell=config.packets_per_cell)
    except (TopologyError, ValueError) as exc:
        raise SimError(f"cannot schedule this topology: {exc}") from exc

    n, sink = topology.n, topology.sink
    info = RunInfo(mode=config.mode.value, seed=config.seed, duration=config.duration,
                   timeslot=config.timeslot, num_slots=config.num_slots, num_nodes=n,
                   sink=sink, packet_size=config.packet_size, mac_rate=config.mac_rate,
                   uplink_access_time=link_params.uplink_access_time,
                   downlink_access_time=link_params.downlink_access_time,
                   idle_energy=config.idle_energy)
    collector = MetricsCollector(info)
    log = EventLog(info) if record_events else None

    def emit(ev: Event) -> None:
        collector.feed(ev)
        if log is not None:
            log.events.append(ev)

    traffic_rngs = [np.random.default_rng([config.seed, 0, v]) for v in range(n)]
    fading_rng = np.random.default_rng([config.seed, 1])
    sources = [v for v in range(n) if v != sink]
    buffers: list[deque[int]] = [deque() for _ in range(n)]
    ts = config.timeslot
    ppc = config.packets_per_cell
    cap = config.buffer_capacity
    bits = 8 * config.packet_size
    frame = config.slotframe_length
    period = frame * config.reschedule_period
    dist = {}
    schedules: list[tuple[int, Schedule]] = []
    by_slot: dict[int, list[Cell]] = {}
    next_id = 0
    generated = delivered = dropped = 0

    for slot in range(config.num_slots):
        t = slot * ts
        if slot % period == 0:
            sched = planner.plan({v: len(buffers[v]) for v in sources if buffers[v]})
            by_slot = {}
            for c in sorted(sched.cells):
                by_slot.setdefault(c.slot, []).append(c)
            emit(Event(t, EventKind.SCHED.value, sink, value=float(sched.length())))
            if keep_schedules:
                schedules.append((slot, sched))
        end = t + ts
        for cell in by_slot.get(slot % frame, ()):
            buf = buffers[cell.tx]
            k = min(ppc, len(buf))
            if k == 0:
                continue
            link = (cell.tx, cell.rx)
            if link not in dist:
                dist[link] = topology.distance(*link)
            p_tx = link_tx_power(link_params, dist[link], float(fading_rng.exponential()),
                                 config.mac_rate)
            tag = cell.dump().replace(",", ":")
            emit(Event(end, EventKind.TX.value, cell.tx, cell.rx, -1, tag,
                       tx_energy(p_tx, k * bits, config.mac_rate)))
            rxbuf = buffers[cell.rx]
            for _ in range(k):
                pid = buf.popleft()
                emit(Event(end, EventKind.HOP.value, cell.tx, cell.rx, pid, tag))
                if cell.rx == sink:
                    emit(Event(end, EventKind.DELIVER.value, sink, -1, pid))
                    delivered += 1
                elif len(rxbuf) >= cap:
                    emit(Event(end, EventKind.DROP.value, cell.rx, -1, pid))
                    dropped += 1
                else:
                    rxbuf.append(pid)
        for v in sources:
            for created in generate_traffic(traffic_rngs[v], config.traffic, config.rate,
                                            v, slot, ts):
                pid = next_id
                next_id += 1
                generated += 1
                emit(Event(created, EventKind.GEN.value, v, -1, pid))
                if len(buffers[v]) >= cap:
                    emit(Event(created, EventKind.DROP.value, v, -1, pid))
                    dropped += 1
                else:
                    buffers[v].append(pid)
        if check_conservation:
            held = sum(len(b) for b in buffers)
            if generated != delivered + held + dropped:
                raise SimError(f"slot {slot}: {generated} generated but {delivered} delivered, "
                               f"{held} buffered, {dropped} dropped")
    return SimRun(collector.report(), log, schedules)


def run(config: SimConfig, topology: Topology, tree: Tree,
        link_params: LinkModelParams = LinkModelParams(),
        policy: TimerPolicy = TimerPolicy(), beam_config: BeamConfig = BeamConfig()
        ) -> MetricsReport:
    return simulate(config, topology, tree, link_params, policy, beam_config).report
