"""Cells, the node-channel and node-directional matrices, and conflict checks."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .antenna import (
    BeamConfig,
    Mode,
    Transmission,
    beam_of,
    primary_conflict,
    secondary_conflict,
)
from .topology import Topology


class ScheduleError(ValueError):
    pass


class ConflictError(ScheduleError):
    def __init__(self, candidate: "Cell", conflicts: list["Conflict"]):
        self.candidate = candidate
        self.conflicts = conflicts
        desc = ", ".join(f"{c.kind.value} with {c.cell}" for c in conflicts)
        super().__init__(f"cell {candidate} rejected: {desc}")


@dataclass(frozen=True, order=True)
class Cell:
    slot: int
    channel: int
    tx: int
    rx: int
    tx_beam: int | None = None
    rx_beam: int | None = None

    def __post_init__(self) -> None:
        if self.tx == self.rx:
            raise ScheduleError(f"cell endpoints must differ, got {self.tx}->{self.rx}")
        if self.slot < 0 or self.channel < 0:
            raise ScheduleError("slot and channel offset must be non-negative")

    @property
    def link(self) -> tuple[int, int]:
        return self.tx, self.rx

    @property
    def transmission(self) -> Transmission:
        return Transmission(self.tx, self.rx, self.tx_beam, self.rx_beam)

    def endpoints(self) -> set[int]:
        return {self.tx, self.rx}

    def dump(self) -> str:
        tb = "-" if self.tx_beam is None else str(self.tx_beam)
        rb = "-" if self.rx_beam is None else str(self.rx_beam)
        return f"{self.slot},{self.channel},{self.tx},{self.rx},{tb},{rb}"


def make_cell(topology: Topology, slot: int, channel: int, tx: int, rx: int,
              mode: Mode, cfg: BeamConfig = BeamConfig()) -> Cell:
    """Cell for ``tx -> rx``; directional cells carry the facing beam pair."""
    if mode is Mode.OMNI:
        return Cell(slot, channel, tx, rx)
    tb = beam_of(topology.position(tx), topology.position(rx), cfg)
    rb = beam_of(topology.position(rx), topology.position(tx), cfg)
    return Cell(slot, channel, tx, rx, tb, rb)


class ConflictKind(str, Enum):
    PRIMARY = "primary"
    SECONDARY_OMNI = "secondary-omni"
    SECONDARY_DIRECTIONAL = "secondary-directional"


@dataclass(frozen=True)
class Conflict:
    cell: Cell
    kind: ConflictKind
    foreign: bool = False


def cell_conflict(a: Cell, b: Cell, topology: Topology, mode: Mode,
                  cfg: BeamConfig = BeamConfig()) -> ConflictKind | None:
    """Why ``a`` and ``b`` cannot coexist, or ``None`` if they can.

    Half-duplex radios forbid shared endpoints anywhere in the same slot;
    interference only matters on the same channel offset.
    """
    if a.slot != b.slot:
        return None
    if primary_conflict(a.transmission, b.transmission):
        return ConflictKind.PRIMARY
    if a.channel == b.channel and secondary_conflict(
        a.transmission, b.transmission, topology, mode, cfg
    ):
        return (ConflictKind.SECONDARY_DIRECTIONAL if mode is Mode.DIRECTIONAL
                else ConflictKind.SECONDARY_OMNI)
    return None


class Schedule:
    """A node's (or the network's) cell set plus matrices derived from it.

    ``cells`` are owned: this holder may deallocate them. Cells learnt from
    neighbour adverts sit in ``foreign`` and only constrain new allocations.
    """

    def __init__(self, topology: Topology, mode: Mode = Mode.DIRECTIONAL,
                 slotframe_length: int = 16, num_channels: int = 16,
                 beam_config: BeamConfig = BeamConfig(),
                 cells: Iterable[Cell] = ()):
        if slotframe_length < 1 or num_channels < 1:
            raise ScheduleError("slotframe length and channel count must be >= 1")
        self.topology = topology
        self.mode = Mode(mode)
        self.slotframe_length = slotframe_length
        self.num_channels = num_channels
        self.beam_config = beam_config
        self.cells: set[Cell] = set()
        self.foreign: set[Cell] = set()
        self.diagnostics: list[str] = []
        self.channel_matrix: dict[int, dict[tuple[int, int], tuple[str, Cell]]] = defaultdict(dict)
        self.directional_matrix: dict[tuple[int, int], int] = {}
        self._by_slot: dict[int, set[Cell]] = defaultdict(set)
        for c in cells:
            self.allocate(c)

    # -- queries -------------------------------------------------------

    def copy(self) -> "Schedule":
        other = Schedule(self.topology, self.mode, self.slotframe_length,
                         self.num_channels, self.beam_config)
        for c in sorted(self.cells):
            other._insert(c)
        other.foreign = set(self.foreign)
        for c in self.foreign:
            other._by_slot[c.slot].add(c)
        other.diagnostics = list(self.diagnostics)
        return other

    def __len__(self) -> int:
        return len(self.cells)

    def __contains__(self, cell: Cell) -> bool:
        return cell in self.cells

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Schedule):
            return NotImplemented
        return (self.mode == other.mode and self.cells == other.cells
                and self.foreign == other.foreign
                and self.slotframe_length == other.slotframe_length
                and self.num_channels == other.num_channels)

    def cells_in_slot(self, slot: int) -> set[Cell]:
        return set(self._by_slot.get(slot, ()))

    def length(self) -> int:
        return schedule_length(self)

    def validate_cell(self, cell: Cell) -> None:
        n = self.topology.n
        if not (0 <= cell.tx < n and 0 <= cell.rx < n):
            raise ScheduleError(f"cell {cell} names a node outside the topology")
        if cell.slot >= self.slotframe_length:
            raise ScheduleError(f"slot {cell.slot} beyond slotframe of {self.slotframe_length}")
        if cell.channel >= self.num_channels:
            raise ScheduleError(f"channel {cell.channel} beyond {self.num_channels} channels")
        if self.mode is Mode.DIRECTIONAL:
            if cell.tx_beam is None or cell.rx_beam is None:
                raise ScheduleError(f"directional cell {cell} lacks beams")
            a = self.topology.position(cell.tx)
            b = self.topology.position(cell.rx)
            if (cell.tx_beam, cell.rx_beam) != (beam_of(a, b, self.beam_config),
                                                beam_of(b, a, self.beam_config)):
                raise ScheduleError(f"cell {cell} beams do not face each other")

    def conflicts(self, candidate: Cell) -> list[Conflict]:
        self.validate_cell(candidate)
        out = []
        for other in sorted(self._by_slot.get(candidate.slot, ())):
            if other == candidate:
                continue
            kind = cell_conflict(candidate, other, self.topology, self.mode, self.beam_config)
            if kind is not None:
                out.append(Conflict(other, kind, foreign=other not in self.cells))
        return out

    # -- mutation ------------------------------------------------------

    def allocate(self, candidate: Cell) -> "Schedule":
        found = self.conflicts(candidate)
        if found:
            raise ConflictError(candidate, found)
        if candidate in self.cells:
            return self
        self._insert(candidate)
        return self

    def deallocate(self, cell: Cell) -> "Schedule":
        if cell not in self.cells:
            raise KeyError(f"cell {cell} is not allocated")
        self.cells.remove(cell)
        if cell not in self.foreign:
            self._by_slot[cell.slot].discard(cell)
        for node in (cell.tx, cell.rx):
            self.channel_matrix[node].pop((cell.slot, cell.channel), None)
            if not self.channel_matrix[node]:
                del self.channel_matrix[node]
        self._rebuild_directional()
        return self

    def merge_advert(self, advert: Iterable[Cell]) -> "Schedule":
        """Record a neighbour's cells as constraints. Idempotent."""
        for cell in sorted(set(advert)):
            if cell in self.cells or cell in self.foreign:
                continue
            clash = [o for o in self._by_slot.get(cell.slot, ())
                     if cell_conflict(cell, o, self.topology, self.mode, self.beam_config)]
            if clash:
                self.diagnostics.append(f"advert cell {cell.dump()} clashes with "
                                        + " ".join(c.dump() for c in sorted(clash)))
            self.foreign.add(cell)
            self._by_slot[cell.slot].add(cell)
        return self

    def _insert(self, cell: Cell) -> None:
        self.cells.add(cell)
        self._by_slot[cell.slot].add(cell)
        key = (cell.slot, cell.channel)
        self.channel_matrix[cell.tx][key] = ("tx", cell)
        self.channel_matrix[cell.rx][key] = ("rx", cell)
        if cell.tx_beam is not None:
            self.directional_matrix[(cell.tx, cell.rx)] = cell.tx_beam
            self.directional_matrix[(cell.rx, cell.tx)] = cell.rx_beam

    def _rebuild_directional(self) -> None:
        self.directional_matrix = derive_matrices(self.cells)[1]

    # -- output --------------------------------------------------------

    def dumps(self) -> str:
        return "".join(c.dump() + "\n" for c in sorted(self.cells))

    def violations(self) -> list[tuple[Cell, Cell, ConflictKind]]:
        """Every conflicting pair among the owned cells (should be empty)."""
        out = []
        for slot, group in sorted(self._by_slot.items()):
            owned = sorted(c for c in group if c in self.cells)
            for i, a in enumerate(owned):
                for b in owned[i + 1:]:
                    kind = cell_conflict(a, b, self.topology, self.mode, self.beam_config)
                    if kind is not None:
                        out.append((a, b, kind))
        return out


def derive_matrices(cells: Iterable[Cell]):
    """Rebuild (channel_matrix, directional_matrix) from a cell set."""
    chan: dict[int, dict[tuple[int, int], tuple[str, Cell]]] = defaultdict(dict)
    direc: dict[tuple[int, int], int] = {}
    for c in sorted(cells):
        chan[c.tx][(c.slot, c.channel)] = ("tx", c)
        chan[c.rx][(c.slot, c.channel)] = ("rx", c)
        if c.tx_beam is not None:
            direc[(c.tx, c.rx)] = c.tx_beam
            direc[(c.rx, c.tx)] = c.rx_beam
    return dict(chan), direc


def schedule_length(schedule: Schedule | Iterable[Cell]) -> int:
    cells = schedule.cells if isinstance(schedule, Schedule) else schedule
    return 1 + max((c.slot for c in cells), default=-1)


def parse_schedule_dump(text: str) -> list[Cell]:
    cells = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 6:
            raise ScheduleError(f"line {lineno}: expected 6 fields, got {raw!r}")
        slot, ch, tx, rx = (int(p) for p in parts[:4])
        tb = None if parts[4] == "-" else int(parts[4])
        rb = None if parts[5] == "-" else int(parts[5])
        cells.append(Cell(slot, ch, tx, rx, tb, rb))
    return cells
