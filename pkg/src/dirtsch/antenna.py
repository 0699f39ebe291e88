"""Switched-beam sector geometry and the pairwise interference predicate.

Azimuth is measured counterclockwise from east. Beam ``k`` (1-indexed)
covers the half-open sector ``[(k-1)*width, k*width)``, so with four beams
beam 1 faces north-east and the due-north direction belongs to beam 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

from .topology import Position, Topology


class AntennaError(ValueError):
    pass


class Mode(str, Enum):
    OMNI = "omni"
    DIRECTIONAL = "directional"


@dataclass(frozen=True)
class BeamConfig:
    beams: int = 4
    interference_factor: float = 1.0

    def __post_init__(self) -> None:
        if self.beams < 2:
            raise AntennaError(f"need at least 2 beams, got {self.beams}")
        if self.interference_factor < 1.0:
            raise AntennaError("interference range cannot be shorter than the radius")

    @property
    def beam_width(self) -> float:
        return 360.0 / self.beams

    def require_even(self) -> None:
        if self.beams % 2:
            raise AntennaError(f"opposite beam undefined for odd beam count {self.beams}")


def azimuth(a: Position, b: Position) -> float:
    if a == b:
        raise AntennaError(f"direction undefined between identical positions {a}")
    return math.degrees(math.atan2(b[1] - a[1], b[0] - a[0])) % 360.0


def beam_of(a: Position, b: Position, cfg: BeamConfig = BeamConfig()) -> int:
    # the modulo folds an azimuth that rounds up to exactly 360.0 back into beam 1
    return int(azimuth(a, b) // cfg.beam_width) % cfg.beams + 1


def opposite_beam(beam: int, cfg: BeamConfig = BeamConfig()) -> int:
    cfg.require_even()
    if not 1 <= beam <= cfg.beams:
        raise AntennaError(f"beam {beam} outside 1..{cfg.beams}")
    return (beam - 1 + cfg.beams // 2) % cfg.beams + 1


def covers(observer: Position, beam: int | None, target: Position, radius: float,
           cfg: BeamConfig = BeamConfig()) -> bool:
    """True iff ``target`` is within ``radius`` and inside ``beam``.

    ``beam=None`` means an omni-directional radiator.
    """
    if observer == target or math.dist(observer, target) > radius:
        return False
    return beam is None or beam_of(observer, target, cfg) == beam


class Transmission(NamedTuple):
    tx: int
    rx: int
    tx_beam: int | None = None
    rx_beam: int | None = None


def link_beams(topology: Topology, tx: int, rx: int,
               cfg: BeamConfig = BeamConfig()) -> tuple[int, int]:
    """Beam pair ``(tx_beam, rx_beam)`` with each end facing the other."""
    a, b = topology.position(tx), topology.position(rx)
    return beam_of(a, b, cfg), beam_of(b, a, cfg)


def interferes(topology: Topology, a: Transmission, victim_rx: int, mode: Mode,
               cfg: BeamConfig = BeamConfig()) -> bool:
    """Does the sender of ``a`` reach ``victim_rx`` with its active radiation?"""
    beam = a.tx_beam if mode is Mode.DIRECTIONAL else None
    if mode is Mode.DIRECTIONAL and beam is None:
        beam = beam_of(topology.position(a.tx), topology.position(a.rx), cfg)
    return covers(
        topology.position(a.tx), beam, topology.position(victim_rx),
        topology.radius * cfg.interference_factor, cfg,
    )


def primary_conflict(a: Transmission, b: Transmission) -> bool:
    return bool({a.tx, a.rx} & {b.tx, b.rx})


def secondary_conflict(a: Transmission, b: Transmission, topology: Topology,
                       mode: Mode, cfg: BeamConfig = BeamConfig()) -> bool:
    return (interferes(topology, a, b.rx, mode, cfg)
            or interferes(topology, b, a.rx, mode, cfg))


def directional_conflict(a: Transmission, b: Transmission, topology: Topology,
                         cfg: BeamConfig = BeamConfig(),
                         mode: Mode = Mode.DIRECTIONAL) -> bool:
    """Can ``a`` and ``b`` not share a (slot, channel)?

    Shared endpoints always clash (half-duplex radio). Otherwise they clash
    when either sender's radiation reaches the other's receiver: the active
    sector in directional mode, the whole disc in omni mode.
    """
    return primary_conflict(a, b) or secondary_conflict(a, b, topology, mode, cfg)
