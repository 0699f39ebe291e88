from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from dirtsch.antenna import BeamConfig, Mode
from dirtsch.fixtures import THREE_TX_LINKS, tree16
from dirtsch.schedule import (
    Cell,
    ConflictError,
    ConflictKind,
    Schedule,
    ScheduleError,
    cell_conflict,
    derive_matrices,
    make_cell,
    parse_schedule_dump,
    schedule_length,
)
from dirtsch.topology import build_topology

TOPO = tree16()


def cell(mode, slot, ch, tx, rx, topo=TOPO):
    return make_cell(topo, slot, ch, tx, rx, mode)


def snapshot(s: Schedule):
    return (set(s.cells), {k: dict(v) for k, v in s.channel_matrix.items()},
            dict(s.directional_matrix))


def test_empty_schedule_has_no_conflicts():
    s = Schedule(TOPO, Mode.DIRECTIONAL, num_channels=1)
    assert s.conflicts(cell(Mode.DIRECTIONAL, 0, 0, 2, 0)) == []
    assert schedule_length(s) == 0


def test_omni_secondary_conflict_reported():
    s = Schedule(TOPO, Mode.OMNI, num_channels=1)
    first = cell(Mode.OMNI, 0, 0, 2, 0)
    s.allocate(first)
    found = s.conflicts(cell(Mode.OMNI, 0, 0, 4, 1))
    assert [(c.cell, c.kind) for c in found] == [(first, ConflictKind.SECONDARY_OMNI)]
    with pytest.raises(ConflictError) as info:
        s.allocate(cell(Mode.OMNI, 0, 0, 4, 1))
    assert info.value.conflicts == found


def test_directional_three_links_coexist():
    s = Schedule(TOPO, Mode.DIRECTIONAL, num_channels=1)
    cells = [cell(Mode.DIRECTIONAL, 0, 0, a, b) for a, b in THREE_TX_LINKS]
    for c in cells:
        assert s.conflicts(c) == []
        s.allocate(c)
    assert s.length() == 1
    assert {(c.tx_beam, c.rx_beam) for c in cells} == {(1, 3), (2, 4)}


def test_three_links_omni_minimal_coloring():
    cells = [(a, b) for a, b in THREE_TX_LINKS]

    def legal(assign):
        placed = [cell(Mode.OMNI, s, 0, a, b) for (a, b), s in zip(cells, assign)]
        return all(cell_conflict(x, y, TOPO, Mode.OMNI) is None
                   for x, y in itertools.combinations(placed, 2))

    best = min(max(a) + 1 for a in itertools.product(range(3), repeat=3) if legal(a))
    assert best == 3
    s = Schedule(TOPO, Mode.OMNI, num_channels=1)
    for i, (a, b) in enumerate(cells):
        s.allocate(cell(Mode.OMNI, i, 0, a, b))
    assert schedule_length(s) == best


def test_candidate_outside_topology():
    s = Schedule(TOPO, Mode.OMNI)
    with pytest.raises(ScheduleError):
        s.conflicts(Cell(0, 0, 2, 99))
    with pytest.raises(ScheduleError):
        s.conflicts(Cell(16, 0, 2, 0))  # beyond the 16-slot frame
    with pytest.raises(ScheduleError):
        Schedule(TOPO, Mode.OMNI, num_channels=2).conflicts(Cell(0, 2, 2, 0))


def test_directional_cell_needs_facing_beams():
    s = Schedule(TOPO, Mode.DIRECTIONAL)
    with pytest.raises(ScheduleError):
        s.allocate(Cell(0, 0, 2, 0))
    with pytest.raises(ScheduleError):
        s.allocate(Cell(0, 0, 2, 0, 2, 4))


def test_cell_invariants():
    with pytest.raises(ScheduleError):
        Cell(0, 0, 3, 3)
    with pytest.raises(ScheduleError):
        Cell(-1, 0, 1, 2)


def test_allocate_deallocate_round_trip():
    s = Schedule(TOPO, Mode.DIRECTIONAL, num_channels=2)
    s.allocate(cell(Mode.DIRECTIONAL, 0, 0, 2, 0))
    before = snapshot(s)
    extra = cell(Mode.DIRECTIONAL, 1, 1, 4, 1)
    s.allocate(extra)
    s.deallocate(extra)
    assert snapshot(s) == before


def test_deallocate_absent_is_not_found():
    s = Schedule(TOPO, Mode.OMNI)
    with pytest.raises(KeyError):
        s.deallocate(Cell(0, 0, 2, 0))


def test_saturated_endpoints_reject():
    s = Schedule(TOPO, Mode.DIRECTIONAL, slotframe_length=3, num_channels=2)
    for slot in range(3):
        s.allocate(cell(Mode.DIRECTIONAL, slot, 0, 2, 0))
    for slot, ch in itertools.product(range(3), range(2)):
        # any cell touching n0 or n2 in an occupied slot is a primary conflict,
        # whatever channel it picks
        kinds = {c.kind for c in s.conflicts(cell(Mode.DIRECTIONAL, slot, ch, 1, 0))}
        assert kinds == {ConflictKind.PRIMARY}
        with pytest.raises(ConflictError):
            s.allocate(cell(Mode.DIRECTIONAL, slot, ch, 7, 2))


def random_legal_set(topo, mode, seed, frame=4, channels=2, tries=200):
    rng = random.Random(seed)
    s = Schedule(topo, mode, frame, channels)
    nodes = list(topo.nodes)
    for _ in range(tries):
        a = rng.choice(nodes)
        nb = sorted(topo.neighbors(a))
        if not nb:
            continue
        c = make_cell(topo, rng.randrange(frame), rng.randrange(channels), a, rng.choice(nb), mode)
        if not s.conflicts(c):
            s.allocate(c)
    return s


@pytest.mark.parametrize("mode", list(Mode))
def test_insertion_order_irrelevant(mode):
    topo = build_topology(14, (300, 300), 110.0, seed=2, placement="uniform-connected")
    base = random_legal_set(topo, mode, 1)
    cells = sorted(base.cells)
    for seed in range(20):
        random.Random(seed).shuffle(cells)
        again = Schedule(topo, mode, 4, 2, cells=cells)
        assert again == base
        assert snapshot(again) == snapshot(base)


@pytest.mark.parametrize("mode", list(Mode))
def test_fuzz_matrices_match_cells(mode):
    topo = build_topology(12, (250, 250), 100.0, seed=8, placement="uniform-connected")
    rng = random.Random(4)
    s = Schedule(topo, mode, 6, 3)
    for step in range(400):
        if s.cells and rng.random() < 0.4:
            s.deallocate(rng.choice(sorted(s.cells)))
        else:
            a = rng.randrange(topo.n)
            nb = sorted(topo.neighbors(a))
            c = make_cell(topo, rng.randrange(6), rng.randrange(3), a, rng.choice(nb), mode)
            if not s.conflicts(c):
                s.allocate(c)
        chan, direc = derive_matrices(s.cells)
        assert {k: v for k, v in s.channel_matrix.items() if v} == chan
        assert s.directional_matrix == direc
        assert s.violations() == []
        for node, entries in chan.items():
            slots = [k[0] for k in entries]
            assert len(slots) == len(set(slots)), "node active twice in one slot"


def test_directional_matrix_entries_are_geometric():
    s = random_legal_set(TOPO, Mode.DIRECTIONAL, 3)
    for (k, j), beam in s.directional_matrix.items():
        assert TOPO.in_range(k, j)
        assert beam == make_cell(TOPO, 0, 0, k, j, Mode.DIRECTIONAL).tx_beam


def test_merge_advert_semantics():
    s = Schedule(TOPO, Mode.OMNI, num_channels=1)
    advert = {cell(Mode.OMNI, 0, 0, 2, 0)}
    s.merge_advert(set())
    assert len(s) == 0 and not s.foreign
    s.merge_advert(advert)
    once = (set(s.cells), set(s.foreign), list(s.diagnostics))
    s.merge_advert(advert)
    assert (set(s.cells), set(s.foreign), list(s.diagnostics)) == once
    assert s.cells == set()
    found = s.conflicts(cell(Mode.OMNI, 0, 0, 4, 1))
    assert found and all(c.foreign for c in found)
    with pytest.raises(KeyError):
        s.deallocate(next(iter(advert)))


def test_conflicting_advert_becomes_diagnostic():
    s = Schedule(TOPO, Mode.OMNI, num_channels=1)
    s.allocate(cell(Mode.OMNI, 0, 0, 2, 0))
    s.merge_advert({cell(Mode.OMNI, 0, 0, 4, 1)})
    assert len(s.diagnostics) == 1 and "clashes" in s.diagnostics[0]


def test_dump_round_trip():
    s = random_legal_set(TOPO, Mode.DIRECTIONAL, 5)
    assert set(parse_schedule_dump(s.dumps())) == s.cells
    o = random_legal_set(TOPO, Mode.OMNI, 5)
    assert "-,-" in o.dumps()
    assert set(parse_schedule_dump(o.dumps())) == o.cells
    with pytest.raises(ScheduleError):
        parse_schedule_dump("0,0,1\n")


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([4, 6, 8]), st.floats(1.0, 2.0))
def test_omni_legal_implies_directional_legal(seed, beams, factor):
    topo = build_topology(10, (200, 200), 90.0, seed=seed)
    cfg = BeamConfig(beams, factor)
    omni = Schedule(topo, Mode.OMNI, 3, 1, cfg)
    rng = random.Random(seed)
    for _ in range(60):
        a = rng.randrange(topo.n)
        nb = sorted(topo.neighbors(a))
        if nb:
            c = Cell(rng.randrange(3), 0, a, rng.choice(nb))
            if not omni.conflicts(c):
                omni.allocate(c)
    directional = Schedule(topo, Mode.DIRECTIONAL, 3, 1, cfg)
    for c in sorted(omni.cells):
        directional.allocate(make_cell(topo, c.slot, c.channel, c.tx, c.rx,
                                       Mode.DIRECTIONAL, cfg))
    assert directional.violations() == []
