from __future__ import annotations

import math

import pytest
from hypothesis import given, settings, strategies as st

from dirtsch.antenna import (
    AntennaError,
    BeamConfig,
    Mode,
    Transmission,
    beam_of,
    covers,
    directional_conflict,
    link_beams,
    opposite_beam,
)
from dirtsch.fixtures import tree16
from dirtsch.topology import Topology

coord = st.floats(-1000, 1000, allow_nan=False)


def atan2_beam(a, b, m):
    ang = math.atan2(b[1] - a[1], b[0] - a[0])
    if ang < 0:
        ang += 2 * math.pi
    k = math.floor(ang / (2 * math.pi / m))
    return min(k, m - 1) + 1


def test_east_is_beam_one_north_is_beam_two():
    assert beam_of((0, 0), (5, 0)) == 1
    assert beam_of((0, 0), (0, 5)) == 2
    assert beam_of((0, 0), (-5, 0)) == 3
    assert beam_of((0, 0), (0, -5)) == 4


def test_identical_positions_raise():
    with pytest.raises(AntennaError):
        beam_of((1, 1), (1, 1))


def test_random_pairs_match_atan2_oracle():
    import numpy as np
    rng = np.random.default_rng(0)
    for m in (4, 6, 8):
        cfg = BeamConfig(m)
        for _ in range(1000):
            a, b = map(tuple, rng.uniform(-500, 500, (2, 2)))
            assert beam_of(a, b, cfg) == atan2_beam(a, b, m)


@pytest.mark.parametrize("beam,opp", [(1, 3), (2, 4), (3, 1), (4, 2)])
def test_opposite_beam(beam, opp):
    assert opposite_beam(beam) == opp


def test_opposite_is_involution_and_odd_rejected():
    for m in (2, 4, 6, 8, 12):
        cfg = BeamConfig(m)
        for b in range(1, m + 1):
            assert opposite_beam(opposite_beam(b, cfg), cfg) == b
    with pytest.raises(AntennaError):
        opposite_beam(1, BeamConfig(5))
    with pytest.raises(AntennaError):
        opposite_beam(5, BeamConfig(4))


def test_covers_basic():
    assert not covers((0, 0), 1, (20, 1), 10.0)
    assert covers((0, 0), 1, (5, 1), 10.0)
    assert not covers((0, 0), 2, (5, 1), 10.0)
    assert covers((0, 0), None, (-5, -1), 10.0)


def test_ring_of_eight_two_per_beam():
    ring = [(10 * math.cos(math.radians(a)), 10 * math.sin(math.radians(a)))
            for a in range(0, 360, 45)]
    for beam in range(1, 5):
        assert sum(covers((0, 0), beam, p, 11.0) for p in ring) == 2


@settings(max_examples=300, deadline=None)
@given(coord, coord, coord, coord, st.sampled_from([2, 4, 6, 8]))
def test_link_beam_pair_is_opposite(x1, y1, x2, y2, m):
    a, b = (x1, y1), (x2, y2)
    if math.dist(a, b) < 1e-6:
        return
    cfg = BeamConfig(m)
    ab, ba = beam_of(a, b, cfg), beam_of(b, a, cfg)
    # exact sector boundaries may round to the neighbouring sector
    width = 360.0 / m
    az = math.degrees(math.atan2(y2 - y1, x2 - x1)) % 360.0
    if min(az % width, width - az % width) < 1e-7:
        return
    assert ab == opposite_beam(ba, cfg)


def square():
    # A(0,0) -> B(50,0) points east; C(50,50) -> D(0,50) points west
    return Topology(((0.0, 0.0), (50.0, 0.0), (50.0, 50.0), (0.0, 50.0)), 100.0, (100.0, 100.0))


def tx(topo, a, b, cfg=BeamConfig()):
    return Transmission(a, b, *link_beams(topo, a, b, cfg))


def test_beams_pointing_away_do_not_conflict():
    topo = square()
    assert not directional_conflict(tx(topo, 0, 1), tx(topo, 2, 3), topo)
    assert directional_conflict(tx(topo, 0, 1), tx(topo, 2, 3), topo, mode=Mode.OMNI)


def test_shared_endpoint_conflicts():
    topo = square()
    assert directional_conflict(tx(topo, 0, 1), tx(topo, 1, 2), topo)


def test_three_links_omni_vs_directional():
    topo = tree16()
    a, b = tx(topo, 4, 1), tx(topo, 10, 3)
    c = tx(topo, 2, 0)
    assert (a.tx_beam, a.rx_beam) == (1, 3)
    assert (b.tx_beam, b.rx_beam) == (2, 4)
    assert (c.tx_beam, c.rx_beam) == (1, 3)
    for x, y in [(a, b), (a, c), (b, c)]:
        assert directional_conflict(x, y, topo, mode=Mode.OMNI)
        assert not directional_conflict(x, y, topo)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 200), st.floats(0, 200)), min_size=4, max_size=4,
                unique=True),
       st.sampled_from([4, 6, 8]), st.floats(1.0, 2.5))
def test_conflict_symmetric_and_dominated_by_omni(pts, m, factor):
    if min(math.dist(p, q) for i, p in enumerate(pts) for q in pts[i + 1:]) < 1e-3:
        return
    topo = Topology(tuple(pts), 120.0, (200.0, 200.0))
    cfg = BeamConfig(m, factor)
    a, b = tx(topo, 0, 1, cfg), tx(topo, 2, 3, cfg)
    d_ab = directional_conflict(a, b, topo, cfg)
    assert d_ab == directional_conflict(b, a, topo, cfg)
    o_ab = directional_conflict(a, b, topo, cfg, Mode.OMNI)
    assert o_ab == directional_conflict(b, a, topo, cfg, Mode.OMNI)
    assert (not d_ab) or o_ab


def test_interference_factor_widens_reach():
    topo = Topology(((0.0, 0.0), (10.0, 0.0), (25.0, 0.0), (35.0, 0.0)), 12.0, (40.0, 1.0))
    a, b = Transmission(0, 1), Transmission(3, 2)
    assert not directional_conflict(a, b, topo, BeamConfig(4, 1.0), Mode.OMNI)
    assert directional_conflict(a, b, topo, BeamConfig(4, 2.2), Mode.OMNI)  # 25 m <= 26.4 m


def test_beam_config_validation():
    with pytest.raises(AntennaError):
        BeamConfig(1)
    with pytest.raises(AntennaError):
        BeamConfig(4, 0.5)
    assert BeamConfig(8).beam_width == 45.0
