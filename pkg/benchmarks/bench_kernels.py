"""Time one scheduling period through each backend.

    python benchmarks/bench_kernels.py [--nodes 16 32 64] [--repeat 50]

Backends: the compiled negotiation kernel, its pure-Python twin, and the
message-passing engine they both mirror. Outputs are checked equal first.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from dirtsch import kernels
from dirtsch.antenna import BeamConfig, Mode
from dirtsch.scheduler import PeriodPlanner, schedule_period
from dirtsch.topology import build_topology, build_tree


def case(n: int, seed: int):
    side = float(np.sqrt(n) * 60.0)
    topo = build_topology(n, (side, side), 100.0, seed=seed, placement="uniform-connected")
    rng = np.random.default_rng(seed)
    loads = {v: int(rng.integers(0, 40)) for v in range(1, n)}
    return topo, build_tree(topo), loads


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, nargs="+", default=[16, 32, 64])
    ap.add_argument("--repeat", type=int, default=50)
    ap.add_argument("--channels", type=int, default=2)
    args = ap.parse_args()
    cfg = BeamConfig(4, 1.5)
    kw = dict(num_channels=args.channels, slotframe_length=64, packets_per_cell=4)
    print(f"compiled kernel available: {kernels.negotiate_compiled is not None}")
    print(f"{'nodes':>5} {'mode':>11} {'engine ms':>10} {'python ms':>10} "
          f"{'compiled ms':>12} {'speedup':>8}")
    for n in args.nodes:
        topo, tree, loads = case(n, seed=n)
        for mode in Mode:
            py = PeriodPlanner(topo, tree, mode, beam_config=cfg, negotiate=kernels.negotiate_py,
                               **kw)
            ref = schedule_period(topo, tree, loads, mode, beam_config=cfg,
                                  record_trace=False, **kw).schedule
            assert py.plan(loads).cells == ref.cells
            t_engine = timeit.timeit(
                lambda: schedule_period(topo, tree, loads, mode, beam_config=cfg,
                                        record_trace=False, **kw),
                number=max(1, args.repeat // 10)) / max(1, args.repeat // 10)
            t_py = timeit.timeit(lambda: py.raw(loads), number=args.repeat) / args.repeat
            if kernels.negotiate_compiled is not None:
                cy = PeriodPlanner(topo, tree, mode, beam_config=cfg,
                                   negotiate=kernels.negotiate_compiled, **kw)
                assert cy.plan(loads).cells == ref.cells
                t_cy = timeit.timeit(lambda: cy.raw(loads), number=args.repeat) / args.repeat
                cy_txt, sp = f"{t_cy * 1e3:12.3f}", f"{t_py / t_cy:7.1f}x"
            else:
                cy_txt, sp = f"{'n/a':>12}", f"{'n/a':>8}"
            print(f"{n:5d} {mode.value:>11} {t_engine * 1e3:10.2f} {t_py * 1e3:10.3f} "
                  f"{cy_txt} {sp}")


if __name__ == "__main__":
    main()
