"""Command-line entry point: ``run``, ``compare``, ``scenario``, ``list-scenarios``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .antenna import AntennaError, Mode
from .config import ConfigError, RunConfig, load_config
from .scenarios import SCENARIOS, run_scenario
from .sim import MetricsReport, SimError, SimRun, simulate
from .topology import Topology, TopologyError, Tree, build_topology, build_tree, load_topology

EXIT_OK, EXIT_CONFIG, EXIT_SCENARIO = 0, 1, 2

COMPARED = (
    ("aggregate_throughput", "throughput (bit/s)"),
    ("delay_mean", "mean delay (s)"),
    ("delay_p95", "p95 delay (s)"),
    ("schedule_length_mean", "mean schedule length"),
    ("energy_total", "energy (J)"),
    ("delivered", "delivered packets"),
    ("dropped", "dropped packets"),
)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value file (see data/default.cfg)")
    p.add_argument("--seed", type=int)
    p.add_argument("--mode", choices=[m.value for m in Mode])
    p.add_argument("--out", default="results", help="output directory (default: results)")
    p.add_argument("--duration", type=float, help="simulated seconds")
    p.add_argument("--nodes", type=int)
    p.add_argument("--channels", type=int)
    p.add_argument("--beams", type=int)
    p.add_argument("--events", action="store_true", help="also write events.csv")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dirtsch", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _run_flags(sub.add_parser("run", help="simulate one mode and write a report"))
    _run_flags(sub.add_parser("compare", help="simulate both modes on identical inputs"))
    sc = sub.add_parser("scenario", help="run a pinned scenario and check its expectation")
    sc.add_argument("name")
    sub.add_parser("list-scenarios", help="list the pinned scenarios")
    return parser


def _overrides(args: argparse.Namespace) -> dict:
    return {"seed": args.seed, "mode": args.mode, "duration": args.duration,
            "nodes": args.nodes, "channels": args.channels, "beams": args.beams}


def make_network(cfg: RunConfig) -> tuple[Topology, Tree]:
    area = (cfg.area_width, cfg.area_height)
    if cfg.topology_file:
        try:
            text = Path(cfg.topology_file).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read topology file {cfg.topology_file!r}: "
                              f"{exc.strerror}") from None
        topo = load_topology(text, cfg.radius, area)
    else:
        topo = build_topology(cfg.nodes, area, cfg.radius, seed=cfg.seed,
                              placement=cfg.placement)
    return topo, build_tree(topo)


def simulate_mode(cfg: RunConfig, mode: Mode, topo: Topology, tree: Tree,
                  events: bool = False) -> SimRun:
    return simulate(cfg.sim_config(mode), topo, tree, cfg.link_params(), cfg.policy(),
                    cfg.beam_config(), record_events=events, keep_schedules=True)


def write_run(out: Path, run: SimRun, topo: Topology, tree: Tree) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(run.report.to_json())
    (out / "report.tsv").write_text(run.report.to_tsv())
    rows = ["period_start,slot,channel,tx,rx,tx_beam,rx_beam"]
    for start, sched in run.schedules:
        rows.extend(f"{start},{c.dump()}" for c in sorted(sched.cells))
    (out / "schedule.csv").write_text("\n".join(rows) + "\n")
    (out / "topology.txt").write_text(topo.dumps())
    (out / "tree.txt").write_text(tree.dumps())
    if run.log is not None:
        (out / "events.csv").write_text(run.log.dumps())


def ratio(num: float | None, den: float | None) -> float | None:
    """``num / den``, or ``None`` when either side is missing or ``den`` is 0."""
    if num is None or den is None or den == 0:
        return None
    return num / den


def comparison(directional: MetricsReport, omni: MetricsReport) -> dict:
    rows = {}
    for key, _ in COMPARED:
        d, o = getattr(directional, key), getattr(omni, key)
        rows[key] = {"directional": d, "omni": o, "ratio": ratio(d, o)}
    return rows


def _fmt(v) -> str:
    if v is None:
        return "n/a"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def summary(report: MetricsReport) -> str:
    ratio_txt = _fmt(report.delivery_ratio)
    return "\n".join([
        f"mode {report.mode}, seed {report.seed}, {report.duration:g} s simulated",
        f"packets: {report.generated} generated, {report.delivered} delivered "
        f"({ratio_txt}), {report.dropped} dropped, {report.in_buffers} still queued",
        f"throughput at sink: {_fmt(report.aggregate_throughput)} bit/s",
        f"end-to-end delay: mean {_fmt(report.delay_mean)} s, p95 {_fmt(report.delay_p95)} s, "
        f"max {_fmt(report.delay_max)} s",
        f"max uplink delay bound: {_fmt(report.max_uplink_delay)} s",
        f"schedule length: mean {_fmt(report.schedule_length_mean)}, "
        f"max {report.schedule_length_max} slots",
        f"energy: {_fmt(report.energy_total)} J over {report.transmissions} transmissions",
    ])


def cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, _overrides(args))
    topo, tree = make_network(cfg)
    run = simulate_mode(cfg, Mode(cfg.mode), topo, tree, events=args.events)
    out = Path(args.out)
    write_run(out, run, topo, tree)
    print(summary(run.report))
    print(f"wrote {out}/report.json, report.tsv, schedule.csv"
          + (", events.csv" if args.events else ""))
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, _overrides(args))
    topo, tree = make_network(cfg)
    out = Path(args.out)
    reports = {}
    for mode in (Mode.OMNI, Mode.DIRECTIONAL):
        run = simulate_mode(cfg, mode, topo, tree, events=args.events)
        write_run(out / mode.value, run, topo, tree)
        reports[mode] = run.report
    table = comparison(reports[Mode.DIRECTIONAL], reports[Mode.OMNI])
    (out / "compare.json").write_text(json.dumps(table, indent=2, sort_keys=True) + "\n")
    lines = ["metric\tdirectional\tomni\tdirectional/omni"]
    for key, _ in COMPARED:
        row = table[key]
        lines.append(f"{key}\t{_fmt(row['directional'])}\t{_fmt(row['omni'])}\t"
                     f"{_fmt(row['ratio'])}")
    (out / "compare.tsv").write_text("\n".join(lines) + "\n")
    width = max(len(label) for _, label in COMPARED)
    print(f"{'':{width}}  {'directional':>14}  {'omni':>14}  {'dir/omni':>9}")
    for key, label in COMPARED:
        row = table[key]
        print(f"{label:{width}}  {_fmt(row['directional']):>14}  {_fmt(row['omni']):>14}  "
              f"{_fmt(row['ratio']):>9}")
    print(f"wrote {out}/compare.tsv, compare.json and per-mode reports")
    return EXIT_OK


def cmd_scenario(args: argparse.Namespace) -> int:
    if args.name not in SCENARIOS:
        print(f"unknown scenario {args.name!r}; available: {', '.join(SCENARIOS)}",
              file=sys.stderr)
        return EXIT_CONFIG
    result = run_scenario(args.name)
    print(result.summary())
    return EXIT_OK if result.passed else EXIT_SCENARIO


def cmd_list(_: argparse.Namespace) -> int:
    width = max(map(len, SCENARIOS))
    for name, (_, desc) in SCENARIOS.items():
        print(f"{name:{width}}  {desc}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "scenario": cmd_scenario,
            "list-scenarios": cmd_list}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, SimError, TopologyError, AntennaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
