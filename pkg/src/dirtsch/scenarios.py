"""Built-in pinned scenarios and their expected outcomes."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from typing import Callable

from .antenna import Mode
from .fixtures import (
    FOUR_NODE_LOADS,
    FOUR_NODE_SLOTFRAME,
    THREE_TX_LINKS,
    THREE_TX_LOADS,
    TREE16_PARENTS,
    WALKTHROUGH_LOADS,
    four_node,
    tree16,
)
from .schedule import Schedule
from .scheduler import schedule_period
from .topology import build_tree, tree_from_parents

WALKTHROUGH_GOLDEN = "data/walkthrough_trace.txt"


@dataclass
class ScenarioResult:
    name: str
    checks: list[tuple[str, bool, str]] = field(default_factory=list)
    schedules: dict[str, Schedule] = field(default_factory=dict)
    trace: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(ok for _, ok, _ in self.checks)

    def check(self, label: str, ok: bool, detail: str = "") -> None:
        self.checks.append((label, bool(ok), detail))

    def summary(self) -> str:
        lines = [f"scenario {self.name}: {'PASS' if self.passed else 'FAIL'}"]
        for label, ok, detail in self.checks:
            lines.append(f"  [{'ok' if ok else 'FAIL'}] {label}" + (f" ({detail})" if detail else ""))
        return "\n".join(lines)


def _links_in_slots(sched: Schedule) -> dict[tuple[int, int], list[int]]:
    out: dict[tuple[int, int], list[int]] = {}
    for c in sorted(sched.cells):
        out.setdefault(c.link, []).append(c.slot)
    return out


def _clean(res: ScenarioResult, sched: Schedule, mode: Mode) -> None:
    bad = sched.violations()
    res.check(f"{mode.value} schedule has no conflicts", not bad, f"{len(bad)} violation(s)")


def _three_tx(mode: Mode, expected_len: int) -> ScenarioResult:
    res = ScenarioResult(f"{'dir' if mode is Mode.DIRECTIONAL else 'omni'}-3tx")
    topo = tree16()
    tree = tree_from_parents(topo, TREE16_PARENTS)
    sched = schedule_period(topo, tree, THREE_TX_LOADS, mode, num_channels=1,
                            record_trace=False).schedule
    res.schedules[mode.value] = sched
    res.check(f"schedule length {expected_len}", sched.length() == expected_len,
              f"got {sched.length()}")
    res.check("all three links scheduled",
              sorted(c.link for c in sched.cells) == sorted(THREE_TX_LINKS))
    if mode is Mode.DIRECTIONAL:
        pairs = {c.link: (c.tx_beam, c.rx_beam) for c in sched.cells}
        want = {(2, 0): (1, 3), (4, 1): (1, 3), (10, 3): (2, 4)}
        res.check("beam pairs (1,3), (1,3), (2,4)", pairs == want, str(pairs))
    _clean(res, sched, mode)
    return res


def scenario_dir_3tx() -> ScenarioResult:
    return _three_tx(Mode.DIRECTIONAL, 1)


def scenario_omni_3tx() -> ScenarioResult:
    return _three_tx(Mode.OMNI, 3)


def scenario_four_node() -> ScenarioResult:
    res = ScenarioResult("four-node")
    topo, tree = four_node()
    ab, cd = (1, 0), (3, 2)
    full = list(range(FOUR_NODE_SLOTFRAME))
    for mode in Mode:
        sched = schedule_period(topo, tree, FOUR_NODE_LOADS, mode, num_channels=1,
                                slotframe_length=FOUR_NODE_SLOTFRAME,
                                record_trace=False).schedule
        res.schedules[mode.value] = sched
        slots = _links_in_slots(sched)
        if mode is Mode.DIRECTIONAL:
            res.check("directional: (A,B) holds slots 0-3", slots.get(ab) == full,
                      str(slots.get(ab)))
            res.check("directional: (C,D) holds the same slots", slots.get(cd) == full,
                      str(slots.get(cd)))
        else:
            res.check("omni: (A,B) holds slots 0-3", slots.get(ab) == full, str(slots.get(ab)))
            res.check("omni: (C,D) waits for the next cycle", cd not in slots,
                      str(slots.get(cd, [])))
        _clean(res, sched, mode)
    return res


def golden_walkthrough_trace() -> list[str]:
    text = resources.files("dirtsch").joinpath(WALKTHROUGH_GOLDEN).read_text()
    return [ln for ln in text.splitlines() if ln and not ln.startswith("#")]


def walkthrough_trace() -> tuple[list[str], Schedule]:
    topo = tree16()
    tree = tree_from_parents(topo, TREE16_PARENTS)
    period = schedule_period(topo, tree, WALKTHROUGH_LOADS, Mode.DIRECTIONAL, num_channels=1)
    return period.trace, period.schedule


def scenario_walkthrough() -> ScenarioResult:
    res = ScenarioResult("walkthrough")
    trace, sched = walkthrough_trace()
    res.trace = trace
    res.schedules[Mode.DIRECTIONAL.value] = sched
    golden = golden_walkthrough_trace()
    first = next((i for i, (a, b) in enumerate(zip(trace, golden)) if a != b), None)
    if first is None and len(trace) != len(golden):
        first = min(len(trace), len(golden))
    res.check("trace equals the golden transcript", first is None,
              "" if first is None else f"first difference at line {first + 1}")
    _clean(res, sched, Mode.DIRECTIONAL)
    return res


def scenario_tree16() -> ScenarioResult:
    res = ScenarioResult("tree16")
    topo = tree16()
    tree = build_tree(topo)
    res.check("shortest-hop tree equals the example tree", dict(tree.parent) == TREE16_PARENTS)
    lengths = {}
    for mode in Mode:
        sched = schedule_period(topo, tree, WALKTHROUGH_LOADS, mode, num_channels=1,
                                record_trace=False).schedule
        res.schedules[mode.value] = sched
        lengths[mode] = sched.length()
        _clean(res, sched, mode)
    res.check("directional length <= omni length",
              lengths[Mode.DIRECTIONAL] <= lengths[Mode.OMNI],
              f"{lengths[Mode.DIRECTIONAL]} vs {lengths[Mode.OMNI]}")
    return res


SCENARIOS: dict[str, tuple[Callable[[], ScenarioResult], str]] = {
    "four-node": (scenario_four_node,
                  "A->B and C->D on one channel; only directional runs both at once"),
    "omni-3tx": (scenario_omni_3tx, "n2->n0, n4->n1, n10->n3 with omni antennas: 3 slots"),
    "dir-3tx": (scenario_dir_3tx, "the same three links with 4 beams: 1 slot"),
    "walkthrough": (scenario_walkthrough, "level-by-level negotiation trace on the 16-node tree"),
    "tree16": (scenario_tree16, "16-node example tree, both modes, conflict-free"),
}


def run_scenario(name: str) -> ScenarioResult:
    try:
        fn, _ = SCENARIOS[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; available: {', '.join(SCENARIOS)}") from None
    return fn()
