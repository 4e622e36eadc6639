"""Command-line harness: single runs, Monte-Carlo batches, search dumps, config validation.

Exit codes: 0 success, 2 configuration error, 3 internal invariant violation.
"""
from __future__ import annotations

import argparse
import json
import logging
import random
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .config import SCHEMA_VERSION, ScenarioConfig, load_config, packaged_scenario
from .errors import ConfigError, InvariantViolation
from .selector import SelectorState, observe, plan
from .sim import POLICIES, initial_beliefs, run, spawn_traffic, world_view

log = logging.getLogger("easter")

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 2, 3
METRICS = ("travel_time", "mean_headway", "lane_changes", "plan_ms_mean", "plan_ms_p99")


@dataclass
class RunReport:
    logs: dict[str, list[str]] = field(default_factory=dict)  # policy -> metrics CSV paths, relative to the report
    summary: dict[str, dict] = field(default_factory=dict)  # policy -> metric -> value or {mean, std}
    seeds: list[int] = field(default_factory=list)

    def write(self, path: Path) -> None:
        doc = {"schema_version": SCHEMA_VERSION, **asdict(self)}
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def resolve_scenario(arg: str) -> ScenarioConfig:
    """A scenario file path, or the name of a packaged scenario (``table1``, ``scene1``...)."""
    p = Path(arg)
    if p.exists():
        return load_config(p)
    if p.suffix == ".json" and p.parent != Path("."):
        raise ConfigError(f"{arg}: no such scenario file")
    return load_config(packaged_scenario(p.stem))


def _stem(cfg: ScenarioConfig, policy: str, seed: int) -> str:
    return f"{cfg.name}_{policy}_seed{seed}"


def _run_one(cfg: ScenarioConfig, policy: str, seed: int, out: Path, timing: bool) -> tuple[str, dict]:
    mlog = run(cfg.with_seed(seed), policy, timing=timing)
    stem = out / _stem(cfg, policy, seed)
    mlog.write_csv(stem.with_suffix(".csv"))
    mlog.write_summary(stem.with_suffix(".json"))
    return str(stem.with_suffix(".csv")), mlog.summary()


# -- run ----------------------------------------------------------------------

def cmd_run(args) -> int:
    cfg = resolve_scenario(args.scenario)
    seed = cfg.seed if args.seed is None else args.seed
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    policies = POLICIES if args.policy == "all" else (args.policy,)
    report = RunReport(seeds=[seed])
    for pol in policies:
        path, summ = _run_one(cfg, pol, seed, out, args.timing == "on")
        report.logs[pol] = [Path(path).relative_to(out).as_posix()]
        report.summary[pol] = {k: summ[k] for k in ("status",) + METRICS}
        tt = summ["travel_time"]
        print(f"{pol:9s} travel_time={'timeout' if tt is None else f'{tt:.2f}s'} "
              f"headway={summ['mean_headway']:.1f}m lane_changes={summ['lane_changes']} "
              f"plan_ms mean={summ['plan_ms_mean']:.3f} p99={summ['plan_ms_p99']:.3f}")
    report.write(out / f"{cfg.name}_seed{seed}_report.json")
    return EXIT_OK


# -- montecarlo ---------------------------------------------------------------

def _mean_std(values: Sequence[float]) -> dict:
    if not values:
        return {"mean": None, "std": None, "n": 0}
    return {"mean": statistics.fmean(values), "std": statistics.pstdev(values), "n": len(values)}


def aggregate(summaries: dict[str, list[dict]]) -> dict[str, dict]:
    """Per policy and metric: mean and population standard deviation.

    Runs that timed out have no travel time and are left out of that metric only.
    """
    table = {}
    for pol, runs in summaries.items():
        row = {m: _mean_std([s[m] for s in runs if s[m] is not None]) for m in METRICS}
        row["timeouts"] = sum(1 for s in runs if not s["completed"])
        table[pol] = row
    return table


def cmd_montecarlo(args) -> int:
    cfg = resolve_scenario(args.scenario)
    if args.runs < 1:
        raise ConfigError("--runs must be >= 1")
    if args.jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    out = Path(args.out)
    (out / "runs").mkdir(parents=True, exist_ok=True)
    base = cfg.seed if args.seed is None else args.seed
    seeds = list(range(base, base + args.runs))
    policies = POLICIES if args.policy == "all" else (args.policy,)
    tasks = [(cfg, pol, s, out / "runs", args.timing == "on") for s in seeds for pol in policies]

    if args.jobs == 1:
        results = [_run_one(*t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, *zip(*tasks)))

    report = RunReport(seeds=seeds)
    summaries: dict[str, list[dict]] = {p: [] for p in policies}
    for (_, pol, _, _, _), (path, summ) in zip(tasks, results):
        report.logs.setdefault(pol, []).append(Path(path).relative_to(out).as_posix())
        summaries[pol].append(summ)
    report.summary = aggregate(summaries)
    report.write(out / "aggregate.json")
    _write_table(out / "aggregate.csv", report.summary)

    print(f"{'policy':9s} " + " ".join(f"{m:>22s}" for m in METRICS))
    for pol, row in report.summary.items():
        cells = []
        for m in METRICS:
            ms = row[m]
            cells.append(f"{'n/a':>22s}" if ms["mean"] is None else f"{ms['mean']:>13.3f} ±{ms['std']:>7.3f}")
        print(f"{pol:9s} " + " ".join(cells))
    return EXIT_OK


def _write_table(path: Path, table: dict) -> None:
    lines = ["policy,metric,mean,std,n"]
    for pol, row in table.items():
        for m in METRICS:
            ms = row[m]
            lines.append(f"{pol},{m},{ms['mean']},{ms['std']},{ms['n']}")
    path.write_text("\n".join(lines) + "\n")


# -- search-dump --------------------------------------------------------------

def search_dump(cfg: ScenarioConfig, seed: Optional[int] = None) -> dict:
    """Project the initial snapshot, search once, and describe everything the search saw."""
    cfg = cfg if seed is None else cfg.with_seed(seed)
    state = spawn_traffic(cfg, random.Random(cfg.seed))
    world = world_view(state, cfg)
    sel = observe(world, SelectorState(beliefs=initial_beliefs(cfg)), cfg.planner.history_len)
    scene, lattice, cost_model, path = plan(world, sel, cfg.weights, cfg.planner, cfg.ego.desired_speed)

    nodes = []
    for (node, k), rec in sorted(path.records.items(), key=lambda kv: (kv[0][0].column, kv[0][0].lane, kv[0][1])):
        x, y = lattice.position(node)
        nodes.append({
            "column": node.column, "lane": node.lane, "lane_changes": k, "x": x, "y": y,
            "f": rec.f, "g": rec.g, "h": rec.h, "t_n": rec.t_n,
            "parent": None if rec.parent is None else
            {"column": rec.parent[0].column, "lane": rec.parent[0].lane, "lane_changes": rec.parent[1]},
            "breakdown": rec.breakdown._asdict(),
        })

    traffic = cost_model.traffic
    times = sorted({rec.t_n for rec in path.records.values()})
    predictions = []
    for t in times:
        vehicles = []
        for lane, members in enumerate(traffic.at(t)):
            for x, y, v, ent in members:
                vehicles.append({"x": x, "y": y, "v": v, "entropy": ent, "lane": lane})
        predictions.append({"t": t, "vehicles": vehicles})

    return {
        "schema_version": SCHEMA_VERSION,
        "scenario": cfg.name,
        "seed": cfg.seed,
        "lattice": {"n_lanes": lattice.n_lanes, "n_columns": lattice.n_columns, "dx": lattice.dx,
                    "lane_width": lattice.lane_width,
                    "start": {"column": lattice.start.column, "lane": lattice.start.lane}},
        "ego": {"lane": scene.ego_lane_index, "speed": scene.ego_speed, "offset_delta": scene.ego_offset_delta},
        "lambda_goal": cost_model.lambda_goal,
        "nodes": nodes,
        "predictions": predictions,
        "path": {
            "nodes": [{"column": n.column, "lane": n.lane} for n in path.nodes],
            "total_cost": path.total_cost,
            "breakdowns": [b._asdict() for b in path.breakdowns],
            "times": list(path.times),
            "goal": {"column": path.goal.column, "lane": path.goal.lane},
            "expansions": path.expansions,
        },
    }


def cmd_search_dump(args) -> int:
    cfg = resolve_scenario(args.scenario)
    doc = search_dump(cfg, args.seed)
    out = Path(args.out)
    if out.suffix != ".json":
        out.mkdir(parents=True, exist_ok=True)
        out = out / f"{cfg.name}_search.json"
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(doc, indent=2) + "\n")
    lanes = " -> ".join(str(n["lane"]) for n in doc["path"]["nodes"])
    print(f"path lanes: {lanes}  cost={doc['path']['total_cost']:.4f}  written to {out}")
    return EXIT_OK


# -- validate -----------------------------------------------------------------

def cmd_validate(args) -> int:
    cfg = resolve_scenario(args.scenario)
    kind = "placed vehicles" if cfg.vehicles is not None else "random traffic"
    print(f"{cfg.name}: ok ({cfg.n_lanes} lanes, {kind}, seed {cfg.seed})")
    return EXIT_OK


# -- entry point --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="easter", description="Lane selection by time-extended A* search.")
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, policy=True, out="out"):
        p.add_argument("--scenario", required=True, help="scenario JSON path or packaged scenario name")
        p.add_argument("--seed", type=int, default=None, help="rng seed (default: the scenario's)")
        if policy:
            p.add_argument("--policy", choices=POLICIES + ("all",), default="all")
            p.add_argument("--timing", choices=("on", "off"), default="on",
                           help="record wall-clock plan times; 'off' writes 0 so outputs are byte-identical")
        if out:
            p.add_argument("--out", default=out, help="output directory")

    p = sub.add_parser("run", help="simulate one scenario")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("montecarlo", help="paired-seed batch over all policies")
    common(p)
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("search-dump", help="search the initial snapshot and dump it as JSON")
    common(p, policy=False)
    p.set_defaults(func=cmd_search_dump)

    p = sub.add_parser("validate", help="check a scenario file")
    common(p, policy=False, out=None)
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
