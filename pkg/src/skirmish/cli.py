"""Command-line driver: random-policy benchmarks, replay dumps, rendering."""

from __future__ import annotations

import argparse
import json
import resource
import statistics
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import engine
from .env import SkirmishEnv
from .errors import SkirmishError
from .render import render_frames
from .scenario import builtin_scenario_names


@dataclass
class BenchReport:
    scenario: str
    episodes: int
    seed: int
    mean_step_seconds: float
    median_step_seconds: float
    p95_step_seconds: float
    peak_rss_mb: float
    mean_return: float
    win_rate: float

    def table_row(self) -> str:
        return (f"{self.scenario:<14} {self.episodes:>4} {self.mean_step_seconds:>10.5f} "
                f"{self.median_step_seconds:>10.5f} {self.p95_step_seconds:>10.5f} "
                f"{self.mean_return:>8.3f} {self.win_rate:>6.2f} {self.peak_rss_mb:>8.1f}")


def _peak_rss_mb() -> float:
    # ru_maxrss is kilobytes on Linux.
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0


def run_episode(scenario: str, seed: int, collect_steps: bool = True):
    """One random-policy episode; timings cover only environment calls."""
    env = SkirmishEnv(scenario, seed=seed)
    env.reset(seed)
    rng = np.random.default_rng(seed)
    step_times: list[float] = []
    episode_return = 0.0
    won = False
    terminated = False
    while not terminated:
        t0 = time.perf_counter()
        masks = env.get_avail_actions()
        t1 = time.perf_counter()
        actions = [int(rng.choice(np.nonzero(mask)[0])) for mask in masks]
        t2 = time.perf_counter()
        reward, terminated, info = env.step(actions)
        t3 = time.perf_counter()
        if collect_steps:
            step_times.append((t1 - t0) + (t3 - t2))
        episode_return += reward
        won = info["battle_won"]
    return step_times, episode_return, won


def run_random(scenario: str, episodes: int, seed: int,
               parallel: int = 1) -> BenchReport:
    """Benchmark a scenario against uniform-random agents.

    Episode e always runs with seed ``seed + e`` so the returns are
    reproducible regardless of the degree of parallelism.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    seeds = [seed + e for e in range(episodes)]
    if parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            results = list(pool.map(lambda s: run_episode(scenario, s), seeds))
    else:
        results = [run_episode(scenario, s) for s in seeds]

    all_times = [t for times, _, _ in results for t in times]
    returns = [ret for _, ret, _ in results]
    wins = [won for _, _, won in results]
    all_times.sort()
    p95 = all_times[min(len(all_times) - 1, int(0.95 * len(all_times)))]
    return BenchReport(
        scenario=scenario,
        episodes=episodes,
        seed=seed,
        mean_step_seconds=statistics.fmean(all_times),
        median_step_seconds=statistics.median(all_times),
        p95_step_seconds=p95,
        peak_rss_mb=_peak_rss_mb(),
        mean_return=statistics.fmean(returns),
        win_rate=sum(wins) / len(wins),
    )


def dump_replay(scenario: str, seed: int, out_path: str) -> None:
    """Write newline-delimited replay records for one random-policy episode."""
    env = SkirmishEnv(scenario, seed=seed)
    env.reset(seed)
    rng = np.random.default_rng(seed)
    records: list[dict] = [engine.replay_header(env.game_state)]
    env.game_state.recorder = (
        lambda state, ledger: records.append(engine.replay_record(state, ledger))
    )
    actions_trace: list[list[int]] = []
    terminated = False
    while not terminated:
        masks = env.get_avail_actions()
        actions = [int(rng.choice(np.nonzero(mask)[0])) for mask in masks]
        actions_trace.append(actions)
        _, terminated, _ = env.step(actions)
    records.append({"kind": "actions", "trace": actions_trace})
    with open(out_path, "w") as fh:
        for record in records:
            fh.write(json.dumps(record) + "\n")


_TABLE_HEADER = (f"{'scenario':<14} {'eps':>4} {'mean s/st':>10} {'med s/st':>10} "
                 f"{'p95 s/st':>10} {'return':>8} {'win%':>6} {'rss MB':>8}")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="skirmish",
                                     description="micro-combat environment tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p_bench = sub.add_parser("bench", help="random-policy benchmark")
    p_bench.add_argument("--scenario", required=True,
                         help="shipped scenario name, path, or 'all'")
    p_bench.add_argument("--episodes", type=int, default=20)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--json", action="store_true", dest="as_json")
    p_bench.add_argument("--parallel", type=int, default=1)

    p_replay = sub.add_parser("replay", help="dump one episode's replay records")
    p_replay.add_argument("--scenario", required=True)
    p_replay.add_argument("--seed", type=int, default=0)
    p_replay.add_argument("--out", required=True)

    p_render = sub.add_parser("render", help="render replay frames to SVG files")
    p_render.add_argument("--replay", required=True)
    p_render.add_argument("--out", required=True)
    p_render.add_argument("--every-n", type=int, default=8)

    args = parser.parse_args(argv)
    try:
        if args.command == "bench":
            if args.episodes < 1:
                print("error: --episodes must be >= 1", file=sys.stderr)
                return 2
            if args.parallel < 1:
                print("error: --parallel must be >= 1", file=sys.stderr)
                return 2
            names = builtin_scenario_names() if args.scenario == "all" else [args.scenario]
            reports = [run_random(name, args.episodes, args.seed, args.parallel)
                       for name in names]
            if args.as_json:
                print(json.dumps([asdict(r) for r in reports], indent=2))
            else:
                print(_TABLE_HEADER)
                for report in reports:
                    print(report.table_row())
            return 0
        if args.command == "replay":
            dump_replay(args.scenario, args.seed, args.out)
            return 0
        if args.command == "render":
            if args.every_n < 1:
                print("error: --every-n must be >= 1", file=sys.stderr)
                return 2
            count = render_frames(args.replay, args.out, args.every_n)
            print(f"wrote {count} frames to {args.out}")
            return 0
    except (SkirmishError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
