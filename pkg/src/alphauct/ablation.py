"""Ablation grids and parallelism timing on the navigation fixtures.

The 2x2 grid crosses the backup statistic (max vs mean) with the judging
protocol (comparative vs independent) under a noisy judge and counts goal
discoveries.  The speedup probe runs one configuration serially and with
thread pools under simulated judge latency and checks the trees come out
identical.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

from .backup import MAX, MEAN
from .envs import GuiGraphEnv, load_fixture
from .judging import COMPARATIVE, INDEPENDENT, SimJudge, SimJudgeSpec
from .proposer import proposer_from_fixture
from .search import SearchConfig, SimReflector, run_search

# Calibrated on the trap3 fixture so the judge noise actually separates the
# four cells within the iteration budget: a per-call offset of 0.2 is enough
# to punish per-sibling calls, and 10 iterations is tight enough that budget
# soaked by the decoy branches converts into missed goals.
ABLATION_JUDGE = SimJudgeSpec(noise_std=0.05, shared_offset_std=0.2)
ABLATION_CONFIG = SearchConfig(c=0.4, expansion_factor=5, max_iterations=10)


@dataclass(frozen=True)
class AblationCell:
    judge_mode: str
    backup: str
    successes: int
    runs: int

    @property
    def rate(self) -> float:
        return self.successes / self.runs


def run_cell(fixture: str, judge_mode: str, backup: str, seeds: int, *,
             seed0: int = 0, config: SearchConfig = ABLATION_CONFIG,
             judge_spec: SimJudgeSpec = ABLATION_JUDGE) -> AblationCell:
    spec = load_fixture(fixture)
    wins = 0
    for s in range(seed0, seed0 + seeds):
        cfg = replace(config, judge_mode=judge_mode, backup=backup, seed=s)
        res = run_search(GuiGraphEnv(spec), proposer_from_fixture(spec, seed=s),
                         SimJudge(replace(judge_spec, seed=s), spec.values),
                         SimReflector(), cfg)
        wins += res.outcome == "success"
    return AblationCell(judge_mode, backup, wins, seeds)


def run_ablation(fixture: str = "trap3", seeds: int = 100, *, seed0: int = 0,
                 config: SearchConfig = ABLATION_CONFIG,
                 judge_spec: SimJudgeSpec = ABLATION_JUDGE) -> list[AblationCell]:
    cells = []
    for judge_mode in (COMPARATIVE, INDEPENDENT):
        for backup in (MAX, MEAN):
            cells.append(run_cell(fixture, judge_mode, backup, seeds,
                                  seed0=seed0, config=config,
                                  judge_spec=judge_spec))
    return cells


def pooled(cells: list[AblationCell], **match) -> tuple[int, int]:
    """(successes, runs) over the cells matching the given field values."""
    wins = runs = 0
    for cell in cells:
        if all(getattr(cell, k) == v for k, v in match.items()):
            wins += cell.successes
            runs += cell.runs
    if runs == 0:
        raise ValueError(f"no cells match {match}")
    return wins, runs


def two_proportion_test(wins1: int, n1: int, wins2: int, n2: int) -> tuple[float, float]:
    """One-sided pooled z-test of rate1 > rate2; returns (z, p_value)."""
    if min(n1, n2) < 1:
        raise ValueError("empty sample")
    p1, p2 = wins1 / n1, wins2 / n2
    pool = (wins1 + wins2) / (n1 + n2)
    se = math.sqrt(pool * (1.0 - pool) * (1.0 / n1 + 1.0 / n2))
    if se == 0.0:
        return 0.0, 1.0 if p1 <= p2 else 0.0
    z = (p1 - p2) / se
    p = 0.5 * math.erfc(z / math.sqrt(2.0))
    return z, p


@dataclass(frozen=True)
class SpeedupReport:
    serial_s: float
    parallel_s: float
    workers: int
    trees_equal: bool
    outcomes_equal: bool

    @property
    def speedup(self) -> float:
        return self.serial_s / self.parallel_s


def _timed_run(spec, cfg: SearchConfig, judge_spec: SimJudgeSpec, seed: int):
    env = GuiGraphEnv(spec)
    prop = proposer_from_fixture(spec, seed=seed)
    judge = SimJudge(replace(judge_spec, seed=seed), spec.values)
    t0 = time.perf_counter()
    res = run_search(env, prop, judge, SimReflector(), cfg)
    return time.perf_counter() - t0, res


def measure_parallel_speedup(fixture: str = "wide16", *, k: int = 8,
                             latency_s: float = 0.05, workers: int = 8,
                             iterations: int = 6, seed: int = 0,
                             judge_noise: float = 0.05) -> SpeedupReport:
    """Same search serially and with `workers` judge-preparation threads.

    The judge carries a per-sibling preparation latency; everything else is
    deterministic, so the two runs must produce identical trees.
    """
    spec = load_fixture(fixture)
    judge_spec = SimJudgeSpec(noise_std=judge_noise, latency_s=latency_s)
    base = SearchConfig(expansion_factor=k, max_iterations=iterations, seed=seed)
    serial_s, serial = _timed_run(spec, base, judge_spec, seed)
    par_cfg = replace(base, parallel_actions=workers, parallel_envs=workers)
    parallel_s, parallel = _timed_run(spec, par_cfg, judge_spec, seed)
    return SpeedupReport(
        serial_s=serial_s, parallel_s=parallel_s, workers=workers,
        trees_equal=serial.tree.dump() == parallel.tree.dump(),
        outcomes_equal=(serial.outcome, serial.iterations) ==
                       (parallel.outcome, parallel.iterations))
