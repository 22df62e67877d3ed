#!/usr/bin/env python3
"""Run the 2x2 judging/backup ablation grid and print the frozen-band numbers.

Four cells on one fixture: {comparative, independent} judging crossed with
{max, mean} backup, each over the same seed block.  Prints the per-cell
success rates, then the two pooled one-sided z-tests the acceptance band
checks (max > mean backup, comparative > independent judging).  With
--latency > 0 it also times one wide search serially and with threaded
judge preparation and reports the speedup plus a tree-identity check.

Writes ablation.csv next to nothing else; stdout is the record.
"""
from __future__ import annotations

import argparse
import csv
import sys
import time
from dataclasses import replace
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from alphauct.ablation import (
    ABLATION_CONFIG,
    ABLATION_JUDGE,
    measure_parallel_speedup,
    pooled,
    run_ablation,
    two_proportion_test,
)
from alphauct.backup import MAX, MEAN
from alphauct.judging import COMPARATIVE, INDEPENDENT


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--fixture", default="trap3")
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--seed0", type=int, default=0)
    p.add_argument("--iters", type=int, default=ABLATION_CONFIG.max_iterations)
    p.add_argument("--noise", type=float, default=ABLATION_JUDGE.noise_std)
    p.add_argument("--offset", type=float, default=ABLATION_JUDGE.shared_offset_std)
    p.add_argument("--latency", type=float, default=0.0,
                   help="per-sibling judge latency for the speedup probe; "
                        "0 skips the probe")
    p.add_argument("--workers", type=int, default=8)
    p.add_argument("--csv", default="ablation.csv")
    args = p.parse_args(argv)

    cfg = replace(ABLATION_CONFIG, max_iterations=args.iters)
    judge = replace(ABLATION_JUDGE, noise_std=args.noise,
                    shared_offset_std=args.offset)

    t0 = time.time()
    cells = run_ablation(args.fixture, args.seeds, seed0=args.seed0,
                         config=cfg, judge_spec=judge)
    print(f"fixture={args.fixture} seeds={args.seeds} iters={args.iters} "
          f"noise={args.noise} offset={args.offset} "
          f"[{time.time() - t0:.1f}s]")
    print(f"{'judge':<14}{'backup':<8}{'wins':>6}{'runs':>6}{'rate':>8}")
    for cell in cells:
        print(f"{cell.judge_mode:<14}{cell.backup:<8}{cell.successes:>6}"
              f"{cell.runs:>6}{cell.rate:>8.3f}")

    for label, hi, lo in ((" max  > mean  backup", {"backup": MAX}, {"backup": MEAN}),
                          (" comp > indep judge", {"judge_mode": COMPARATIVE},
                           {"judge_mode": INDEPENDENT})):
        w1, n1 = pooled(cells, **hi)
        w2, n2 = pooled(cells, **lo)
        z, pv = two_proportion_test(w1, n1, w2, n2)
        print(f"{label}: {w1}/{n1} vs {w2}/{n2}  z={z:.3f}  p={pv:.3e}")

    with open(args.csv, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["judge_mode", "backup", "successes", "runs", "rate"])
        for cell in cells:
            w.writerow([cell.judge_mode, cell.backup, cell.successes,
                        cell.runs, f"{cell.rate:.6f}"])
    print(f"wrote {args.csv}")

    if args.latency > 0:
        probe = "wide16" if args.fixture == "trap3" else args.fixture
        rep = measure_parallel_speedup(probe, latency_s=args.latency,
                                       workers=args.workers)
        print(f"speedup probe on {probe}: serial {rep.serial_s:.2f}s, "
              f"parallel {rep.parallel_s:.2f}s with {rep.workers} workers "
              f"-> {rep.speedup:.2f}x  trees_equal={rep.trees_equal} "
              f"outcomes_equal={rep.outcomes_equal}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
