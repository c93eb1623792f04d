#!/usr/bin/env python3
"""Simulate every case-study scenario for every seed and print the detection scores.

Summaries are cached (default ``.cache/case_study``), so a rerun after a
detector change only repeats the cheap part.

    python scripts/run_case_study.py [--seeds 1-10] [--duration-s 12] [--cache DIR]
"""
import argparse
import statistics
import sys
import time
from pathlib import Path

from nadskit.casestudy import CASES, HOLDOUT, SEEDS, case_scores, run_case

ROOT = Path(__file__).resolve().parent.parent


def parse_seeds(text):
    if "-" in text:
        a, b = text.split("-")
        return list(range(int(a), int(b) + 1))
    return [int(s) for s in text.split(",")]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", default=f"{SEEDS[0]}-{SEEDS[-1]}")
    ap.add_argument("--duration-s", type=float, default=None, help="default: scenario duration")
    ap.add_argument("--cache", type=Path, default=ROOT / ".cache" / "case_study")
    args = ap.parse_args()
    seeds = parse_seeds(args.seeds)
    dur = None if args.duration_s is None else int(args.duration_s * 1e9)

    runs = {}
    for seed in seeds:
        for scenario in ["baseline"] + [c.scenario for c in CASES]:
            t0 = time.perf_counter()
            runs[scenario, seed] = run_case(scenario, seed, dur, args.cache)
            print(f"{scenario:12s} seed {seed:2d}: {time.perf_counter() - t0:6.1f} s", file=sys.stderr)

    print("case\tdetector\tseed\ttp\tfp\ttn\tfn\tprecision\trecall")
    for case in CASES + (HOLDOUT,):
        prec, rec, flagged = [], [], []
        for i, seed in enumerate(seeds):
            train = runs["baseline", seed]
            test = runs[case.scenario, seeds[(i + 1) % len(seeds)] if case is HOLDOUT else seed]
            r = case_scores(case, train, test, seed).report
            prec.append(r.precision if r.precision is not None else float("nan"))
            rec.append(r.recall if r.recall is not None else float("nan"))
            print(f"{case.scenario}\t{case.detector}\t{seed}\t{r.tp}\t{r.fp}\t{r.tn}\t{r.fn}\t"
                  f"{r.precision}\t{r.recall}")
            flagged.append((r.tp + r.fp) / r.total)
        if case is HOLDOUT:
            print(f"# hold-out {case.detector}: median flagged fraction {statistics.median(flagged):.3f}")
        else:
            print(f"# {case.scenario} {case.detector}: median precision "
                  f"{statistics.median(prec):.3f}, median recall {statistics.median(rec):.3f}")


if __name__ == "__main__":
    main()
