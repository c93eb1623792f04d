"""Command-line front end.

    nadskit simulate --config <path|name> --out <library> [--seed N]
    nadskit evaluate --train <pcapng> --test <pcapng> --filter <expr> --detector <kind>
                     [--param k=v ...] [--seed N] --out <dir>
    nadskit report --library <dir>

Exit codes: 0 success, 1 runtime error, 2 usage or validation error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
import warnings
from dataclasses import replace
from pathlib import Path

from . import __version__

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2
REPORT_COLUMNS = ("entry", "scenario", "detector", "filter", "tp", "fp", "tn", "fn", "precision", "recall")


class UsageError(Exception):
    pass


def _err(msg: str):
    print(f"nadskit: error: {msg}", file=sys.stderr)


# ---------------------------------------------------------------- simulate

def _resolve_config(spec: str):
    from .config import SCENARIO_DIR, load_scenario, shipped_scenarios

    path = Path(spec)
    if not path.exists() and spec in shipped_scenarios():
        path = SCENARIO_DIR / f"{spec}.json"
    if not path.exists():
        raise UsageError(f"no such config {spec!r} (shipped scenarios: {', '.join(shipped_scenarios())})")
    return load_scenario(path)


def cmd_simulate(args) -> int:
    from .config import ConfigError, validate_scenario
    from .dataset.library import write_simulation_entry
    from .sim.engine import run_simulation

    try:
        cfg = _resolve_config(args.config)
    except ConfigError as e:
        _err(str(e))
        return EXIT_USAGE
    name = cfg.name
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
        name = f"{cfg.name}-seed{args.seed}"
    rep = validate_scenario(cfg)
    for path, msg in rep.warnings:
        print(f"warning: {path}: {msg}", file=sys.stderr)
    if not rep.ok:
        for path, msg in rep.errors:
            _err(f"{path}: {msg}")
        return EXIT_USAGE
    target = Path(args.out) / name
    if target.exists():
        _err(f"{target} already exists; library entries are write-once")
        return EXIT_RUNTIME
    t0 = time.perf_counter()
    result = run_simulation(cfg)
    entry = write_simulation_entry(result, cfg, target, time.perf_counter() - t0)
    print(entry)
    return EXIT_OK


# ---------------------------------------------------------------- evaluate

def _parse_params(items) -> dict:
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"bad --param {item!r}; expected key=value")
        out[key.strip()] = value.strip()
    return out


def _capture_scenario(path: Path, digest: str) -> str:
    """Scenario name from the library manifest next to a capture, else the file stem."""
    from .dataset.library import MANIFEST, LibraryError, RunManifest

    mpath = path.parent / MANIFEST
    if mpath.is_file():
        try:
            m = RunManifest.load(mpath)
        except (LibraryError, ValueError, KeyError):
            return path.stem
        if m.files.get(path.name) == digest:
            return m.info.get("scenario", m.name)
    return path.stem


def cmd_evaluate(args) -> int:
    from .dataset.library import EntryWriter, RunManifest, dump_json, sha256_file
    from .dataset.pcapng import PcapngError, read_capture
    from .nads.filters import StreamFilter
    from .nads.model import coerce_params
    from .nads.pipeline import EmptyTrainingSet, run_pipeline

    try:
        f = StreamFilter.parse(args.filter)
        params = coerce_params(args.detector, _parse_params(args.param))
    except (ValueError, UsageError) as e:
        _err(str(e))
        return EXIT_USAGE
    train_p, test_p = Path(args.train), Path(args.test)
    for p in (train_p, test_p):
        if not p.is_file():
            _err(f"cannot read {p}")
            return EXIT_USAGE
    out = Path(args.out)
    if out.exists():
        _err(f"{out} already exists; evaluation outputs are write-once")
        return EXIT_RUNTIME
    try:
        train, test = read_capture(train_p), read_capture(test_p)
    except (PcapngError, OSError) as e:
        _err(str(e))
        return EXIT_RUNTIME
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            res = run_pipeline(train, test, f, args.detector, params, args.seed,
                               nominal=args.window_ns, mode=args.window_mode)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
    except EmptyTrainingSet as e:
        _err(f"empty filtered training set: {e}")
        return EXIT_RUNTIME
    except ValueError as e:
        _err(str(e))
        return EXIT_RUNTIME

    train_h, test_h = sha256_file(train_p), sha256_file(test_p)
    setup = {"train": train_p.name, "train_sha256": train_h, "test": test_p.name, "test_sha256": test_h,
             "filter": str(f), "detector": args.detector, "params": {k: params[k] for k in sorted(params)},
             "seed": args.seed, "window_ns": args.window_ns, "window_mode": args.window_mode}
    model = res.model
    model_doc = {"kind": model.kind, "threshold": float(model.threshold),
                 "normalization": {"mins": list(model.normalization.mins),
                                   "maxs": list(model.normalization.maxs),
                                   "used": list(model.normalization.used)},
                 "params": setup["params"], "training_windows": res.train_windows,
                 "state": model.detector.state()}
    info = dict(setup, scenario=_capture_scenario(test_p, test_h),
                train_scenario=_capture_scenario(train_p, train_h))
    setup_hash = hashlib.sha256(json.dumps(setup, sort_keys=True).encode()).hexdigest()
    with EntryWriter(out) as w:
        w.write_text("report.tsv", res.report.to_tsv())
        w.write_text("trace.tsv", res.trace_tsv())
        w.write_text("model.json", dump_json(model_doc))
        w.publish(RunManifest(out.name, "evaluation", args.seed, setup_hash, info=info))
    r = res.report
    print(f"tp={r.tp} fp={r.fp} tn={r.tn} fn={r.fn} precision={_ratio(r.precision)} recall={_ratio(r.recall)}")
    return EXIT_OK


def _ratio(x):
    return "n/a" if x is None else f"{x:.2f}"


# ---------------------------------------------------------------- report

def report_table(library) -> tuple[list[list[str]], list[str]]:
    """(rows, integrity warnings) for every evaluation under ``library``."""
    from .dataset.library import LibraryError, RunManifest, find_manifests, verify_entry
    from .nads.evaluate import EvalReport

    library = Path(library)
    rows, problems = [], []
    for mpath in find_manifests(library):
        entry = mpath.parent
        try:
            m = RunManifest.load(mpath)
            issues = verify_entry(entry)
        except (LibraryError, ValueError, KeyError) as e:
            problems.append(f"{mpath}: unreadable manifest ({e})")
            continue
        problems.extend(issues)
        if m.kind != "evaluation":
            continue
        report_path = entry / "report.tsv"
        if not report_path.is_file():
            continue
        try:
            r = EvalReport.from_tsv(report_path.read_text())
        except (ValueError, KeyError, IndexError):
            problems.append(f"{report_path}: unreadable report")
            continue
        rel = entry.relative_to(library).as_posix()
        rows.append([rel, m.info.get("scenario", ""), m.info.get("detector", ""), m.info.get("filter", "")]
                    + r.row())
    return rows, problems


def cmd_report(args) -> int:
    lib = Path(args.library)
    if not lib.is_dir():
        _err(f"{lib} is not a directory")
        return EXIT_USAGE
    rows, problems = report_table(lib)
    for p in problems:
        print(f"integrity warning: {p}", file=sys.stderr)
    print("\t".join(REPORT_COLUMNS))
    for row in rows:
        print("\t".join(row))
    return EXIT_OK


# ---------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    from .nads.detectors import KINDS
    from .nads.metrics import NOMINAL_NS

    ap = argparse.ArgumentParser(prog="nadskit", description="TSN dataset simulator and NADS evaluation")
    ap.add_argument("--version", action="version", version=f"nadskit {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate a scenario into a library entry")
    s.add_argument("--config", required=True, help="scenario file, or the name of a shipped scenario")
    s.add_argument("--out", required=True, help="library directory")
    s.add_argument("--seed", type=int, help="override the scenario seed")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("evaluate", help="train on one capture and score another")
    e.add_argument("--train", required=True)
    e.add_argument("--test", required=True)
    e.add_argument("--filter", required=True, help="e.g. udp_dst=1301,iface=switchFrontRight-eth1-in")
    e.add_argument("--detector", required=True, choices=KINDS)
    e.add_argument("--param", action="append", metavar="K=V", help="detector parameter (repeatable)")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--window-ns", type=int, default=NOMINAL_NS)
    e.add_argument("--window-mode", choices=("include", "next"), default="include",
                   help="whether the closing packet ends its window or opens the next one")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("report", help="tabulate evaluations and check library integrity")
    r.add_argument("--library", required=True)
    r.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        _err(str(e))
        return EXIT_USAGE
    except Exception as e:  # noqa: BLE001 - report, don't dump a traceback
        _err(f"{type(e).__name__}: {e}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
