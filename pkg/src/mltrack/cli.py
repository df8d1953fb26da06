"""Command line: ``mltrack {track,eval,synth,ksweep}``.

Exit status is 0 on success, 1 for bad input (flags, unreadable or malformed
files) and 2 for failures inside the tracker itself.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from . import formats, pipeline, synth
from .metrics import clear_mot
from .model import SequenceBundle

logger = logging.getLogger("mltrack")

EXIT_OK, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2


class InputError(Exception):
    """Bad flags or input files."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _default_threads() -> int:
    return os.cpu_count() or 1


def _add_tracking_flags(p, out_required=True):
    p.add_argument("--det", required=True, type=Path, help="detections, MOT CSV")
    p.add_argument("--dpt", required=True, type=Path, help="dense point tracklets CSV")
    p.add_argument("--config", required=True, type=Path, help="JSON tracker config")
    p.add_argument("--out", required=out_required, type=Path, help="results, MOT CSV")
    p.add_argument("--threads", type=int, default=_default_threads(), help="worker threads (default: all cores)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mltrack", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("track", help="track one sequence")
    _add_tracking_flags(p)
    p.add_argument("--lp2d", action="store_true", help="detections-only baseline")
    p.add_argument("--diag", type=Path, help="write diagnostics JSON here")
    p.add_argument("--plot", type=Path, help="write a trajectory figure here")

    p = sub.add_parser("eval", help="CLEAR MOT metrics of results against ground truth")
    p.add_argument("--gt", required=True, type=Path)
    p.add_argument("--res", required=True, type=Path)
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--json", type=Path, help="also dump the metrics as JSON")

    p = sub.add_parser("synth", help="render a synthetic scene")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", help=f"one of {', '.join(synth.PRESETS)}")
    src.add_argument("--spec", type=Path, help="scenario JSON")
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.add_argument("--seed", type=int, help="override the scenario seed")

    p = sub.add_parser("ksweep", help="tracking accuracy around the selected cluster count")
    _add_tracking_flags(p, out_required=False)
    p.add_argument("--out-csv", required=True, type=Path)
    p.add_argument("--gt", type=Path, help="ground truth for the TA column")
    p.add_argument("--plot", type=Path, help="figure path (default: CSV path with .png)")
    return parser


def _load_bundle(args):
    try:
        config = formats.read_config(args.config)
    except OSError as exc:
        raise InputError(f"cannot read config {args.config}: {exc.strerror or exc}") from None
    except formats.ConfigError as exc:
        raise InputError(f"bad config {args.config}: {exc}") from None
    try:
        dets = formats.read_detections(args.det)
        dpts = formats.read_dpts(args.dpt)
    except OSError as exc:
        raise InputError(f"cannot read {exc.filename}: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if args.threads < 1:
        raise InputError("--threads must be >= 1")
    return SequenceBundle(list(dets), dpts), config


def _read_trajs(path):
    try:
        return formats.read_trajectories(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def cmd_track(args) -> int:
    bundle, config = _load_bundle(args)
    if args.lp2d:
        trajs = pipeline.run_lp2d(bundle, config)
        diag = {"method": "lp2d", "n_trajectories": len(trajs)}
    else:
        trajs, diag = pipeline.run(bundle, config, threads=args.threads)
        diag = {"method": "full", **diag}
    formats.write_results(args.out, trajs)
    if args.diag:
        diag["config"] = formats.config_to_dict(config)
        Path(args.diag).write_text(json.dumps(diag, indent=2) + "\n", encoding="utf-8")
    if args.plot:
        from .plotting import plot_trajectories
        plot_trajectories(trajs, args.plot)
    logger.info("%d trajectories -> %s", len(trajs), args.out)
    return EXIT_OK


def cmd_eval(args) -> int:
    if not 0 < args.iou <= 1:
        raise InputError("--iou must lie in (0, 1]")
    gt = _read_trajs(args.gt)
    res = _read_trajs(args.res)
    report = clear_mot(gt, res, args.iou)
    print(report.table())
    if args.json:
        Path(args.json).write_text(report.to_json() + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        if args.preset is not None:
            spec = synth.preset(args.preset, seed=0 if args.seed is None else args.seed)
        else:
            spec = synth.ScenarioSpec.from_json(Path(args.spec).read_text(encoding="utf-8"))
            if args.seed is not None:
                spec.seed = args.seed
    except OSError as exc:
        raise InputError(f"cannot read {args.spec}: {exc.strerror or exc}") from None
    except (ValueError, TypeError) as exc:
        raise InputError(str(exc)) from None
    bundle, gt = synth.generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    formats.write_detections(out / "det.csv", bundle.detections)
    formats.write_dpts(out / "dpt.csv", bundle.dpts)
    formats.write_results(out / "gt.csv", gt)
    (out / "spec.json").write_text(spec.to_json() + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_ksweep(args) -> int:
    bundle, config = _load_bundle(args)
    gt = _read_trajs(args.gt) if args.gt else None
    rows = pipeline.ksweep(bundle, config, gt=gt, threads=args.threads)
    with open(args.out_csv, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "objective", "TA"])
        for _, k, obj, ta in rows:
            w.writerow([k, f"{obj:.6f}", "" if ta is None else f"{ta:.6f}"])
    if args.out:
        trajs, _ = pipeline.run(bundle, config, threads=args.threads)
        formats.write_results(args.out, trajs)
    from .plotting import plot_ksweep
    plot_ksweep(rows, args.plot or Path(args.out_csv).with_suffix(".png"))
    return EXIT_OK


COMMANDS = {"track": cmd_track, "eval": cmd_eval, "synth": cmd_synth, "ksweep": cmd_ksweep}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse: --help exits 0, errors exit EXIT_INPUT
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"mltrack {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # anything else is a bug or an unexpected state
        logger.debug("internal error", exc_info=True)
        print(f"mltrack {args.command}: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
