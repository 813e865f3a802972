"""Command-line entry point.

Subcommands: ``process`` (session -> feedback JSON), ``evaluate`` (estimate
vs. ground truth -> agreement report), ``bench`` (proposed vs. baseline
estimators over a corpus), ``synth`` (generate corpora), and ``classify``
(session -> skill prediction). Exit codes: 0 success, 1 error, 2 gated
session (a correct outcome scripts must distinguish from failure).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import baselines, metrics, mind, respiration, session_io, synth, weights
from .reliability import QualityParams
from .respiration import PeakParams

WEIGHTS_DIR_ENV = "BREATHKIT_WEIGHTS_DIR"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_GATED = 2


def _add_quality_flags(p: argparse.ArgumentParser) -> None:
    d = QualityParams()
    g = p.add_argument_group("quality gate")
    g.add_argument("--iqr-window-s", type=float, default=d.iqr_window_s)
    g.add_argument("--iqr-multiplier", type=float, default=d.iqr_multiplier)
    g.add_argument("--compromise-threshold", type=float, default=d.compromise_threshold)
    g.add_argument("--flat-segment-s", type=float, default=d.flat_segment_s)
    g.add_argument("--flat-diff-threshold", type=float, default=d.flat_diff_threshold)
    g.add_argument("--flat-variation-fraction", type=float, default=d.flat_variation_fraction)


def _add_peak_flags(p: argparse.ArgumentParser) -> None:
    d = PeakParams()
    g = p.add_argument_group("peak detection")
    g.add_argument("--min-spacing-s", type=float, default=d.min_spacing_s)
    g.add_argument("--prominence-fraction", type=float, default=d.prominence_fraction)
    g.add_argument("--averaging-cycles", type=int, default=d.averaging_cycles)
    g.add_argument("--rate-band-bpm", type=float, nargs=2, default=list(d.rate_band_bpm),
                   metavar=("LO", "HI"))
    g.add_argument("--no-refine-times", action="store_true",
                   help="keep peak times on the sample grid")
    g.add_argument("--axis", choices=("max-variance", "fixed-z"), default="max-variance")


def _quality_params(args) -> QualityParams:
    return QualityParams(
        iqr_window_s=args.iqr_window_s,
        iqr_multiplier=args.iqr_multiplier,
        compromise_threshold=args.compromise_threshold,
        flat_segment_s=args.flat_segment_s,
        flat_diff_threshold=args.flat_diff_threshold,
        flat_variation_fraction=args.flat_variation_fraction,
    )


def _peak_params(args) -> PeakParams:
    return PeakParams(
        min_spacing_s=args.min_spacing_s,
        prominence_fraction=args.prominence_fraction,
        averaging_cycles=args.averaging_cycles,
        rate_band_bpm=tuple(args.rate_band_bpm),
        refine_times=not args.no_refine_times,
    )


def _params_dict(qp: QualityParams, pp: PeakParams, axis: str) -> dict:
    return {
        "quality": {k: getattr(qp, k) for k in (
            "iqr_window_s", "iqr_multiplier", "compromise_threshold",
            "flat_segment_s", "flat_diff_threshold", "flat_variation_fraction")},
        "peaks": {
            "min_spacing_s": pp.min_spacing_s,
            "prominence_fraction": pp.prominence_fraction,
            "averaging_cycles": pp.averaging_cycles,
            "rate_band_bpm": list(pp.rate_band_bpm),
            "refine_times": pp.refine_times,
        },
        "axis_policy": axis,
    }


def _load_bundles(args) -> dict[str, weights.WeightBundle]:
    paths = {}
    if args.weights_dir:
        for skill in mind.SKILLS:
            paths[skill] = os.path.join(args.weights_dir, f"{skill}.bkw")
    else:
        for skill in mind.SKILLS:
            value = getattr(args, skill)
            if value is None:
                raise ValueError(
                    f"no weights for {skill}: pass --{skill.replace('_', '-')}, "
                    f"--weights-dir, or set ${WEIGHTS_DIR_ENV}"
                )
            paths[skill] = value
    return {skill: weights.read_weights(path) for skill, path in paths.items()}


def _write_json(doc: dict, path: str | None) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --- process ------------------------------------------------------------------


def cmd_process(args) -> int:
    qp, pp = _quality_params(args), _peak_params(args)
    rec = session_io.read_session(args.session)
    report, estimate = respiration.estimate_session(rec, qp, pp, axis_policy=args.axis)
    skills = None
    if estimate is not None and (args.weights_dir or os.environ.get(WEIGHTS_DIR_ENV)):
        if not args.weights_dir:
            args.weights_dir = os.environ[WEIGHTS_DIR_ENV]
        skills = mind.predict_session(rec, _load_bundles(args))
    params = _params_dict(qp, pp, args.axis) if args.params_json else None
    doc = session_io.build_feedback(rec.session_id, report, estimate, skills, params)
    _write_json(doc, args.out)
    return EXIT_OK if doc["verdict"] == "ok" else EXIT_GATED


# --- evaluate -----------------------------------------------------------------


def _pairs_from_files(gt_path: str, est_path: str, tolerance_s: float) -> metrics.AlignedPairs:
    gt = session_io.read_rate_series(gt_path)
    est = session_io.feedback_rate_series(session_io.read_feedback(est_path))
    return metrics.align(gt, est, tolerance_s)


def _matched_files(gt_dir: str, est_dir: str) -> list[tuple[str, str]]:
    pairs = []
    for name in sorted(os.listdir(gt_dir)):
        if not name.endswith(".csv"):
            continue
        stem = os.path.splitext(name)[0]
        est = os.path.join(est_dir, stem + ".json")
        if os.path.exists(est):
            pairs.append((os.path.join(gt_dir, name), est))
    if not pairs:
        raise ValueError(f"no matching gt/estimate pairs between {gt_dir} and {est_dir}")
    return pairs


def cmd_evaluate(args) -> int:
    if os.path.isdir(args.gt):
        file_pairs = _matched_files(args.gt, args.est)
    else:
        file_pairs = [(args.gt, args.est)]
    aligned = [_pairs_from_files(g, e, args.tolerance_s) for g, e in file_pairs]
    pooled = metrics.AlignedPairs(
        t=np.concatenate([a.t for a in aligned]),
        gt=np.concatenate([a.gt for a in aligned]),
        est=np.concatenate([a.est for a in aligned]),
        n_dropped=sum(a.n_dropped for a in aligned),
    )
    report = metrics.agreement(pooled)
    doc = report.as_json_dict()
    doc["n_dropped"] = pooled.n_dropped
    doc["n_files"] = len(file_pairs)
    _write_json(doc, args.out)
    if args.per_band_csv:
        with open(args.per_band_csv, "w", encoding="utf-8") as fh:
            fh.write("band_bpm,mae,n\n")
            for band, cell in report.per_band.items():
                mae = "" if cell["mae"] is None else f"{cell['mae']:.6f}"
                fh.write(f"{band},{mae},{cell['n']}\n")
    if args.bland_altman_points:
        pts = metrics.bland_altman_points(pooled)
        with open(args.bland_altman_points, "w", encoding="utf-8") as fh:
            fh.write("t,mean_bpm,diff_bpm\n")
            for t, m, d in pts:
                fh.write(f"{float(t)!r},{float(m)!r},{float(d)!r}\n")
    return EXIT_OK


# --- bench --------------------------------------------------------------------

BENCH_ESTIMATORS = ("proposed", "fft", "zero_crossing", "naive_peak")


def _bench_one(entry: dict, corpus_dir: str, qp: QualityParams, pp: PeakParams,
               axis: str) -> dict | None:
    rec = session_io.read_session(os.path.join(corpus_dir, entry["session_csv"]))
    gt = session_io.read_rate_series(os.path.join(corpus_dir, entry["gt_csv"]))
    report, estimate = respiration.estimate_session(rec, qp, pp, axis_policy=axis)
    if estimate is None:
        return None
    raw, _ = respiration.preprocess_session(rec, axis_policy=axis)
    banded = baselines.natural_band_filter(raw)
    series = {
        "proposed": estimate.instantaneous,
        "fft": baselines.fft_rate(banded),
        "zero_crossing": baselines.zero_crossing_rate(banded),
        "naive_peak": baselines.naive_peak_rate(banded),
    }
    out = {}
    for name, s in series.items():
        if len(s) == 0:
            continue
        try:
            out[name] = metrics.align(gt, s, tolerance_s=5.0)
        except ValueError:
            continue
    return out


def cmd_bench(args) -> int:
    manifest_path = os.path.join(args.corpus, "manifest.json")
    if not os.path.exists(manifest_path):
        raise ValueError(f"no manifest.json in {args.corpus}")
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    entries = manifest["sessions"]
    if not entries:
        raise ValueError("corpus manifest lists no sessions")
    qp, pp = _quality_params(args), _peak_params(args)

    with ThreadPoolExecutor(max_workers=max(args.jobs, 1)) as pool:
        results = list(pool.map(
            lambda e: _bench_one(e, args.corpus, qp, pp, args.axis), entries))

    pooled: dict[str, list[metrics.AlignedPairs]] = {n: [] for n in BENCH_ESTIMATORS}
    gated = 0
    for res in results:
        if res is None:
            gated += 1
            continue
        for name, pairs in res.items():
            pooled[name].append(pairs)

    lines = ["estimator,band_bpm,mae,pcc,n"]
    for name in BENCH_ESTIMATORS:
        if not pooled[name]:
            continue
        allpairs = metrics.AlignedPairs(
            t=np.concatenate([p.t for p in pooled[name]]),
            gt=np.concatenate([p.gt for p in pooled[name]]),
            est=np.concatenate([p.est for p in pooled[name]]),
            n_dropped=sum(p.n_dropped for p in pooled[name]),
        )
        for i, (lo, hi) in enumerate(metrics.RATE_BANDS_BPM):
            mask = ((allpairs.gt >= lo) if i == 0 else (allpairs.gt > lo)) & (allpairs.gt <= hi)
            n = int(np.count_nonzero(mask))
            if n == 0:
                lines.append(f"{name},{lo:g}-{hi:g},,,0")
                continue
            diff = allpairs.est[mask] - allpairs.gt[mask]
            mae = float(np.mean(np.abs(diff)))
            if n >= 2 and np.ptp(allpairs.gt[mask]) > 0 and np.ptp(allpairs.est[mask]) > 0:
                pcc = float(np.corrcoef(allpairs.gt[mask], allpairs.est[mask])[0, 1])
                pcc_s = f"{pcc:.4f}"
            else:
                pcc_s = ""
            lines.append(f"{name},{lo:g}-{hi:g},{mae:.4f},{pcc_s},{n}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if gated:
        print(f"note: {gated} session(s) gated and excluded", file=sys.stderr)
    return EXIT_OK


# --- synth --------------------------------------------------------------------


def cmd_synth(args) -> int:
    if args.labeled is not None:
        ds = synth.make_labeled_segments(args.labeled, args.separation, args.seed)
        synth.write_labeled_corpus(ds, args.out)
        return EXIT_OK
    if args.standard:
        profiles = {
            "sweep": synth.sweep_profiles,
            "noisy": synth.noisy_sweep_profiles,
            "decoys": synth.decoy_profiles,
            "genuine": synth.genuine_profiles,
        }[args.standard]()
    else:
        with open(args.profiles, encoding="utf-8") as fh:
            raw = json.load(fh)
        raw = raw["profiles"] if isinstance(raw, dict) else raw
        profiles = [synth.SynthProfile.from_json_dict(d) for d in raw]
    synth.generate_corpus(profiles, args.out)
    return EXIT_OK


# --- classify -----------------------------------------------------------------


def cmd_classify(args) -> int:
    if not args.weights_dir and not any(getattr(args, s) for s in mind.SKILLS):
        args.weights_dir = os.environ.get(WEIGHTS_DIR_ENV)
    rec = session_io.read_session(args.session)
    prediction = mind.predict_session(rec, _load_bundles(args))
    doc = prediction.as_json_dict()
    if args.feedback:
        merged = session_io.read_feedback(args.feedback)
        merged["skills"] = {
            name: res.session_label for name, res in prediction.skills.items()
        }
        with open(args.feedback, "w", encoding="utf-8") as fh:
            json.dump(merged, fh, indent=2)
            fh.write("\n")
    _write_json(doc, args.out)
    return EXIT_OK


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="breathkit",
        description="Respiration-rate estimation and mindfulness-skill "
                    "classification from chest accelerometer recordings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("process", help="estimate respiration and write feedback JSON")
    p.add_argument("session", help="session CSV path")
    p.add_argument("--out", help="feedback JSON path (default stdout)")
    p.add_argument("--weights-dir", help="adds skill predictions when given")
    for skill in mind.SKILLS:
        p.add_argument(f"--{skill.replace('_', '-')}", help=f"{skill} .bkw path")
    p.add_argument("--params-json", action="store_true",
                   help="embed the effective parameter set in the output")
    _add_quality_flags(p)
    _add_peak_flags(p)
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("evaluate", help="agreement metrics for estimates vs. ground truth")
    p.add_argument("--gt", required=True, help="ground-truth CSV or directory")
    p.add_argument("--est", required=True, help="feedback JSON or directory")
    p.add_argument("--out", help="report JSON path (default stdout)")
    p.add_argument("--tolerance-s", type=float, default=5.0)
    p.add_argument("--per-band-csv", help="write per-band MAE table here")
    p.add_argument("--bland-altman-points", help="dump (mean, diff) pairs CSV here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="compare proposed and baseline estimators on a corpus")
    p.add_argument("corpus", help="corpus directory containing manifest.json")
    p.add_argument("--out", help="comparison CSV path (default stdout)")
    p.add_argument("--jobs", type=int, default=min(4, os.cpu_count() or 1))
    _add_quality_flags(p)
    _add_peak_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("synth", help="generate synthetic corpora")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--profiles", help="JSON file with a list of profiles")
    src.add_argument("--standard", choices=("sweep", "noisy", "decoys", "genuine"))
    src.add_argument("--labeled", type=int, metavar="N_PER_CLASS",
                     help="emit a labeled 2-minute segment corpus")
    p.add_argument("--separation", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("classify", help="predict mindfulness-skill changes for a session")
    p.add_argument("session", help="session CSV path")
    p.add_argument("--weights-dir",
                   help=f"directory with <skill>.bkw files (default ${WEIGHTS_DIR_ENV})")
    for skill in mind.SKILLS:
        p.add_argument(f"--{skill.replace('_', '-')}", help=f"{skill} .bkw path")
    p.add_argument("--feedback", help="existing feedback JSON to merge skills into")
    p.add_argument("--out", help="prediction JSON path (default stdout)")
    p.set_defaults(func=cmd_classify)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return EXIT_ERROR
    except Exception as exc:  # noqa: BLE001 - single reporting point for the CLI
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
