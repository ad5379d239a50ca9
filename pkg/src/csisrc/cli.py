"""Command-line front end: generate / evaluate / walking / class-distance.

Every run writes a manifest with the full flag set and seed so it can be
reproduced exactly; repeated runs with the same flags produce
byte-identical outputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import __version__
from .classify import FusionMethod, InputMode
from .evaluate import (KNN_METHOD, BinaryMetrics, SweepSpec, evaluate,
                       write_cells_csv, write_confusions_csv,
                       write_report_json)
from .model import (CsiError, DatasetFormat, ParseError, load_dataset,
                    save_dataset)
from .preprocess import BandSelection, sanitise, slice_band
from .simulate import ConfigError, RfiConfig, ScenarioConfig, generate
from .solver import SolverConfig
from .walking import (DegenerateTrainingError, extract_features,
                      predict, train_on_features)

MODE_NAMES = {m.value: m for m in InputMode}


def _write_manifest(out_dir, subcommand, args_dict):
    manifest = {
        "tool": "csisrc",
        "version": __version__,
        "format_version": 1,
        "subcommand": subcommand,
        "args": args_dict,
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _floats(text):
    return tuple(float(p) for p in text.split(",") if p)


def _ints(text):
    return tuple(int(p) for p in text.split(",") if p)


def cmd_generate(args) -> int:
    scenario = ScenarioConfig(packets_per_class=args.packets, seed=args.seed,
                              static_jitter=args.static_jitter,
                              walking_fluctuation=args.walking_fluctuation)
    rfi = None
    if args.rfi:
        rfi = RfiConfig(noise_power=args.rfi_noise,
                        snr_drop_db=args.rfi_drop,
                        snr_fluctuation_db=args.rfi_fluctuation)
    samples = generate(scenario, rfi)
    os.makedirs(args.out, exist_ok=True)
    fmt = DatasetFormat(args.format)
    name = "dataset.csv" if fmt is DatasetFormat.TEXT else "dataset.csis"
    save_dataset(samples, os.path.join(args.out, name), fmt)
    _write_manifest(args.out, "generate", {
        "packets": args.packets, "seed": args.seed, "format": args.format,
        "static_jitter": args.static_jitter,
        "walking_fluctuation": args.walking_fluctuation,
        "rfi": None if rfi is None else {
            "noise_power": rfi.noise_power,
            "snr_drop_db": rfi.snr_drop_db,
            "snr_fluctuation_db": rfi.snr_fluctuation_db,
        },
    })
    return 0


def _solver_config(args) -> SolverConfig:
    return SolverConfig(epsilon=args.epsilon,
                        epsilon_scale=args.epsilon_scale,
                        max_iters=args.max_iters, tol=args.tol, rho=args.rho)


def cmd_evaluate(args) -> int:
    data = load_dataset(args.data, _guess_format(args.data))
    spec = SweepSpec(
        ws_values=_ints(args.ws),
        widths_mhz=_floats(args.bands),
        step_mhz=args.step,
        methods=tuple(args.methods.split(",")),
        modes=tuple(MODE_NAMES[m] for m in args.modes.split(",")),
        folds=args.folds,
        seed=args.seed,
        band_offsets=_floats(args.offsets) if args.offsets else None,
        knn_k=args.knn_k,
    )
    stub = (lambda true, window: true) if args.stub_oracle else None
    report = evaluate(data, spec, _solver_config(args), stub=stub,
                      walking_grouping=args.walking_binary)
    os.makedirs(args.out, exist_ok=True)
    write_report_json(report, os.path.join(args.out, "report.json"))
    write_cells_csv(report, os.path.join(args.out, "cells.csv"))
    write_confusions_csv(report, args.out)
    _write_manifest(args.out, "evaluate", {
        "data": os.path.abspath(args.data), "ws": args.ws,
        "bands": args.bands, "step": args.step, "methods": args.methods,
        "modes": args.modes, "folds": args.folds, "seed": args.seed,
        "offsets": args.offsets, "knn_k": args.knn_k,
        "epsilon": args.epsilon, "epsilon_scale": args.epsilon_scale,
        "max_iters": args.max_iters,
        "tol": args.tol, "rho": args.rho,
        "stub_oracle": args.stub_oracle,
        "walking_binary": args.walking_binary,
    })
    return 0


def _binary_cv(features, labels, folds, seed):
    """Stratified k-fold logistic-regression CV; pooled tp/tn/fp/fn."""
    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(labels), dtype=int)
    for value in (False, True):
        idxs = np.flatnonzero(labels == value)
        order = rng.permutation(len(idxs))
        for pos, j in enumerate(order):
            fold_of[idxs[j]] = pos % folds
    tp = tn = fp = fn = 0
    for f in range(folds):
        train_mask = fold_of != f
        if labels[train_mask].min() == labels[train_mask].max():
            raise DegenerateTrainingError(
                "a training fold contains a single class")
        model = train_on_features(features[train_mask],
                                  labels[train_mask].astype(float))
        for i in np.flatnonzero(~train_mask):
            _, decided = predict(model, _features_obj(features[i]))
            if labels[i] and decided:
                tp += 1
            elif labels[i]:
                fn += 1
            elif decided:
                fp += 1
            else:
                tn += 1
    return BinaryMetrics(tp=tp, tn=tn, fp=fp, fn=fn)


def _features_obj(row):
    from .walking import WalkingFeatures
    return WalkingFeatures(*row)


def cmd_walking(args) -> int:
    data = load_dataset(args.data, _guess_format(args.data))
    by_class: dict = {}
    for ls in data:
        by_class.setdefault(ls.label, []).append(ls)

    rows = []
    feat_rows = []
    flags = []
    for label, members in by_class.items():
        snrs = [ls.sample.snr_db for ls in members]
        for start in range(0, len(snrs) - args.snr_window + 1,
                           args.snr_window):
            window = snrs[start:start + args.snr_window]
            feat_rows.append(extract_features(window).as_array())
            flags.append(label.is_walking)
    features = np.stack(feat_rows)
    labels = np.array(flags)
    if not labels.any() or labels.all():
        raise DegenerateTrainingError(
            "dataset needs both walking and non-walking windows")

    snr_metrics = _binary_cv(features, labels, args.folds, args.seed)

    for width in _floats(args.bands):
        spec = SweepSpec(ws_values=(args.ws,), widths_mhz=(width,),
                         step_mhz=args.step,
                         methods=(FusionMethod.WEIGHTING.value,),
                         modes=(InputMode.COMPLEX,), folds=args.folds,
                         seed=args.seed,
                         band_offsets=_floats(args.offsets)
                         if args.offsets else None)
        report = evaluate(data, spec, _solver_config(args),
                          walking_grouping=True)
        csi_metrics = next(iter(report.binary.values()))
        rows.append({
            "bandwidth": width,
            "tpr_snr": snr_metrics.tpr, "fpr_snr": snr_metrics.fpr,
            "f1_snr": snr_metrics.f1,
            "tpr_csi": csi_metrics.tpr, "fpr_csi": csi_metrics.fpr,
            "f1_csi": csi_metrics.f1,
        })

    os.makedirs(args.out, exist_ok=True)
    columns = ["bandwidth", "tpr_snr", "fpr_snr", "f1_snr",
               "tpr_csi", "fpr_csi", "f1_csi"]
    with open(os.path.join(args.out, "walking.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([
                row[c] if row[c] is not None else "" for c in columns])
    _write_manifest(args.out, "walking", {
        "data": os.path.abspath(args.data), "bands": args.bands,
        "step": args.step, "snr_window": args.snr_window, "ws": args.ws,
        "folds": args.folds, "seed": args.seed, "offsets": args.offsets,
        "epsilon": args.epsilon, "epsilon_scale": args.epsilon_scale,
        "max_iters": args.max_iters,
        "tol": args.tol, "rho": args.rho,
    })
    return 0


def cmd_class_distance(args) -> int:
    data = load_dataset(args.data, _guess_format(args.data))
    band = data[0].sample.csi.band
    sel = None
    if args.band_width is not None:
        sel = BandSelection.from_band(band, args.band_offset,
                                      args.band_width)
    groups: dict = {}
    for ls in data:
        csi = sanitise(ls.sample.csi)
        if sel is not None:
            csi = slice_band(csi, sel)
        groups.setdefault(ls.label, []).append(csi)

    from .classify import mode_vector
    from .evaluate import aggregate_class_distance
    result = {}
    for name in args.modes.split(","):
        mode = MODE_NAMES[name]
        vec_groups = {lab: [mode_vector(c, mode) for c in csis]
                      for lab, csis in groups.items()}
        result[name] = aggregate_class_distance(vec_groups)

    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "class_distance.json"), "w",
              newline="\n") as fh:
        json.dump(result, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_manifest(args.out, "class-distance", {
        "data": os.path.abspath(args.data), "modes": args.modes,
        "band_width": args.band_width, "band_offset": args.band_offset,
    })
    return 0


def _guess_format(path) -> DatasetFormat:
    with open(path, "rb") as fh:
        return (DatasetFormat.BINARY if fh.read(4) == b"CSIS"
                else DatasetFormat.TEXT)


def _add_solver_flags(p):
    p.add_argument("--epsilon", type=float, default=None,
                   help="absolute BPDN noise level; default scale*||y||")
    p.add_argument("--epsilon-scale", type=float, default=0.1,
                   help="noise level as a fraction of ||y|| when "
                        "--epsilon is not given")
    p.add_argument("--max-iters", type=int, default=2000)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--rho", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="csisrc",
        description="CSI activity recognition: synthetic data generation, "
                    "sparse-representation classification and evaluation")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    g = sub.add_parser("generate", help="write a synthetic CSI dataset")
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--format", choices=["text", "binary"], default="text")
    g.add_argument("--packets", type=int, default=40,
                   help="packets per activity class")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--static-jitter", type=float, default=0.02)
    g.add_argument("--walking-fluctuation", type=float, default=0.35)
    g.add_argument("--rfi", action="store_true",
                   help="inject interference into the default sub-band")
    g.add_argument("--rfi-noise", type=float, default=0.5)
    g.add_argument("--rfi-drop", type=float, default=10.0)
    g.add_argument("--rfi-fluctuation", type=float, default=5.0)
    g.set_defaults(func=cmd_generate)

    e = sub.add_parser("evaluate", help="cross-validated method sweep")
    e.add_argument("--data", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--ws", default="1,5", help="comma-separated window sizes")
    e.add_argument("--bands", default="20", help="bandwidth widths in MHz")
    e.add_argument("--step", type=float, default=5.0)
    e.add_argument("--offsets", default=None,
                   help="fixed band offsets in MHz instead of a full sweep")
    e.add_argument("--methods",
                   default="l1-voting,l1-sumup,l1-weighting," + KNN_METHOD)
    e.add_argument("--modes", default="complex")
    e.add_argument("--folds", type=int, default=10)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--knn-k", type=int, default=5)
    e.add_argument("--walking-binary", action="store_true",
                   help="also report walking/non-walking binary metrics")
    e.add_argument("--stub-oracle", action="store_true",
                   help=argparse.SUPPRESS)  # test hook: predict true labels
    _add_solver_flags(e)
    e.set_defaults(func=cmd_evaluate)

    w = sub.add_parser("walking", help="SNR vs CSI walking detection")
    w.add_argument("--data", required=True)
    w.add_argument("--out", required=True)
    w.add_argument("--bands", default="20")
    w.add_argument("--step", type=float, default=5.0)
    w.add_argument("--offsets", default=None)
    w.add_argument("--snr-window", type=int, default=10)
    w.add_argument("--ws", type=int, default=5)
    w.add_argument("--folds", type=int, default=10)
    w.add_argument("--seed", type=int, default=0)
    _add_solver_flags(w)
    w.set_defaults(func=cmd_walking)

    d = sub.add_parser("class-distance",
                       help="aggregate class-separability metric")
    d.add_argument("--data", required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--modes", default="complex,real")
    d.add_argument("--band-width", type=float, default=None)
    d.add_argument("--band-offset", type=float, default=0.0)
    d.set_defaults(func=cmd_class_distance)
    return parser


_ERROR_CATEGORIES = (
    (ParseError, "parse", 4),
    (DegenerateTrainingError, "degenerate-training", 5),
    (ConfigError, "config", 2),
    (FileNotFoundError, "io", 3),
    (PermissionError, "io", 3),
    (CsiError, "data", 4),
    (ValueError, "config", 2),
)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - map to exit categories
        for exc_type, category, code in _ERROR_CATEGORIES:
            if isinstance(exc, exc_type):
                print(json.dumps({"error": category, "message": str(exc)}),
                      file=sys.stderr)
                return code
        raise


if __name__ == "__main__":
    sys.exit(main())
