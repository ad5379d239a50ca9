"""Cross-validated sweeps over window size, bandwidth window and
classification method, plus the metrics: accuracy, confusion matrices,
binary walking metrics and the class-distance separability measure.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .classify import (FusionMethod, InputMode, build_mode_dictionary,
                       fuse_from_solutions, knn_classify, mode_vector)
from .model import (ActivityClass, BandDescriptor, CLASS_ORDER, CsiError,
                    DegenerateAtomError, LabeledSample, Sample)
from .preprocess import BandSelection, sanitise, slice_band
from .solver import SolverConfig, solve_bpdn

KNN_METHOD = "knn-voting"
METHOD_NAMES = tuple(m.value for m in FusionMethod) + (KNN_METHOD,)

WALKING_CLASSES = frozenset({ActivityClass.WB, ActivityClass.WL})


class StratificationError(CsiError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # rows: true class, columns: predicted
    labels: tuple

    @classmethod
    def empty(cls, labels=CLASS_ORDER) -> "ConfusionMatrix":
        return cls(counts=np.zeros((len(labels), len(labels)), dtype=int),
                   labels=tuple(labels))

    def add(self, true: ActivityClass, predicted: ActivityClass) -> None:
        self.counts[self.labels.index(true),
                    self.labels.index(predicted)] += 1

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        total = self.total
        return float(np.trace(self.counts)) / total if total else float("nan")


@dataclass(frozen=True)
class BinaryMetrics:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def tpr(self):
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else None

    @property
    def fpr(self):
        return self.fp / (self.fp + self.tn) if self.fp + self.tn else None

    @property
    def f1(self):
        denom = 2 * self.tp + self.fp + self.fn
        return 2 * self.tp / denom if denom else None


def walking_metrics(cm: ConfusionMatrix) -> BinaryMetrics:
    """Collapse an 8-class confusion matrix to walking vs non-walking."""
    tp = tn = fp = fn = 0
    for i, true in enumerate(cm.labels):
        for j, pred in enumerate(cm.labels):
            n = int(cm.counts[i, j])
            if true in WALKING_CLASSES:
                if pred in WALKING_CLASSES:
                    tp += n
                else:
                    fn += n
            else:
                if pred in WALKING_CLASSES:
                    fp += n
                else:
                    tn += n
    return BinaryMetrics(tp=tp, tn=tn, fp=fp, fn=fn)


@dataclass(frozen=True)
class SweepSpec:
    ws_values: tuple = (1, 5)
    widths_mhz: tuple = (20.0,)
    step_mhz: float = 5.0
    methods: tuple = tuple(m.value for m in FusionMethod)
    modes: tuple = (InputMode.COMPLEX,)
    folds: int = 10
    seed: int = 0
    band_offsets: tuple | None = None  # None: full sweep in step_mhz steps
    knn_k: int = 5

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("fold count must be >= 2")
        for m in self.methods:
            if m not in METHOD_NAMES:
                raise ValueError(f"unknown method {m!r}")


@dataclass(frozen=True)
class Window:
    label: ActivityClass
    samples: tuple


def make_windows(data: Sequence[LabeledSample], ws: int,
                 stride: int | None = None) -> list:
    """Non-overlapping (by default) windows of ws consecutive same-class
    samples, following dataset order; trailing remainders are dropped."""
    if ws < 1:
        raise ValueError("ws must be >= 1")
    stride = ws if stride is None else stride
    by_class: dict = {}
    for ls in data:
        by_class.setdefault(ls.label, []).append(ls)
    windows = []
    for label in CLASS_ORDER:
        members = by_class.get(label, [])
        for start in range(0, len(members) - ws + 1, stride):
            windows.append(Window(label=label,
                                  samples=tuple(members[start:start + ws])))
    return windows


def kfold_split(windows: Sequence[Window], k: int, seed: int) -> list:
    """Stratified k-fold over windows; windows stay atomic. Returns k
    (train_windows, test_windows) pairs, deterministic under seed."""
    rng = np.random.default_rng(seed)
    fold_of = {}
    for label in CLASS_ORDER:
        idxs = [i for i, w in enumerate(windows) if w.label is label]
        if not idxs:
            continue
        if len(idxs) < k:
            raise StratificationError(
                f"class {label.value} has {len(idxs)} windows, need >= {k}")
        order = rng.permutation(len(idxs))
        for pos, j in enumerate(order):
            fold_of[idxs[j]] = pos % k
    partitions = []
    for f in range(k):
        train = [w for i, w in enumerate(windows) if fold_of[i] != f]
        test = [w for i, w in enumerate(windows) if fold_of[i] == f]
        partitions.append((train, test))
    return partitions


def band_sweep(band: BandDescriptor, width_mhz: float,
               step_mhz: float) -> list:
    """Selections at offsets 0, step, 2*step, ... while they fit."""
    if width_mhz > band.total_bandwidth_mhz + 1e-9:
        raise ValueError(
            f"width {width_mhz} MHz exceeds band "
            f"{band.total_bandwidth_mhz} MHz")
    if step_mhz <= 0:
        raise ValueError("step must be > 0")
    count = int(np.floor(
        (band.total_bandwidth_mhz - width_mhz) / step_mhz + 1e-9)) + 1
    return [BandSelection.from_band(band, i * step_mhz, width_mhz)
            for i in range(count)]


# --- class distance -----------------------------------------------------

def _normalized(vectors) -> np.ndarray:
    arr = np.stack([np.asarray(v) for v in vectors]).astype(np.complex128)
    norms = np.linalg.norm(arr, axis=1)
    if np.any(norms == 0):
        raise DegenerateAtomError("zero vector cannot be normalized")
    return arr / norms[:, None]


def _mean_pairwise(a: np.ndarray, b: np.ndarray) -> float:
    diff = a[:, None, :] - b[None, :, :]
    return float(np.mean(np.linalg.norm(diff, axis=2)))


def class_distance(c1, c2) -> float:
    """Two times the mean cross-class distance minus both mean
    within-class distances, over unit-normalized samples."""
    a = _normalized(c1)
    b = _normalized(c2)
    return (2.0 * _mean_pairwise(a, b) - _mean_pairwise(a, a)
            - _mean_pairwise(b, b))


def aggregate_class_distance(groups: Mapping[ActivityClass, Sequence]) -> float:
    """Mean class_distance over all unordered class pairs."""
    labels = [lab for lab in CLASS_ORDER if lab in groups]
    labels += [lab for lab in groups if lab not in labels]
    if len(labels) < 2:
        raise ValueError("need at least 2 classes")
    dists = []
    for i in range(len(labels)):
        for j in range(i + 1, len(labels)):
            dists.append(class_distance(groups[labels[i]],
                                        groups[labels[j]]))
    return float(np.mean(dists))


# --- the sweep ----------------------------------------------------------

@dataclass
class EvalReport:
    cells: list = field(default_factory=list)
    summaries: dict = field(default_factory=dict)
    confusions: dict = field(default_factory=dict)
    binary: dict = field(default_factory=dict)

    def to_json_obj(self) -> dict:
        def key_str(key):
            ws, width, method, mode = key
            return f"ws={ws};B={width};method={method};mode={mode}"

        obj = {
            "cells": self.cells,
            "summaries": {key_str(k): v for k, v in self.summaries.items()},
            "confusions": {
                key_str(k): {
                    "labels": [lab.value for lab in cm.labels],
                    "counts": cm.counts.tolist(),
                } for k, cm in self.confusions.items()
            },
        }
        if self.binary:
            obj["binary"] = {
                key_str(k): {"tp": bm.tp, "tn": bm.tn, "fp": bm.fp,
                             "fn": bm.fn, "tpr": bm.tpr, "fpr": bm.fpr,
                             "f1": bm.f1}
                for k, bm in self.binary.items()
            }
        return obj


def _sanitise_dataset(data: Sequence[LabeledSample]) -> list:
    out = []
    for ls in data:
        out.append(LabeledSample(
            sample=Sample(csi=sanitise(ls.sample.csi),
                          snr_db=ls.sample.snr_db, seq=ls.sample.seq),
            label=ls.label))
    return out


def _slice_window(window: Window, sel: BandSelection) -> Window:
    return Window(label=window.label, samples=tuple(
        LabeledSample(sample=Sample(csi=slice_band(ls.sample.csi, sel),
                                    snr_db=ls.sample.snr_db,
                                    seq=ls.sample.seq),
                      label=ls.label)
        for ls in window.samples))


def evaluate(data: Sequence[LabeledSample], spec: SweepSpec,
             solver_cfg: SolverConfig = SolverConfig(),
             stub: Callable | None = None,
             walking_grouping: bool = False) -> EvalReport:
    """Run the full (ws, B, offset, method, mode) sweep under stratified
    k-fold cross validation.

    stub, when given, replaces every classifier: it is called with
    (true_label, window_samples) and its return value is used as the
    prediction (test hook).
    """
    if not data:
        raise ValueError("empty dataset")
    band = data[0].sample.csi.band
    data = _sanitise_dataset(data)
    report = EvalReport()
    l1_methods = [FusionMethod(m) for m in spec.methods if m != KNN_METHOD]
    use_knn = KNN_METHOD in spec.methods

    for ws in spec.ws_values:
        windows = make_windows(data, ws)
        partitions = kfold_split(windows, spec.folds, spec.seed)
        for width in spec.widths_mhz:
            if spec.band_offsets is not None:
                selections = [BandSelection.from_band(band, off, width)
                              for off in spec.band_offsets]
            else:
                selections = band_sweep(band, width, spec.step_mhz)
            accum: dict = {}
            for sel in selections:
                for fold, (train_w, test_w) in enumerate(partitions):
                    train = [ls for w in train_w
                             for ls in (_slice_window(w, sel).samples)]
                    test = [_slice_window(w, sel) for w in test_w]
                    for mode in spec.modes:
                        _run_cell(report, accum, train, test, ws, width,
                                  sel, fold, mode, l1_methods, use_knn,
                                  spec, solver_cfg, stub)
            for (method, mode), cm in accum.items():
                key = (ws, width, method, mode.value)
                report.confusions[key] = cm
                fold_accs = [c["accuracy"] for c in report.cells
                             if c["ws"] == ws and c["B"] == width
                             and c["method"] == method
                             and c["mode"] == mode.value]
                # mean over folds, then over band offsets; identical when
                # folds are equal-sized
                report.summaries[key] = float(np.mean(fold_accs))
                if walking_grouping:
                    report.binary[key] = walking_metrics(cm)
    return report


def _run_cell(report, accum, train, test, ws, width, sel, fold, mode,
              l1_methods, use_knn, spec, solver_cfg, stub):
    predictions: dict = {m.value: [] for m in l1_methods}
    if use_knn:
        predictions[KNN_METHOD] = []
    truths = [w.label for w in test]

    if stub is not None:
        for w in test:
            guess = stub(w.label, w.samples)
            for m in predictions:
                predictions[m].append(guess)
    else:
        if l1_methods:
            D = build_mode_dictionary(train, mode)
            for w in test:
                ys = [np.asarray(mode_vector(ls.sample.csi, mode),
                                 dtype=np.complex128) for ls in w.samples]
                x_hats = [solve_bpdn(D, y, solver_cfg).x_hat.coeffs
                          for y in ys]
                snrs = [ls.sample.snr_db for ls in w.samples]
                for m in l1_methods:
                    predictions[m.value].append(
                        fuse_from_solutions(D, ys, x_hats, snrs, m))
        if use_knn:
            for w in test:
                predictions[KNN_METHOD].append(knn_classify(
                    train, [ls.sample for ls in w.samples],
                    k=spec.knn_k, mode=mode))

    for method, preds in predictions.items():
        cm_key = (method, mode)
        if cm_key not in accum:
            accum[cm_key] = ConfusionMatrix.empty()
        correct = 0
        for true, pred in zip(truths, preds):
            accum[cm_key].add(true, pred)
            if pred is true:
                correct += 1
        report.cells.append({
            "ws": ws, "B": width, "offset": sel.start_mhz_offset,
            "method": method, "mode": mode.value, "fold": fold,
            "accuracy": correct / len(truths) if truths else float("nan"),
        })


# --- report files -------------------------------------------------------

def write_report_json(report: EvalReport, path) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(report.to_json_obj(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_cells_csv(report: EvalReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["ws", "B", "offset", "method", "mode", "fold",
                         "accuracy"])
        for cell in report.cells:
            writer.writerow([cell["ws"], cell["B"], cell["offset"],
                             cell["method"], cell["mode"], cell["fold"],
                             repr(cell["accuracy"])])


def write_confusions_csv(report: EvalReport, directory) -> None:
    import os
    for (ws, width, method, mode), cm in report.confusions.items():
        name = f"confusion_ws{ws}_B{width}_{method}_{mode}.csv"
        with open(os.path.join(directory, name), "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([""] + [lab.value for lab in cm.labels])
            for i, lab in enumerate(cm.labels):
                writer.writerow([lab.value] + list(cm.counts[i]))
