"""Single-sample SRC, the three window-fusion methods and the
kNN-voting baseline, over complex / amplitude / stacked-feature inputs.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .model import (ActivityClass, CLASS_ORDER, CsiVector, Dictionary,
                    DegenerateAtomError, DimensionError, EmptyInputError,
                    LabeledSample, Sample)
from .preprocess import sanitised_phase
from .solver import SolverConfig, class_residuals, solve_bpdn


class InputMode(Enum):
    COMPLEX = "complex"
    REAL_AMPLITUDE = "real"
    FEATURES_IN_COLUMN = "features-in-column"


class FusionMethod(Enum):
    VOTING = "l1-voting"
    SUMUP = "l1-sumup"
    WEIGHTING = "l1-weighting"


@dataclass(frozen=True)
class WindowConfig:
    ws: int = 5
    stride: int | None = None  # None: non-overlapping (stride = ws)

    def __post_init__(self):
        if self.ws < 1:
            raise ValueError("ws must be >= 1")
        if self.stride is not None and self.stride < 1:
            raise ValueError("stride must be >= 1")

    @property
    def effective_stride(self) -> int:
        return self.ws if self.stride is None else self.stride


@dataclass(frozen=True, eq=False)
class FusionWeights:
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be non-negative and sum to 1")


def mode_vector(csi: CsiVector, mode: InputMode) -> np.ndarray:
    """Vector representation of one CSI sample under an input mode.

    FEATURES_IN_COLUMN stacks the amplitude vector on top of the
    (sanitised) phase vector, giving a real vector of twice the length.
    """
    if mode is InputMode.COMPLEX:
        return np.asarray(csi.values)
    if mode is InputMode.REAL_AMPLITUDE:
        return np.abs(csi.values)
    return np.concatenate([np.abs(csi.values), sanitised_phase(csi)])


def build_mode_dictionary(training: Sequence[LabeledSample],
                          mode: InputMode,
                          normalize: bool = True) -> Dictionary:
    """Dictionary over mode-transformed training vectors, grouped by
    class in fixed order."""
    if not training:
        raise EmptyInputError("training set is empty")
    columns = []
    offsets = []
    pos = 0
    for label in CLASS_ORDER:
        members = [ls for ls in training if ls.label is label]
        if not members:
            continue
        for ls in members:
            col = np.asarray(mode_vector(ls.sample.csi, mode),
                             dtype=np.complex128)
            if normalize:
                norm = np.linalg.norm(col)
                if norm == 0.0:
                    raise DegenerateAtomError(
                        f"zero-norm training vector in class {label.value}")
                col = col / norm
            columns.append(col)
        offsets.append((label, pos, len(members)))
        pos += len(members)
    return Dictionary(atoms=np.stack(columns, axis=1),
                      class_offsets=tuple(offsets))


def _argmin_class(D: Dictionary, residuals: np.ndarray) -> ActivityClass:
    # np.argmin returns the first minimum; offsets are in fixed class
    # order, so ties break the right way for free
    return D.labels[int(np.argmin(residuals))]


def src_classify(D: Dictionary, y, cfg: SolverConfig = SolverConfig()):
    """Standard SRC: solve BPDN, pick the class with smallest residual.

    Returns (class, residual vector in dictionary class order).
    """
    result = solve_bpdn(D, y, cfg)
    residuals = class_residuals(D, y, result.x_hat)
    return _argmin_class(D, residuals), residuals


def compute_weights(snrs_db: Sequence[float]) -> FusionWeights:
    """SNR-derived fusion weights: w_i proportional to 10^(S_i / 20)."""
    snrs = np.asarray(snrs_db, dtype=float)
    if snrs.size == 0:
        raise EmptyInputError("SNR vector is empty")
    if not np.all(np.isfinite(snrs)):
        raise ValueError("SNR values must be finite")
    # subtracting the max keeps the powers in range; the common factor
    # cancels in the ratio
    amp = np.power(10.0, (snrs - snrs.max()) / 20.0)
    return FusionWeights(weights=amp / amp.sum())


def _fused_decision(D: Dictionary, ys, x_hats, weights) -> ActivityClass:
    y_fused = np.zeros_like(ys[0])
    x_fused = np.zeros(D.n_columns, dtype=np.complex128)
    for w, y, x in zip(weights, ys, x_hats):
        y_fused = y_fused + w * y
        x_fused = x_fused + w * x
    residuals = class_residuals(D, y_fused, x_fused)
    return _argmin_class(D, residuals)


def fuse_from_solutions(D: Dictionary, ys, x_hats, snrs_db,
                        method: FusionMethod) -> ActivityClass:
    """Fusion decision from already-solved per-sample coefficients.

    Lets the evaluation harness share one set of BPDN solves across all
    fusion methods.
    """
    if method is FusionMethod.VOTING:
        decisions = []
        residual_sums = Counter()
        for y, x in zip(ys, x_hats):
            residuals = class_residuals(D, y, x)
            decisions.append(_argmin_class(D, residuals))
            for label, r in zip(D.labels, residuals):
                residual_sums[label] += r
        counts = Counter(decisions)
        top = max(counts.values())
        tied = [lab for lab in D.labels if counts.get(lab, 0) == top]
        if len(tied) == 1:
            return tied[0]
        # modal tie: smallest summed residual, then fixed class order
        best = min(residual_sums[lab] for lab in tied)
        for lab in tied:
            if residual_sums[lab] == best:
                return lab
    if method is FusionMethod.SUMUP:
        weights = np.full(len(ys), 1.0 / len(ys))
    else:
        weights = compute_weights(snrs_db).weights
    return _fused_decision(D, ys, x_hats, weights)


def fuse_classify(D: Dictionary, window: Sequence[Sample],
                  method: FusionMethod, mode: InputMode = InputMode.COMPLEX,
                  cfg: SolverConfig = SolverConfig()) -> ActivityClass:
    """Classify a window of consecutive samples with one fusion method."""
    if not window:
        raise EmptyInputError("empty window")
    ys = [np.asarray(mode_vector(s.csi, mode), dtype=np.complex128)
          for s in window]
    x_hats = [solve_bpdn(D, y, cfg).x_hat.coeffs for y in ys]
    return fuse_from_solutions(D, ys, x_hats,
                               [s.snr_db for s in window], method)


def _modal_label(labels: Sequence[ActivityClass]) -> ActivityClass:
    counts = Counter(labels)
    top = max(counts.values())
    for lab in CLASS_ORDER:
        if counts.get(lab, 0) == top:
            return lab
    raise AssertionError("unreachable")


def knn_classify(training: Sequence[LabeledSample],
                 window: Sequence[Sample], k: int = 5,
                 mode: InputMode = InputMode.COMPLEX) -> ActivityClass:
    """kNN with majority voting per sample, then over the window."""
    if not training:
        raise EmptyInputError("training set is empty")
    if not window:
        raise EmptyInputError("empty window")
    if k < 1 or k > len(training):
        raise ValueError(f"k={k} outside [1, {len(training)}]")
    train_vecs = np.stack([mode_vector(ls.sample.csi, mode)
                           for ls in training], axis=0)
    train_labels = [ls.label for ls in training]
    decisions = []
    for s in window:
        q = mode_vector(s.csi, mode)
        if q.shape[0] != train_vecs.shape[1]:
            raise DimensionError("query length differs from training")
        dists = np.linalg.norm(train_vecs - q[None, :], axis=1)
        nearest = np.argsort(dists, kind="stable")[:k]
        decisions.append(_modal_label([train_labels[i] for i in nearest]))
    return _modal_label(decisions)
