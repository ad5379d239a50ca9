"""Core domain types and the CSI dataset file format."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np


class CsiError(Exception):
    """Base class for errors raised by this package."""


class DimensionError(CsiError):
    pass


class ParseError(CsiError):
    pass


class DegenerateAtomError(CsiError):
    pass


class EmptyInputError(CsiError):
    pass


class ActivityClass(Enum):
    """Eight location-oriented activity classes, in fixed order.

    The order below is frozen; dictionary class offsets and tie-breaking
    both rely on it.
    """

    E = "E"      # empty room
    L = "L"      # lying on the bed
    SiB = "SiB"  # sitting in the bedroom
    SiL = "SiL"  # sitting in the living room
    StB = "StB"  # standing in the bedroom
    StL = "StL"  # standing in the living room
    WB = "WB"    # walking in the bedroom
    WL = "WL"    # walking in the living room

    @property
    def is_walking(self) -> bool:
        return self in (ActivityClass.WB, ActivityClass.WL)


CLASS_ORDER = tuple(ActivityClass)


@dataclass(frozen=True)
class BandDescriptor:
    center_freq_mhz: float
    total_bandwidth_mhz: float
    num_subcarriers: int

    def __post_init__(self):
        if self.num_subcarriers < 1:
            raise ValueError("num_subcarriers must be >= 1")
        if self.total_bandwidth_mhz <= 0:
            raise ValueError("total_bandwidth_mhz must be > 0")

    @property
    def subcarrier_spacing_mhz(self) -> float:
        return self.total_bandwidth_mhz / self.num_subcarriers

    def subcarrier_freqs_mhz(self) -> np.ndarray:
        """Absolute centre frequency of every sub-carrier, in MHz."""
        lo = self.center_freq_mhz - self.total_bandwidth_mhz / 2.0
        spacing = self.subcarrier_spacing_mhz
        return lo + spacing * (np.arange(self.num_subcarriers) + 0.5)


@dataclass(frozen=True, eq=False)
class CsiVector:
    """One packet's complex channel response across sub-carriers."""

    values: np.ndarray
    band: BandDescriptor

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or len(values) < 1:
            raise DimensionError("CSI values must be a non-empty 1-D vector")
        if len(values) != self.band.num_subcarriers:
            raise DimensionError(
                f"CSI length {len(values)} != band sub-carrier count "
                f"{self.band.num_subcarriers}"
            )
        if not np.all(np.isfinite(values.view(np.float64))):
            raise ValueError("CSI values must be finite")

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True, eq=False)
class Sample:
    csi: CsiVector
    snr_db: float
    seq: int

    def __post_init__(self):
        if not np.isfinite(self.snr_db):
            raise ValueError("snr_db must be finite")
        if self.seq < 0:
            raise ValueError("seq must be non-negative")


@dataclass(frozen=True, eq=False)
class LabeledSample:
    sample: Sample
    label: ActivityClass


@dataclass(frozen=True, eq=False)
class Dictionary:
    """Concatenated per-class training columns with class boundaries.

    atoms has shape (n_subcarriers, n_columns); class_offsets lists
    (label, start, count) triples in fixed class order.
    """

    atoms: np.ndarray
    class_offsets: tuple

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=np.complex128)
        atoms.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        total = sum(count for _, _, count in self.class_offsets)
        if total != atoms.shape[1]:
            raise DimensionError("class offsets do not cover all columns")
        pos = 0
        for _, start, count in self.class_offsets:
            if start != pos or count < 1:
                raise DimensionError("class offsets must be contiguous")
            pos += count

    @property
    def n_rows(self) -> int:
        return self.atoms.shape[0]

    @property
    def n_columns(self) -> int:
        return self.atoms.shape[1]

    @property
    def labels(self) -> tuple:
        return tuple(label for label, _, _ in self.class_offsets)

    def class_slice(self, label: ActivityClass) -> slice:
        for lab, start, count in self.class_offsets:
            if lab is label:
                return slice(start, start + count)
        raise KeyError(label)


@dataclass(frozen=True, eq=False)
class CoefficientVector:
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        if not np.all(np.isfinite(coeffs.view(np.float64))):
            raise ValueError("coefficients must be finite")

    def __len__(self) -> int:
        return len(self.coeffs)


def build_dictionary(training: Sequence[LabeledSample],
                     normalize: bool = True) -> Dictionary:
    """Group training CSI columns by class, optionally unit-normalised.

    Columns appear in fixed class order; within a class they keep the
    order of the training sequence.
    """
    if not training:
        raise EmptyInputError("training set is empty")
    length = len(training[0].sample.csi)
    for ls in training:
        if len(ls.sample.csi) != length:
            raise DimensionError("training CSI vectors differ in length")
    columns = []
    offsets = []
    pos = 0
    for label in CLASS_ORDER:
        members = [ls for ls in training if ls.label is label]
        if not members:
            continue
        for ls in members:
            col = ls.sample.csi.values.astype(np.complex128)
            if normalize:
                norm = np.linalg.norm(col)
                if norm == 0.0:
                    raise DegenerateAtomError(
                        f"zero-norm training vector in class {label.value}")
                col = col / norm
            columns.append(col)
        offsets.append((label, pos, len(members)))
        pos += len(members)
    atoms = np.stack(columns, axis=1)
    return Dictionary(atoms=atoms, class_offsets=tuple(offsets))


# --- dataset file format ------------------------------------------------
#
# Text (v1): header line
#   csi-src v1; subcarriers=N; bandwidth_mhz=B; center_mhz=F
# then one record per line:
#   label,seq,snr_db,re_1,im_1,...,re_N,im_N
# Binary: magic b"CSIS", then uint32 N, f64 bandwidth_mhz, f64 center_mhz,
# then records of (uint8 class index, uint64 seq, f64 snr, 2N f64),
# everything little-endian.

TEXT_MAGIC = "csi-src v1"
BIN_MAGIC = b"CSIS"

_LABEL_INDEX = {label: i for i, label in enumerate(CLASS_ORDER)}


class DatasetFormat(Enum):
    TEXT = "text"
    BINARY = "binary"


def _format_header(band: BandDescriptor) -> str:
    return (f"{TEXT_MAGIC}; subcarriers={band.num_subcarriers}; "
            f"bandwidth_mhz={band.total_bandwidth_mhz!r}; "
            f"center_mhz={band.center_freq_mhz!r}")


def _parse_header(line: str) -> BandDescriptor:
    parts = [p.strip() for p in line.strip().split(";")]
    if not parts or parts[0] != TEXT_MAGIC:
        raise ParseError(f"bad header: {line!r}")
    fields = {}
    for part in parts[1:]:
        key, _, value = part.partition("=")
        fields[key.strip()] = value.strip()
    try:
        return BandDescriptor(
            center_freq_mhz=float(fields["center_mhz"]),
            total_bandwidth_mhz=float(fields["bandwidth_mhz"]),
            num_subcarriers=int(fields["subcarriers"]),
        )
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad header: {line!r}") from exc


def save_dataset(samples: Sequence[LabeledSample], path,
                 fmt: DatasetFormat = DatasetFormat.TEXT,
                 band: BandDescriptor | None = None) -> None:
    if band is None:
        if not samples:
            raise EmptyInputError(
                "band descriptor required to save an empty dataset")
        band = samples[0].sample.csi.band
    if fmt is DatasetFormat.TEXT:
        with open(path, "w", newline="\n") as fh:
            fh.write(_format_header(band) + "\n")
            for ls in samples:
                values = ls.sample.csi.values
                parts = [ls.label.value, str(ls.sample.seq),
                         repr(float(ls.sample.snr_db))]
                for v in values:
                    parts.append(repr(float(v.real)))
                    parts.append(repr(float(v.imag)))
                fh.write(",".join(parts) + "\n")
    else:
        n = band.num_subcarriers
        with open(path, "wb") as fh:
            fh.write(BIN_MAGIC)
            fh.write(struct.pack("<Idd", n, band.total_bandwidth_mhz,
                                 band.center_freq_mhz))
            for ls in samples:
                fh.write(struct.pack("<BQd", _LABEL_INDEX[ls.label],
                                     ls.sample.seq, ls.sample.snr_db))
                interleaved = np.empty(2 * n, dtype="<f8")
                interleaved[0::2] = ls.sample.csi.values.real
                interleaved[1::2] = ls.sample.csi.values.imag
                fh.write(interleaved.tobytes())


def _parse_text_record(line: str, row: int, band: BandDescriptor) -> LabeledSample:
    parts = line.split(",")
    n = band.num_subcarriers
    if len(parts) != 3 + 2 * n:
        raise DimensionError(
            f"record {row}: expected {3 + 2 * n} fields, got {len(parts)}")
    try:
        label = ActivityClass(parts[0])
        seq = int(parts[1])
        snr = float(parts[2])
        floats = np.array([float(p) for p in parts[3:]])
    except ValueError as exc:
        raise ParseError(f"record {row}: {exc}") from exc
    if not np.all(np.isfinite(floats)) or not np.isfinite(snr):
        raise ParseError(f"record {row}: non-finite value")
    values = floats[0::2] + 1j * floats[1::2]
    return LabeledSample(
        sample=Sample(csi=CsiVector(values=values, band=band),
                      snr_db=snr, seq=seq),
        label=label,
    )


def load_dataset(path, fmt: DatasetFormat = DatasetFormat.TEXT) -> list:
    """Read a dataset file; returns samples in file order."""
    if fmt is DatasetFormat.TEXT:
        with open(path) as fh:
            header = fh.readline()
            if not header:
                raise ParseError("empty file")
            band = _parse_header(header)
            samples = []
            for row, line in enumerate(fh):
                line = line.strip()
                if not line:
                    continue
                samples.append(_parse_text_record(line, row, band))
            return samples
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != BIN_MAGIC:
            raise ParseError(f"bad magic bytes {magic!r}")
        header = fh.read(struct.calcsize("<Idd"))
        if len(header) != struct.calcsize("<Idd"):
            raise ParseError("truncated header")
        n, bw, center = struct.unpack("<Idd", header)
        band = BandDescriptor(center_freq_mhz=center, total_bandwidth_mhz=bw,
                              num_subcarriers=n)
        record_size = struct.calcsize("<BQd") + 16 * n
        samples = []
        row = 0
        while True:
            chunk = fh.read(record_size)
            if not chunk:
                break
            if len(chunk) != record_size:
                raise ParseError(f"record {row}: truncated")
            idx, seq, snr = struct.unpack_from("<BQd", chunk)
            if idx >= len(CLASS_ORDER):
                raise ParseError(f"record {row}: unknown class index {idx}")
            floats = np.frombuffer(chunk, dtype="<f8",
                                   offset=struct.calcsize("<BQd"))
            if not np.all(np.isfinite(floats)) or not np.isfinite(snr):
                raise ParseError(f"record {row}: non-finite value")
            values = floats[0::2] + 1j * floats[1::2]
            samples.append(LabeledSample(
                sample=Sample(csi=CsiVector(values=values, band=band),
                              snr_db=snr, seq=seq),
                label=CLASS_ORDER[idx],
            ))
            row += 1
        return samples
