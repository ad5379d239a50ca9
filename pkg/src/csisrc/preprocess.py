"""CSI sanitisation, exponential smoothing and bandwidth-window slicing.

Sanitisation removes the unknown per-packet phase shift (a constant plus
a linear-in-frequency term from the unsynchronised timing offset) while
leaving per-sub-carrier amplitudes untouched.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import BandDescriptor, CsiVector, DimensionError


@dataclass(frozen=True)
class BandSelection:
    """A contiguous sub-band, resolved to a half-open sub-carrier range."""

    start_mhz_offset: float
    width_mhz: float
    lo: int
    hi: int

    @classmethod
    def from_band(cls, band: BandDescriptor, start_mhz_offset: float,
                  width_mhz: float) -> "BandSelection":
        if start_mhz_offset < 0 or width_mhz <= 0:
            raise ValueError("selection offsets must be non-negative, width > 0")
        if start_mhz_offset + width_mhz > band.total_bandwidth_mhz + 1e-9:
            raise ValueError(
                f"selection [{start_mhz_offset}, "
                f"{start_mhz_offset + width_mhz}) MHz outside "
                f"{band.total_bandwidth_mhz} MHz band")
        per_mhz = band.num_subcarriers / band.total_bandwidth_mhz
        lo = int(np.floor(start_mhz_offset * per_mhz + 1e-9))
        count = int(np.floor(width_mhz * per_mhz + 1e-9))
        if count < 1:
            raise ValueError("selection narrower than one sub-carrier")
        return cls(start_mhz_offset=start_mhz_offset, width_mhz=width_mhz,
                   lo=lo, hi=lo + count)


@dataclass(frozen=True)
class SmoothingConfig:
    alpha: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must be in (0, 1]")


# A fitted line below this is treated as already detrended; keeps repeated
# sanitisation a strict fixed point.
_TREND_EPS = 1e-13
_MAX_DETREND_PASSES = 32


def _fit_line(idx: np.ndarray, u: np.ndarray):
    """Least-squares (slope, intercept) of u against idx."""
    if len(idx) < 2:
        return 0.0, float(u[0])
    x = idx.astype(float)
    xm = x.mean()
    um = u.mean()
    denom = float(np.sum((x - xm) ** 2))
    slope = float(np.sum((x - xm) * (u - um)) / denom)
    return slope, um - slope * xm


def _detrended_phase(values: np.ndarray, length: int) -> np.ndarray:
    """Unwrapped phases with the least-squares linear trend removed.

    Zero-amplitude entries get phase 0 and are excluded from the fit.
    Iterates because re-wrapping after a subtraction can expose a fresh
    trend; stops as soon as the fitted line is negligible, so an already
    sanitised vector passes through untouched.
    """
    nonzero = np.abs(values) > 0.0
    phase = np.zeros(length)
    if not np.any(nonzero):
        return phase
    idx = np.flatnonzero(nonzero)
    span = max(float(idx[-1] - idx[0]), 1.0)
    wrapped = np.angle(values[idx])
    two_pi = 2.0 * np.pi
    for _ in range(_MAX_DETREND_PASSES):
        u = np.unwrap(wrapped)
        slope, intercept = _fit_line(idx, u)
        # Phase is only defined modulo 2*pi, so a whole-turn intercept is
        # already clean (and subtracting it would be a no-op anyway).
        intercept -= two_pi * np.round(intercept / two_pi)
        if abs(slope) * span + abs(intercept) < _TREND_EPS:
            phase[idx] = wrapped
            return phase
        u = u - (slope * idx + intercept)
        wrapped = np.angle(np.exp(1j * u))
    phase[idx] = wrapped
    return phase


def sanitise(csi: CsiVector) -> CsiVector:
    """Remove the best-fit linear phase trend, preserving amplitudes."""
    nonzero = np.abs(csi.values) > 0.0
    phase = _detrended_phase(csi.values, len(csi))
    if not np.any(np.abs(phase[nonzero] - np.angle(csi.values[nonzero])) > 0):
        return csi  # already sanitised; exact fixed point
    values = np.abs(csi.values) * np.exp(1j * phase)
    values[~nonzero] = 0.0
    return CsiVector(values=values, band=csi.band)


def sanitised_phase(csi: CsiVector) -> np.ndarray:
    """Per-sub-carrier phase after detrending (real vector)."""
    return _detrended_phase(csi.values, len(csi))


def amplitude(csi: CsiVector) -> np.ndarray:
    """Per-sub-carrier modulus of the channel response."""
    return np.abs(csi.values)


def smooth(stream: Sequence[CsiVector],
           cfg: SmoothingConfig = SmoothingConfig()) -> list:
    """First-order exponential smoother over the complex values."""
    out = []
    state = None
    for csi in stream:
        if state is not None and len(csi) != len(state):
            raise DimensionError("stream vectors differ in length")
        if state is None:
            state = csi.values.copy()
        else:
            state = cfg.alpha * csi.values + (1.0 - cfg.alpha) * state
        out.append(CsiVector(values=state, band=csi.band))
    return out


def slice_band(csi: CsiVector, sel: BandSelection) -> CsiVector:
    """Keep the sub-carriers inside the selection."""
    if sel.hi > len(csi) or sel.lo < 0:
        raise ValueError("selection outside the CSI band")
    spacing = csi.band.subcarrier_spacing_mhz
    count = sel.hi - sel.lo
    lo_edge = csi.band.center_freq_mhz - csi.band.total_bandwidth_mhz / 2.0
    sliced_band = BandDescriptor(
        center_freq_mhz=lo_edge + spacing * (sel.lo + count / 2.0),
        total_bandwidth_mhz=spacing * count,
        num_subcarriers=count,
    )
    return CsiVector(values=csi.values[sel.lo:sel.hi], band=sliced_band)
