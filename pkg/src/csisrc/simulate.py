"""Deterministic synthetic CSI generator.

Each activity class gets a fixed multipath tap set; the frequency
response is the sum over taps of gain * exp(-2*pi*j*f*delay) per
sub-carrier. Static classes see small per-packet tap jitter, walking
classes re-randomise their tap gains every packet. Optional RFI adds
complex Gaussian noise confined to one sub-band and degrades the SNR
series. Everything is reproducible from a single seed; the RFI draws
come from separate substreams so runs with and without RFI share the
same channel realisations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .model import (ActivityClass, BandDescriptor, CLASS_ORDER, CsiVector,
                    LabeledSample, Sample)
from .preprocess import BandSelection


class ConfigError(Exception):
    pass


DEFAULT_BAND = BandDescriptor(center_freq_mhz=5800.0,
                              total_bandwidth_mhz=125.0,
                              num_subcarriers=320)


def default_taps() -> dict:
    """Shipped per-class tap sets: {class: [(delay_ns, complex gain)]}."""
    text = (resources.files("csisrc") / "data" / "default_taps.json").read_text()
    raw = json.loads(text)
    return {ActivityClass(label): [(float(d), complex(re, im))
                                   for d, re, im in taps]
            for label, taps in raw.items()}


@dataclass(frozen=True)
class ScenarioConfig:
    band: BandDescriptor = DEFAULT_BAND
    taps: dict | None = None  # None: shipped defaults
    static_jitter: float = 0.02
    walking_fluctuation: float = 0.35
    packets_per_class: int = 40
    base_snr_db: float = 25.0
    snr_jitter_db: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.static_jitter < 0 or self.walking_fluctuation < 0:
            raise ConfigError("jitter scales must be >= 0")
        if self.packets_per_class < 1:
            raise ConfigError("packets_per_class must be >= 1")

    def resolved_taps(self) -> dict:
        taps = self.taps if self.taps is not None else default_taps()
        for label, tap_list in taps.items():
            if not tap_list:
                raise ConfigError(f"class {label} has no taps")
        return taps


def default_rfi_selection(band: BandDescriptor = DEFAULT_BAND) -> BandSelection:
    """A 20 MHz slice near the top of the band, standing in for one
    interfered 802.11 channel."""
    return BandSelection.from_band(band, start_mhz_offset=100.0,
                                   width_mhz=20.0)


@dataclass(frozen=True)
class RfiConfig:
    selection: BandSelection | None = None  # None: default 20 MHz slice
    noise_power: float = 0.5  # noise power relative to mean signal power
    snr_drop_db: float = 10.0
    snr_fluctuation_db: float = 5.0

    def __post_init__(self):
        if self.noise_power < 0 or self.snr_fluctuation_db < 0:
            raise ConfigError(
                "noise_power and snr_fluctuation_db must be >= 0")

    def resolved_selection(self, band: BandDescriptor) -> BandSelection:
        sel = self.selection or default_rfi_selection(band)
        if sel.hi > band.num_subcarriers:
            raise ConfigError("RFI sub-band outside the scenario band")
        return sel


def _channel_response(freqs_mhz: np.ndarray, taps) -> np.ndarray:
    csi = np.zeros(len(freqs_mhz), dtype=np.complex128)
    for delay_ns, gain in taps:
        # MHz * ns = 1e-3 cycles
        csi += gain * np.exp(-2j * np.pi * freqs_mhz * delay_ns * 1e-3)
    return csi


def _complex_randn(rng, size):
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) \
        / np.sqrt(2.0)


def generate(scenario: ScenarioConfig = ScenarioConfig(),
             rfi: RfiConfig | None = None) -> list:
    """Produce packets_per_class labelled samples per activity class."""
    taps = scenario.resolved_taps()
    freqs = scenario.band.subcarrier_freqs_mhz()
    samples = []
    seq = 0
    if rfi is not None:
        sel = rfi.resolved_selection(scenario.band)
    for class_idx, label in enumerate(CLASS_ORDER):
        if label not in taps:
            continue
        class_taps = taps[label]
        rng = np.random.default_rng([scenario.seed, class_idx])
        # separate substream so RFI never perturbs the channel draws
        rng_rfi = np.random.default_rng([scenario.seed, 1000 + class_idx])
        for _ in range(scenario.packets_per_class):
            if label.is_walking:
                gains = [g + scenario.walking_fluctuation
                         * _complex_randn(rng, ()) for _, g in class_taps]
            else:
                gains = [g * (1.0 + scenario.static_jitter
                              * _complex_randn(rng, ()))
                         for _, g in class_taps]
            packet_taps = [(d, g) for (d, _), g in zip(class_taps, gains)]
            csi = _channel_response(freqs, packet_taps)
            snr = scenario.base_snr_db \
                + scenario.snr_jitter_db * rng.standard_normal()
            if rfi is not None:
                power = float(np.mean(np.abs(csi) ** 2))
                # the per-packet interference strength moves the reported
                # SNR, so SNR-weighted fusion has a real signal to exploit
                u = rng_rfi.standard_normal()
                drop = rfi.snr_fluctuation_db * u
                sigma = np.sqrt(rfi.noise_power * power
                                * 10.0 ** (-drop / 10.0))
                noise = sigma * _complex_randn(rng_rfi, sel.hi - sel.lo)
                csi = csi.copy()
                csi[sel.lo:sel.hi] += noise
                snr = snr - rfi.snr_drop_db + drop
            samples.append(LabeledSample(
                sample=Sample(csi=CsiVector(values=csi, band=scenario.band),
                              snr_db=float(snr), seq=seq),
                label=label,
            ))
            seq += 1
    return samples
