"""Baseline calibration and band-pass filtering of neural records.

The band-pass is a causal Butterworth low-pass cascaded with a Butterworth
high-pass, each designed as bilinear-transform second-order sections with
frequency prewarping. Designing the two edges separately keeps the
coefficients well conditioned when the low edge sits at 0.001 Hz on a
5.2 Hz clock. The filter is single pass, so outputs carry phase delay and
a start-up transient; no samples are trimmed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .data import NOMINAL_RATE_HZ, NeuralRecord
from .errors import ValidationError


@dataclass(frozen=True)
class FilterSpec:
    low_cut: float = 0.001
    high_cut: float = 0.2
    order: int = 3
    sample_rate: float = NOMINAL_RATE_HZ

    def __post_init__(self):
        if not 0 < self.low_cut < self.high_cut < self.sample_rate / 2:
            raise ValidationError(
                "need 0 < low_cut < high_cut < sample_rate/2, got "
                f"{self.low_cut}, {self.high_cut}, {self.sample_rate}"
            )
        if int(self.order) != self.order or self.order < 1:
            raise ValidationError(f"order must be a positive integer, got {self.order}")

    @classmethod
    def from_config(cls, block: dict, sample_rate=NOMINAL_RATE_HZ) -> "FilterSpec":
        return cls(
            low_cut=block.get("low_cut_hz", 0.001),
            high_cut=block.get("high_cut_hz", 0.2),
            order=block.get("order", 3),
            sample_rate=block.get("sample_rate_hz", sample_rate),
        )


def calibrate_baseline(record: NeuralRecord, baseline: NeuralRecord) -> NeuralRecord:
    """Subtract the per-channel baseline mean from every sample."""
    if baseline.n_samples == 0:
        raise ValidationError("empty baseline")
    if baseline.n_channels != record.n_channels:
        raise ValidationError(
            f"channel mismatch: record has {record.n_channels}, baseline {baseline.n_channels}"
        )
    return record.with_samples(record.samples - baseline.samples.mean(axis=0))


def _butter_polys(order: int) -> list:
    """Normalized analog Butterworth factors as (s^2, s^1, s^0) coefficient triples.

    An odd order contributes one first-order factor (0, 1, 1).
    """
    polys = []
    for k in range(1, order // 2 + 1):
        a = -2.0 * math.cos((2 * k + order - 1) * math.pi / (2 * order))
        polys.append((1.0, a, 1.0))
    if order % 2:
        polys.append((0.0, 1.0, 1.0))
    return polys


def _bilinear_sections(order: int, cutoff: float, fs: float, highpass: bool) -> np.ndarray:
    # prewarped tan(pi fc / fs); s/wc -> (1/K)(1 - z^-1)/(1 + z^-1)
    K = math.tan(math.pi * cutoff / fs)
    rows = []
    for c2, c1, c0 in _butter_polys(order):
        if c2 == 0.0:
            a0 = 1.0 + K
            a = [1.0, (K - 1.0) / a0, 0.0]
            b = [1.0 / a0, -1.0 / a0, 0.0] if highpass else [K / a0, K / a0, 0.0]
        else:
            a0 = 1.0 + c1 * K + K * K
            a = [1.0, (2.0 * K * K - 2.0) / a0, (1.0 - c1 * K + K * K) / a0]
            if highpass:
                b = [1.0 / a0, -2.0 / a0, 1.0 / a0]
            else:
                g = K * K / a0
                b = [g, 2.0 * g, g]
        rows.append(b + a)
    return np.array(rows)


def design_bandpass(spec: FilterSpec) -> np.ndarray:
    """Second-order sections (rows of b0 b1 b2 a0 a1 a2): low-pass rows then high-pass rows."""
    lp = _bilinear_sections(spec.order, spec.high_cut, spec.sample_rate, highpass=False)
    hp = _bilinear_sections(spec.order, spec.low_cut, spec.sample_rate, highpass=True)
    sos = np.vstack([lp, hp])
    mags = section_pole_magnitudes(sos)
    if np.any(mags >= 1.0):
        raise ValidationError(f"unstable coefficient set (max pole magnitude {mags.max():.12f})")
    return sos


def section_pole_magnitudes(sos: np.ndarray) -> np.ndarray:
    mags = []
    for row in sos:
        den = row[3:]
        if den[2] == 0.0:
            roots = np.roots(den[:2])
        else:
            roots = np.roots(den)
        mags.extend(np.abs(roots))
    return np.array(mags)


def frequency_response(sos: np.ndarray, freqs, sample_rate: float) -> np.ndarray:
    """Complex response H(e^{jw}) of the cascade at ``freqs`` (Hz)."""
    z1 = np.exp(-2j * np.pi * np.asarray(freqs, dtype=float) / sample_rate)
    h = np.ones_like(z1)
    for b0, b1, b2, a0, a1, a2 in sos:
        h *= (b0 + b1 * z1 + b2 * z1 ** 2) / (a0 + a1 * z1 + a2 * z1 ** 2)
    return h


def apply_sos(sos: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Causal cascade, zero initial state, along axis 0."""
    return signal.sosfilt(sos, np.asarray(x, dtype=float), axis=0)


def bandpass_filter(record: NeuralRecord, spec: FilterSpec = FilterSpec()) -> NeuralRecord:
    """Filter each channel independently; output length equals input length."""
    if record.n_samples < 3 * spec.order:
        raise ValidationError(
            f"record too short: {record.n_samples} samples, need at least {3 * spec.order}"
        )
    sos = design_bandpass(spec)
    return record.with_samples(apply_sos(sos, record.samples))


def preprocess(record: NeuralRecord, baseline: NeuralRecord, spec: FilterSpec = FilterSpec()) -> NeuralRecord:
    return bandpass_filter(calibrate_baseline(record, baseline), spec)
