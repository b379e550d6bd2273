"""Non-coherent wake-up receiver: CP skip, Butterworth LPF, energy compare.

The detector never estimates the channel.  It drops the cyclic prefix,
low-pass filters the remaining symbol (second-order Butterworth, bilinear
transform with the cutoff prewarped so the -3 dB point lands exactly on
f_c), and compares the energy accumulated over the two candidate active
windows.  The windows reuse the half-open sample grid of ``make_shape``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import lfilter

from .waveform import ConfigurationError, WaveformConfig

__all__ = [
    "WurConfig",
    "BiquadState",
    "design_butterworth2",
    "filter_samples",
    "detect_bit",
]


@dataclass(frozen=True)
class BiquadState:
    """One second-order section, denominator normalized to a0 = 1.

    The section is applied with zero initial conditions on every call
    (symbols are CP-separated, so no state is carried between them).
    """

    b0: float
    b1: float
    b2: float
    a1: float
    a2: float

    def __post_init__(self) -> None:
        # stability triangle for z^2 + a1 z + a2
        if not (abs(self.a2) < 1.0 and abs(self.a1) < 1.0 + self.a2):
            raise ConfigurationError(
                f"poles of (1, {self.a1}, {self.a2}) are not inside the unit circle"
            )

    @property
    def b(self) -> np.ndarray:
        return np.array([self.b0, self.b1, self.b2])

    @property
    def a(self) -> np.ndarray:
        return np.array([1.0, self.a1, self.a2])


def design_butterworth2(cutoff_hz: float, sample_rate: float) -> BiquadState:
    """Discrete second-order Butterworth low-pass, DC gain 1.

    Bilinear transform of the analog prototype 1/(s^2 + sqrt(2) s + 1)
    with the cutoff prewarped, so |H| at ``cutoff_hz`` is exactly -3.01 dB.
    """
    if not (0.0 < cutoff_hz < sample_rate / 2.0):
        raise ConfigurationError(
            f"cutoff must lie in (0, sample_rate/2), got {cutoff_hz!r}"
        )
    wc = math.tan(math.pi * cutoff_hz / sample_rate)
    k2 = wc * wc
    norm = 1.0 + math.sqrt(2.0) * wc + k2
    return BiquadState(
        b0=k2 / norm,
        b1=2.0 * k2 / norm,
        b2=k2 / norm,
        a1=2.0 * (k2 - 1.0) / norm,
        a2=(1.0 - math.sqrt(2.0) * wc + k2) / norm,
    )


@lru_cache(maxsize=16)
def _design_cached(cutoff_hz: float, sample_rate: float) -> BiquadState:
    return design_butterworth2(cutoff_hz, sample_rate)


def filter_samples(samples: np.ndarray, bq: BiquadState) -> np.ndarray:
    """Run the biquad over the real and imaginary parts, zero initial state."""
    x = np.asarray(samples)
    if x.ndim != 1:
        raise ConfigurationError(f"samples must be a vector, got shape {x.shape}")
    if np.iscomplexobj(x):
        return lfilter(bq.b, bq.a, x.real) + 1j * lfilter(bq.b, bq.a, x.imag)
    return lfilter(bq.b, bq.a, x.astype(np.float64))


@dataclass(frozen=True)
class WurConfig:
    """Receiver numerology: filter cutoff plus the two energy windows."""

    cutoff_hz: float = 2.5e6
    sample_rate: float = 20e6
    cp_samples: int = 16
    window_samples: int = 24
    window0_start: int = 0
    window1_start: int = 24

    def __post_init__(self) -> None:
        if not (0.0 < self.cutoff_hz < self.sample_rate / 2.0):
            raise ConfigurationError(
                f"cutoff must lie in (0, sample_rate/2), got {self.cutoff_hz!r}"
            )
        if self.cp_samples < 0 or self.window_samples < 1:
            raise ConfigurationError("cp_samples >= 0 and window_samples >= 1 required")
        if self.window0_start < 0 or self.window1_start < 0:
            raise ConfigurationError("window starts must be nonnegative")
        lo, hi = sorted((self.window0_start, self.window1_start))
        if lo + self.window_samples > hi:
            raise ConfigurationError("energy windows overlap")

    @classmethod
    def for_waveform(
        cls, cfg: WaveformConfig, cutoff_hz: float = 2.5e6
    ) -> "WurConfig":
        """Windows 0 and 1 of the active-duration grid at cfg's sample rate."""
        w_f = cfg.n_fft * cfg.active_duration / cfg.symbol_duration
        if abs(w_f - round(w_f)) > 1e-9:
            raise ConfigurationError(
                f"active window is {w_f!r} samples; must be integral"
            )
        w = round(w_f)
        return cls(
            cutoff_hz=cutoff_hz,
            sample_rate=cfg.sample_rate,
            cp_samples=cfg.cp_samples,
            window_samples=w,
            window0_start=0,
            window1_start=w,
        )


def detect_bit(rx_samples: np.ndarray, cfg: WurConfig) -> int:
    """Energy-window decision on one CP-plus-symbol block.

    Skips the CP, filters, sums |y|^2 over each window, and returns the
    index of the larger energy.  Exact ties resolve to 0.
    """
    x = np.asarray(rx_samples)
    if x.ndim != 1:
        raise ConfigurationError(f"rx_samples must be a vector, got shape {x.shape}")
    span = max(cfg.window0_start, cfg.window1_start) + cfg.window_samples
    if x.size < cfg.cp_samples + span:
        raise ConfigurationError(
            f"need at least {cfg.cp_samples + span} samples, got {x.size}"
        )
    y = filter_samples(x[cfg.cp_samples :], _design_cached(cfg.cutoff_hz, cfg.sample_rate))
    p = np.abs(y) ** 2
    e0 = float(np.sum(p[cfg.window0_start : cfg.window0_start + cfg.window_samples]))
    e1 = float(np.sum(p[cfg.window1_start : cfg.window1_start + cfg.window_samples]))
    return 0 if e0 >= e1 else 1
