"""Tapped-delay-line fading channel and the AWGN hook.

Taps are independent zero-mean circular complex Gaussians, so amplitudes
are Rayleigh.  Mean tap power follows an exponential profile e^(-tau*l);
tau = 0 degenerates to a uniform profile.  By default the profile is
normalized to unit total mean power so the SNR axis stays interpretable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .waveform import ConfigurationError

__all__ = [
    "ChannelParams",
    "ChannelRealization",
    "tap_powers",
    "draw_channel",
    "apply_channel",
    "add_awgn",
]


@dataclass(frozen=True)
class ChannelParams:
    """Exponential power-delay profile: ``num_taps`` taps spaced one sample."""

    num_taps: int = 1
    decay_rate: float = 0.0
    normalize: bool = True

    def __post_init__(self) -> None:
        if self.num_taps < 1:
            raise ConfigurationError(f"num_taps must be >= 1, got {self.num_taps}")
        if not (self.decay_rate >= 0.0):
            raise ConfigurationError(
                f"decay_rate must be >= 0, got {self.decay_rate!r}"
            )


@dataclass(frozen=True)
class ChannelRealization:
    """One drawn tap vector; ``taps[l]`` multiplies the l-sample delay."""

    taps: np.ndarray

    def __post_init__(self) -> None:
        t = np.asarray(self.taps, dtype=np.complex128).copy()
        if t.ndim != 1 or t.size == 0:
            raise ConfigurationError(f"taps must be a nonempty vector, got {t.shape}")
        t.setflags(write=False)
        object.__setattr__(self, "taps", t)

    @property
    def num_taps(self) -> int:
        return self.taps.size


def tap_powers(params: ChannelParams) -> np.ndarray:
    """Mean power sigma_l^2 of each tap, summing to 1 when normalized."""
    p = np.exp(-params.decay_rate * np.arange(params.num_taps, dtype=np.float64))
    if params.normalize:
        p /= p.sum()
    return p


def draw_channel(params: ChannelParams, rng: np.random.Generator) -> ChannelRealization:
    """Draw taps h_l ~ CN(0, sigma_l^2) from ``rng``.

    Draw order is fixed (all real parts, then all imaginary parts) so a
    given stream always yields the same realization.
    """
    sigma = np.sqrt(tap_powers(params) / 2.0)
    g = rng.standard_normal((2, params.num_taps))
    return ChannelRealization(sigma * (g[0] + 1j * g[1]))


def apply_channel(samples: np.ndarray, ch: ChannelRealization) -> np.ndarray:
    """Linear convolution with the tap vector; output grows by num_taps-1."""
    x = np.asarray(samples, dtype=np.complex128)
    if x.ndim != 1:
        raise ConfigurationError(f"samples must be a vector, got shape {x.shape}")
    return np.convolve(x, ch.taps)


def add_awgn(
    samples: np.ndarray,
    snr_db: float,
    signal_power_ref: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Add CN(0, N0) per sample with N0 = signal_power_ref / 10^(snr_db/10)."""
    if not (signal_power_ref > 0.0):
        raise ConfigurationError(
            f"signal_power_ref must be positive, got {signal_power_ref!r}"
        )
    x = np.asarray(samples, dtype=np.complex128)
    n0 = signal_power_ref / 10.0 ** (snr_db / 10.0)
    scale = math.sqrt(n0 / 2.0)
    g = rng.standard_normal((2, x.size))
    return x + scale * (g[0] + 1j * g[1]).reshape(x.shape)
