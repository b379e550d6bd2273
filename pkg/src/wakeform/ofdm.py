"""Frequency multiplexing of the wake-up signal with QAM data, plus baselines.

The transmit grid places the wake-up sequence on the 15 center tones and
QPSK data on 14 adjacent tones.  The inverse transform is unitary
(ifft * sqrt(n)), so squared tone amplitudes are mean time-domain powers
and the power split is exact in the tone domain.  Total mean symbol power
is fixed at 1; ``power_split`` says how much of it the wake-up signal gets.

Baselines for comparison: a gated single tone, a time-gated 13-tone mask
waveform (stand-in for the masked-OFDM approach; exact reference tones are
not public), and the coherent-QPSK Monte-Carlo reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .waveform import (
    ConfigurationError,
    OokSymbolPair,
    WaveformConfig,
    prepend_cp,
)
from .channel import ChannelRealization

__all__ = [
    "MuxLayout",
    "QamSymbolBlock",
    "OfdmRxResult",
    "MASK_FILL_SEED",
    "qpsk_map",
    "qpsk_demap",
    "mux_transmit",
    "ofdm_receive",
    "single_tone_ook",
    "mask_based_ook",
    "tone_power_dbc",
    "qpsk_theory_ber",
    "qpsk_reference_ber",
]


@dataclass(frozen=True)
class MuxLayout:
    """Tone assignment for one 64-point OFDM symbol.

    ``wus_tones`` must be a contiguous, zero-centered range; element k of
    the sequence rides tone ``wus_tones[k]``, so the DC null lands on tone
    0.  ``power_split`` is the wake-up signal's share of the unit total.
    """

    n_fft: int = 64
    wus_tones: tuple[int, ...] = tuple(range(-7, 8))
    qam_tones: tuple[int, ...] = tuple(range(-16, -9)) + tuple(range(10, 17))
    power_split: float = 0.5

    def __post_init__(self) -> None:
        if self.n_fft < 2:
            raise ConfigurationError(f"n_fft must be >= 2, got {self.n_fft}")
        if not (0.0 < self.power_split < 1.0):
            raise ConfigurationError(
                f"power_split must lie in (0, 1), got {self.power_split!r}"
            )
        w, q = self.wus_tones, self.qam_tones
        if not w or not q:
            raise ConfigurationError("tone sets must be nonempty")
        half = self.n_fft // 2
        for t in (*w, *q):
            if not (-half <= t < half):
                raise ConfigurationError(f"tone {t} outside [-{half}, {half})")
        if len(set(w)) != len(w) or len(set(q)) != len(q):
            raise ConfigurationError("duplicate tone assignment")
        if set(w) & set(q):
            raise ConfigurationError(f"overlapping tone assignment: {set(w) & set(q)}")
        lo, hi = min(w), max(w)
        if sorted(w) != list(range(lo, hi + 1)) or lo != -hi:
            raise ConfigurationError("wus_tones must be a zero-centered range")

    @property
    def wus_length(self) -> int:
        return len(self.wus_tones)


# Gray QPSK: bit pair (b_i, b_q) -> ((1-2 b_i) + 1j (1-2 b_q)) / sqrt(2).
# Adjacent constellation points differ in exactly one bit.
_QPSK_SCALE = 1.0 / math.sqrt(2.0)


def qpsk_map(bits: np.ndarray) -> np.ndarray:
    """Gray-map a flat bit vector (even length) to unit-energy QPSK symbols."""
    b = np.asarray(bits)
    if b.ndim != 1 or b.size % 2:
        raise ConfigurationError(f"need a flat even-length bit vector, got {b.shape}")
    if b.size and (b.min() < 0 or b.max() > 1):
        raise ConfigurationError("bits must be 0/1")
    i = 1.0 - 2.0 * b[0::2]
    q = 1.0 - 2.0 * b[1::2]
    return _QPSK_SCALE * (i + 1j * q)


def qpsk_demap(symbols: np.ndarray) -> np.ndarray:
    """Hard Gray demap; boundary values (zero component) decode as bit 0."""
    s = np.asarray(symbols)
    bits = np.empty(2 * s.size, dtype=np.int64)
    bits[0::2] = s.real < 0.0
    bits[1::2] = s.imag < 0.0
    return bits


@dataclass(frozen=True)
class QamSymbolBlock:
    """Per-tone data symbols drawn from a unit-average-energy constellation."""

    symbols: np.ndarray
    order: int = 4

    def __post_init__(self) -> None:
        if self.order != 4:
            raise ConfigurationError(
                f"only order-4 (QPSK) constellations are supported, got {self.order}"
            )
        s = np.asarray(self.symbols, dtype=np.complex128).copy()
        if s.ndim != 1:
            raise ConfigurationError(f"symbols must be a vector, got shape {s.shape}")
        s.setflags(write=False)
        object.__setattr__(self, "symbols", s)

    @classmethod
    def from_bits(cls, bits: np.ndarray, order: int = 4) -> "QamSymbolBlock":
        if order != 4:
            raise ConfigurationError(f"only order 4 is supported, got {order}")
        return cls(qpsk_map(bits), order)

    @property
    def bits_per_symbol(self) -> int:
        return int(round(math.log2(self.order)))


def _tone_indices(tones: tuple[int, ...], n: int) -> np.ndarray:
    return np.asarray(tones, dtype=np.intp) % n


def mux_transmit(
    wus_bit: int,
    pair: OokSymbolPair | None,
    qam: QamSymbolBlock,
    layout: MuxLayout,
    cfg: WaveformConfig,
) -> np.ndarray:
    """Assemble one CP-plus-symbol mux waveform.

    The wake-up sequence is scaled to carry exactly ``power_split`` of the
    unit mean symbol power and the QAM tones share the rest equally.
    ``pair=None`` transmits the data-only symbol (the wake-up share stays
    reserved, nothing is sent on its tones).
    """
    n = cfg.n_fft
    if layout.n_fft != n:
        raise ConfigurationError(
            f"layout n_fft {layout.n_fft} differs from config n_fft {n}"
        )
    if qam.symbols.size != len(layout.qam_tones):
        raise ConfigurationError(
            f"need {len(layout.qam_tones)} data symbols, got {qam.symbols.size}"
        )
    if wus_bit not in (0, 1):
        raise ConfigurationError(f"wus_bit must be 0 or 1, got {wus_bit!r}")
    grid = np.zeros(n, dtype=np.complex128)
    if pair is not None:
        seq = pair.seq0 if wus_bit == 0 else pair.seq1
        if seq.length != layout.wus_length:
            raise ConfigurationError(
                f"sequence length {seq.length} does not match "
                f"{layout.wus_length} wake-up tones"
            )
        norm = math.sqrt(seq.norm_sq())
        if norm == 0.0:
            raise ConfigurationError("wake-up sequence has zero norm")
        grid[_tone_indices(layout.wus_tones, n)] = (
            math.sqrt(layout.power_split * n) / norm
        ) * seq.elements
    beta = math.sqrt((1.0 - layout.power_split) * n / len(layout.qam_tones))
    grid[_tone_indices(layout.qam_tones, n)] = beta * qam.symbols
    x = np.fft.ifft(grid) * math.sqrt(n)
    return prepend_cp(x, cfg)


@dataclass(frozen=True)
class OfdmRxResult:
    """Equalized data-tone symbols (constellation scale), bits, erasure mask."""

    symbols: np.ndarray
    bits: np.ndarray
    erased: np.ndarray


def ofdm_receive(
    rx_samples: np.ndarray,
    layout: MuxLayout,
    cfg: WaveformConfig,
    ch: ChannelRealization | None = None,
) -> OfdmRxResult:
    """CP removal, unitary DFT, perfect-CSI one-tap zero forcing, demap.

    A data tone whose channel gain vanishes (|H| below 1e-12 of the peak
    gain) is flagged erased; its symbol is reported as 0 and the caller
    counts it as errored.
    """
    n = cfg.n_fft
    x = np.asarray(rx_samples, dtype=np.complex128)
    if x.ndim != 1 or x.size < cfg.cp_samples + n:
        raise ConfigurationError(
            f"need at least {cfg.cp_samples + n} samples, got shape {x.shape}"
        )
    spectrum = np.fft.fft(x[cfg.cp_samples : cfg.cp_samples + n]) / math.sqrt(n)
    if ch is None:
        gains = np.ones(n, dtype=np.complex128)
    else:
        if ch.num_taps > n:
            raise ConfigurationError(
                f"{ch.num_taps} taps exceed the {n}-point symbol"
            )
        gains = np.fft.fft(ch.taps, n)
    idx = _tone_indices(layout.qam_tones, n)
    h = gains[idx]
    erased = np.abs(h) <= 1e-12 * float(np.max(np.abs(gains)))
    beta = math.sqrt((1.0 - layout.power_split) * n / len(layout.qam_tones))
    symbols = np.zeros(idx.size, dtype=np.complex128)
    ok = ~erased
    symbols[ok] = spectrum[idx[ok]] / h[ok] / beta
    return OfdmRxResult(symbols=symbols, bits=qpsk_demap(symbols), erased=erased)


def single_tone_ook(bit: int, cfg: WaveformConfig) -> np.ndarray:
    """Carrier-gating baseline: tone +1, on during the bit's active window.

    Total symbol energy matches the sequence options (n_fft), so BER
    comparisons run at equal energy per bit.
    """
    if bit not in (0, 1):
        raise ConfigurationError(f"bit must be 0 or 1, got {bit!r}")
    n = cfg.n_fft
    w_f = n * cfg.active_duration / cfg.symbol_duration
    if abs(w_f - round(w_f)) > 1e-9:
        raise ConfigurationError(f"active window is {w_f!r} samples; must be integral")
    w = round(w_f)
    x = np.zeros(n, dtype=np.complex128)
    p = np.arange(bit * w, (bit + 1) * w)
    x[p] = math.sqrt(n / w) * np.exp(2j * np.pi * p / n)
    return prepend_cp(x, cfg)


# Fixed fill for the mask baseline so every run gates the same waveform.
MASK_FILL_SEED = 13131313
_MASK_TONES = tuple(range(-6, 7))


def _mask_fill() -> np.ndarray:
    rng = np.random.default_rng(MASK_FILL_SEED)
    return qpsk_map(rng.integers(0, 2, size=2 * len(_MASK_TONES)))


def mask_based_ook(bit: int, cfg: WaveformConfig) -> np.ndarray:
    """Masked-OFDM baseline: 13 filled center tones, gated to one half.

    A fixed QPSK fill rides tones -6..6 at unit mean symbol power; the
    time signal is zeroed outside the bit's half-symbol and renormalized
    to the common symbol energy.  The gate destroys tone orthogonality,
    which is the effect this baseline exists to exhibit.
    """
    if bit not in (0, 1):
        raise ConfigurationError(f"bit must be 0 or 1, got {bit!r}")
    n = cfg.n_fft
    if n % 2:
        raise ConfigurationError(f"n_fft must be even for half-symbol gating, got {n}")
    grid = np.zeros(n, dtype=np.complex128)
    grid[_tone_indices(_MASK_TONES, n)] = math.sqrt(n / len(_MASK_TONES)) * _mask_fill()
    x = np.fft.ifft(grid) * math.sqrt(n)
    half = n // 2
    gated = np.zeros(n, dtype=np.complex128)
    gated[bit * half : (bit + 1) * half] = x[bit * half : (bit + 1) * half]
    energy = float(np.sum(np.abs(gated) ** 2))
    if energy == 0.0:
        raise ConfigurationError("gated mask waveform is identically zero")
    gated *= math.sqrt(n / energy)
    return prepend_cp(gated, cfg)


def tone_power_dbc(samples_with_cp: np.ndarray, tones: tuple[int, ...], cfg: WaveformConfig) -> float:
    """Received power on ``tones`` relative to the whole symbol, in dB.

    Perfect-sync CP removal and unitary DFT; the reference is the total
    received symbol power, so the value reads as dBc leakage.
    """
    n = cfg.n_fft
    x = np.asarray(samples_with_cp, dtype=np.complex128)
    if x.ndim != 1 or x.size < cfg.cp_samples + n:
        raise ConfigurationError(
            f"need at least {cfg.cp_samples + n} samples, got shape {x.shape}"
        )
    spectrum = np.fft.fft(x[cfg.cp_samples : cfg.cp_samples + n]) / math.sqrt(n)
    total = float(np.sum(np.abs(spectrum) ** 2))
    if total == 0.0:
        raise ConfigurationError("zero-power symbol has no dBc reference")
    part = float(np.sum(np.abs(spectrum[_tone_indices(tones, n)]) ** 2))
    if part == 0.0:
        return -math.inf
    return 10.0 * math.log10(part / total)


def qpsk_theory_ber(ebn0_db: float) -> float:
    """Coherent Gray-QPSK bit error rate over AWGN: Q(sqrt(2 Eb/N0))."""
    ebn0 = 10.0 ** (ebn0_db / 10.0)
    return 0.5 * float(erfc(math.sqrt(ebn0)))


def qpsk_reference_ber(snr_db: float, trials: int, rng: np.random.Generator) -> float:
    """Monte-Carlo coherent QPSK over AWGN; ``snr_db`` is Eb/N0 in dB.

    One QPSK symbol (two bits) per trial at unit symbol energy.
    """
    if trials < 1:
        raise ConfigurationError(f"trials must be >= 1, got {trials}")
    bits = rng.integers(0, 2, size=2 * trials)
    tx = qpsk_map(bits)
    ebn0 = 10.0 ** (snr_db / 10.0)
    sigma = math.sqrt(1.0 / (4.0 * ebn0))  # per-axis noise std at Es = 1
    g = rng.standard_normal((2, trials))
    rx = tx + sigma * (g[0] + 1j * g[1])
    return float(np.count_nonzero(qpsk_demap(rx) != bits)) / (2.0 * trials)
