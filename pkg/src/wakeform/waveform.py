"""Frequency-domain OOK sequences and their time-domain envelopes.

A wake-up sequence is a complex vector ``c`` of odd length L whose centre
element (the DC tone of the wake-up band) is zero.  Its time-domain envelope
over one OFDM symbol, sampled on an n-point grid, is

    s[p] = (1/sqrt(P)) * sum_k c[k] * exp(2j*pi*k*p/n),   P = L - 1,

i.e. the inverse DFT of the zero-padded sequence scaled by ``n/sqrt(P)``.
With ``norm(c)**2 == P`` the envelope has unit mean power.  Only magnitudes
matter for the on/off keying, so the band-centring frequency shift is left
out; it would rotate per-sample phases and change nothing below.

This module holds the sequence / template types, the synthesis and metric
routines, the bit-1 derivations, and the on-disk sequence format.  It is
pure NumPy and has no dependency on the solver or simulator modules.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "ConfigurationError",
    "InvalidSequenceError",
    "UndersamplingError",
    "SequenceFormatError",
    "WaveformConfig",
    "Sequence",
    "ShapeTemplate",
    "OokSymbolPair",
    "wifi_config",
    "make_shape",
    "synthesize",
    "prepend_cp",
    "derive_bit1",
    "rmse_cost",
    "onoff_ratio_db",
    "tone_power_profile",
    "papr_db",
    "load_table1",
    "write_sequence",
    "read_sequence",
    "TABLE1_IDS",
]


class ConfigurationError(ValueError):
    """Numerology is inconsistent (non-integer grids, bad durations...)."""


class InvalidSequenceError(ValueError):
    """Sequence vector violates a structural invariant."""


class UndersamplingError(ValueError):
    """Requested sampling grid cannot represent the sequence (n < 2L-1)."""


class SequenceFormatError(ValueError):
    """Sequence file is malformed."""


_REL_TOL = 1e-9


@dataclass(frozen=True)
class WaveformConfig:
    """OFDM numerology shared by the optimizer and the simulator.

    All durations in seconds, ``sample_rate`` in Hz.  The defaults follow
    the 20 MHz Wi-Fi numerology: 3.2 us symbols on a 312.5 kHz subcarrier
    raster with a 0.8 us cyclic prefix.
    """

    symbol_duration: float = 3.2e-6
    subcarrier_spacing: float = 312.5e3
    cp_duration: float = 0.8e-6
    active_duration: float = 1.2e-6
    sample_rate: float = 20e6

    def __post_init__(self) -> None:
        prod = self.symbol_duration * self.subcarrier_spacing
        if abs(prod - 1.0) > _REL_TOL:
            raise ConfigurationError(
                f"symbol_duration * subcarrier_spacing = {prod!r}, expected 1"
            )
        if not (0.0 < self.active_duration <= self.symbol_duration / 2 + _REL_TOL):
            raise ConfigurationError(
                "active_duration must lie in (0, symbol_duration/2]"
            )
        for name in ("symbol_duration", "cp_duration"):
            samples = getattr(self, name) * self.sample_rate
            if abs(samples - round(samples)) > _REL_TOL * max(samples, 1.0):
                raise ConfigurationError(
                    f"{name} does not land on the sample grid: {samples!r} samples"
                )

    @property
    def n_fft(self) -> int:
        return round(self.symbol_duration * self.sample_rate)

    @property
    def cp_samples(self) -> int:
        return round(self.cp_duration * self.sample_rate)

    @property
    def slots_per_symbol(self) -> int:
        """How many active windows tile one symbol."""
        return int(self.symbol_duration / self.active_duration + _REL_TOL)


def wifi_config(active_duration: float = 1.2e-6) -> WaveformConfig:
    """Standard 20 MHz numerology with a chosen active-window length."""
    return WaveformConfig(active_duration=active_duration)


@dataclass(frozen=True)
class Sequence:
    """Length-L complex sequence, L odd.

    Construction checks only the structural invariants (odd length, finite
    entries) so that optimizer intermediates, whose DC element is not yet
    zero, can be carried in the same type.  Finalized sequences additionally
    satisfy ``c[(L-1)/2] == 0`` exactly and ``norm(c)**2 == L-1`` to relative
    1e-9; call :meth:`require_finalized` where that matters.
    """

    elements: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.elements, dtype=np.complex128).copy()
        if arr.ndim != 1:
            raise InvalidSequenceError(f"expected 1-D vector, got shape {arr.shape}")
        if arr.size < 3 or arr.size % 2 == 0:
            raise InvalidSequenceError(f"length must be odd and >= 3, got {arr.size}")
        if not np.all(np.isfinite(arr.view(np.float64))):
            raise InvalidSequenceError("sequence contains non-finite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "elements", arr)

    @property
    def length(self) -> int:
        return self.elements.size

    @property
    def dc_index(self) -> int:
        return (self.length - 1) // 2

    @property
    def tone_count(self) -> int:
        """P = L - 1, the number of data-bearing tones."""
        return self.length - 1

    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.elements) ** 2))

    def is_finalized(self, rel_tol: float = _REL_TOL) -> bool:
        if self.elements[self.dc_index] != 0:
            return False
        return abs(self.norm_sq() - self.tone_count) <= rel_tol * self.tone_count

    def require_finalized(self, rel_tol: float = _REL_TOL) -> "Sequence":
        if self.elements[self.dc_index] != 0:
            raise InvalidSequenceError("DC element is not exactly zero")
        if abs(self.norm_sq() - self.tone_count) > rel_tol * self.tone_count:
            raise InvalidSequenceError(
                f"norm(c)**2 = {self.norm_sq()!r}, expected {self.tone_count}"
            )
        return self

    def finalized(self) -> "Sequence":
        """Zero the DC element and rescale to ``norm(c)**2 == L-1``."""
        c = np.array(self.elements)
        c[self.dc_index] = 0.0
        nrm = np.linalg.norm(c)
        if nrm == 0.0:
            raise InvalidSequenceError("cannot normalize the zero sequence")
        return Sequence(c * (math.sqrt(self.tone_count) / nrm))


@dataclass(frozen=True)
class ShapeTemplate:
    """Target rectangular envelope for one active window.

    ``amplitudes`` holds the per-sample target a_p on an N-point grid:
    sqrt(symbol_duration / active_duration) inside the window, 0 outside,
    so the mean square is 1.  ``on_set`` and ``off_set`` partition
    ``range(N)``.
    """

    amplitudes: np.ndarray
    on_set: np.ndarray
    off_set: np.ndarray
    symbol_index: int

    def __post_init__(self) -> None:
        a = np.asarray(self.amplitudes, dtype=np.float64).copy()
        on = np.asarray(self.on_set, dtype=np.intp).copy()
        off = np.asarray(self.off_set, dtype=np.intp).copy()
        n = a.size
        joined = np.sort(np.concatenate([on, off]))
        if joined.size != n or not np.array_equal(joined, np.arange(n)):
            raise ConfigurationError("on_set and off_set must partition range(N)")
        if np.any(a[off] != 0.0) or on.size == 0:
            raise ConfigurationError("amplitudes inconsistent with windows")
        if abs(np.mean(a**2) - 1.0) > 1e-12:
            raise ConfigurationError("mean-square amplitude must equal 1")
        for name, val in (("amplitudes", a), ("on_set", on), ("off_set", off)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.amplitudes.size

    def rescale(self, n: int) -> "ShapeTemplate":
        """Same window fractions on an n-point grid."""
        if n == self.n:
            return self
        w_new = self.on_set.size * n / self.n
        if abs(w_new - round(w_new)) > 1e-9:
            raise ConfigurationError(
                f"window does not land on an integer width at n={n}"
            )
        w = round(w_new)
        start = self.symbol_index * w
        on = np.arange(start, start + w)
        off = np.concatenate([np.arange(start), np.arange(start + w, n)])
        a = np.zeros(n)
        a[on] = math.sqrt(n / w)
        return ShapeTemplate(a, on, off, self.symbol_index)


def make_shape(cfg: WaveformConfig, symbol_index: int, n: int) -> ShapeTemplate:
    """Rectangular target for the ``symbol_index``-th active window.

    The window covers times [i*T_active, (i+1)*T_active), half open, so
    adjacent windows never share a sample.  ``n*T_active/T_symbol`` must be
    an integer; otherwise the window edge falls between samples and the
    template is rejected.
    """
    frac = cfg.active_duration / cfg.symbol_duration
    w_f = n * frac
    if abs(w_f - round(w_f)) > 1e-9:
        raise ConfigurationError(
            f"active window is {w_f!r} samples at n={n}; must be integral"
        )
    w = round(w_f)
    if w == 0:
        raise ConfigurationError("active window is empty at this grid size")
    if symbol_index < 0 or (symbol_index + 1) * w > n:
        raise ConfigurationError(
            f"window {symbol_index} does not fit inside the symbol"
        )
    on = np.arange(symbol_index * w, (symbol_index + 1) * w)
    off = np.concatenate([np.arange(symbol_index * w), np.arange((symbol_index + 1) * w, n)])
    a = np.zeros(n)
    a[on] = math.sqrt(1.0 / frac)
    return ShapeTemplate(a, on, off, symbol_index)


def _synth_raw(elements: np.ndarray, n: int) -> np.ndarray:
    """sum_k c[k] exp(2j pi k p / n) for p = 0..n-1, without 1/sqrt(P)."""
    L = elements.size
    if n < 2 * L - 1:
        raise UndersamplingError(f"n = {n} < 2L-1 = {2 * L - 1}")
    padded = np.zeros(n, dtype=np.complex128)
    padded[:L] = elements
    return np.fft.ifft(padded) * n


def synthesize(seq: Sequence, cfg: WaveformConfig | None = None, n: int | None = None) -> np.ndarray:
    """Unit-mean-power time-domain envelope of ``seq`` on an n-point grid.

    ``n`` defaults to ``cfg.n_fft``.  Raises :class:`UndersamplingError`
    when n < 2L-1, below which distinct sequences alias onto identical
    sample sets.
    """
    if n is None:
        if cfg is None:
            raise ConfigurationError("either cfg or n is required")
        n = cfg.n_fft
    return _synth_raw(seq.elements, n) / math.sqrt(seq.tone_count)


def prepend_cp(samples: np.ndarray, cfg: WaveformConfig) -> np.ndarray:
    """Copy the tail of one symbol to its front (cyclic prefix)."""
    x = np.asarray(samples)
    if x.ndim != 1 or x.size != cfg.n_fft:
        raise ConfigurationError(
            f"expected one {cfg.n_fft}-sample symbol, got shape {x.shape}"
        )
    k = cfg.cp_samples
    if k == 0:
        return x.copy()
    return np.concatenate([x[-k:], x])


_RELATIONS = ("flip", "conjugate", "phase_ramp", "time_shift")


def derive_bit1(seq0: Sequence, cfg: WaveformConfig, relation: str = "time_shift") -> Sequence:
    """Derive the bit-1 sequence from the bit-0 one.

    flip        reverse element order; the envelope magnitude becomes the
                circular time reversal of the original.
    conjugate   conjugate every element; same magnitude effect as flip.
    phase_ramp  multiply c[k] by exp(-2j pi k T_active/T_symbol), which
                circularly delays the envelope by exactly one active window.
    time_shift  alias of phase_ramp; named for the time-domain effect.
    """
    if relation not in _RELATIONS:
        raise ValueError(f"relation must be one of {_RELATIONS}, got {relation!r}")
    c = seq0.elements
    if relation == "flip":
        return Sequence(c[::-1])
    if relation == "conjugate":
        return Sequence(np.conj(c))
    frac = cfg.active_duration / cfg.symbol_duration
    k = np.arange(seq0.length)
    return Sequence(c * np.exp(-2j * np.pi * k * frac))


@dataclass(frozen=True)
class OokSymbolPair:
    """Finalized bit-0 / bit-1 sequence pair plus the relation linking them."""

    seq0: Sequence
    seq1: Sequence
    relation: str

    @classmethod
    def from_seq0(
        cls, seq0: Sequence, cfg: WaveformConfig, relation: str = "time_shift"
    ) -> "OokSymbolPair":
        pair = cls(seq0, derive_bit1(seq0, cfg, relation), relation)
        pair.validate(cfg)
        return pair

    def validate(self, cfg: WaveformConfig, per_sample_tol: float = 1e-10) -> None:
        """Check the envelope relation on the cfg.n_fft grid."""
        if self.relation not in _RELATIONS:
            raise ValueError(f"unknown relation {self.relation!r}")
        n = cfg.n_fft
        m0 = np.abs(synthesize(self.seq0, n=n))
        m1 = np.abs(synthesize(self.seq1, n=n))
        if self.relation in ("flip", "conjugate"):
            expect = m0[(-np.arange(n)) % n]
        else:
            shift_f = n * cfg.active_duration / cfg.symbol_duration
            if abs(shift_f - round(shift_f)) > 1e-9:
                raise ConfigurationError("active window is not integral at n_fft")
            expect = np.roll(m0, round(shift_f))
        err = float(np.max(np.abs(m1 - expect)))
        if err > per_sample_tol * max(1.0, float(np.max(m0))):
            raise InvalidSequenceError(
                f"bit-1 envelope violates {self.relation!r} relation ({err:.3e})"
            )


def rmse_cost(seq: Sequence, shape: ShapeTemplate) -> float:
    """RMS gap between the squared envelope and the squared target.

    Both sides carry the same P = L-1 power scale:
    sqrt(mean((|sum_k c_k e^{2j pi k p/N}|^2 - P a_p^2)^2)) over the
    template's own grid.
    """
    u = _synth_raw(seq.elements, shape.n)
    p = seq.tone_count
    gap = np.abs(u) ** 2 - p * shape.amplitudes**2
    return float(np.sqrt(np.mean(gap**2)))


def onoff_ratio_db(seq: Sequence, shape: ShapeTemplate, n: int | None = None) -> float:
    """10 log10( max on-window power / max off-window power ).

    Positive infinity when the envelope vanishes identically off-window.
    ``n`` defaults to the template's grid; otherwise the window is rescaled.
    """
    tpl = shape if n is None else shape.rescale(n)
    if tpl.off_set.size == 0:
        raise ConfigurationError("template has no off-window samples")
    power = np.abs(_synth_raw(seq.elements, tpl.n)) ** 2
    peak_on = float(np.max(power[tpl.on_set]))
    peak_off = float(np.max(power[tpl.off_set]))
    if peak_on == 0.0:
        raise InvalidSequenceError("envelope is zero on the active window")
    if peak_off == 0.0:
        return math.inf
    return 10.0 * math.log10(peak_on / peak_off)


def tone_power_profile(seq: Sequence) -> np.ndarray:
    """Per-tone power |c_k|^2."""
    return np.abs(seq.elements) ** 2


def papr_db(samples: np.ndarray) -> float:
    """Peak-to-average power ratio of a sample block, in dB."""
    x = np.asarray(samples)
    power = np.abs(x) ** 2
    mean = float(np.mean(power))
    if mean == 0.0:
        raise ValueError("all-zero sample block has undefined PAPR")
    return 10.0 * math.log10(float(np.max(power)) / mean)


# Published length-15 designs, stored as (magnitude, phase in degrees).
# Index 7 is the DC null.  Sequences 1 and 2 target the 1.2 us window,
# 3 and 4 the 1.6 us window; 2 and 4 trade leakage for a flat tone profile.
_TABLE1: dict[int, tuple[tuple[float, float], ...]] = {
    1: (
        (0.117, 22.5), (0.375, 315.0), (0.784, 247.5), (1.221, 180.0),
        (1.480, 112.5), (1.367, 45.0), (0.826, 337.5), (0.0, 0.0),
        (0.826, 22.5), (1.367, 315.0), (1.480, 247.5), (1.221, 180.0),
        (0.784, 112.5), (0.375, 45.0), (0.117, 337.5),
    ),
    2: (
        (0.692, 266.19), (0.986, 211.15), (1.119, 157.37), (1.119, 115.63),
        (1.119, 80.70), (1.119, 34.18), (0.735, 337.50), (0.0, 0.0),
        (0.735, 22.50), (1.119, 304.18), (1.119, 215.70), (1.119, 115.63),
        (1.119, 22.37), (0.986, 301.15), (0.692, 221.19),
    ),
    3: (
        (0.031, 180.0), (0.171, 90.0), (0.509, 0.0), (1.023, 270.0),
        (1.489, 180.0), (1.557, 90.0), (1.011, 0.0), (0.0, 0.0),
        (1.011, 0.0), (1.557, 270.0), (1.489, 180.0), (1.023, 90.0),
        (0.509, 0.0), (0.171, 270.0), (0.031, 180.0),
    ),
    4: (
        (0.225, 50.42), (0.705, 324.83), (1.175, 242.64), (1.225, 170.47),
        (1.052, 122.68), (1.225, 74.16), (0.980, 0.0), (0.0, 0.0),
        (0.980, 0.0), (1.225, 254.16), (1.052, 122.68), (1.225, 350.47),
        (1.175, 242.64), (0.705, 144.83), (0.225, 50.42),
    ),
}

TABLE1_IDS = tuple(sorted(_TABLE1))


def load_table1(sequence_id: int) -> Sequence:
    """One of the four published length-15 sequences (ids 1..4)."""
    try:
        rows = _TABLE1[sequence_id]
    except KeyError:
        raise KeyError(f"sequence_id must be in {TABLE1_IDS}, got {sequence_id!r}") from None
    mags = np.array([m for m, _ in rows])
    phases = np.deg2rad([p for _, p in rows])
    return Sequence(mags * np.exp(1j * phases))


_HEADER_RE = re.compile(r"#\s*wakeform-seq\s+v1\s+L=(\d+)\s*$")


def write_sequence(path: str | Path, seq: Sequence) -> None:
    """Write a finalized sequence as the line-oriented v1 text format."""
    seq.require_finalized(rel_tol=1e-2)  # published tables carry rounded norms
    lines = [f"# wakeform-seq v1 L={seq.length}"]
    for k, v in enumerate(seq.elements):
        lines.append(f"{k} {v.real:.17g} {v.imag:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_sequence(path: str | Path) -> Sequence:
    """Parse the v1 text format back into a :class:`Sequence`."""
    raw = Path(path).read_text().splitlines()
    lines = [ln.strip() for ln in raw if ln.strip()]
    if not lines:
        raise SequenceFormatError(f"{path}: empty file")
    m = _HEADER_RE.match(lines[0])
    if m is None:
        raise SequenceFormatError(f"{path}: bad header {lines[0]!r}")
    length = int(m.group(1))
    body = lines[1:]
    if len(body) != length:
        raise SequenceFormatError(
            f"{path}: expected {length} element lines, found {len(body)}"
        )
    c = np.zeros(length, dtype=np.complex128)
    for i, ln in enumerate(body):
        parts = ln.split()
        if len(parts) != 3:
            raise SequenceFormatError(f"{path}: malformed line {ln!r}")
        try:
            k = int(parts[0])
            re_v = float(parts[1])
            im_v = float(parts[2])
        except ValueError as exc:
            raise SequenceFormatError(f"{path}: malformed line {ln!r}") from exc
        if k != i:
            raise SequenceFormatError(f"{path}: index {k} out of order on line {i + 2}")
        c[k] = complex(re_v, im_v)
    seq = Sequence(c)
    if c[seq.dc_index] != 0:
        raise SequenceFormatError(f"{path}: DC element (index {seq.dc_index}) must be 0")
    return seq
