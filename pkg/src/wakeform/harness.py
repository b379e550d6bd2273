"""Experiment driver: flat-text configs, deterministic BER sweeps, CSV output.

Every Monte-Carlo trial draws from its own stream seeded by the tuple
(master_seed, snr_index, trial_index), so results are independent of the
order in which trials run.  Within a trial the draw order is fixed and
documented per scenario.  CSV outputs are pure functions of the config and
master seed, except for the wall_seconds timing column.

SNR convention: per-sample signal-to-noise ratio at the 20 Msps line rate,
with the signal power reference taken as the mean power of the CP-included
transmit symbol (averaged over both bit waveforms).  The multiplexed
scenario always references the composite (wake-up plus data) symbol power,
so the data-only curve sits on the same axis as the full mux curve.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import ChannelParams, apply_channel, add_awgn, draw_channel
from .ofdm import (
    MuxLayout,
    QamSymbolBlock,
    mask_based_ook,
    mux_transmit,
    ofdm_receive,
    qpsk_demap,
    qpsk_map,
    single_tone_ook,
)
from .receiver import WurConfig, detect_bit
from .scan import ScanParams, ScanTrace, scan_run
from .waveform import (
    ConfigurationError,
    OokSymbolPair,
    Sequence,
    WaveformConfig,
    load_table1,
    make_shape,
    onoff_ratio_db,
    papr_db,
    read_sequence,
    rmse_cost,
    synthesize,
    prepend_cp,
    tone_power_profile,
    wifi_config,
    write_sequence,
)

__all__ = [
    "ExperimentConfig",
    "LinkRow",
    "LinkReport",
    "OptimizeResult",
    "MetricsReport",
    "SEED_ENV_VAR",
    "parse_config_text",
    "load_experiment_config",
    "wilson_halfwidth",
    "run_ber",
    "run_optimize",
    "run_metrics",
]

SEED_ENV_VAR = "WAKEFORM_SEED"

_SCENARIOS = ("standalone_awgn", "standalone_fading", "mux")
_WAVEFORMS = ("seq1", "seq2", "seq3", "seq4", "file", "single_tone", "mask", "qpsk_ref", "none")

# Published table sequences 1-2 target the 1.2 us window, 3-4 the 1.6 us one.
_TABLE_ACTIVE = {1: 1.2e-6, 2: 1.2e-6, 3: 1.6e-6, 4: 1.6e-6}


@dataclass(frozen=True)
class ExperimentConfig:
    """One BER sweep: scenario, waveform option, SNR grid, trial budget."""

    scenario: str = "standalone_awgn"
    waveform: str = "seq1"
    seq_file: str | None = None
    snr_db: tuple[float, ...] = (0.0,)
    trials: int = 1000
    master_seed: int = 0
    active_duration: float | None = None
    relation: str = "time_shift"
    channel: str | None = None
    num_taps: int = 10
    decay_rate: float = 0.1
    normalize: bool = True
    wur_cutoff_hz: float = 2.5e6
    wur_sample_rate_hz: float = 20e6
    power_split: float = 0.5
    qam_order: int = 4
    mux_layout: str = "default"

    def __post_init__(self) -> None:
        if self.scenario not in _SCENARIOS:
            raise ConfigurationError(
                f"scenario must be one of {_SCENARIOS}, got {self.scenario!r}"
            )
        if self.waveform not in _WAVEFORMS:
            raise ConfigurationError(
                f"waveform must be one of {_WAVEFORMS}, got {self.waveform!r}"
            )
        snr = tuple(float(s) for s in self.snr_db)
        if not snr or any(b <= a for a, b in zip(snr, snr[1:])):
            raise ConfigurationError("snr_db must be a nonempty strictly increasing grid")
        object.__setattr__(self, "snr_db", snr)
        if self.trials < 1:
            raise ConfigurationError(f"trials must be >= 1, got {self.trials}")
        if self.master_seed < 0:
            raise ConfigurationError(f"master_seed must be >= 0, got {self.master_seed}")
        if self.waveform == "file" and not self.seq_file:
            raise ConfigurationError("waveform=file requires seq_file")
        if self.waveform == "none" and self.scenario != "mux":
            raise ConfigurationError("waveform=none only makes sense in the mux scenario")
        if self.waveform == "qpsk_ref" and self.scenario != "standalone_awgn":
            raise ConfigurationError("qpsk_ref is an AWGN-only reference")
        if self.qam_order != 4:
            raise ConfigurationError(f"qam_order must be 4, got {self.qam_order}")
        if not 0.0 < self.power_split < 1.0:
            raise ConfigurationError(
                f"power_split must be in (0, 1), got {self.power_split}"
            )
        if self.num_taps < 1:
            raise ConfigurationError(f"num_taps must be >= 1, got {self.num_taps}")
        if self.decay_rate < 0.0:
            raise ConfigurationError(f"decay_rate must be >= 0, got {self.decay_rate}")
        if self.mux_layout != "default":
            raise ConfigurationError(
                f"mux_layout must be 'default', got {self.mux_layout!r}"
            )
        ch = self.channel
        if ch is None:
            ch = "exppdp" if self.scenario == "standalone_fading" else "awgn"
            object.__setattr__(self, "channel", ch)
        if ch not in ("awgn", "exppdp"):
            raise ConfigurationError(f"channel must be awgn or exppdp, got {ch!r}")
        if self.scenario == "standalone_awgn" and ch != "awgn":
            raise ConfigurationError("standalone_awgn requires channel=awgn")
        if self.scenario == "standalone_fading" and ch != "exppdp":
            raise ConfigurationError("standalone_fading requires channel=exppdp")

    def channel_params(self) -> ChannelParams | None:
        if self.channel == "awgn":
            return None
        return ChannelParams(self.num_taps, self.decay_rate, self.normalize)


@dataclass(frozen=True)
class LinkRow:
    snr_db: float
    trials: int
    bit_errors: int
    ber: float
    ci_halfwidth: float
    wall_seconds: float


@dataclass(frozen=True)
class LinkReport:
    """Per-SNR-point error counts for one sweep."""

    rows: tuple[LinkRow, ...]
    bits_per_trial: int

    CSV_HEADER = "snr_db,trials,bit_errors,ber,ci_halfwidth,wall_seconds"

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for r in self.rows:
            lines.append(
                f"{r.snr_db:.10g},{r.trials},{r.bit_errors},"
                f"{r.ber:.12e},{r.ci_halfwidth:.12e},{r.wall_seconds:.6f}"
            )
        return "\n".join(lines) + "\n"

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())


def wilson_halfwidth(errors: int, n: int, z: float = 1.959963984540054) -> float:
    """Half-width of the 95% Wilson score interval for errors/n."""
    if n < 1 or errors < 0 or errors > n:
        raise ConfigurationError(f"need 0 <= errors <= n, got {errors}/{n}")
    p = errors / n
    denom = 1.0 + z * z / n
    return (z / denom) * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n))


def _trial_rng(master_seed: int, snr_index: int, trial_index: int) -> np.random.Generator:
    # keyed stream: reordering or parallelizing trials cannot change results
    return np.random.default_rng((master_seed, snr_index, trial_index))


def _resolve_pair(cfg: ExperimentConfig) -> tuple[OokSymbolPair, WaveformConfig]:
    if cfg.waveform.startswith("seq"):
        table_id = int(cfg.waveform[3:])
        active = cfg.active_duration or _TABLE_ACTIVE[table_id]
        wcfg = wifi_config(active)
        seq = load_table1(table_id)
    else:  # file
        wcfg = wifi_config(cfg.active_duration or 1.2e-6)
        seq = read_sequence(cfg.seq_file).finalized()
    return OokSymbolPair.from_seq0(seq, wcfg, cfg.relation), wcfg


def _ook_waveforms(cfg: ExperimentConfig) -> tuple[np.ndarray, np.ndarray, WurConfig]:
    """Noiseless CP-included bit-0/bit-1 waveforms plus the matched detector."""
    if cfg.waveform in ("seq1", "seq2", "seq3", "seq4", "file"):
        pair, wcfg = _resolve_pair(cfg)
        tx0 = prepend_cp(synthesize(pair.seq0, wcfg), wcfg)
        tx1 = prepend_cp(synthesize(pair.seq1, wcfg), wcfg)
    elif cfg.waveform == "single_tone":
        wcfg = wifi_config(cfg.active_duration or 1.2e-6)
        tx0 = single_tone_ook(0, wcfg)
        tx1 = single_tone_ook(1, wcfg)
    elif cfg.waveform == "mask":
        # the mask baseline keys the bit to half-symbol gates
        wcfg = wifi_config(1.6e-6)
        tx0 = mask_based_ook(0, wcfg)
        tx1 = mask_based_ook(1, wcfg)
    else:
        raise ConfigurationError(f"{cfg.waveform!r} is not an OOK waveform")
    wur = WurConfig.for_waveform(wcfg, cfg.wur_cutoff_hz)
    if cfg.wur_sample_rate_hz != wcfg.sample_rate:
        raise ConfigurationError(
            "wur_sample_rate_hz must match the waveform sample rate "
            f"({wcfg.sample_rate:g} Hz)"
        )
    return tx0, tx1, wur


def _mean_power(x: np.ndarray) -> float:
    return float(np.mean(np.abs(x) ** 2))


def _run_standalone_point(
    cfg: ExperimentConfig,
    snr_index: int,
    tx0: np.ndarray,
    tx1: np.ndarray,
    wur: WurConfig,
    ref: float,
    ch_params: ChannelParams | None,
) -> int:
    # draw order per trial: bit, channel taps (fading only), noise
    snr = cfg.snr_db[snr_index]
    errors = 0
    for ti in range(cfg.trials):
        rng = _trial_rng(cfg.master_seed, snr_index, ti)
        bit = int(rng.integers(0, 2))
        y = tx0 if bit == 0 else tx1
        if ch_params is not None:
            y = apply_channel(y, draw_channel(ch_params, rng))
        y = add_awgn(y, snr, ref, rng)
        errors += detect_bit(y, wur) != bit
    return errors


def _run_qpsk_ref_point(cfg: ExperimentConfig, snr_index: int, ebn0_offset_db: float) -> int:
    # draw order per trial: two bits, noise; Eb matches the OOK symbols
    snr = cfg.snr_db[snr_index]
    ebn0 = 10.0 ** ((snr + ebn0_offset_db) / 10.0)
    sigma = math.sqrt(1.0 / (4.0 * ebn0))
    errors = 0
    for ti in range(cfg.trials):
        rng = _trial_rng(cfg.master_seed, snr_index, ti)
        bits = rng.integers(0, 2, size=2)
        g = rng.standard_normal((2, 1))
        rx = qpsk_map(bits) + sigma * (g[0] + 1j * g[1])
        errors += int(np.count_nonzero(qpsk_demap(rx) != bits))
    return errors


def _mux_tx_builder(cfg: ExperimentConfig, layout: MuxLayout):
    """(wus_bit, qam) -> composite CP-included symbol, plus its numerology.

    Sequence options ride the wake-up tones of the grid; the mask baseline
    is a time-domain waveform, so it superposes on the data-only symbol at
    the same power split (that non-orthogonality is the point of it).
    """
    if cfg.waveform == "none":
        wcfg = wifi_config(cfg.active_duration or 1.2e-6)

        def build(wus_bit: int, qam: QamSymbolBlock) -> np.ndarray:
            return mux_transmit(wus_bit, None, qam, layout, wcfg)

    elif cfg.waveform == "mask":
        wcfg = wifi_config(1.6e-6)
        scale = math.sqrt(layout.power_split)
        wus_tx = (mask_based_ook(0, wcfg), mask_based_ook(1, wcfg))

        def build(wus_bit: int, qam: QamSymbolBlock) -> np.ndarray:
            return mux_transmit(0, None, qam, layout, wcfg) + scale * wus_tx[wus_bit]

    elif cfg.waveform in ("seq1", "seq2", "seq3", "seq4", "file"):
        pair, wcfg = _resolve_pair(cfg)

        def build(wus_bit: int, qam: QamSymbolBlock) -> np.ndarray:
            return mux_transmit(wus_bit, pair, qam, layout, wcfg)

    else:
        raise ConfigurationError(
            f"waveform {cfg.waveform!r} is not available in the mux scenario"
        )
    return build, wcfg


def _run_mux_point(
    cfg: ExperimentConfig,
    snr_index: int,
    build,
    wcfg: WaveformConfig,
    layout: MuxLayout,
    ch_params: ChannelParams | None,
) -> int:
    # draw order per trial: wake-up bit (drawn even when nothing is sent on
    # its tones, keeping streams comparable across waveform options), data
    # bits, channel taps (fading only), noise; reference power is the
    # composite symbol's (1.0 by construction)
    snr = cfg.snr_db[snr_index]
    n_data = len(layout.qam_tones)
    errors = 0
    for ti in range(cfg.trials):
        rng = _trial_rng(cfg.master_seed, snr_index, ti)
        wus_bit = int(rng.integers(0, 2))
        data_bits = rng.integers(0, 2, size=2 * n_data)
        tx = build(wus_bit, QamSymbolBlock.from_bits(data_bits))
        ch = None if ch_params is None else draw_channel(ch_params, rng)
        y = tx if ch is None else apply_channel(tx, ch)
        y = add_awgn(y, snr, 1.0, rng)
        res = ofdm_receive(y, layout, wcfg, ch)
        wrong = (res.bits != data_bits).astype(np.int64)
        wrong[np.repeat(res.erased, 2)] = 1  # erased tones count as errored
        errors += int(wrong.sum())
    return errors


def run_ber(cfg: ExperimentConfig) -> LinkReport:
    """Monte-Carlo BER sweep over the configured SNR grid.

    Standalone scenarios report the wake-up link (1 bit per symbol); the
    mux scenario reports the OFDM data link (2 bits per data tone).  The
    qpsk_ref waveform reports coherent QPSK at the same energy per bit as
    the OOK symbols.
    """
    ch_params = cfg.channel_params()
    if cfg.scenario == "mux":
        layout = MuxLayout(power_split=cfg.power_split)
        bits_per_trial = 2 * len(layout.qam_tones)
        build, wcfg = _mux_tx_builder(cfg, layout)

        def point(si: int) -> int:
            return _run_mux_point(cfg, si, build, wcfg, layout, ch_params)

    elif cfg.waveform == "qpsk_ref":
        bits_per_trial = 2
        # equal energy per bit: one OOK bit rides a unit-mean-power
        # CP-included symbol, i.e. Eb = n_fft + cp samples worth of power
        wcfg = wifi_config(cfg.active_duration or 1.2e-6)
        offset = 10.0 * math.log10(wcfg.n_fft + wcfg.cp_samples)

        def point(si: int) -> int:
            return _run_qpsk_ref_point(cfg, si, offset)

    else:
        bits_per_trial = 1
        tx0, tx1, wur = _ook_waveforms(cfg)
        ref = 0.5 * (_mean_power(tx0) + _mean_power(tx1))

        def point(si: int) -> int:
            return _run_standalone_point(cfg, si, tx0, tx1, wur, ref, ch_params)

    rows = []
    n_bits = cfg.trials * bits_per_trial
    for si in range(len(cfg.snr_db)):
        t0 = time.perf_counter()
        errors = point(si)
        wall = time.perf_counter() - t0
        rows.append(
            LinkRow(
                snr_db=cfg.snr_db[si],
                trials=cfg.trials,
                bit_errors=errors,
                ber=errors / n_bits,
                ci_halfwidth=wilson_halfwidth(errors, n_bits),
                wall_seconds=wall,
            )
        )
    return LinkReport(rows=tuple(rows), bits_per_trial=bits_per_trial)


# --- flat key = value configs -------------------------------------------------

def parse_config_text(text: str) -> dict[str, str]:
    """Parse flat ``key = value`` lines; blank lines and # comments allowed."""
    out: dict[str, str] = {}
    for ln_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {ln_no}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigurationError(f"line {ln_no}: empty key or value in {raw!r}")
        if key in out:
            raise ConfigurationError(f"line {ln_no}: duplicate key {key!r}")
        out[key] = value
    return out


def _parse_bool(value: str) -> bool:
    v = value.lower()
    if v in ("true", "1", "yes"):
        return True
    if v in ("false", "0", "no"):
        return False
    raise ConfigurationError(f"expected a boolean, got {value!r}")


def _coerce(raw: dict[str, str], casts: dict[str, object]) -> dict[str, object]:
    unknown = set(raw) - set(casts)
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    out: dict[str, object] = {}
    for key, value in raw.items():
        cast = casts[key]
        try:
            out[key] = cast(value)
        except ConfigurationError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(f"bad value for {key}: {value!r}") from exc
    return out


def _snr_list(value: str) -> tuple[float, ...]:
    return tuple(float(part) for part in value.split(",") if part.strip())


_EXPERIMENT_CASTS: dict[str, object] = {
    "scenario": str,
    "waveform": str,
    "seq_file": str,
    "snr_db": _snr_list,
    "trials": int,
    "master_seed": int,
    "active_duration": float,
    "relation": str,
    "channel": str,
    "num_taps": int,
    "decay_rate": float,
    "normalize": _parse_bool,
    "wur_cutoff_hz": float,
    "wur_sample_rate_hz": float,
    "power_split": float,
    "qam_order": int,
    "mux_layout": str,
}


def load_experiment_config(
    path: str | Path, defaults: dict[str, str] | None = None
) -> ExperimentConfig:
    """Read a flat-text experiment config; WAKEFORM_SEED overrides the seed.

    ``defaults`` supplies raw values for keys the file leaves out (used by
    the CLI to pin the scenario per subcommand).
    """
    raw = parse_config_text(Path(path).read_text())
    for key, value in (defaults or {}).items():
        raw.setdefault(key, value)
    values = _coerce(raw, _EXPERIMENT_CASTS)
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            values["master_seed"] = int(env_seed)
        except ValueError as exc:
            raise ConfigurationError(f"{SEED_ENV_VAR}={env_seed!r} is not an integer") from exc
    return ExperimentConfig(**values)


# --- optimizer and metrics front ends ------------------------------------------

_OPTIMIZE_CASTS: dict[str, object] = {
    "active_duration": float,
    "lam": float,
    "u_first": float,
    "u_leak": float,
    "n_grid": int,
    "max_iters": int,
    "cost_tol": float,
    "solver_tol": float,
    "solver_max_iters": int,
    "init": str,
    "length": int,
    "out_seq": str,
    "out_trace": str,
}


@dataclass(frozen=True)
class OptimizeResult:
    sequence: Sequence
    trace: ScanTrace
    converged: bool
    out_seq: Path
    out_trace: Path


def run_optimize(config_path: str | Path) -> OptimizeResult:
    """Run the sequence optimizer from a flat config; write both artifacts.

    Required keys: out_seq, out_trace.  Optional: active_duration, lam,
    u_first, u_leak, n_grid, max_iters, cost_tol, solver_tol,
    solver_max_iters, init (only "allones"), length.  Artifacts are
    written even when the run stops at the iteration cap.
    """
    config_path = Path(config_path)
    values = _coerce(parse_config_text(config_path.read_text()), _OPTIMIZE_CASTS)
    for key in ("out_seq", "out_trace"):
        if key not in values:
            raise ConfigurationError(f"optimize config requires {key}")
    init_kind = values.get("init", "allones")
    if init_kind != "allones":
        raise ConfigurationError(f"init must be 'allones', got {init_kind!r}")
    length = int(values.get("length", 15))
    wcfg = wifi_config(float(values.get("active_duration", 1.2e-6)))
    param_kwargs = {
        k: values[k]
        for k in ("lam", "u_first", "u_leak", "n_grid", "max_iters", "cost_tol",
                  "solver_tol", "solver_max_iters")
        if k in values
    }
    params = ScanParams(initial=Sequence(np.ones(length)), **param_kwargs)
    shape = make_shape(wcfg, symbol_index=0, n=params.n_grid)
    seq, trace = scan_run(params, wcfg, shape)
    iters_run = len(trace.iterations) - 1  # row 0 is the initial sequence
    converged = iters_run < params.max_iters and bool(trace.solver_converged[-1])
    out_seq = config_path.parent / values["out_seq"]
    out_trace = config_path.parent / values["out_trace"]
    write_sequence(out_seq, seq)
    trace.write_csv(out_trace)
    return OptimizeResult(seq, trace, converged, out_seq, out_trace)


@dataclass(frozen=True)
class MetricsReport:
    """Long-format metric rows for one sequence."""

    rows: tuple[tuple[str, float], ...]

    def to_csv(self) -> str:
        lines = ["metric,value"]
        for name, value in self.rows:
            lines.append(f"{name},{value:.12g}")
        return "\n".join(lines) + "\n"

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())

    def value(self, name: str) -> float:
        for key, val in self.rows:
            if key == name:
                return val
        raise KeyError(name)


def run_metrics(seq_spec: str) -> MetricsReport:
    """Metric table for ``table:N`` or a sequence file path.

    Emits the on/off leakage ratio on the design grid (n=64) and a dense
    grid (n=1024) for both active-window templates, the PAPR of the dense
    envelope, the RMSE against both templates, and the per-tone powers.
    """
    if seq_spec.startswith("table:"):
        seq = load_table1(int(seq_spec.split(":", 1)[1]))
    else:
        seq = read_sequence(seq_spec)
    rows: list[tuple[str, float]] = [("norm_sq", seq.norm_sq())]
    for label, active in (("t12", 1.2e-6), ("t16", 1.6e-6)):
        wcfg = wifi_config(active)
        for n in (64, 1024):
            shape = make_shape(wcfg, symbol_index=0, n=n)
            rows.append((f"onoff_db_{label}_n{n}", onoff_ratio_db(seq, shape)))
        rows.append((f"rmse_{label}", rmse_cost(seq, make_shape(wcfg, 0, 64))))
    rows.append(("papr_db", papr_db(synthesize(seq, n=1024))))
    for k, p in enumerate(tone_power_profile(seq)):
        rows.append((f"tone_power_{k:02d}", float(p)))
    return MetricsReport(rows=tuple(rows))
