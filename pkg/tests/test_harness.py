"""Harness and CLI tests: configs, determinism, sweeps, artifacts.

Monte-Carlo claims here are kept to cheap operating points; the long
sweeps live in the acceptance module.
"""

import math

import numpy as np
import pytest

from wakeform import cli
from wakeform.harness import (
    ExperimentConfig,
    LinkReport,
    LinkRow,
    MetricsReport,
    load_experiment_config,
    parse_config_text,
    run_ber,
    run_metrics,
    run_optimize,
    wilson_halfwidth,
)
from wakeform.ofdm import qpsk_theory_ber
from wakeform.waveform import (
    ConfigurationError,
    InvalidSequenceError,
    SequenceFormatError,
    load_table1,
    read_sequence,
    write_sequence,
)


def write_config(tmp_path, name="exp.cfg", **keys):
    path = tmp_path / name
    path.write_text("".join(f"{k} = {v}\n" for k, v in keys.items()))
    return path


# ------------------------------------------------------------ text config


def test_parse_config_text_basics():
    text = "# comment\n\nscenario = mux\ntrials=50\n  # indented comment\n"
    assert parse_config_text(text) == {"scenario": "mux", "trials": "50"}


def test_parse_config_rejects_duplicates():
    with pytest.raises(ConfigurationError, match="duplicate"):
        parse_config_text("a = 1\na = 2\n")


def test_parse_config_rejects_missing_equals():
    with pytest.raises(ConfigurationError, match="line 2"):
        parse_config_text("a = 1\nnonsense\n")


def test_load_config_full_roundtrip(tmp_path):
    path = write_config(
        tmp_path,
        scenario="standalone_fading",
        waveform="seq3",
        snr_db="0, 2.5, 5",
        trials="123",
        master_seed="9",
        num_taps="8",
        decay_rate="0.2",
        normalize="false",
    )
    cfg = load_experiment_config(path)
    assert cfg.scenario == "standalone_fading"
    assert cfg.waveform == "seq3"
    assert cfg.snr_db == (0.0, 2.5, 5.0)
    assert cfg.trials == 123
    assert cfg.master_seed == 9
    assert cfg.num_taps == 8
    assert cfg.decay_rate == 0.2
    assert cfg.normalize is False


def test_load_config_rejects_unknown_key(tmp_path):
    path = write_config(tmp_path, scenario="mux", waveform="seq2", bogus="1")
    with pytest.raises(ConfigurationError, match="bogus"):
        load_experiment_config(path)


def test_load_config_rejects_bad_value(tmp_path):
    path = write_config(tmp_path, trials="many")
    with pytest.raises(ConfigurationError, match="trials"):
        load_experiment_config(path)


def test_load_config_defaults_param(tmp_path):
    path = write_config(tmp_path, waveform="none", trials="10")
    cfg = load_experiment_config(path, defaults={"scenario": "mux"})
    assert cfg.scenario == "mux"
    # an explicit key in the file wins over the caller default
    path2 = write_config(tmp_path, "e2.cfg", scenario="standalone_awgn", waveform="seq1")
    cfg2 = load_experiment_config(path2, defaults={"scenario": "mux"})
    assert cfg2.scenario == "standalone_awgn"


def test_seed_env_override(tmp_path, monkeypatch):
    path = write_config(tmp_path, master_seed="5")
    monkeypatch.setenv("WAKEFORM_SEED", "77")
    assert load_experiment_config(path).master_seed == 77
    monkeypatch.delenv("WAKEFORM_SEED")
    assert load_experiment_config(path).master_seed == 5


# ------------------------------------------------------------- validation


@pytest.mark.parametrize(
    "kwargs",
    [
        {"scenario": "nope"},
        {"waveform": "seq9"},
        {"snr_db": (3.0, 1.0)},
        {"snr_db": (1.0, 1.0)},
        {"snr_db": ()},
        {"trials": 0},
        {"master_seed": -1},
        {"waveform": "file"},  # missing seq_file
        {"waveform": "none"},  # mux-only option
        {"scenario": "standalone_fading", "waveform": "qpsk_ref"},
        {"qam_order": 16},
        {"mux_layout": "custom"},
        {"scenario": "standalone_awgn", "channel": "exppdp"},
        {"scenario": "standalone_fading", "channel": "awgn"},
        {"power_split": 1.5},
        {"num_taps": 0},
    ],
)
def test_experiment_config_validation(kwargs):
    with pytest.raises(ConfigurationError):
        ExperimentConfig(**kwargs)


def test_scenario_channel_defaults():
    assert ExperimentConfig(scenario="standalone_awgn").channel_params() is None
    fading = ExperimentConfig(scenario="standalone_fading").channel_params()
    assert fading is not None and fading.num_taps == 10 and fading.decay_rate == 0.1


# ----------------------------------------------------------------- wilson


def test_wilson_halfwidth_oracle():
    assert math.isclose(
        wilson_halfwidth(5, 100), 0.045103395038775584, rel_tol=0, abs_tol=1e-15
    )
    # k = 0 collapses to z^2 / (2 (n + z^2))
    z = 1.959963984540054
    assert math.isclose(
        wilson_halfwidth(0, 1000), z * z / (2 * (1000 + z * z)), rel_tol=1e-14
    )
    # at fixed rate, more observations tighten the interval
    assert wilson_halfwidth(50, 100) < wilson_halfwidth(25, 50)


# ---------------------------------------------------------------- run_ber


def strip_wall(csv_text):
    lines = csv_text.strip().splitlines()
    return [",".join(line.split(",")[:-1]) for line in lines]


def test_run_ber_deterministic_and_schema(tmp_path):
    cfg = ExperimentConfig(
        scenario="standalone_awgn", waveform="seq2", snr_db=(-6.0, -2.0), trials=300
    )
    rep1 = run_ber(cfg)
    rep2 = run_ber(cfg)
    assert rep1.to_csv().splitlines()[0] == (
        "snr_db,trials,bit_errors,ber,ci_halfwidth,wall_seconds"
    )
    assert strip_wall(rep1.to_csv()) == strip_wall(rep2.to_csv())
    out = tmp_path / "r.csv"
    rep1.write_csv(out)
    assert strip_wall(out.read_text()) == strip_wall(rep1.to_csv())


def test_run_ber_seed_changes_results():
    common = dict(
        scenario="standalone_awgn", waveform="seq2", snr_db=(-9.0, -7.0, -5.0),
        trials=400,
    )
    base = run_ber(ExperimentConfig(**common))
    other = run_ber(ExperimentConfig(master_seed=1, **common))
    assert tuple(r.bit_errors for r in base.rows) != tuple(
        r.bit_errors for r in other.rows
    )


def test_run_ber_high_snr_no_errors():
    for scenario in ("standalone_awgn", "mux"):
        cfg = ExperimentConfig(
            scenario=scenario, waveform="seq2", snr_db=(200.0,), trials=1000
        )
        row = run_ber(cfg).rows[0]
        assert row.bit_errors == 0
        assert row.ber == 0.0


def test_run_ber_row_invariants():
    cfg = ExperimentConfig(
        scenario="standalone_awgn", waveform="seq4", snr_db=(-8.0, -5.0), trials=500
    )
    rep = run_ber(cfg)
    assert rep.bits_per_trial == 1
    for row in rep.rows:
        assert 0 <= row.bit_errors <= row.trials * rep.bits_per_trial
        assert row.ber == row.bit_errors / (row.trials * rep.bits_per_trial)
        assert math.isclose(
            row.ci_halfwidth,
            wilson_halfwidth(row.bit_errors, row.trials * rep.bits_per_trial),
            rel_tol=1e-14,
        )
        assert row.wall_seconds >= 0


def test_run_ber_mux_counts_28_bits_per_trial():
    cfg = ExperimentConfig(scenario="mux", waveform="seq2", snr_db=(0.0,), trials=50)
    assert run_ber(cfg).bits_per_trial == 28


def test_run_ber_file_waveform_matches_table(tmp_path):
    path = tmp_path / "seq2.txt"
    write_sequence(path, load_table1(2))
    file_cfg = ExperimentConfig(
        scenario="standalone_awgn",
        waveform="file",
        seq_file=str(path),
        snr_db=(-5.0,),
        trials=400,
    )
    table_cfg = ExperimentConfig(
        scenario="standalone_awgn", waveform="seq2", snr_db=(-5.0,), trials=400
    )
    assert run_ber(file_cfg).rows[0].bit_errors == run_ber(table_cfg).rows[0].bit_errors


def test_run_ber_seq1_beats_seq3_in_awgn():
    # Shorter active window accumulates less noise: at a common SNR in
    # the waterfall region seq #1 must sit clearly below seq #3.
    common = dict(scenario="standalone_awgn", snr_db=(-5.0,), trials=20_000)
    ber1 = run_ber(ExperimentConfig(waveform="seq1", **common)).rows[0].ber
    ber3 = run_ber(ExperimentConfig(waveform="seq3", **common)).rows[0].ber
    assert ber1 < ber3 / 2


def test_run_ber_qpsk_ref_tracks_theory():
    # The sample-SNR axis folds in the OOK energy-per-bit offset
    # 10 log10(n_fft + cp); undo it before comparing with theory.
    cfg = ExperimentConfig(
        scenario="standalone_awgn", waveform="qpsk_ref", snr_db=(-12.0,), trials=20_000
    )
    row = run_ber(cfg).rows[0]
    p = qpsk_theory_ber(-12.0 + 10 * math.log10(80))
    se = math.sqrt(p * (1 - p) / (2 * cfg.trials))
    assert abs(row.ber - p) < 4 * se


def test_run_ber_single_tone_fading_floor():
    # Fading: the single-tone option rides one subcarrier and floors hard,
    # while a spread sequence keeps falling: >= 10x gap at 30 dB.
    common = dict(scenario="standalone_fading", snr_db=(30.0,), trials=10_000)
    floor = run_ber(ExperimentConfig(waveform="single_tone", **common)).rows[0].ber
    seq2 = run_ber(ExperimentConfig(waveform="seq2", **common)).rows[0].ber
    assert floor >= 10 * max(seq2, 1e-4)


def test_mux_rejects_single_tone_waveform():
    with pytest.raises(ConfigurationError):
        run_ber(
            ExperimentConfig(
                scenario="mux", waveform="single_tone", snr_db=(0.0,), trials=10
            )
        )


# ------------------------------------------------------------ run_optimize


def test_run_optimize_writes_artifacts(tmp_path):
    cfg = write_config(
        tmp_path,
        "opt.cfg",
        u_first="1e-3",
        u_leak="1e-3",
        lam="0",
        active_duration="1.2e-6",
        out_seq="seq.txt",
        out_trace="trace.csv",
    )
    result = run_optimize(cfg)
    assert result.converged
    assert result.out_seq.exists() and result.out_trace.exists()
    seq = read_sequence(result.out_seq)
    assert seq.elements.size == 15
    assert seq.elements[7] == 0
    header = result.out_trace.read_text().splitlines()[0]
    assert header == "iter,cost_mod,cost_rmse,linf"


def test_run_optimize_iteration_cap(tmp_path):
    cfg = write_config(
        tmp_path,
        "opt.cfg",
        u_first="1e-3",
        u_leak="1e-3",
        max_iters="1",
        out_seq="seq.txt",
        out_trace="trace.csv",
    )
    result = run_optimize(cfg)
    assert not result.converged
    # initial row plus exactly one iteration row
    assert len(result.out_trace.read_text().splitlines()) == 1 + 2
    assert result.out_seq.exists()


def test_run_optimize_requires_outputs(tmp_path):
    cfg = write_config(tmp_path, "opt.cfg", u_first="1e-3", out_seq="s.txt")
    with pytest.raises(ConfigurationError, match="out_trace"):
        run_optimize(cfg)


def test_run_optimize_rejects_unknown_init(tmp_path):
    cfg = write_config(
        tmp_path, "opt.cfg", init="random", out_seq="s.txt", out_trace="t.csv"
    )
    with pytest.raises(ConfigurationError, match="init"):
        run_optimize(cfg)


def test_run_optimize_regularization_flattens_profile(tmp_path):
    # The infinity-norm term spreads tone power: max/min nonzero |c_k|^2
    # must come out strictly smaller than in the unregularized run.
    ratios = {}
    for lam in (0.0, 2.2):
        cfg = write_config(
            tmp_path,
            f"opt_{lam}.cfg",
            u_first="1e-3",
            u_leak="1e-3",
            lam=str(lam),
            active_duration="1.2e-6",
            out_seq=f"seq_{lam}.txt",
            out_trace=f"trace_{lam}.csv",
        )
        seq = run_optimize(cfg).sequence
        powers = np.abs(seq.elements) ** 2
        nonzero = powers[powers > 1e-12]
        ratios[lam] = nonzero.max() / nonzero.min()
    assert ratios[2.2] < ratios[0.0]


# ------------------------------------------------------------- run_metrics


def test_run_metrics_table_ids():
    rep1 = run_metrics("table:1")
    assert abs(rep1.value("onoff_db_t12_n64") - 49.5) < 3.0
    assert abs(rep1.value("norm_sq") - 14.0) < 0.05
    rep2 = run_metrics("table:2")
    assert abs(rep2.value("onoff_db_t12_n64") - 23.2) < 2.0
    names = [name for name, _ in rep1.rows]
    assert names[:8] == [
        "norm_sq",
        "onoff_db_t12_n64",
        "onoff_db_t12_n1024",
        "rmse_t12",
        "onoff_db_t16_n64",
        "onoff_db_t16_n1024",
        "rmse_t16",
        "papr_db",
    ]
    assert [n for n in names if n.startswith("tone_power_")] == [
        f"tone_power_{k:02d}" for k in range(15)
    ]
    assert rep1.to_csv().splitlines()[0] == "metric,value"


def test_run_metrics_file_roundtrip(tmp_path):
    path = tmp_path / "seq.txt"
    write_sequence(path, load_table1(3))
    rep = run_metrics(str(path))
    direct = run_metrics("table:3")
    assert math.isclose(
        rep.value("onoff_db_t16_n64"), direct.value("onoff_db_t16_n64"), rel_tol=1e-9
    )


def test_run_metrics_rejects_bad_table_id():
    with pytest.raises(KeyError):
        run_metrics("table:9")


def test_run_metrics_rejects_invalid_file(tmp_path):
    # all-zero entries parse but cannot produce a usable envelope
    path = tmp_path / "bad.txt"
    path.write_text(
        "# wakeform-seq v1 L=15\n" + "".join(f"{k} 0 0\n" for k in range(15))
    )
    with pytest.raises((SequenceFormatError, InvalidSequenceError)):
        run_metrics(str(path))


# -------------------------------------------------------------------- CLI


def test_cli_metrics_stdout(capsys):
    assert cli.main(["metrics", "--seq", "table:1"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "metric,value"
    assert any(line.startswith("onoff_db_t12_n64,") for line in out.splitlines())


def test_cli_metrics_invalid_file_exit_2(tmp_path, capsys):
    path = tmp_path / "bad.txt"
    path.write_text(
        "# wakeform-seq v1 L=15\n" + "".join(f"{k} 0 0\n" for k in range(15))
    )
    assert cli.main(["metrics", "--seq", str(path)]) == 2
    assert capsys.readouterr().err != ""


def test_cli_ber_writes_csv(tmp_path, capsys):
    cfg = write_config(
        tmp_path, waveform="seq2", snr_db="-4, 0", trials="50"
    )
    out = tmp_path / "ber.csv"
    assert cli.main(["ber", "--config", str(cfg), "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "snr_db,trials,bit_errors,ber,ci_halfwidth,wall_seconds"
    assert len(lines) == 3


def test_cli_mux_ber_defaults_to_mux(tmp_path):
    cfg = write_config(tmp_path, waveform="none", snr_db="6", trials="40")
    out = tmp_path / "mux.csv"
    assert cli.main(["mux-ber", "--config", str(cfg), "--out", str(out)]) == 0
    assert out.exists()


def test_cli_scenario_subcommand_cross_check(tmp_path, capsys):
    mux_cfg = write_config(tmp_path, "a.cfg", scenario="mux", waveform="seq2",
                           snr_db="0", trials="10")
    assert cli.main(["ber", "--config", str(mux_cfg), "--out", str(tmp_path / "x.csv")]) == 2
    sa_cfg = write_config(tmp_path, "b.cfg", scenario="standalone_awgn",
                          waveform="seq2", snr_db="0", trials="10")
    assert cli.main(["mux-ber", "--config", str(sa_cfg), "--out", str(tmp_path / "y.csv")]) == 2


def test_cli_missing_config_exit_2(tmp_path, capsys):
    assert cli.main(["ber", "--config", str(tmp_path / "no.cfg"),
                     "--out", str(tmp_path / "o.csv")]) == 2


def test_cli_optimize_exit_codes(tmp_path, capsys):
    good = write_config(
        tmp_path, "g.cfg", u_first="1e-3", u_leak="1e-3",
        out_seq="s.txt", out_trace="t.csv",
    )
    assert cli.main(["optimize", "--config", str(good)]) == 0
    capped = write_config(
        tmp_path, "c.cfg", u_first="1e-3", u_leak="1e-3", max_iters="1",
        out_seq="s2.txt", out_trace="t2.csv",
    )
    assert cli.main(["optimize", "--config", str(capped)]) == 1
