"""Alternation tests: operator algebra, phase step, costs, and the loop."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wakeform import waveform as wf
from wakeform.scan import (
    PhaseVector,
    ScanParams,
    ScanTrace,
    build_operator,
    modified_cost,
    phase_update,
    scan_run,
)

CFG12 = wf.wifi_config(1.2e-6)
CFG16 = wf.wifi_config(1.6e-6)


def random_seq(rng, length):
    c = rng.normal(size=length) + 1j * rng.normal(size=length)
    return wf.Sequence(c)


# ---------------------------------------------------------------- operator


def test_operator_rejects_undersampled_grid():
    with pytest.raises(wf.ConfigurationError):
        build_operator(15, 28)


def test_forward_matches_dense_matrix():
    rng = np.random.default_rng(1)
    op = build_operator(7, 24)
    c = rng.normal(size=7) + 1j * rng.normal(size=7)
    np.testing.assert_allclose(op.forward(c), op.matrix @ c, atol=1e-12)


def test_adjoint_probe_identity():
    # <G c, y> == <c, G^H y> on random probes
    rng = np.random.default_rng(2)
    op = build_operator(5, 16)
    for _ in range(20):
        c = rng.normal(size=5) + 1j * rng.normal(size=5)
        y = rng.normal(size=16) + 1j * rng.normal(size=16)
        lhs = np.vdot(y, op.forward(c))
        rhs = np.vdot(op.adjoint(y), c)
        assert abs(lhs - rhs) <= 1e-10


def test_columns_orthogonal():
    op = build_operator(15, 64)
    g = op.matrix
    gram = g.conj().T @ g
    np.testing.assert_allclose(gram, 64 * np.eye(15), atol=1e-9)


def test_operator_shape_checks():
    op = build_operator(5, 16)
    with pytest.raises(ValueError):
        op.forward(np.zeros(4, complex))
    with pytest.raises(ValueError):
        op.adjoint(np.zeros(15, complex))


# ---------------------------------------------------------------- phases


def test_phase_vector_validation():
    on = np.array([0, 1, 2])
    PhaseVector(np.exp(1j * np.array([0.1, 0.2, 0.3])), on)
    with pytest.raises(ValueError):
        PhaseVector(np.array([1.0, 0.5, 1.0], complex), on)
    with pytest.raises(ValueError):
        PhaseVector(np.ones(2, complex), on)


def test_phase_update_zero_sequence_pins_to_one():
    shape = wf.make_shape(CFG12, 0, 64)
    z = phase_update(wf.Sequence(np.zeros(15, complex)), shape)
    np.testing.assert_allclose(z.values, np.ones(shape.on_set.size), atol=0)


def test_phase_update_beats_grid_search():
    # closed-form phases vs a 360-point per-sample grid, 20 random draws
    rng = np.random.default_rng(3)
    shape = wf.make_shape(CFG12, 0, 64)
    angles = 2 * np.pi * np.arange(360) / 360
    for _ in range(20):
        seq = random_seq(rng, 15)
        s = wf.synthesize(seq, n=64) * math.sqrt(seq.tone_count)
        best = np.empty(shape.on_set.size)
        for i, p in enumerate(shape.on_set):
            target = math.sqrt(seq.tone_count) * shape.amplitudes[p]
            cost = np.abs(s[p] - target * np.exp(1j * angles))
            best[i] = angles[int(np.argmin(cost))]
        z_grid = PhaseVector.from_angles(best, shape.on_set)
        z_closed = phase_update(seq, shape)
        assert modified_cost(seq, z_closed, shape) <= modified_cost(
            seq, z_grid, shape
        ) + 1e-12


# ---------------------------------------------------------------- costs


def test_modified_cost_of_zero_sequence():
    # zero c leaves the full target: J = sqrt(P/N * sum a^2) = sqrt(P)
    for cfg in (CFG12, CFG16):
        shape = wf.make_shape(cfg, 0, 64)
        seq = wf.Sequence(np.zeros(15, complex))
        z = phase_update(seq, shape)
        assert abs(modified_cost(seq, z, shape) - math.sqrt(14)) <= 1e-12


def test_modified_cost_direct_sum():
    rng = np.random.default_rng(4)
    shape = wf.make_shape(CFG12, 0, 64)
    for _ in range(10):
        seq = random_seq(rng, 15)
        z = phase_update(seq, shape)
        total = 0.0
        for p in range(64):
            term = sum(
                seq.elements[k] * np.exp(2j * np.pi * k * p / 64) for k in range(15)
            )
            if p in set(shape.on_set.tolist()):
                i = int(np.nonzero(shape.on_set == p)[0][0])
                term -= math.sqrt(14) * shape.amplitudes[p] * z.values[i]
            total += abs(term) ** 2
        assert abs(modified_cost(seq, z, shape) - math.sqrt(total / 64)) <= 1e-9


def test_modified_cost_rejects_foreign_window():
    shape12 = wf.make_shape(CFG12, 0, 64)
    shape16 = wf.make_shape(CFG16, 0, 64)
    seq = wf.Sequence(np.ones(15, complex))
    z = phase_update(seq, shape16)
    with pytest.raises(ValueError):
        modified_cost(seq, z, shape12)


@given(
    st.lists(
        st.complex_numbers(max_magnitude=3.0, allow_nan=False, allow_infinity=False),
        min_size=15,
        max_size=15,
    )
)
@settings(deadline=None, max_examples=60)
def test_cost_relation_bound(values):
    # J_rmse <= 2 sqrt(P) a_max J_mod + sqrt(N) J_mod^2 with optimal phases:
    # | |s|^2 - P a^2 | = |e| (|e| + 2 sqrt(P) a) with e = |s| - sqrt(P) a,
    # then Minkowski and sum e^4 <= (sum e^2)^2.
    seq = wf.Sequence(np.array(values, dtype=complex))
    for shape in (wf.make_shape(CFG12, 0, 64), wf.make_shape(CFG16, 0, 64)):
        z = phase_update(seq, shape)
        jm = modified_cost(seq, z, shape)
        jr = wf.rmse_cost(seq, shape)
        a_max = float(np.max(shape.amplitudes))
        bound = 2 * math.sqrt(14) * a_max * jm + math.sqrt(64) * jm * jm
        assert jr <= bound * (1 + 1e-9) + 1e-12


# ---------------------------------------------------------------- params


def test_scan_params_validation():
    init = wf.Sequence(np.ones(15, complex))
    ScanParams(initial=init)
    with pytest.raises(ValueError):
        ScanParams(initial=init, lam=-0.1)
    with pytest.raises(ValueError):
        ScanParams(initial=init, cost_tol=0.0)
    with pytest.raises(ValueError):
        ScanParams(initial=init, max_iters=0)
    with pytest.raises(wf.ConfigurationError):
        ScanParams(initial=init, n_grid=28)


def test_trace_csv_format(tmp_path):
    trace = ScanTrace(
        iterations=np.array([0, 1]),
        cost_mod=np.array([2.0, 1.0]),
        cost_rmse=np.array([3.0, 2.0]),
        linf=np.array([1.0, 0.5]),
        solver_converged=np.array([True, True]),
    )
    out = tmp_path / "trace.csv"
    trace.write_csv(out)
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "iter,cost_mod,cost_rmse,linf"
    assert len(lines) == 3
    first = lines[1].split(",")
    assert first[0] == "0" and float(first[1]) == 2.0


# ---------------------------------------------------------------- loop


def test_scan_rejects_mismatched_shape():
    init = wf.Sequence(np.ones(15, complex))
    shape = wf.make_shape(CFG12, 0, 128)
    params = ScanParams(initial=init, n_grid=64)
    with pytest.raises(wf.ConfigurationError):
        scan_run(params, CFG12, shape)
    shape16 = wf.make_shape(CFG16, 0, 64)
    with pytest.raises(wf.ConfigurationError):
        scan_run(params, CFG12, shape16)


def test_scan_loose_bounds_reaches_ls_fixed_point():
    # with inactive bounds and lam = 0 each solve is the plain LS fit, so
    # the alternation must stabilize at c = G^H v(z(c)) / N
    init = wf.Sequence(np.ones(7, complex))
    shape = wf.make_shape(CFG12, 0, 16)
    params = ScanParams(
        initial=init, lam=0.0, u_first=1e3, u_leak=1e3, n_grid=16
    )
    seq, trace = scan_run(params, CFG12, shape, backend="numpy")
    assert trace.iterations[-1] < params.max_iters
    obj = trace.objective(0.0)
    assert np.max(np.diff(obj), initial=-1.0) <= 2 * params.solver_tol
    op = build_operator(7, 16)
    z = phase_update(seq, shape)
    v = np.zeros(16, complex)
    v[shape.on_set] = math.sqrt(6) * shape.amplitudes[shape.on_set] * z.values
    fit = op.adjoint(v) / 16
    fit[seq.dc_index] = 0.0
    # the normalized output is parallel to the fixed-point fit
    cos = abs(np.vdot(fit, seq.elements)) / (
        np.linalg.norm(fit) * np.linalg.norm(seq.elements)
    )
    assert cos >= 1 - 1e-6


def test_scan_trace_row0_is_initial():
    init = wf.Sequence(np.ones(7, complex))
    shape = wf.make_shape(CFG12, 0, 16)
    params = ScanParams(initial=init, u_first=1e3, u_leak=1e3, n_grid=16)
    _, trace = scan_run(params, CFG12, shape, backend="numpy")
    assert trace.iterations[0] == 0
    assert trace.linf[0] == 1.0
    z0 = phase_update(init, shape)
    assert abs(trace.cost_mod[0] - modified_cost(init, z0, shape)) <= 1e-12
    assert abs(trace.cost_rmse[0] - wf.rmse_cost(init, shape)) <= 1e-12


def test_scan_output_is_finalized():
    init = wf.Sequence(np.ones(7, complex))
    shape = wf.make_shape(CFG12, 0, 16)
    params = ScanParams(initial=init, u_first=1e-2, u_leak=1e-2, n_grid=16)
    seq, _ = scan_run(params, CFG12, shape, backend="numpy")
    seq.require_finalized()
    assert seq.elements[seq.dc_index] == 0.0
