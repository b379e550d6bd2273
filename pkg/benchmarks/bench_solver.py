"""Compare the compiled and NumPy solver kernels on representative inputs.

Run from the repository root:

    python3 benchmarks/bench_solver.py
"""

import math
import time

import numpy as np

from wakeform import waveform as wf
from wakeform.scan import _bounded_outputs, _phase_target, build_operator, phase_update
from wakeform.solver import SubproblemB, available_backends, solve


def paper_style_instances():
    op = build_operator(15, 64)
    for ta, u, lam in (
        (1.2e-6, 1e-3, 0.0),
        (1.2e-6, 1e-3, 2.2),
        (1.6e-6, 1e-4, 0.0),
        (1.6e-6, 1e-4, 2.2),
    ):
        cfg = wf.wifi_config(ta)
        shape = wf.make_shape(cfg, 0, 64)
        z = phase_update(wf.Sequence(np.ones(15, complex)), shape)
        v = _phase_target(z, shape, 14)
        label = f"L=15 N=64 lam={lam} u={u:g} Ta={ta * 1e6:.1f}us"
        yield label, SubproblemB(op, v, lam, 7, _bounded_outputs(shape, u, u))


def random_instances(count, rng):
    for _ in range(count):
        length = int(rng.choice([3, 5, 7]))
        n = int(rng.choice([16, 24, 32]))
        n = max(n, 2 * length - 1)
        op = build_operator(length, n)
        v = rng.normal(size=n) + 1j * rng.normal(size=n)
        lam = float(rng.choice([0.0, 0.5, 2.0]))
        nb = int(rng.integers(0, 4))
        samples = sorted(rng.choice(n, size=nb, replace=False).tolist())
        bnds = tuple((int(p), float(rng.uniform(5e-4, 5e-2))) for p in samples)
        yield f"L={length} N={n} lam={lam} B={nb}", SubproblemB(
            op, v, lam, (length - 1) // 2, bnds
        )


def time_solve(prob, backend, repeats=3):
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        _, rep = solve(prob, 1e-6, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best, rep


def main():
    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    if "compiled" not in backends:
        print("compiled kernel not built; nothing to compare")
        return

    rng = np.random.default_rng(2024)
    rows = list(paper_style_instances()) + list(random_instances(6, rng))
    width = max(len(label) for label, _ in rows)
    print(f"{'instance':<{width}}  {'numpy':>9}  {'compiled':>9}  {'ratio':>6}  iters")
    total_py = total_c = 0.0
    for label, prob in rows:
        t_py, rep_py = time_solve(prob, "numpy")
        t_c, rep_c = time_solve(prob, "compiled")
        total_py += t_py
        total_c += t_c
        assert rep_py.iterations == rep_c.iterations, label
        print(
            f"{label:<{width}}  {t_py * 1e3:8.1f}ms  {t_c * 1e3:8.1f}ms"
            f"  {t_py / t_c:5.1f}x  {rep_c.iterations}"
        )
    print(f"{'total':<{width}}  {total_py * 1e3:8.1f}ms  {total_c * 1e3:8.1f}ms"
          f"  {total_py / total_c:5.1f}x")


if __name__ == "__main__":
    main()
