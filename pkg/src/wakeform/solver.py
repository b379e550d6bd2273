"""Constrained least-squares subproblem behind each sequence update.

The problem family:

    minimize   (1/sqrt(N)) ||G x - v||_2  +  lam * ||x||_inf
    over       x in C^L
    subject to x[equality_index] = 0
               |Re (G x)_p| <= u_p  and  |Im (G x)_p| <= u_p
               for each bounded output (p, u_p)

G has mutually orthogonal columns (G^H G = N I), which makes the quadratic
step of an operator-splitting method closed form.  The equality is removed
by eliminating the column, never penalized.  x = 0 is always feasible, so
no bound request can make the problem infeasible.

Two interchangeable kernels run the iteration: a compiled one
(``wakeform._admm_c``, built from Cython) and a NumPy one
(``wakeform._admm_py``).  The compiled kernel is preferred when the
extension imported; ``backend=`` or the ``WAKEFORM_BACKEND`` environment
variable overrides.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _admm_py

try:
    from . import _admm_c
except ImportError:  # extension not built; NumPy kernel is fully equivalent
    _admm_c = None

__all__ = [
    "SubproblemB",
    "SolverReport",
    "WarmState",
    "RealEmbedding",
    "available_backends",
    "default_backend",
    "real_embedding",
    "objective_value",
    "solve",
]


def available_backends() -> tuple[str, ...]:
    return ("numpy", "compiled") if _admm_c is not None else ("numpy",)


def default_backend() -> str:
    forced = os.environ.get("WAKEFORM_BACKEND", "").strip()
    if forced:
        if forced not in available_backends():
            raise ValueError(
                f"WAKEFORM_BACKEND={forced!r} not available; "
                f"choices: {available_backends()}"
            )
        return forced
    return "compiled" if _admm_c is not None else "numpy"


def _matrix_of(operator) -> np.ndarray:
    mat = getattr(operator, "matrix", operator)
    mat = np.asarray(mat, dtype=np.complex128)
    if mat.ndim != 2:
        raise ValueError("operator must provide a 2-D matrix")
    return mat


@dataclass(frozen=True)
class SubproblemB:
    """One instance of the constrained LS problem.

    ``operator`` is anything exposing an (N x L) complex ``matrix``
    attribute (or a bare ndarray).  ``bounded_outputs`` lists
    (time-sample index, bound) pairs; bounds apply to real and imaginary
    parts with both signs.
    """

    operator: object
    target: np.ndarray
    lam: float
    equality_index: int
    bounded_outputs: tuple[tuple[int, float], ...] = ()

    def __post_init__(self) -> None:
        mat = _matrix_of(self.operator)
        n, L = mat.shape
        v = np.asarray(self.target, dtype=np.complex128)
        if v.shape != (n,):
            raise ValueError(f"target must have shape ({n},), got {v.shape}")
        if self.lam < 0:
            raise ValueError("lam must be nonnegative")
        if not 0 <= self.equality_index < L:
            raise ValueError("equality_index out of range")
        pairs = tuple((int(p), float(u)) for p, u in self.bounded_outputs)
        seen = set()
        for p, u in pairs:
            if not 0 <= p < n:
                raise ValueError(f"bounded output sample {p} out of range")
            if p in seen:
                raise ValueError(f"duplicate bounded output sample {p}")
            if u < 0:
                raise ValueError("bounds must be nonnegative")
            seen.add(p)
        object.__setattr__(self, "target", v)
        object.__setattr__(self, "bounded_outputs", pairs)

    @property
    def n_time(self) -> int:
        return _matrix_of(self.operator).shape[0]

    @property
    def n_tones(self) -> int:
        return _matrix_of(self.operator).shape[1]


@dataclass
class WarmState:
    """Opaque splitting state carried between consecutive solves."""

    z_a: np.ndarray
    u_a: np.ndarray
    z_3: np.ndarray
    u_3: np.ndarray
    rho: float


@dataclass
class SolverReport:
    objective: float
    primal_residual: float
    stationarity_residual: float
    iterations: int
    converged: bool
    backend: str
    rho: float
    state: WarmState | None = None
    merit: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True)
class RealEmbedding:
    """Stacked real/imaginary form of a :class:`SubproblemB`.

    The complex reduced variable y (DC eliminated, K entries) maps to the
    real vector [Re y; Im y] of length 2K.  The LS term becomes
    (1/sqrt(N)) ||a_ls @ yr - b_ls||_2; every bounded output contributes the
    four rows a_ineq @ yr <= b_ineq (+-Re, +-Im); the l_inf term couples the
    entry pairs (i, K+i) through their Euclidean modulus.
    """

    a_ls: np.ndarray
    b_ls: np.ndarray
    a_ineq: np.ndarray
    b_ineq: np.ndarray
    lam: float
    n_time: int
    length: int
    equality_index: int

    @property
    def k(self) -> int:
        return self.a_ls.shape[1] // 2

    def to_complex(self, yr: np.ndarray) -> np.ndarray:
        """Stacked real vector back to the full complex L-vector (DC = 0)."""
        yr = np.asarray(yr, dtype=np.float64)
        k = self.k
        reduced = yr[:k] + 1j * yr[k:]
        out = np.zeros(self.length, dtype=np.complex128)
        out[: self.equality_index] = reduced[: self.equality_index]
        out[self.equality_index + 1 :] = reduced[self.equality_index :]
        return out

    def from_complex(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.complex128)
        reduced = np.delete(x, self.equality_index)
        return np.concatenate([reduced.real, reduced.imag])

    def objective(self, yr: np.ndarray) -> float:
        resid = self.a_ls @ yr - self.b_ls
        k = self.k
        moduli = np.hypot(yr[:k], yr[k:])
        val = float(np.linalg.norm(resid)) / math.sqrt(self.n_time)
        if self.lam > 0 and moduli.size:
            val += self.lam * float(np.max(moduli))
        return val


def _reduced_matrix(prob: SubproblemB) -> np.ndarray:
    return np.delete(_matrix_of(prob.operator), prob.equality_index, axis=1)


def real_embedding(prob: SubproblemB) -> RealEmbedding:
    """Build the real-stacked description (used by the oracle path)."""
    g_hat = _reduced_matrix(prob)
    n, k = g_hat.shape
    a_ls = np.block(
        [[g_hat.real, -g_hat.imag], [g_hat.imag, g_hat.real]]
    )
    b_ls = np.concatenate([prob.target.real, prob.target.imag])
    rows = []
    rhs = []
    for p, u in prob.bounded_outputs:
        re_row = np.concatenate([g_hat[p].real, -g_hat[p].imag])
        im_row = np.concatenate([g_hat[p].imag, g_hat[p].real])
        for row in (re_row, -re_row, im_row, -im_row):
            rows.append(row)
            rhs.append(u)
    a_ineq = np.array(rows) if rows else np.zeros((0, 2 * k))
    b_ineq = np.array(rhs)
    return RealEmbedding(
        a_ls=a_ls,
        b_ls=b_ls,
        a_ineq=a_ineq,
        b_ineq=b_ineq,
        lam=prob.lam,
        n_time=n,
        length=prob.n_tones,
        equality_index=prob.equality_index,
    )


def objective_value(prob: SubproblemB, x: np.ndarray) -> float:
    """(1/sqrt(N)) ||G x - v||_2 + lam ||x||_inf at a full-length x."""
    g = _matrix_of(prob.operator)
    x = np.asarray(x, dtype=np.complex128)
    val = float(np.linalg.norm(g @ x - prob.target)) / math.sqrt(g.shape[0])
    if prob.lam > 0:
        val += prob.lam * float(np.max(np.abs(x)))
    return val


def bound_violation(prob: SubproblemB, x: np.ndarray) -> float:
    """Largest excess of |Re/Im (G x)_p| over its bound; 0 if feasible."""
    if not prob.bounded_outputs:
        return 0.0
    g = _matrix_of(prob.operator)
    worst = 0.0
    for p, u in prob.bounded_outputs:
        val = complex(g[p] @ x)
        worst = max(worst, abs(val.real) - u, abs(val.imag) - u)
    return max(worst, 0.0)


def _embed_full(prob: SubproblemB, y: np.ndarray) -> np.ndarray:
    x = np.zeros(prob.n_tones, dtype=np.complex128)
    e = prob.equality_index
    x[:e] = y[:e]
    x[e + 1 :] = y[e:]
    return x


def solve(
    prob: SubproblemB,
    tol: float = 1e-6,
    *,
    max_iters: int = 20_000,
    rho: float = 1.0,
    warm: WarmState | None = None,
    backend: str = "auto",
    collect_merit: bool = False,
    debug_csv: str | Path | None = None,
) -> tuple[np.ndarray, SolverReport]:
    """Solve the subproblem to ``tol``.

    Returns the full-length x (equality entry exactly 0) and a report.
    ``warm`` reuses the splitting state of a previous call on a problem
    with identical operator and bounds (the target may differ); the state
    arrays are mutated in place and re-exposed through ``report.state``.
    On hitting the iteration cap the report carries ``converged=False``
    and the final iterate is returned as is.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if backend == "auto":
        backend = default_backend()
    if backend not in available_backends():
        raise ValueError(f"backend {backend!r} not available")

    g_hat = _reduced_matrix(prob)
    n, k = g_hat.shape
    v = prob.target

    # v = 0: x = 0 attains the global minimum and satisfies every bound.
    if not np.any(v):
        x = np.zeros(prob.n_tones, dtype=np.complex128)
        report = SolverReport(0.0, 0.0, 0.0, 0, True, "closed-form", rho)
        return x, report

    # lam = 0 with no bounds: plain LS against orthogonal columns.
    if prob.lam == 0.0 and not prob.bounded_outputs:
        y = g_hat.conj().T @ v / n
        x = _embed_full(prob, y)
        report = SolverReport(
            objective_value(prob, x), 0.0, 0.0, 0, True, "closed-form", rho
        )
        return x, report

    samples = [p for p, _ in prob.bounded_outputs]
    bounds = np.array([u for _, u in prob.bounded_outputs], dtype=np.float64)
    # Balance the box rows against the LS rows.  Bounds sit orders of
    # magnitude below the target amplitudes, and with unscaled rows the
    # primal residual on the box block crawls.  With lam > 0 the scaling
    # must stay at 1: it drags the adapted penalty down, which blows up
    # the l_inf prox radius lam/rho and stalls the z3 block instead.
    if samples and prob.lam == 0.0:
        u_min = float(np.min(bounds))
        v_max = float(np.max(np.abs(v)))
        beta = math.sqrt(v_max / u_min) if u_min > 0 else 1e4
        beta = min(max(beta, 1.0), 1e4)
    else:
        beta = 1.0
    a_stack = np.vstack([g_hat, beta * g_hat[samples]]) if samples else g_hat.copy()
    h = a_stack.conj().T @ a_stack + np.eye(k)
    h_inv = np.linalg.inv(h)

    # With lam > 0 the l_inf prox collapses z3 to 0 whenever its radius
    # lam/rho exceeds ||y + u3||_1, and the dual then has to integrate up to
    # the l1-ball boundary at a rate set by the iterate scale.  Keep the
    # radius an order below the unconstrained-fit scale so that fill
    # transient stays short, and skip penalty rebalancing (a downward move
    # re-opens the radius and restarts the fill).
    if prob.lam > 0.0:
        fit_scale = float(np.max(np.abs(g_hat.conj().T @ v / n)))
        if warm is None and fit_scale > 0.0:
            rho = max(rho, 8.0 * prob.lam / fit_scale)
        burn_in = 0
    else:
        burn_in = min(500, max_iters // 10)

    n_rows = a_stack.shape[0]
    if warm is None:
        state = WarmState(
            z_a=np.zeros(n_rows, dtype=np.complex128),
            u_a=np.zeros(n_rows, dtype=np.complex128),
            z_3=np.zeros(k, dtype=np.complex128),
            u_3=np.zeros(k, dtype=np.complex128),
            rho=rho,
        )
    else:
        if warm.z_a.shape != (n_rows,) or warm.z_3.shape != (k,):
            raise ValueError("warm state does not match problem dimensions")
        state = warm

    want_merit = collect_merit or debug_csv is not None
    merit = np.zeros(max_iters) if want_merit else None

    kernel = _admm_py if backend == "numpy" else _admm_c
    y, iters, converged, rho_out, stat, viol = kernel.run_admm(
        a_stack,
        n,
        h_inv,
        v,
        float(prob.lam),
        beta * bounds,
        float(state.rho),
        float(tol),
        int(max_iters),
        int(burn_in),
        state.z_a,
        state.u_a,
        state.z_3,
        state.u_3,
        merit,
    )
    state.rho = rho_out
    y = np.asarray(y)
    if merit is not None:
        merit = merit[:iters]
    x = _embed_full(prob, y)
    report = SolverReport(
        objective=objective_value(prob, x),
        primal_residual=viol / beta,
        stationarity_residual=stat,
        iterations=iters,
        converged=converged,
        backend=backend,
        rho=rho_out,
        state=state,
        merit=merit,
    )
    if debug_csv is not None:
        lines = ["iter,merit"]
        lines += [f"{i + 1},{m:.9e}" for i, m in enumerate(merit)]
        Path(debug_csv).write_text("\n".join(lines) + "\n")
    return x, report
