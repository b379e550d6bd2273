"""NumPy reference kernel for the consensus ADMM loop.

The compiled kernel in ``_admm_c`` implements exactly the same iteration;
``solver`` picks whichever is available.  Keep the two in lockstep: the
parity test compares them iterate by iterate.

Problem solved here, in the DC-eliminated variable y (K = L-1 entries):

    minimize (1/sqrt(N)) ||A1 y - v||_2 + lam ||y||_inf
    subject to |Re (A2 y)_i| <= b_i, |Im (A2 y)_i| <= b_i

with A = [A1; A2] passed stacked ((N+B) x K).  The caller pre-scales the
box rows and their bounds by a common factor, which balances the tiny
bound magnitudes against the O(||v||) least-squares rows; the iteration
itself is scale-agnostic.  Splitting: zA ~ A y carries the LS term and the
box, z3 ~ y carries the l_inf term.  The x-update matrix (A^H A + I) is
constant (independent of the penalty rho), so its inverse is precomputed
by the caller.
"""

import math

import numpy as np


def project_l1_ball(w: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection of complex w onto {x : sum |x_i| <= radius}.

    Moduli are soft-thresholded by the usual sorted-cumsum rule, phases kept.
    ``np.sort`` is stable, so ties in the moduli resolve deterministically.
    """
    if radius <= 0.0:
        return np.zeros_like(w)
    m = np.abs(w)
    if m.sum() <= radius:
        return w.copy()
    drop = np.sort(m)[::-1]
    cum = np.cumsum(drop)
    k = np.arange(1, m.size + 1)
    ok = drop - (cum - radius) / k > 0
    kmax = int(np.max(np.nonzero(ok)[0])) + 1
    theta = (cum[kmax - 1] - radius) / kmax
    scale = np.maximum(m - theta, 0.0)
    out = np.zeros_like(w)
    nz = m > 0
    out[nz] = w[nz] * (scale[nz] / m[nz])
    return out


def prox_linf(w: np.ndarray, t: float) -> np.ndarray:
    """prox of t*||.||_inf via Moreau: w minus the l1-ball projection."""
    if t <= 0.0:
        return w.copy()
    return w - project_l1_ball(w, t)


def run_admm(
    a_stack: np.ndarray,
    n_time: int,
    h_inv: np.ndarray,
    v: np.ndarray,
    lam: float,
    bounds: np.ndarray,
    rho: float,
    tol: float,
    max_iters: int,
    burn_in: int,
    z_a: np.ndarray,
    u_a: np.ndarray,
    z_3: np.ndarray,
    u_3: np.ndarray,
    merit_out: np.ndarray | None = None,
):
    """Run the loop in place on the state arrays.

    Returns (y, iterations, converged, rho, stationarity, box_violation).
    State arrays are mutated so the caller can warm-start the next call.
    """
    n_rows, k = a_stack.shape
    n_b = n_rows - n_time
    a_h = a_stack.conj().T
    sqrt_n = math.sqrt(n_time)
    y = np.zeros(k, dtype=np.complex128)
    iters = 0
    converged = False
    stat_norm = math.inf
    viol = math.inf

    for it in range(1, max_iters + 1):
        iters = it
        rhs = a_h @ (z_a - u_a) + (z_3 - u_3)
        y = h_inv @ rhs
        ay = a_stack @ y

        z_a_old = z_a.copy()
        z_3_old = z_3.copy()
        if merit_out is not None:
            u_a_old = u_a.copy()
            u_3_old = u_3.copy()

        # zA block, LS rows: shrink toward v
        d = ay[:n_time] + u_a[:n_time] - v
        nd = float(np.linalg.norm(d))
        t = 1.0 / (rho * sqrt_n)
        shrink = max(1.0 - t / nd, 0.0) if nd > 0.0 else 0.0
        z_a[:n_time] = v + shrink * d

        # zA block, box rows: clip Re and Im
        if n_b:
            w = ay[n_time:] + u_a[n_time:]
            z_a[n_time:] = np.clip(w.real, -bounds, bounds) + 1j * np.clip(
                w.imag, -bounds, bounds
            )

        # z3 block: l_inf prox
        w3 = y + u_3
        z_3[:] = prox_linf(w3, lam / rho) if lam > 0.0 else w3

        u_a += ay - z_a
        u_3 += y - z_3

        if merit_out is not None:
            merit_out[it - 1] = (
                float(np.sum(np.abs(z_a - z_a_old) ** 2))
                + float(np.sum(np.abs(z_3 - z_3_old) ** 2))
                + float(np.sum(np.abs(u_a - u_a_old) ** 2))
                + float(np.sum(np.abs(u_3 - u_3_old) ** 2))
            )

        r_norm = math.sqrt(
            float(np.sum(np.abs(ay - z_a) ** 2)) + float(np.sum(np.abs(y - z_3) ** 2))
        )
        s_vec = a_h @ (z_a - z_a_old) + (z_3 - z_3_old)
        s_norm = rho * float(np.linalg.norm(s_vec))

        if n_b:
            re_ex = np.abs(ay[n_time:].real) - bounds
            im_ex = np.abs(ay[n_time:].imag) - bounds
            viol = max(float(np.max(re_ex)), float(np.max(im_ex)), 0.0)
        else:
            viol = 0.0

        ax_scale = max(
            1.0,
            math.sqrt(float(np.sum(np.abs(ay) ** 2)) + float(np.sum(np.abs(y) ** 2))),
            math.sqrt(float(np.sum(np.abs(z_a) ** 2)) + float(np.sum(np.abs(z_3) ** 2))),
        )
        dual_vec = a_h @ u_a + u_3
        dual_scale = max(1.0, rho * float(np.linalg.norm(dual_vec)))
        stat_norm = s_norm / dual_scale

        if r_norm <= tol * ax_scale and stat_norm <= tol and viol <= tol:
            converged = True
            break

        # Penalty rebalancing is confined to the burn-in prefix so that the
        # fixed-point residual is monotone over the remaining iterations.
        # Up-only: a downward move enlarges the prox radii past the iterate
        # scale and the affected block degenerates into a bare dual
        # integrator that crawls to feasibility.
        if it <= burn_in and it % 25 == 0 and r_norm > 10.0 * s_norm:
            rho *= 2.0
            u_a *= 0.5
            u_3 *= 0.5

    return y, iters, converged, rho, stat_norm, viol
