"""Compiled inner loops for trajectory integration.

All randomness stays outside: callers pre-sample jump schedules
(state-independent generators) or per-step uniforms (state-dependent
generators), so every kernel is a pure function of its arguments and
runs are bit-reproducible.

Status codes returned by the drivers: 0 ok, 1 non-finite state,
2 transition step too large.
"""

import numpy as np
from numba import njit

REM_TOL = 1e-12  # leftover below this merges into the final full step


@njit(cache=True, nogil=True)
def _rk4_step(p, w, h, k1, k2, k3, k4, tmp):
    """One classical RK4 step of the replicator field, then clamp + rescale.

    Multiplicative form keeps zero components exactly zero, so faces of
    the simplex stay invariant. Returns False when the state goes
    non-finite (step size too large).
    """
    m = p.size
    h2 = 0.5 * h
    h6 = h / 6.0

    phi = 0.0
    for j in range(m):
        phi += w[j] * p[j]
    for j in range(m):
        k1[j] = p[j] * (w[j] - phi)
        tmp[j] = p[j] + h2 * k1[j]
    phi = 0.0
    for j in range(m):
        phi += w[j] * tmp[j]
    for j in range(m):
        k2[j] = tmp[j] * (w[j] - phi)
        tmp[j] = p[j] + h2 * k2[j]
    phi = 0.0
    for j in range(m):
        phi += w[j] * tmp[j]
    for j in range(m):
        k3[j] = tmp[j] * (w[j] - phi)
        tmp[j] = p[j] + h * k3[j]
    phi = 0.0
    for j in range(m):
        phi += w[j] * tmp[j]
    for j in range(m):
        k4[j] = tmp[j] * (w[j] - phi)

    s = 0.0
    for j in range(m):
        v = p[j] + h6 * (k1[j] + 2.0 * (k2[j] + k3[j]) + k4[j])
        if v < 0.0:
            v = 0.0
        p[j] = v
        s += v
    if not np.isfinite(s) or s <= 0.0:
        return False
    inv = 1.0 / s
    for j in range(m):
        p[j] *= inv
    return True


@njit(cache=True, nogil=True)
def advance_segment(p, w, t0, t1, dt, n_full, take_rem,
                    record, times, states, idx, target, sup,
                    k1, k2, k3, k4, tmp):
    """Integrate p from t0 to t1 in one fixed environment.

    n_full steps of dt, then a shortened step landing exactly on t1 when
    take_rem is set; otherwise the last full step is stamped t1 (the
    leftover is below REM_TOL, far under the local truncation error).
    target >= 0 tracks the running sup of (1 - p[target]).

    Returns (idx, status, t_fail, sup).
    """
    m = p.size
    for s_i in range(n_full):
        if s_i == n_full - 1 and not take_rem:
            t = t1
        else:
            t = t0 + (s_i + 1) * dt
        if not _rk4_step(p, w, dt, k1, k2, k3, k4, tmp):
            return idx, 1, t, sup
        if record:
            times[idx] = t
            for j in range(m):
                states[idx, j] = p[j]
            idx += 1
        if target >= 0:
            d = 1.0 - p[target]
            if d > sup:
                sup = d
    if take_rem:
        rem = (t1 - t0) - n_full * dt
        if not _rk4_step(p, w, rem, k1, k2, k3, k4, tmp):
            return idx, 1, t1, sup
        if record:
            times[idx] = t1
            for j in range(m):
                states[idx, j] = p[j]
            idx += 1
        if target >= 0:
            d = 1.0 - p[target]
            if d > sup:
                sup = d
    return idx, 0, t1, sup


@njit(cache=True, nogil=True)
def run_state_dependent(p, W, basis, alpha0, dt, n_full, take_rem, t_end,
                        uniforms, record, times, states, regimes,
                        jump_t, jump_from, jump_to, target):
    """Euler-coupled run with a state-dependent generator.

    Each step advances the flow in the current regime, then draws the
    regime at the step's end from row alpha of I + Q(p)*h, where Q(p) is
    evaluated at the post-step state and the diagonal entry is defined by
    complement (rows sum to 1 exactly). Regimes are 0-based here.

    Returns (idx, n_jumps, status, t_fail, alpha_end, sup).
    """
    m = p.size
    n = W.shape[0]
    k1 = np.empty(m)
    k2 = np.empty(m)
    k3 = np.empty(m)
    k4 = np.empty(m)
    tmp = np.empty(m)

    alpha = alpha0
    idx = 0
    nj = 0
    sup = 0.0
    if target >= 0:
        sup = 1.0 - p[target]
    total = n_full + (1 if take_rem else 0)
    for s_i in range(total):
        if s_i < n_full:
            h = dt
            t = t_end if (s_i == n_full - 1 and not take_rem) else (s_i + 1) * dt
        else:
            h = t_end - n_full * dt
            t = t_end
        if not _rk4_step(p, W[alpha], h, k1, k2, k3, k4, tmp):
            return idx, nj, 1, t, alpha, sup

        # transition row of I + Q(p)*h; diagonal by complement, then nudged
        # so the left-to-right total is exactly 1 (mirror of transition_row)
        stay = 1.0
        bad = False
        for l in range(n):
            if l == alpha:
                continue
            ql = 0.0
            for i2 in range(m):
                ql += p[i2] * basis[i2, alpha, l]
            pl = ql * h
            if pl > 1.0:
                bad = True
            stay -= pl
        if bad or stay < 0.0:
            return idx, nj, 2, t, alpha, sup
        for _ in range(4):
            total = 0.0
            for l in range(n):
                if l == alpha:
                    total += stay
                else:
                    ql = 0.0
                    for i2 in range(m):
                        ql += p[i2] * basis[i2, alpha, l]
                    total += ql * h
            if total == 1.0:
                break
            adjusted = stay - (total - 1.0)
            if adjusted < 0.0:
                break
            stay = adjusted

        u = uniforms[s_i]
        cum = 0.0
        new_alpha = alpha
        for l in range(n):
            if l == alpha:
                pl = stay
            else:
                ql = 0.0
                for i2 in range(m):
                    ql += p[i2] * basis[i2, alpha, l]
                pl = ql * h
            cum += pl
            if u < cum:
                new_alpha = l
                break

        if new_alpha != alpha:
            jump_t[nj] = t
            jump_from[nj] = alpha
            jump_to[nj] = new_alpha
            nj += 1
            alpha = new_alpha
        if record:
            times[idx] = t
            for j in range(m):
                states[idx, j] = p[j]
            regimes[idx] = alpha
            idx += 1
        if target >= 0:
            d = 1.0 - p[target]
            if d > sup:
                sup = d
    return idx, nj, 0, 0.0, alpha, sup


def segment_plan(seg: float, dt: float):
    """Split a segment length into (n_full, take_rem) fixed-dt steps."""
    if seg <= 0.0:
        return 0, False
    n_full = int(np.floor(seg / dt + 1e-9))
    rem = seg - n_full * dt
    take_rem = rem > REM_TOL
    if n_full == 0 and not take_rem:
        return 0, False
    return n_full, take_rem


def record_count(seg: float, dt: float) -> int:
    n_full, take_rem = segment_plan(seg, dt)
    return n_full + (1 if take_rem else 0)
