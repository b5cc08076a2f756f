"""Hot numeric kernels, each with a numba and a pure-numpy implementation.

The public names at the bottom of the module are bound to one of the two
according to :data:`mgmodes._accel.USE_NUMBA`.  Both implementations are
always importable (``*_nb`` / ``*_np``) so they can be benchmarked and
cross-checked against each other.

Random numbers come from Philox4x64-10 keyed by the run seed with the counter
``(step, path, 0, 0)``; every (path, step) pair owns one counter block, so a
path's draws never depend on how many paths are requested or on how the path
loop is scheduled across threads.
"""
from __future__ import annotations

import math

import numpy as np

from ._accel import USE_NUMBA, jit, prange

PHILOX_M0 = np.uint64(0xD2E7470EE14C6C93)
PHILOX_M1 = np.uint64(0xCA5A826395121157)
PHILOX_W0 = np.uint64(0x9E3779B97F4A7C15)
PHILOX_W1 = np.uint64(0xBB67AE8584CAA73B)
# second key word; fixed so that the user seed alone selects the stream
STREAM_KEY = np.uint64(0x6D676D6F646573)

_MASK32 = np.uint64(0xFFFFFFFF)
_SH32 = np.uint64(32)
_SH11 = np.uint64(11)
_ZERO = np.uint64(0)
_TWO_M53 = 2.0**-53
_TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# Philox4x64-10.  Written once against uint64 scalars/arrays; the numba copy
# is the same source compiled.


def _mulhi(a, b):
    a_lo = a & _MASK32
    a_hi = a >> _SH32
    b_lo = b & _MASK32
    b_hi = b >> _SH32
    p1 = a_lo * b_hi
    p2 = a_hi * b_lo
    mid = ((a_lo * b_lo) >> _SH32) + (p1 & _MASK32) + (p2 & _MASK32)
    return a_hi * b_hi + (p1 >> _SH32) + (p2 >> _SH32) + (mid >> _SH32)


def _make_philox(mulhi):
    def philox(c0, c1, c2, c3, k0, k1):
        for _ in range(10):
            lo0 = PHILOX_M0 * c0
            lo1 = PHILOX_M1 * c2
            hi0 = mulhi(PHILOX_M0, c0)
            hi1 = mulhi(PHILOX_M1, c2)
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
            k0 = k0 + PHILOX_W0
            k1 = k1 + PHILOX_W1
        return c0, c1, c2, c3

    return philox


def _normal_pair(x0, x1):
    u1 = ((x0 >> _SH11) + 0.5) * _TWO_M53
    u2 = ((x1 >> _SH11) + 0.5) * _TWO_M53
    rad = np.sqrt(-2.0 * np.log(u1))
    return rad * np.cos(_TWO_PI * u2), rad * np.sin(_TWO_PI * u2)


_philox = _make_philox(_mulhi)
_philox_nb = jit()(_make_philox(jit()(_mulhi)))
_normal_pair_nb = jit()(_normal_pair)


def philox4x64(counter, key):
    """Philox4x64-10 block for ``counter`` (4 words) and ``key`` (2 words).

    Accepts scalars or broadcastable uint64 arrays; returns four uint64 arrays.
    """
    c = [np.asarray(w, dtype=np.uint64) for w in counter]
    k = [np.asarray(w, dtype=np.uint64) for w in key]
    c = np.broadcast_arrays(*c, *k)
    with np.errstate(over="ignore"):
        out = _philox(*(np.array(w, dtype=np.uint64) for w in c))
    return tuple(np.asarray(w) for w in out)


def standard_normals_np(seed, path_ids, step):
    """Two independent N(0,1) draws per path for one time step."""
    path_ids = np.asarray(path_ids, dtype=np.uint64)
    n = path_ids.shape[0]
    with np.errstate(over="ignore"):
        x0, x1, _, _ = _philox(
            np.full(n, step, dtype=np.uint64),
            path_ids.copy(),
            np.zeros(n, dtype=np.uint64),
            np.zeros(n, dtype=np.uint64),
            np.full(n, seed, dtype=np.uint64),
            np.full(n, STREAM_KEY, dtype=np.uint64),
        )
    return _normal_pair(x0, x1)


# ---------------------------------------------------------------------------
# Correlated increments


@jit(parallel=True)
def noise_nb(paths, steps, dt, rho, seed):
    r_inc = np.empty((paths, steps))
    q_inc = np.empty((paths, steps))
    sqrt_dt = math.sqrt(dt)
    rho_c = math.sqrt(max(0.0, 1.0 - rho * rho))
    key0 = np.uint64(seed)
    for p in prange(paths):
        pid = np.uint64(p)
        for k in range(steps):
            x0, x1, _, _ = _philox_nb(np.uint64(k), pid, _ZERO, _ZERO, key0, STREAM_KEY)
            z1, z2 = _normal_pair_nb(x0, x1)
            dw1 = sqrt_dt * z1
            r_inc[p, k] = dw1
            q_inc[p, k] = rho * dw1 + rho_c * (sqrt_dt * z2)
    return r_inc, q_inc


def noise_np(paths, steps, dt, rho, seed):
    r_inc = np.empty((paths, steps))
    q_inc = np.empty((paths, steps))
    sqrt_dt = math.sqrt(dt)
    rho_c = math.sqrt(max(0.0, 1.0 - rho * rho))
    ids = np.arange(paths, dtype=np.uint64)
    for k in range(steps):
        z1, z2 = standard_normals_np(seed, ids, k)
        dw1 = sqrt_dt * z1
        r_inc[:, k] = dw1
        q_inc[:, k] = rho * dw1 + rho_c * (sqrt_dt * z2)
    return r_inc, q_inc


# ---------------------------------------------------------------------------
# Path stepping.  scheme: 0 = euler, 1 = log-euler.


@jit()
def _advance_nb(s, v, dw1, dw2, n, m, drift_s, drift_v, xi, dt, log_scheme):
    sig = math.sqrt(v)
    if log_scheme:
        s_new = s * math.exp((n * drift_s - 0.5 * n * n * v) * dt + n * sig * dw1)
        v_new = v * math.exp((m * drift_v - 0.5 * m * m * xi * xi) * dt + m * xi * dw2)
        return s_new, v_new, 0
    s_new = s + n * (drift_s * s * dt + sig * s * dw1)
    v_new = v + m * (drift_v * v * dt + xi * v * dw2)
    clamped = 0
    if v_new < 0.0:
        v_new = 0.0
        clamped = 1
    if s_new < 0.0:
        s_new = 0.0
    return s_new, v_new, clamped


@jit(parallel=True)
def paths_nb(s0, v0, n, m, drift_s, drift_v, xi, rho, dt, steps, paths, seed, log_scheme):
    s = np.empty((paths, steps + 1))
    v = np.empty((paths, steps + 1))
    clamps = np.zeros(paths, dtype=np.int64)
    sqrt_dt = math.sqrt(dt)
    rho_c = math.sqrt(max(0.0, 1.0 - rho * rho))
    key0 = np.uint64(seed)
    for p in prange(paths):
        pid = np.uint64(p)
        sp = s0
        vp = v0
        s[p, 0] = sp
        v[p, 0] = vp
        count = 0
        for k in range(steps):
            x0, x1, _, _ = _philox_nb(np.uint64(k), pid, _ZERO, _ZERO, key0, STREAM_KEY)
            z1, z2 = _normal_pair_nb(x0, x1)
            dw1 = sqrt_dt * z1
            dw2 = rho * dw1 + rho_c * (sqrt_dt * z2)
            sp, vp, c = _advance_nb(sp, vp, dw1, dw2, n, m, drift_s, drift_v, xi, dt, log_scheme)
            count += c
            s[p, k + 1] = sp
            v[p, k + 1] = vp
        clamps[p] = count
    return s, v, clamps


@jit(parallel=True)
def terminal_nb(s0, v0, n, m, drift_s, drift_v, xi, rho, dt, steps, paths, seed, log_scheme):
    s_t = np.empty(paths)
    v_t = np.empty(paths)
    clamps = np.zeros(paths, dtype=np.int64)
    sqrt_dt = math.sqrt(dt)
    rho_c = math.sqrt(max(0.0, 1.0 - rho * rho))
    key0 = np.uint64(seed)
    for p in prange(paths):
        pid = np.uint64(p)
        sp = s0
        vp = v0
        count = 0
        for k in range(steps):
            x0, x1, _, _ = _philox_nb(np.uint64(k), pid, _ZERO, _ZERO, key0, STREAM_KEY)
            z1, z2 = _normal_pair_nb(x0, x1)
            dw1 = sqrt_dt * z1
            dw2 = rho * dw1 + rho_c * (sqrt_dt * z2)
            sp, vp, c = _advance_nb(sp, vp, dw1, dw2, n, m, drift_s, drift_v, xi, dt, log_scheme)
            count += c
        s_t[p] = sp
        v_t[p] = vp
        clamps[p] = count
    return s_t, v_t, clamps


def _advance_np(s, v, dw1, dw2, n, m, drift_s, drift_v, xi, dt, log_scheme):
    sig = np.sqrt(v)
    if log_scheme:
        s_new = s * np.exp((n * drift_s - 0.5 * n * n * v) * dt + n * sig * dw1)
        v_new = v * np.exp((m * drift_v - 0.5 * m * m * xi * xi) * dt + m * xi * dw2)
        return s_new, v_new, np.zeros(s.shape, dtype=np.int64)
    s_new = s + n * (drift_s * s * dt + sig * s * dw1)
    v_new = v + m * (drift_v * v * dt + xi * v * dw2)
    clamped = (v_new < 0.0).astype(np.int64)
    v_new = np.where(v_new < 0.0, 0.0, v_new)
    s_new = np.where(s_new < 0.0, 0.0, s_new)
    return s_new, v_new, clamped


def _walk_np(s0, v0, n, m, drift_s, drift_v, xi, rho, dt, steps, paths, seed, log_scheme, keep):
    sqrt_dt = math.sqrt(dt)
    rho_c = math.sqrt(max(0.0, 1.0 - rho * rho))
    ids = np.arange(paths, dtype=np.uint64)
    sp = np.full(paths, float(s0))
    vp = np.full(paths, float(v0))
    clamps = np.zeros(paths, dtype=np.int64)
    if keep:
        s = np.empty((paths, steps + 1))
        v = np.empty((paths, steps + 1))
        s[:, 0] = sp
        v[:, 0] = vp
    for k in range(steps):
        z1, z2 = standard_normals_np(seed, ids, k)
        dw1 = sqrt_dt * z1
        dw2 = rho * dw1 + rho_c * (sqrt_dt * z2)
        sp, vp, c = _advance_np(sp, vp, dw1, dw2, n, m, drift_s, drift_v, xi, dt, log_scheme)
        clamps += c
        if keep:
            s[:, k + 1] = sp
            v[:, k + 1] = vp
    if keep:
        return s, v, clamps
    return sp, vp, clamps


def paths_np(s0, v0, n, m, drift_s, drift_v, xi, rho, dt, steps, paths, seed, log_scheme):
    return _walk_np(s0, v0, n, m, drift_s, drift_v, xi, rho, dt, steps, paths, seed, log_scheme, True)


def terminal_np(s0, v0, n, m, drift_s, drift_v, xi, rho, dt, steps, paths, seed, log_scheme):
    return _walk_np(s0, v0, n, m, drift_s, drift_v, xi, rho, dt, steps, paths, seed, log_scheme, False)


# ---------------------------------------------------------------------------
# Batched tridiagonal (Thomas) solves.  The matrices are constant over a
# solve, so the elimination is factored once and only substitution runs per
# step.  Lines run along axis 0 ("cols" variant) or axis 1 ("rows" variant).


@jit(parallel=True)
def thomas_factor_rows_nb(sub, dia, sup):
    b, n = dia.shape
    cp = np.empty((b, n))
    inv = np.empty((b, n))
    for r in prange(b):
        inv[r, 0] = 1.0 / dia[r, 0]
        cp[r, 0] = sup[r, 0] * inv[r, 0]
        for k in range(1, n):
            inv[r, k] = 1.0 / (dia[r, k] - sub[r, k] * cp[r, k - 1])
            cp[r, k] = sup[r, k] * inv[r, k]
    return cp, inv


@jit(parallel=True)
def thomas_solve_rows_nb(sub, cp, inv, rhs):
    b, n = rhs.shape
    x = np.empty((b, n))
    for r in prange(b):
        x[r, 0] = rhs[r, 0] * inv[r, 0]
        for k in range(1, n):
            x[r, k] = (rhs[r, k] - sub[r, k] * x[r, k - 1]) * inv[r, k]
        for k in range(n - 2, -1, -1):
            x[r, k] -= cp[r, k] * x[r, k + 1]
    return x


@jit(parallel=True)
def thomas_factor_cols_nb(sub, dia, sup):
    n, b = dia.shape
    cp = np.empty((n, b))
    inv = np.empty((n, b))
    for c in prange(b):
        inv[0, c] = 1.0 / dia[0, c]
        cp[0, c] = sup[0, c] * inv[0, c]
        for k in range(1, n):
            inv[k, c] = 1.0 / (dia[k, c] - sub[k, c] * cp[k - 1, c])
            cp[k, c] = sup[k, c] * inv[k, c]
    return cp, inv


@jit(parallel=True)
def thomas_solve_cols_nb(sub, cp, inv, rhs):
    n, b = rhs.shape
    x = np.empty((n, b))
    for c in prange(b):
        x[0, c] = rhs[0, c] * inv[0, c]
        for k in range(1, n):
            x[k, c] = (rhs[k, c] - sub[k, c] * x[k - 1, c]) * inv[k, c]
        for k in range(n - 2, -1, -1):
            x[k, c] -= cp[k, c] * x[k + 1, c]
    return x


def thomas_factor_rows_np(sub, dia, sup):
    b, n = dia.shape
    cp = np.empty((b, n))
    inv = np.empty((b, n))
    inv[:, 0] = 1.0 / dia[:, 0]
    cp[:, 0] = sup[:, 0] * inv[:, 0]
    for k in range(1, n):
        inv[:, k] = 1.0 / (dia[:, k] - sub[:, k] * cp[:, k - 1])
        cp[:, k] = sup[:, k] * inv[:, k]
    return cp, inv


def thomas_solve_rows_np(sub, cp, inv, rhs):
    b, n = rhs.shape
    x = np.empty((b, n))
    x[:, 0] = rhs[:, 0] * inv[:, 0]
    for k in range(1, n):
        x[:, k] = (rhs[:, k] - sub[:, k] * x[:, k - 1]) * inv[:, k]
    for k in range(n - 2, -1, -1):
        x[:, k] -= cp[:, k] * x[:, k + 1]
    return x


def thomas_factor_cols_np(sub, dia, sup):
    cp, inv = thomas_factor_rows_np(sub.T, dia.T, sup.T)
    return np.ascontiguousarray(cp.T), np.ascontiguousarray(inv.T)


def thomas_solve_cols_np(sub, cp, inv, rhs):
    return np.ascontiguousarray(thomas_solve_rows_np(sub.T, cp.T, inv.T, rhs.T).T)


# ---------------------------------------------------------------------------
# Explicit application of the split operator on an (n_s, n_v) slice.  Rows
# i = 0 and i = n_s - 1 (Dirichlet in S) are left at zero.  The V-direction
# row j = 0 carries a one-sided stencil with an extra entry at j = 2; the
# row j = n_v - 1 is the zero-Neumann ghost-node stencil.


@jit(parallel=True)
def apply_split_nb(u, s_lo, s_di, s_up, v_lo, v_di, v_up, v_ex, mix):
    ns, nv = u.shape
    a0 = np.zeros((ns, nv))
    a1 = np.zeros((ns, nv))
    a2 = np.zeros((ns, nv))
    for i in prange(1, ns - 1):
        for j in range(nv):
            a1[i, j] = s_lo[i, j] * u[i - 1, j] + s_di[i, j] * u[i, j] + s_up[i, j] * u[i + 1, j]
        a2[i, 0] = v_di[i, 0] * u[i, 0] + v_up[i, 0] * u[i, 1] + v_ex[i] * u[i, 2]
        a0[i, 0] = mix[i, 0] * (u[i + 1, 1] - u[i + 1, 0] - u[i - 1, 1] + u[i - 1, 0])
        for j in range(1, nv - 1):
            a2[i, j] = v_lo[i, j] * u[i, j - 1] + v_di[i, j] * u[i, j] + v_up[i, j] * u[i, j + 1]
            a0[i, j] = mix[i, j] * (
                u[i + 1, j + 1] - u[i + 1, j - 1] - u[i - 1, j + 1] + u[i - 1, j - 1]
            )
        a2[i, nv - 1] = v_lo[i, nv - 1] * u[i, nv - 2] + v_di[i, nv - 1] * u[i, nv - 1]
    return a0, a1, a2


def apply_split_np(u, s_lo, s_di, s_up, v_lo, v_di, v_up, v_ex, mix):
    ns, nv = u.shape
    a0 = np.zeros((ns, nv))
    a1 = np.zeros((ns, nv))
    a2 = np.zeros((ns, nv))
    c = slice(1, ns - 1)
    a1[c] = s_lo[c] * u[:-2] + s_di[c] * u[c] + s_up[c] * u[2:]

    a2[c, 0] = v_di[c, 0] * u[c, 0] + v_up[c, 0] * u[c, 1] + v_ex[c] * u[c, 2]
    a2[c, 1:-1] = v_lo[c, 1:-1] * u[c, :-2] + v_di[c, 1:-1] * u[c, 1:-1] + v_up[c, 1:-1] * u[c, 2:]
    a2[c, -1] = v_lo[c, -1] * u[c, -2] + v_di[c, -1] * u[c, -1]

    a0[c, 0] = mix[c, 0] * (u[2:, 1] - u[2:, 0] - u[:-2, 1] + u[:-2, 0])
    a0[c, 1:-1] = mix[c, 1:-1] * (u[2:, 2:] - u[2:, :-2] - u[:-2, 2:] + u[:-2, :-2])
    return a0, a1, a2


if USE_NUMBA:
    noise = noise_nb
    paths = paths_nb
    terminal = terminal_nb
    thomas_factor_rows = thomas_factor_rows_nb
    thomas_solve_rows = thomas_solve_rows_nb
    thomas_factor_cols = thomas_factor_cols_nb
    thomas_solve_cols = thomas_solve_cols_nb
    apply_split = apply_split_nb
else:
    noise = noise_np
    paths = paths_np
    terminal = terminal_np
    thomas_factor_rows = thomas_factor_rows_np
    thomas_solve_rows = thomas_solve_rows_np
    thomas_factor_cols = thomas_factor_cols_np
    thomas_solve_cols = thomas_solve_cols_np
    apply_split = apply_split_np
