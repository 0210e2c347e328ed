"""Hot numeric kernels, each in a vectorized numpy form and a numba loop form.

The two forms agree to rounding; within one form results are bitwise
reproducible. Interaction sums are accumulated left to right over the source
index in both forms, so appending a zero-coupled node (e.g. a listening probe)
leaves every existing row bitwise unchanged.
"""
from __future__ import annotations

import numpy as np

from ._backend import USE_NUMBA, njit

EULER = 0
RK4 = 1


# ---------------------------------------------------------------- numpy forms


def rhs_numpy(theta, omega, coupling):
    # sin(tj - ti) = sin tj cos ti - cos tj sin ti
    s = np.sin(theta)
    c = np.cos(theta)
    # cumsum is a strict left-to-right accumulation, unlike np.sum or matmul
    acc_s = np.cumsum(coupling * s[None, :], axis=1)[:, -1]
    acc_c = np.cumsum(coupling * c[None, :], axis=1)[:, -1]
    return omega + (c * acc_s - s * acc_c)


def integrate_numpy(theta0, omega, coupling, dt, nsteps, method, record_every):
    n = theta0.shape[0]
    nrec = nsteps // record_every + 1
    thetas = np.empty((nrec, n))
    dots = np.empty((nrec, n))
    theta = theta0.copy()
    thetas[0] = theta
    dots[0] = rhs_numpy(theta, omega, coupling)
    half = 0.5 * dt
    sixth = dt / 6.0
    rec = 1
    for step in range(1, nsteps + 1):
        if method == EULER:
            theta = theta + dt * rhs_numpy(theta, omega, coupling)
        else:
            k1 = rhs_numpy(theta, omega, coupling)
            k2 = rhs_numpy(theta + half * k1, omega, coupling)
            k3 = rhs_numpy(theta + half * k2, omega, coupling)
            k4 = rhs_numpy(theta + dt * k3, omega, coupling)
            theta = theta + sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if step % record_every == 0:
            thetas[rec] = theta
            dots[rec] = rhs_numpy(theta, omega, coupling)
            rec += 1
    return thetas, dots


def potential_numpy(thetas, sym_coupling):
    """Per-row sum over i<j of Xbar_ij cos(theta_j - theta_i)."""
    c = np.cos(thetas)
    s = np.sin(thetas)
    # cos(a-b) = cos a cos b + sin a sin b; the full double sum counts pairs twice
    return 0.5 * (np.einsum("ti,ij,tj->t", c, sym_coupling, c)
                  + np.einsum("ti,ij,tj->t", s, sym_coupling, s))


def exp_smooth_numpy(values, times, gamma):
    m = np.empty_like(values)
    if values.shape[0] == 0:
        return m
    m[0] = 0.0
    dts = np.diff(times)
    decay = np.exp(-gamma * dts)
    for k in range(1, values.shape[0]):
        m[k] = decay[k - 1] * (m[k - 1] + 0.5 * dts[k - 1] * values[k - 1]) \
            + 0.5 * dts[k - 1] * values[k]
    return m


def path_sum_python(coupling, a, b, max_len, phase_factor=None):
    n = coupling.shape[0]
    total = 0.0
    visited = [False] * n
    visited[a] = True
    path = [a]

    def walk(node, weight):
        nonlocal total
        for nxt in range(n):
            w = coupling[nxt, node]
            if w == 0.0 or visited[nxt]:
                continue
            wt = weight * w
            if nxt == b:
                factor = 1.0 if phase_factor is None else phase_factor(path + [b])
                total += wt * factor
                continue
            if len(path) < max_len:
                visited[nxt] = True
                path.append(nxt)
                walk(nxt, wt)
                path.pop()
                visited[nxt] = False

    walk(a, 1.0)
    return total


# ---------------------------------------------------------------- numba forms


@njit(cache=True)
def _rhs_into(theta, omega, coupling, out):
    n = theta.shape[0]
    s = np.sin(theta)
    c = np.cos(theta)
    for i in range(n):
        acc_s = 0.0
        acc_c = 0.0
        for j in range(n):
            w = coupling[i, j]
            acc_s += w * s[j]
            acc_c += w * c[j]
        out[i] = omega[i] + (c[i] * acc_s - s[i] * acc_c)


@njit(cache=True)
def rhs_numba(theta, omega, coupling):
    out = np.empty_like(theta)
    _rhs_into(theta, omega, coupling, out)
    return out


@njit(cache=True)
def integrate_numba(theta0, omega, coupling, dt, nsteps, method, record_every):
    n = theta0.shape[0]
    nrec = nsteps // record_every + 1
    thetas = np.empty((nrec, n))
    dots = np.empty((nrec, n))
    theta = theta0.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    half = 0.5 * dt
    sixth = dt / 6.0
    thetas[0, :] = theta
    _rhs_into(theta, omega, coupling, k1)
    dots[0, :] = k1
    rec = 1
    for step in range(1, nsteps + 1):
        _rhs_into(theta, omega, coupling, k1)
        if method == 0:
            for i in range(n):
                theta[i] = theta[i] + dt * k1[i]
        else:
            for i in range(n):
                tmp[i] = theta[i] + half * k1[i]
            _rhs_into(tmp, omega, coupling, k2)
            for i in range(n):
                tmp[i] = theta[i] + half * k2[i]
            _rhs_into(tmp, omega, coupling, k3)
            for i in range(n):
                tmp[i] = theta[i] + dt * k3[i]
            _rhs_into(tmp, omega, coupling, k4)
            for i in range(n):
                theta[i] = theta[i] + sixth * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        if step % record_every == 0:
            thetas[rec, :] = theta
            _rhs_into(theta, omega, coupling, tmp)
            dots[rec, :] = tmp
            rec += 1
    return thetas, dots


@njit(cache=True)
def potential_numba(thetas, sym_coupling):
    steps, n = thetas.shape
    out = np.empty(steps)
    c = np.empty(n)
    s = np.empty(n)
    for t in range(steps):
        for i in range(n):
            c[i] = np.cos(thetas[t, i])
            s[i] = np.sin(thetas[t, i])
        acc = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                w = sym_coupling[i, j]
                if w != 0.0:
                    acc += w * (c[i] * c[j] + s[i] * s[j])
        out[t] = acc
    return out


@njit(cache=True)
def exp_smooth_numba(values, times, gamma):
    m = np.empty_like(values)
    if values.shape[0] == 0:
        return m
    m[0] = 0.0
    for k in range(1, values.shape[0]):
        h = times[k] - times[k - 1]
        m[k] = np.exp(-gamma * h) * (m[k - 1] + 0.5 * h * values[k - 1]) + 0.5 * h * values[k]
    return m


@njit(cache=True)
def path_sum_numba(coupling, a, b, max_len):
    # explicit-stack DFS over simple paths; next_cand[d] is the scan cursor at depth d
    n = coupling.shape[0]
    total = 0.0
    visited = np.zeros(n, dtype=np.bool_)
    stack = np.empty(max_len + 1, dtype=np.int64)
    weights = np.empty(max_len + 1)
    next_cand = np.zeros(max_len + 1, dtype=np.int64)
    stack[0] = a
    weights[0] = 1.0
    visited[a] = True
    depth = 0
    while depth >= 0:
        node = stack[depth]
        advanced = False
        while next_cand[depth] < n:
            nxt = next_cand[depth]
            next_cand[depth] += 1
            w = coupling[nxt, node]
            if w == 0.0 or visited[nxt]:
                continue
            wt = weights[depth] * w
            if nxt == b:
                total += wt
                continue
            if depth + 1 < max_len:
                depth += 1
                stack[depth] = nxt
                weights[depth] = wt
                next_cand[depth] = 0
                visited[nxt] = True
                advanced = True
                break
        if not advanced:
            visited[stack[depth]] = False
            depth -= 1
    return total


# ---------------------------------------------------------------- dispatch

if USE_NUMBA:
    rhs = rhs_numba
    integrate = integrate_numba
    potential = potential_numba
    exp_smooth = exp_smooth_numba
    path_sum = path_sum_numba
else:
    rhs = rhs_numpy
    integrate = integrate_numpy
    potential = potential_numpy
    exp_smooth = exp_smooth_numpy

    def path_sum(coupling, a, b, max_len):
        return path_sum_python(coupling, a, b, max_len)
