"""Hot numeric kernels, numba-compiled when available.

Everything here is called once per agent-step inside rollout and serving
loops, so per-call overhead matters. Each kernel is plain numpy code that
numba's @njit compiles as-is; set SWARMARCHER_NUMBA=0 (or uninstall numba)
to run the identical bodies on the interpreter instead. `python_impl`
recovers the uncompiled body of a kernel for backend comparisons.
"""

from __future__ import annotations

import os

import numpy as np


def _want_numba() -> bool:
    flag = os.environ.get("SWARMARCHER_NUMBA", "1").strip().lower()
    return flag not in {"0", "false", "off", "no"}


if _want_numba():
    try:
        from numba import njit as _njit

        _JIT = True
    except ImportError:  # pragma: no cover
        _JIT = False
else:
    _JIT = False

BACKEND = "numba" if _JIT else "numpy"


def jit(fn):
    """Compile fn with numba when the numba backend is active."""
    if _JIT:
        return _njit(cache=True)(fn)
    return fn


def python_impl(fn):
    """Uncompiled body of a kernel (fn itself when jit is off)."""
    return getattr(fn, "py_func", fn)


@jit
def mlp2_forward(x, w1, b1, w2, b2, w3, b3):
    """Two-hidden-layer tanh network on a single input vector."""
    h1 = np.tanh(np.dot(w1, x) + b1)
    h2 = np.tanh(np.dot(w2, h1) + b2)
    return np.dot(w3, h2) + b3


@jit
def clip_speed(v, vmax):
    """Scale a velocity down to the speed limit, preserving direction."""
    n = np.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
    out = v.copy()
    if n > vmax:
        s = vmax / n
        out[0] = v[0] * s
        out[1] = v[1] * s
        out[2] = v[2] * s
    return out


@jit
def step_agents(pos, actions, dt, vmax, lo, hi):
    """Explicit-Euler agent update: clip speed, integrate, clamp to the box."""
    n = pos.shape[0]
    out = np.empty_like(pos)
    for i in range(n):
        vx = actions[i, 0]
        vy = actions[i, 1]
        vz = actions[i, 2]
        speed = np.sqrt(vx * vx + vy * vy + vz * vz)
        if speed > vmax:
            s = vmax / speed
            vx *= s
            vy *= s
            vz *= s
        px = pos[i, 0] + vx * dt
        py = pos[i, 1] + vy * dt
        pz = pos[i, 2] + vz * dt
        out[i, 0] = min(max(px, lo[0]), hi[0])
        out[i, 1] = min(max(py, lo[1]), hi[1])
        out[i, 2] = min(max(pz, lo[2]), hi[2])
    return out


@jit
def object_min_dists(pos, arrow, arrow_active, lo, hi):
    """Per-agent minimum distance over other drones, the arrow, and the
    six arena faces."""
    n = pos.shape[0]
    out = np.empty(n)
    for i in range(n):
        d = np.inf
        for j in range(n):
            if j == i:
                continue
            dx = pos[i, 0] - pos[j, 0]
            dy = pos[i, 1] - pos[j, 1]
            dz = pos[i, 2] - pos[j, 2]
            d = min(d, np.sqrt(dx * dx + dy * dy + dz * dz))
        if arrow_active:
            dx = pos[i, 0] - arrow[0]
            dy = pos[i, 1] - arrow[1]
            dz = pos[i, 2] - arrow[2]
            d = min(d, np.sqrt(dx * dx + dy * dy + dz * dz))
        for k in range(3):
            d = min(d, pos[i, k] - lo[k])
            d = min(d, hi[k] - pos[i, k])
        out[i] = d
    return out


@jit
def pairwise_min(pos):
    """Closest agent pair: (distance, i, j); (inf, -1, -1) for fewer than 2."""
    n = pos.shape[0]
    best = np.inf
    bi = -1
    bj = -1
    for i in range(n):
        for j in range(i + 1, n):
            dx = pos[i, 0] - pos[j, 0]
            dy = pos[i, 1] - pos[j, 1]
            dz = pos[i, 2] - pos[j, 2]
            d = np.sqrt(dx * dx + dy * dy + dz * dz)
            if d < best:
                best = d
                bi = i
                bj = j
    return best, bi, bj


@jit
def moving_min_dist(p0, p1, q0, q1):
    """Closest approach of two points moving linearly p0->p1 and q0->q1
    over the same interval."""
    rx = p0[0] - q0[0]
    ry = p0[1] - q0[1]
    rz = p0[2] - q0[2]
    dx = (p1[0] - p0[0]) - (q1[0] - q0[0])
    dy = (p1[1] - p0[1]) - (q1[1] - q0[1])
    dz = (p1[2] - p0[2]) - (q1[2] - q0[2])
    a = dx * dx + dy * dy + dz * dz
    t = 0.0
    if a > 0.0:
        t = -(rx * dx + ry * dy + rz * dz) / a
        t = min(max(t, 0.0), 1.0)
    cx = rx + t * dx
    cy = ry + t * dy
    cz = rz + t * dz
    return np.sqrt(cx * cx + cy * cy + cz * cz)


@jit
def traj_point(v0, theta, gamma, g, ox, oy, oz, t):
    """Gravity-only projectile position at time t (launch frame at origin)."""
    ct = np.cos(theta)
    out = np.empty(3)
    out[0] = ox + v0 * t * ct * np.sin(gamma)
    out[1] = oy + v0 * t * ct * np.cos(gamma)
    out[2] = oz + v0 * t * np.sin(theta) - 0.5 * g * t * t
    return out


@jit
def traj_positions(v0, theta, gamma, g, ox, oy, oz, ts):
    """Projectile positions for an array of times; rows match traj_point."""
    n = ts.shape[0]
    out = np.empty((n, 3))
    ct = np.cos(theta)
    sg = np.sin(gamma)
    cg = np.cos(gamma)
    st = np.sin(theta)
    for i in range(n):
        t = ts[i]
        out[i, 0] = ox + v0 * t * ct * sg
        out[i, 1] = oy + v0 * t * ct * cg
        out[i, 2] = oz + v0 * t * st - 0.5 * g * t * t
    return out


@jit
def apf_velocity_kernel(
    pos, target, obstacles, lo, hi, k_att, k_rep, rho0, vmax, rep_cap, use_borders
):
    """Potential-field velocity: linear pull to the target plus capped
    inverse-square repulsion from obstacle points and arena faces, then a
    speed clip."""
    vx = k_att * (target[0] - pos[0])
    vy = k_att * (target[1] - pos[1])
    vz = k_att * (target[2] - pos[2])
    for m in range(obstacles.shape[0]):
        dx = pos[0] - obstacles[m, 0]
        dy = pos[1] - obstacles[m, 1]
        dz = pos[2] - obstacles[m, 2]
        rho = np.sqrt(dx * dx + dy * dy + dz * dz)
        if rho > rho0:
            continue
        if rho > 0.0:
            mag = k_rep * (1.0 / rho - 1.0 / rho0) / (rho * rho)
            if mag > rep_cap:
                mag = rep_cap
            vx += mag * dx / rho
            vy += mag * dy / rho
            vz += mag * dz / rho
        else:
            # Coincident obstacle: direction undefined, push along +x.
            vx += rep_cap
    if use_borders:
        for k in range(3):
            d_lo = pos[k] - lo[k]
            if d_lo <= rho0:
                if d_lo > 0.0:
                    mag = min(rep_cap, k_rep * (1.0 / d_lo - 1.0 / rho0) / (d_lo * d_lo))
                else:
                    mag = rep_cap
                if k == 0:
                    vx += mag
                elif k == 1:
                    vy += mag
                else:
                    vz += mag
            d_hi = hi[k] - pos[k]
            if d_hi <= rho0:
                if d_hi > 0.0:
                    mag = min(rep_cap, k_rep * (1.0 / d_hi - 1.0 / rho0) / (d_hi * d_hi))
                else:
                    mag = rep_cap
                if k == 0:
                    vx -= mag
                elif k == 1:
                    vy -= mag
                else:
                    vz -= mag
    out = np.empty(3)
    out[0] = vx
    out[1] = vy
    out[2] = vz
    speed = np.sqrt(vx * vx + vy * vy + vz * vz)
    if speed > vmax:
        s = vmax / speed
        out[0] *= s
        out[1] *= s
        out[2] *= s
    return out


def warmup():
    """Trigger compilation of every kernel so later calls are steady-state."""
    x = np.zeros(6)
    w1 = np.zeros((4, 6))
    b1 = np.zeros(4)
    w2 = np.zeros((4, 4))
    b2 = np.zeros(4)
    w3 = np.zeros((3, 4))
    b3 = np.zeros(3)
    mlp2_forward(x, w1, b1, w2, b2, w3, b3)
    v = np.ones(3)
    clip_speed(v, 0.5)
    pos = np.zeros((3, 3))
    lo = np.full(3, -1.0)
    hi = np.full(3, 1.0)
    step_agents(pos, pos.copy(), 0.1, 0.5, lo, hi)
    object_min_dists(pos, v, True, lo, hi)
    pairwise_min(pos)
    moving_min_dist(v, v, 2 * v, 2 * v)
    traj_point(1.0, 0.1, 0.1, 9.8, 0.0, 0.0, 0.0, 0.5)
    traj_positions(1.0, 0.1, 0.1, 9.8, 0.0, 0.0, 0.0, np.linspace(0, 1, 4))
    apf_velocity_kernel(
        v, 2 * v, pos, lo, hi, 1.0, 0.1, 0.6, 0.5, 5.0, True
    )
