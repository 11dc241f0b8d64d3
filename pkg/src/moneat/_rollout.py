"""Compiled inner loop for scenario rollouts.

Pure functions over plain arrays; the public API in ``simworld`` owns
all types and bookkeeping.  Distances use sqrt(dx*dx + dy*dy) rather
than hypot so results match the scalar reference implementations
bit-for-bit (CPython's hypot is not the libm one).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# Outcome codes shared with simworld.
SUCCESS = 0
TIMEOUT = 1
COLLISION = 2
STEP_CAP = 3


@njit(cache=True)
def _collides(x, y, c, s, bhx, bhy, obstacles, side):
    """Oriented body rectangle vs axis-aligned obstacles and arena walls
    (separating-axis test on the two world axes and two body axes)."""
    ac = abs(c)
    asn = abs(s)
    rx = bhx * ac + bhy * asn
    ry = bhx * asn + bhy * ac
    if x - rx < 0.0 or x + rx > side or y - ry < 0.0 or y + ry > side:
        return True
    for o in range(obstacles.shape[0]):
        cx = obstacles[o, 0]
        cy = obstacles[o, 1]
        hx = obstacles[o, 2]
        hy = obstacles[o, 3]
        dx = x - cx
        dy = y - cy
        if abs(dx) > hx + rx:
            continue
        if abs(dy) > hy + ry:
            continue
        if abs(dx * c + dy * s) > bhx + hx * ac + hy * asn:
            continue
        if abs(-dx * s + dy * c) > bhy + hx * asn + hy * ac:
            continue
        return True
    return False


@njit(cache=True)
def _sense_into(x, y, c, s, mounts, mdirs, obstacles, side, max_range, out):
    """Cast one ray per mounted sensor; nearest obstacle or wall hit,
    clipped into [0, max_range]."""
    for k in range(mounts.shape[0]):
        mx = mounts[k, 0]
        my = mounts[k, 1]
        px = x + c * mx - s * my
        py = y + s * mx + c * my
        bx = mdirs[k, 0]
        by = mdirs[k, 1]
        ux = c * bx - s * by
        uy = s * bx + c * by
        best = max_range
        if ux > 0.0:
            t = (side - px) / ux
            if t < best:
                best = t
        elif ux < 0.0:
            t = -px / ux
            if t < best:
                best = t
        if uy > 0.0:
            t = (side - py) / uy
            if t < best:
                best = t
        elif uy < 0.0:
            t = -py / uy
            if t < best:
                best = t
        for o in range(obstacles.shape[0]):
            cx = obstacles[o, 0]
            cy = obstacles[o, 1]
            hx = obstacles[o, 2]
            hy = obstacles[o, 3]
            tmin = -math.inf
            tmax = math.inf
            if ux != 0.0:
                t1 = (cx - hx - px) / ux
                t2 = (cx + hx - px) / ux
                if t1 > t2:
                    t1, t2 = t2, t1
                if t1 > tmin:
                    tmin = t1
                if t2 < tmax:
                    tmax = t2
            elif px < cx - hx or px > cx + hx:
                continue
            if uy != 0.0:
                t1 = (cy - hy - py) / uy
                t2 = (cy + hy - py) / uy
                if t1 > t2:
                    t1, t2 = t2, t1
                if t1 > tmin:
                    tmin = t1
                if t2 < tmax:
                    tmax = t2
            elif py < cy - hy or py > cy + hy:
                continue
            if tmax >= tmin and tmax >= 0.0:
                t = tmin if tmin > 0.0 else 0.0
                if t < best:
                    best = t
        if best < 0.0:
            best = 0.0
        out[k] = best


@njit(cache=True)
def rollout(order, in_ptr, in_src, in_w, n_nodes, n_sensors,
            mounts, mdirs, max_range,
            bhx, bhy, lo_t, hi_t, rated_v,
            obstacles, side,
            sx, sy, sh, gx, gy, tol, sig, budget,
            max_steps, n_substeps,
            traj, actions, collided_steps, experience):
    """Run one scenario to termination.

    Per step: success/timeout checks, sense, build the input vector
    (normalized readings, goal signal at the robot's fixed length scale
    ``sig``, two one-step signal gradients), evaluate the network plan,
    rotate then translate with a swept collision check, record the
    experience point.  Collision ends the scenario.  Returns
    (n_steps, outcome, elapsed, final_dist, t_rem).
    """
    n_in = n_sensors + 3
    out0 = n_in + 1  # compact slots: inputs, bias, outputs
    values = np.zeros(n_nodes, dtype=np.float64)
    pre = np.empty(n_sensors, dtype=np.float64)
    post = np.empty(n_sensors, dtype=np.float64)

    x = sx
    y = sy
    h = sh
    elapsed = 0.0
    dx = gx - x
    dy = gy - y
    d_goal = math.sqrt(dx * dx + dy * dy)
    s_last = sig / (d_goal if d_goal > sig else sig)
    s_prev = s_last
    c = math.cos(h)
    s = math.sin(h)
    _sense_into(x, y, c, s, mounts, mdirs, obstacles, side, max_range, pre)
    traj[0, 0] = x
    traj[0, 1] = y
    traj[0, 2] = h

    outcome = STEP_CAP
    n_steps = 0
    for step in range(max_steps):
        dx = gx - x
        dy = gy - y
        d_goal = math.sqrt(dx * dx + dy * dy)
        if d_goal <= tol:
            outcome = SUCCESS
            break
        if elapsed >= budget:
            outcome = TIMEOUT
            break

        s_now = sig / (d_goal if d_goal > sig else sig)
        for k in range(n_sensors):
            values[k] = pre[k] / max_range
        values[n_sensors] = s_now
        values[n_sensors + 1] = s_now - s_last
        values[n_sensors + 2] = s_last - s_prev
        values[n_in] = 1.0
        for k in range(order.shape[0]):
            acc = 0.0
            for e in range(in_ptr[k], in_ptr[k + 1]):
                acc += in_w[e] * values[in_src[e]]
            values[order[k]] = math.tanh(acc)
        raw0 = values[out0]
        raw1 = values[out0 + 1]

        theta = raw0 * math.pi
        h_new = h + theta
        if h_new > math.pi:
            h_new -= 2.0 * math.pi
        elif h_new <= -math.pi:
            h_new += 2.0 * math.pi
        dist = lo_t + (raw1 + 1.0) * 0.5 * (hi_t - lo_t)
        c = math.cos(h_new)
        s = math.sin(h_new)
        collided = False
        if _collides(x, y, c, s, bhx, bhy, obstacles, side):
            # Rotating in place already clips something: stay put.
            collided = True
            d_actual = 0.0
            h_new = h
            c = math.cos(h)
            s = math.sin(h)
        else:
            free = 0
            for i in range(1, n_substeps + 1):
                step_d = dist * i / n_substeps
                xi = x + c * step_d
                yi = y + s * step_d
                if _collides(xi, yi, c, s, bhx, bhy, obstacles, side):
                    collided = True
                    break
                free = i
            d_actual = dist * free / n_substeps
        x = x + c * d_actual
        y = y + s * d_actual
        h = h_new
        elapsed = elapsed + d_actual / rated_v
        _sense_into(x, y, c, s, mounts, mdirs, obstacles, side, max_range, post)

        traj[step + 1, 0] = x
        traj[step + 1, 1] = y
        traj[step + 1, 2] = h
        actions[step, 0] = theta
        actions[step, 1] = dist
        collided_steps[step] = 1 if collided else 0
        for k in range(n_sensors):
            experience[step, k] = pre[k] / max_range
            experience[step, n_sensors + 2 + k] = post[k] / max_range
        experience[step, n_sensors] = (raw0 + 1.0) * 0.5
        experience[step, n_sensors + 1] = (raw1 + 1.0) * 0.5
        n_steps = step + 1

        s_prev = s_last
        s_last = s_now
        for k in range(n_sensors):
            pre[k] = post[k]
        if collided:
            outcome = COLLISION
            break

    dx = gx - x
    dy = gy - y
    final_dist = math.sqrt(dx * dx + dy * dy)
    if outcome == STEP_CAP and final_dist <= tol:
        outcome = SUCCESS
    t_rem = budget - elapsed
    if t_rem < 0.0:
        t_rem = 0.0
    return n_steps, outcome, elapsed, final_dist, t_rem
