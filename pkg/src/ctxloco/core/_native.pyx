# cython: boundscheck=False, wraparound=False, language_level=3
"""Compiled rollout kernel.

Exact twin of ``pykernel.py``: the same IEEE-754 operations in the same
order, including the SplitMix64 sensor-noise stream, so episodes are
bit-identical across the two backends. Keep every expression textually in
sync with the reference when changing the dynamics.
"""

import numpy as np


cdef double DT = 0.01
cdef double GRAVITY = 9.81
cdef double BODY_H0 = 0.5
cdef double GAIT_HZ = 1.0
cdef double TRACTION_ACCEL = 8.0
cdef double SLIP_GAIN = 2.0
cdef double SLIP_DROP = 10.0
cdef double ACC_CROSSTALK = 0.5
cdef double NOISE_AMP = 1e-3
cdef double CONTACT_MARGIN = 0.05
cdef double IMPACT_FRAC = 0.25
cdef double FALL_FRAC = 0.3
cdef int FALL_STEPS = 10
cdef double FALL_PENALTY = 10.0
cdef double Y_PENALTY = 0.03
cdef int OBS_DIM = 16
cdef int ACTION_DIM = 8

from libc.math cimport floor, fabs


cdef inline double _next_noise(unsigned long long *rng) noexcept nogil:
    cdef unsigned long long s = rng[0] + <unsigned long long>0x9E3779B97F4A7C15
    cdef unsigned long long z
    rng[0] = s
    z = s
    z = (z ^ (z >> 30)) * <unsigned long long>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <unsigned long long>0x94D049BB133111EB
    z = z ^ (z >> 31)
    cdef double u = <double>(z >> 11) * (1.0 / 9007199254740992.0)
    return (2.0 * u - 1.0) * NOISE_AMP


cdef inline void _contacts(double phase, double h, double *c) noexcept nogil:
    cdef bint reach = h < BODY_H0 + CONTACT_MARGIN
    cdef int i
    cdef double ph, frac
    for i in range(4):
        ph = phase + 0.25 * i
        frac = ph - floor(ph)
        if frac < 0.5 and reach:
            c[i] = 1.0
        else:
            c[i] = 0.0


def rollout(
    double[:, ::1] matrix,
    double[::1] obs_mean,
    double[::1] obs_inv_std,
    double[::1] embedding,
    double restitution,
    double lateral,
    double rolling,
    double stiffness,
    double damping,
    unsigned long long seed,
    long max_steps,
    bint collect_stats,
):
    """Same contract as ``pykernel.rollout``."""
    cdef int adim = matrix.shape[0]
    cdef int idim = matrix.shape[1]
    cdef int edim = embedding.shape[0]
    if adim != ACTION_DIM:
        raise ValueError("matrix must have 8 action rows")
    if idim != OBS_DIM + edim:
        raise ValueError("matrix width must equal 16 + embedding dim")

    inp_arr = np.empty(idim, dtype=np.float64)
    sums_arr = np.zeros(OBS_DIM, dtype=np.float64)
    sumsq_arr = np.zeros(OBS_DIM, dtype=np.float64)
    mins_arr = np.zeros(OBS_DIM, dtype=np.float64)
    maxs_arr = np.zeros(OBS_DIM, dtype=np.float64)
    cdef double[::1] inp = inp_arr
    cdef double[::1] sums = sums_arr
    cdef double[::1] sumsq = sumsq_arr
    cdef double[::1] mins = mins_arr
    cdef double[::1] maxs = maxs_arr

    cdef double obs[16]
    cdef double act[8]
    cdef double a[8]
    cdef double c[4]

    cdef unsigned long long rng = seed
    cdef double x = 0.0, y = 0.0, h = BODY_H0
    cdef double vx = 0.0, vy = 0.0, vh = 0.0
    cdef double phase = 0.0, roll = 0.0, pitch = 0.0
    cdef int low_count = 0
    cdef long steps = 0
    cdef long count = 0
    cdef bint fell = False

    cdef int i, j
    cdef double v, s
    cdef double contact_frac, thrust, side
    cdef double grip_limit, abs_thrust, overshoot, magnitude, support
    cdef double k_eff, c_eff, sink, c_roll, c_terr, drag
    cdef double lift, ax, ay, ah
    cdef double vx_old, vy_old, vh_old, x_old, h_old, phase_old
    cdef double roll_old, pitch_old, r, p
    cdef double impact_h, dx, y_penalty, reward
    cdef double gx, gy, gz, accx, accy, accz, jolt
    cdef double total = 0.0

    with nogil:
        # reset
        _contacts(phase, h, c)
        obs[0] = roll
        obs[1] = pitch
        obs[2] = 0.0
        obs[3] = 0.0
        obs[4] = 0.0
        obs[5] = 0.0
        obs[6] = 0.0
        obs[7] = 0.0
        obs[8] = h
        obs[9] = vx
        obs[10] = vy
        obs[11] = vh
        obs[12] = c[0]
        obs[13] = c[1]
        obs[14] = c[2]
        obs[15] = c[3]
        for i in range(8):
            obs[i] = obs[i] + _next_noise(&rng)

        if collect_stats:
            count = 1
            for i in range(OBS_DIM):
                v = obs[i]
                sums[i] = v
                sumsq[i] = v * v
                mins[i] = v
                maxs[i] = v

        while steps < max_steps:
            # policy: normalize sensors, append context, multiply, clip
            for i in range(OBS_DIM):
                inp[i] = (obs[i] - obs_mean[i]) * obs_inv_std[i]
            for j in range(edim):
                inp[OBS_DIM + j] = embedding[j]
            for j in range(adim):
                s = 0.0
                for i in range(idim):
                    s = s + matrix[j, i] * inp[i]
                if s > 1.0:
                    s = 1.0
                elif s < -1.0:
                    s = -1.0
                act[j] = s

            # dynamics step (twin of pykernel.step_once)
            for i in range(ACTION_DIM):
                v = act[i]
                if v > 1.0:
                    v = 1.0
                elif v < -1.0:
                    v = -1.0
                a[i] = v

            _contacts(phase, h, c)
            contact_frac = (c[0] + c[1] + c[2] + c[3]) * 0.25
            thrust = (c[0] * a[0] + c[1] * a[1] + c[2] * a[2] + c[3] * a[3]) * 0.25
            side = (c[0] * a[4] + c[1] * a[5] + c[2] * a[6] + c[3] * a[7]) * 0.25

            # slip past the friction-dependent grip limit (see pykernel);
            # friction acts through the limit only, overshoot erodes support
            grip_limit = 0.5 * (0.15 + 0.85 * lateral)
            abs_thrust = thrust if thrust >= 0.0 else -thrust
            overshoot = abs_thrust - grip_limit
            support = 1.0
            if overshoot > 0.0:
                magnitude = abs_thrust - SLIP_GAIN * overshoot
                if magnitude < 0.0:
                    magnitude = 0.0
                thrust = magnitude if thrust >= 0.0 else -magnitude
                support = 1.0 - SLIP_DROP * overshoot
                if support < 0.0:
                    support = 0.0

            k_eff = 200.0 + 1800.0 * stiffness
            c_eff = 2.0 + 38.0 * (damping / 0.5)
            sink = 0.5 + 0.5 * stiffness
            c_roll = 0.05 + 0.45 * ((rolling - 2.0e4) / 1.4e5)
            c_terr = 1.2 * (damping / 0.5)
            drag = c_roll + c_terr

            lift = BODY_H0 - h
            if lift < 0.0:
                lift = 0.0
            ax = TRACTION_ACCEL * sink * thrust - drag * vx
            ay = 0.5 * TRACTION_ACCEL * lateral * side - drag * vy
            ah = -GRAVITY + support * contact_frac * (k_eff * lift - c_eff * vh)

            vx_old = vx
            vy_old = vy
            vh_old = vh
            vx = vx + ax * DT
            vy = vy + ay * DT
            vh = vh + ah * DT

            x_old = x
            h_old = h
            x = x + vx * DT
            y = y + vy * DT
            h = h + vh * DT

            impact_h = IMPACT_FRAC * BODY_H0
            if h < impact_h and h_old >= impact_h and vh < 0.0:
                vh = -(0.1 + 4.0 * restitution) * vh
            if h < 0.0:
                h = 0.0
                if vh < 0.0:
                    vh = 0.0

            phase_old = phase
            phase = phase + GAIT_HZ * DT

            roll_old = roll
            pitch_old = pitch
            r = 0.2 * vy
            if r > 0.5:
                r = 0.5
            elif r < -0.5:
                r = -0.5
            roll = r
            p = -0.1 * vx
            if p > 0.5:
                p = 0.5
            elif p < -0.5:
                p = -0.5
            pitch = p

            gx = (roll - roll_old) / DT
            gy = (pitch - pitch_old) / DT
            gz = (phase - phase_old) / DT
            # IMU cross-axis contamination from vertical gait jolts
            jolt = (vh - vh_old) / DT
            accx = (vx - vx_old) / DT + ACC_CROSSTALK * jolt
            accy = (vy - vy_old) / DT + ACC_CROSSTALK * jolt
            accz = jolt

            if h < FALL_FRAC * BODY_H0:
                low_count = low_count + 1
            else:
                low_count = 0
            fell = low_count >= FALL_STEPS

            dx = x - x_old
            y_penalty = Y_PENALTY * fabs(y) * DT
            reward = dx - y_penalty
            if fell:
                reward = reward - FALL_PENALTY

            _contacts(phase, h, c)
            obs[0] = roll
            obs[1] = pitch
            obs[2] = gx
            obs[3] = gy
            obs[4] = gz
            obs[5] = accx
            obs[6] = accy
            obs[7] = accz
            obs[8] = h
            obs[9] = vx
            obs[10] = vy
            obs[11] = vh
            obs[12] = c[0]
            obs[13] = c[1]
            obs[14] = c[2]
            obs[15] = c[3]
            for i in range(8):
                obs[i] = obs[i] + _next_noise(&rng)

            total = total + reward
            steps = steps + 1
            if collect_stats:
                count = count + 1
                for i in range(OBS_DIM):
                    v = obs[i]
                    sums[i] = sums[i] + v
                    sumsq[i] = sumsq[i] + v * v
                    if v < mins[i]:
                        mins[i] = v
                    if v > maxs[i]:
                        maxs[i] = v
            if fell:
                break

    if collect_stats:
        return total, steps, count, sums_arr, sumsq_arr, mins_arr, maxs_arr
    empty = np.zeros(0)
    return total, steps, 0, empty, empty, empty, empty
