"""Pure-Python simulation kernel: the semantic reference.

The compiled kernel in ``_native.pyx`` mirrors this module statement for
statement; both must produce bit-identical episodes for the same inputs
(same IEEE-754 operations in the same order, same SplitMix64 noise
stream). Change the physics here and there together, never in one place.

All dynamics are scalar double arithmetic; the per-property effects are
monotone by construction: lateral friction scales traction, stiffness
sets ground spring rate and sink depth, damping adds drag and contact
dissipation, rolling friction adds rolling drag, restitution scales the
velocity kept by a hard ground impact.
"""

from __future__ import annotations

from math import floor

import numpy as np

DT = 0.01
GRAVITY = 9.81
BODY_H0 = 0.5
GAIT_HZ = 1.0
TRACTION_ACCEL = 8.0
SLIP_GAIN = 2.0
SLIP_DROP = 10.0
ACC_CROSSTALK = 0.5
NOISE_AMP = 1e-3
CONTACT_MARGIN = 0.05
IMPACT_FRAC = 0.25
FALL_FRAC = 0.3
FALL_STEPS = 10
FALL_PENALTY = 10.0
Y_PENALTY = 0.03
OBS_DIM = 16
ACTION_DIM = 8
DEFAULT_MAX_STEPS = 5000

_MASK64 = 0xFFFFFFFFFFFFFFFF
_INV_2_53 = 1.0 / 9007199254740992.0


class SimState:
    """Mutable per-episode body state."""

    __slots__ = (
        "x", "y", "h", "vx", "vy", "vh", "phase", "roll", "pitch",
        "low_count", "step_index", "rng_state", "fallen",
    )

    def __init__(self):
        self.x = 0.0
        self.y = 0.0
        self.h = BODY_H0
        self.vx = 0.0
        self.vy = 0.0
        self.vh = 0.0
        self.phase = 0.0
        self.roll = 0.0
        self.pitch = 0.0
        self.low_count = 0
        self.step_index = 0
        self.rng_state = 0
        self.fallen = False


def _next_noise(state: SimState) -> float:
    s = (state.rng_state + 0x9E3779B97F4A7C15) & _MASK64
    state.rng_state = s
    z = s
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    z = z ^ (z >> 31)
    u = (z >> 11) * _INV_2_53
    return (2.0 * u - 1.0) * NOISE_AMP


def _contacts(phase: float, h: float) -> tuple[float, float, float, float]:
    # Quarter-cycle staggered 50% duty windows; a leg only touches when the
    # body is low enough for it to reach.
    reach = h < BODY_H0 + CONTACT_MARGIN
    out = []
    for i in range(4):
        ph = phase + 0.25 * i
        frac = ph - floor(ph)
        out.append(1.0 if (frac < 0.5 and reach) else 0.0)
    return out[0], out[1], out[2], out[3]


def _observe(state: SimState, gyro, acc, contacts) -> list[float]:
    obs = [
        state.roll, state.pitch,
        gyro[0], gyro[1], gyro[2],
        acc[0], acc[1], acc[2],
        state.h, state.vx, state.vy, state.vh,
        contacts[0], contacts[1], contacts[2], contacts[3],
    ]
    for i in range(8):
        obs[i] = obs[i] + _next_noise(state)
    return obs


def reset_state(seed: int) -> tuple[SimState, list[float]]:
    """Fresh episode: body at the origin at stand height, zero velocity."""
    state = SimState()
    state.rng_state = seed & _MASK64
    contacts = _contacts(state.phase, state.h)
    obs = _observe(state, (0.0, 0.0, 0.0), (0.0, 0.0, 0.0), contacts)
    return state, obs


def step_once(
    state: SimState,
    action,
    restitution: float,
    lateral: float,
    rolling: float,
    stiffness: float,
    damping: float,
) -> tuple[list[float], float, bool, float, float]:
    """Advance one step. Returns (obs, reward, fell, dx, y_penalty)."""
    a = [0.0] * ACTION_DIM
    for i in range(ACTION_DIM):
        v = float(action[i])
        if v > 1.0:
            v = 1.0
        elif v < -1.0:
            v = -1.0
        a[i] = v

    c0, c1, c2, c3 = _contacts(state.phase, state.h)
    contact_frac = (c0 + c1 + c2 + c3) * 0.25
    thrust = (c0 * a[0] + c1 * a[1] + c2 * a[2] + c3 * a[3]) * 0.25
    side = (c0 * a[4] + c1 * a[5] + c2 * a[6] + c3 * a[7]) * 0.25

    # Traction saturates at a friction-dependent grip limit; pushing past
    # it sheds effectiveness (slip) and erodes vertical support (legs
    # scrabbling carry less weight), so overdriving slick ground drops and
    # eventually topples the body. Friction enters through the limit only,
    # so terrains reward comparably but demand different thrusts.
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

    lift = BODY_H0 - state.h
    if lift < 0.0:
        lift = 0.0
    ax = TRACTION_ACCEL * sink * thrust - drag * state.vx
    ay = 0.5 * TRACTION_ACCEL * lateral * side - drag * state.vy
    ah = -GRAVITY + support * contact_frac * (k_eff * lift - c_eff * state.vh)

    vx_old = state.vx
    vy_old = state.vy
    vh_old = state.vh
    state.vx = state.vx + ax * DT
    state.vy = state.vy + ay * DT
    state.vh = state.vh + ah * DT

    x_old = state.x
    h_old = state.h
    state.x = state.x + state.vx * DT
    state.y = state.y + state.vy * DT
    state.h = state.h + state.vh * DT

    impact_h = IMPACT_FRAC * BODY_H0
    if state.h < impact_h and h_old >= impact_h and state.vh < 0.0:
        state.vh = -(0.1 + 4.0 * restitution) * state.vh
    if state.h < 0.0:
        state.h = 0.0
        if state.vh < 0.0:
            state.vh = 0.0

    phase_old = state.phase
    state.phase = state.phase + GAIT_HZ * DT

    roll_old = state.roll
    pitch_old = state.pitch
    r = 0.2 * state.vy
    if r > 0.5:
        r = 0.5
    elif r < -0.5:
        r = -0.5
    state.roll = r
    p = -0.1 * state.vx
    if p > 0.5:
        p = 0.5
    elif p < -0.5:
        p = -0.5
    state.pitch = p

    gyro = (
        (state.roll - roll_old) / DT,
        (state.pitch - pitch_old) / DT,
        (state.phase - phase_old) / DT,
    )
    # Horizontal accelerometer channels pick up vertical gait jolts
    # (IMU cross-axis contamination), which scale with the terrain.
    jolt = (state.vh - vh_old) / DT
    acc = (
        (state.vx - vx_old) / DT + ACC_CROSSTALK * jolt,
        (state.vy - vy_old) / DT + ACC_CROSSTALK * jolt,
        jolt,
    )

    if state.h < FALL_FRAC * BODY_H0:
        state.low_count += 1
    else:
        state.low_count = 0
    fell = state.low_count >= FALL_STEPS
    if fell:
        state.fallen = True
    state.step_index += 1

    dx = state.x - x_old
    y_penalty = Y_PENALTY * abs(state.y) * DT
    reward = dx - y_penalty
    if fell:
        reward = reward - FALL_PENALTY

    contacts_new = _contacts(state.phase, state.h)
    obs = _observe(state, gyro, acc, contacts_new)
    return obs, reward, fell, dx, y_penalty


def policy_action(matrix_rows, obs_mean, obs_inv_std, embedding, obs) -> list[float]:
    """Linear policy: normalize raw sensors, append context, multiply, clip.

    ``matrix_rows`` is a list of per-action-row lists; accumulation runs
    left to right over the input so the compiled kernel can match it
    exactly.
    """
    inp = [0.0] * (OBS_DIM + len(embedding))
    for i in range(OBS_DIM):
        inp[i] = (obs[i] - obs_mean[i]) * obs_inv_std[i]
    for j in range(len(embedding)):
        inp[OBS_DIM + j] = embedding[j]
    action = [0.0] * len(matrix_rows)
    for j, row in enumerate(matrix_rows):
        s = 0.0
        for i in range(len(inp)):
            s = s + row[i] * inp[i]
        if s > 1.0:
            s = 1.0
        elif s < -1.0:
            s = -1.0
        action[j] = s
    return action


def rollout(
    matrix,
    obs_mean,
    obs_inv_std,
    embedding,
    restitution: float,
    lateral: float,
    rolling: float,
    stiffness: float,
    damping: float,
    seed: int,
    max_steps: int,
    collect_stats: bool,
):
    """Run one policy episode; the hot path for training and evaluation.

    Returns (total_reward, steps, count, sum16, sumsq16, min16, max16)
    where the stats cover every raw (noisy) observation the policy saw,
    including the reset observation. Stats arrays are zero-size when
    ``collect_stats`` is false.
    """
    matrix_rows = [[float(v) for v in row] for row in matrix]
    mean = [float(v) for v in obs_mean]
    inv_std = [float(v) for v in obs_inv_std]
    emb = [float(v) for v in embedding]

    state, obs = reset_state(seed)

    count = 0
    sums = [0.0] * OBS_DIM
    sumsq = [0.0] * OBS_DIM
    mins = [0.0] * OBS_DIM
    maxs = [0.0] * OBS_DIM
    if collect_stats:
        count = 1
        for i in range(OBS_DIM):
            v = obs[i]
            sums[i] = v
            sumsq[i] = v * v
            mins[i] = v
            maxs[i] = v

    total = 0.0
    steps = 0
    while steps < max_steps:
        action = policy_action(matrix_rows, mean, inv_std, emb, obs)
        obs, reward, fell, _, _ = step_once(
            state, action, restitution, lateral, rolling, stiffness, damping
        )
        total = total + reward
        steps += 1
        if collect_stats:
            count += 1
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
        return (
            total,
            steps,
            count,
            np.array(sums),
            np.array(sumsq),
            np.array(mins),
            np.array(maxs),
        )
    empty = np.zeros(0)
    return total, steps, 0, empty, empty, empty, empty
