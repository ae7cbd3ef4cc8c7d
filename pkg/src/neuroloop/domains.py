"""Desk-scale stand-ins for the three task domains.

Each domain exposes the same small surface:

* ``kind``: ``"discrete"`` or ``"continuous"``
* ``action_size``: number of actions (discrete) or action dimension
* ``base_params``: controller parameters of the scripted near-optimal policy
* ``policy(state, params)``: probability vector or action vector
* ``new_episode(rng)``: an environment with ``state`` and ``step(action)``

``step`` returns ``(next_state, reward, done, success)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


def _softmax(z):
    z = np.asarray(z, dtype=float)
    e = np.exp(z - z.max())
    return e / e.sum()


# ---------------------------------------------------------------------------
# Flappy-like corridor: two actions, pass through gates
# ---------------------------------------------------------------------------


class _CorridorEnv:
    def __init__(self, dom: "FlappyCorridor", rng):
        self.dom = dom
        n_gates = dom.horizon // dom.gate_every + 1
        self.centers = rng.integers(-dom.center_range, dom.center_range + 1, size=n_gates)
        self.y = 0
        self.x = 0
        self.cleared = 0

    @property
    def state(self):
        g = self.x // self.dom.gate_every
        to_gate = self.dom.gate_every - self.x % self.dom.gate_every
        return np.array([self.y, to_gate, self.centers[g]], dtype=float)

    def step(self, action):
        d = self.dom
        self.y += 1 if int(action) == 0 else -1
        self.x += 1
        if abs(self.y) > d.bound:
            return self.state, -5.0, True, False
        if self.x % d.gate_every == 0:
            c = self.centers[self.x // d.gate_every - 1]
            if abs(self.y - c) > d.gap_half:
                return self.state, -5.0, True, False
            self.cleared += 1
            reward = 1.0
        else:
            reward = 0.0
        done = self.x >= d.horizon
        return self.state, reward, done, done


@dataclass
class FlappyCorridor:
    """Move up or down one cell per step; every ``gate_every`` steps a gate must be passed."""

    horizon: int = 120
    gate_every: int = 8
    gap_half: int = 2
    center_range: int = 3
    bound: int = 6
    dt: float = 0.5
    name: str = "flappy"

    kind = "discrete"
    action_size = 2
    state_size = 3

    @property
    def base_params(self):
        return {"beta": 2.5}

    def policy(self, state, params):
        y, _, c = state
        p_up = 1.0 / (1.0 + math.exp(-params["beta"] * (c - y)))
        return np.array([p_up, 1.0 - p_up])

    def new_episode(self, rng):
        return _CorridorEnv(self, rng)


# ---------------------------------------------------------------------------
# Lander-like point mass: four actions, land softly on the pad
# ---------------------------------------------------------------------------


class _LanderEnv:
    def __init__(self, dom: "PointLander", rng):
        self.dom = dom
        self.s = np.array([rng.uniform(-dom.start_x, dom.start_x), dom.start_y, 0.0, 0.0])
        self.t = 0

    @property
    def state(self):
        return self.s.copy()

    def step(self, action):
        d = self.dom
        x, y, vx, vy = self.s
        dvx, dvy = d.action_dv[int(action)]
        vx += dvx
        vy += dvy - d.gravity
        x += vx
        y += vy
        self.s = np.array([x, y, vx, vy])
        self.t += 1
        if abs(x) > d.x_bound or y > d.y_ceiling:
            return self.state, -10.0, True, False
        if y <= 0.0:
            if vy < -d.safe_speed:
                return self.state, -10.0, True, False  # crash
            if abs(x) <= d.pad_half:
                return self.state, 10.0, True, True
            return self.state, -2.0, True, False  # soft landing off the pad
        done = self.t >= d.horizon
        return self.state, 0.0, done, False


@dataclass
class PointLander:
    """2-D point mass under gravity with actions up / left / right / down."""

    horizon: int = 200
    gravity: float = 0.02
    thrust: float = 0.05
    side: float = 0.02
    start_x: float = 4.0
    start_y: float = 12.0
    pad_half: float = 1.5
    safe_speed: float = 0.3
    x_bound: float = 12.0
    y_ceiling: float = 18.0
    dt: float = 0.5
    name: str = "lunar"

    kind = "discrete"
    action_size = 4
    state_size = 4

    @property
    def action_dv(self):
        return ((0.0, self.thrust), (-self.side, 0.0), (self.side, 0.0), (0.0, -self.side))

    @property
    def base_params(self):
        return {"beta": 1.0, "kx": 0.05, "ky": 0.02, "vy_min": 0.06, "vy_max": 0.2, "vx_max": 0.15}

    def policy(self, state, params):
        x, y, vx, vy = state
        vx_d = float(np.clip(-params["kx"] * x, -params["vx_max"], params["vx_max"]))
        vy_d = -float(np.clip(params["vy_min"] + params["ky"] * y, params["vy_min"], params["vy_max"]))
        cost = []
        for dvx, dvy in self.action_dv:
            ex = (vx + dvx - vx_d) / 0.02
            ey = (vy + dvy - self.gravity - vy_d) / 0.02
            cost.append(ex * ex + ey * ey)
        return _softmax(-params["beta"] * np.array(cost))

    def new_episode(self, rng):
        return _LanderEnv(self, rng)


# ---------------------------------------------------------------------------
# 3-D reach: continuous velocity commands toward a fixed goal
# ---------------------------------------------------------------------------


class _ReachEnv:
    def __init__(self, dom: "Reach3D", rng):
        self.dom = dom
        self.pos = rng.uniform(-dom.start_spread, dom.start_spread, size=3)
        self.t = 0
        self.held = 0

    @property
    def state(self):
        return self.pos.copy()

    def step(self, action):
        d = self.dom
        a = np.asarray(action, dtype=float)
        self.pos = self.pos + d.speed * a
        self.t += 1
        near = np.linalg.norm(self.pos - d.goal) < d.tolerance
        steady = np.linalg.norm(a) < d.settle_action
        self.held = self.held + 1 if (near and steady) else 0
        if self.held >= d.hold_steps:
            return self.state, 10.0, True, True
        reward = -float(np.linalg.norm(self.pos - d.goal)) * 0.01
        return self.state, reward, self.t >= d.horizon, False


@dataclass
class Reach3D:
    """Move an end effector to ``goal`` and hold it there.

    Success needs ``hold_steps`` consecutive steps within ``tolerance`` of
    the goal with an action norm below ``settle_action``.
    """

    goal: tuple = (0.8, 0.6, 0.4)
    decoys: tuple = ((-0.6, 0.7, 0.3), (0.7, -0.6, 0.5))
    speed: float = 0.025
    tolerance: float = 0.05
    settle_action: float = 0.5
    hold_steps: int = 5
    start_spread: float = 0.1
    horizon: int = 60
    dt: float = 1.0
    name: str = "robot"

    kind = "continuous"
    action_size = 3
    state_size = 3

    def __post_init__(self):
        self.goal = np.asarray(self.goal, dtype=float)
        self.decoys = tuple(np.asarray(d, dtype=float) for d in self.decoys)

    @property
    def base_params(self):
        return {"kp": 6.0}

    def controller(self, state, target, params):
        return np.clip(params["kp"] * (np.asarray(target) - state), -1.0, 1.0)

    def policy(self, state, params):
        return self.controller(state, self.goal, params)

    def new_episode(self, rng):
        return _ReachEnv(self, rng)


DOMAIN_FACTORIES = {
    "flappy": FlappyCorridor,
    "lunar": PointLander,
    "robot": Reach3D,
    "synthetic-discrete": lambda **kw: PointLander(**{"name": "synthetic-discrete", **kw}),
    "synthetic-continuous": lambda **kw: Reach3D(**{"name": "synthetic-continuous", **kw}),
}


def make_domain(name: str, **params):
    try:
        factory = DOMAIN_FACTORIES[name]
    except KeyError:
        raise ValidationError(f"unknown domain {name!r}; choose from {sorted(DOMAIN_FACTORIES)}") from None
    return factory(**params)
