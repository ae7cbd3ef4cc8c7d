"""Near-optimal policy ensembles and the degradation protocol.

An episode starts on the scripted near-optimal policy. At the point of
failure (first success of a per-step Bernoulli draw) the agent switches to
degraded action selection for the rest of the episode:

* discrete, worst case: sample from the redistributed vector returned by
  :func:`degrade_discrete`
* discrete, sub-optimal: sample from an even mix of the original and the
  redistributed vector
* continuous, sub-optimal: steer toward a decoy goal
* continuous, worst case: add zero-mean Gaussian noise to the action
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .agreement import MODES, SUBOPTIMAL, WORSTCASE, assign_class_labels, mean_policy_error
from .data import ContinuousAction, DiscreteAction, TaskRecord, TransitionStep
from .domains import make_domain
from .errors import ValidationError


def degrade_discrete(p) -> np.ndarray:
    """Move the best action's mass onto the least likely other action.

    ``b`` is the lowest-index argmax, ``w`` the lowest-index argmin among
    the remaining entries. The result has ``p'[b] = 0``, ``p'[w] = p_w + p_b``
    and is divided by its sum.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size < 2:
        raise ValidationError("need a probability vector with at least 2 entries")
    if abs(p.sum() - 1.0) > 1e-9 or np.any(p < 0):
        raise ValidationError(f"input is not normalized (sum {p.sum()!r})")
    b = int(np.argmax(p))
    rest = np.delete(p, b)
    w = int(np.argmin(rest))
    w = w + 1 if w >= b else w
    out = p.copy()
    out[w] = p[w] + p[b]
    out[b] = 0.0
    return out / out.sum()


class Policy:
    def __init__(self, domain, params):
        self.domain = domain
        self.params = dict(params)

    def __call__(self, state):
        return self.domain.policy(np.asarray(state, dtype=float), self.params)


@dataclass
class PolicyEnsemble:
    """``K`` jittered copies of the domain's scripted policy plus the unjittered base."""

    domain: object
    members: list
    base: Policy

    @property
    def kind(self):
        return self.domain.kind

    def __len__(self):
        return len(self.members)

    def evaluate(self, state):
        return [m(state) for m in self.members]


def rollout_success(domain, policy, rng, n=20) -> float:
    wins = 0
    for _ in range(n):
        env = domain.new_episode(rng)
        s = env.state
        for _ in range(domain.horizon):
            out = policy(s)
            a = rng.choice(out.size, p=out) if domain.kind == "discrete" else out
            s, _, done, success = env.step(a)
            if done:
                wins += success
                break
    return wins / n


def build_ensemble(domain, k=10, jitter=0.1, rng=None, validate=True,
                   n_rollouts=20, min_success=0.9, max_tries=50) -> PolicyEnsemble:
    """Draw ``k`` members with multiplicative parameter noise in ``[1-jitter, 1+jitter]``.

    With ``validate`` each member must reach the goal on at least
    ``min_success`` of ``n_rollouts`` standalone episodes; candidates that
    fall short are redrawn.
    """
    if k < 1:
        raise ValidationError("ensemble needs at least one policy")
    rng = np.random.default_rng(rng)
    base = domain.base_params
    members = []
    tries = 0
    while len(members) < k:
        tries += 1
        if tries > max_tries * k:
            raise ValidationError(f"could not find {k} near-optimal policies for {domain.name}")
        params = {key: v * rng.uniform(1 - jitter, 1 + jitter) for key, v in base.items()}
        pol = Policy(domain, params)
        if validate and rollout_success(domain, pol, rng, n_rollouts) < min_success:
            continue
        members.append(pol)
    return PolicyEnsemble(domain, members, Policy(domain, base))


@dataclass(frozen=True)
class DegradationSchedule:
    p_fail: float = 0.02
    mode: str = WORSTCASE
    decoy_index: int = 0
    noise_sigma: float = 0.5
    suboptimal_mix: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.p_fail <= 1.0:
            raise ValidationError(f"p_fail must lie in [0, 1], got {self.p_fail}")
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.noise_sigma < 0:
            raise ValidationError("noise_sigma must be >= 0")


def sample_point_of_failure(horizon: int, p_fail: float, rng):
    """First step whose Bernoulli(p_fail) draw succeeds, or None."""
    if not 0.0 <= p_fail <= 1.0:
        raise ValidationError(f"p_fail must lie in [0, 1], got {p_fail}")
    hits = np.flatnonzero(rng.random(horizon) < p_fail)
    return int(hits[0]) if hits.size else None


def perturb_continuous(state, schedule: DegradationSchedule, action, domain, rng) -> np.ndarray:
    a = np.asarray(action, dtype=float)
    if a.size != domain.action_size:
        raise ValidationError(f"action has {a.size} dims, domain expects {domain.action_size}")
    if schedule.mode == SUBOPTIMAL:
        if not 0 <= schedule.decoy_index < len(domain.decoys):
            raise ValidationError(f"decoy index {schedule.decoy_index} out of range")
        return domain.controller(np.asarray(state, dtype=float),
                                 domain.decoys[schedule.decoy_index], domain.base_params)
    return a + rng.normal(0.0, schedule.noise_sigma, size=a.size)


@dataclass
class Episode:
    steps: list
    t_star: object  # int or None, relative to the episode's first step
    mode: str
    success: bool
    reward: float = 0.0


def simulate_episode(domain, ensemble: PolicyEnsemble, schedule: DegradationSchedule, rng,
                     episode_id=0, t0=0.0) -> Episode:
    """Run one episode and label every step (B, V from the point of failure, E from agreement)."""
    if ensemble.kind != domain.kind:
        raise ValidationError(f"ensemble kind {ensemble.kind} does not match domain kind {domain.kind}")
    t_fail = sample_point_of_failure(domain.horizon, schedule.p_fail, rng)
    env = domain.new_episode(rng)
    state = env.state
    raw = []
    total = 0.0
    success = False
    for t in range(domain.horizon):
        base_out = ensemble.base(state)
        failed = t_fail is not None and t >= t_fail
        if domain.kind == "discrete":
            dist = base_out
            if failed:
                worst = degrade_discrete(base_out)
                if schedule.mode == WORSTCASE:
                    dist = worst
                else:
                    dist = (1 - schedule.suboptimal_mix) * base_out + schedule.suboptimal_mix * worst
            chosen = int(rng.choice(dist.size, p=dist / dist.sum()))
            action = DiscreteAction(dist, chosen)
            executed = chosen
        else:
            values = perturb_continuous(state, schedule, base_out, domain, rng) if failed else base_out
            action = ContinuousAction(values)
            executed = values
        score = mean_policy_error(action, ensemble, state)
        next_state, reward, done, success = env.step(executed)
        raw.append(TransitionStep(t0 + t * domain.dt, episode_id, state, action, reward,
                                  error_label=score.mean))
        total += reward
        state = next_state
        if done:
            break
    t_star = t_fail if (t_fail is not None and t_fail < len(raw)) else None
    steps = assign_class_labels(raw, t_star, schedule.mode)
    return Episode(steps, t_star, schedule.mode, bool(success), total)


def simulate_task(domain, ensemble, n_episodes, rng, p_fail=0.02, modes="mixed",
                  noise_sigma=0.5, interaction="passive", t0=0.0, gap_s=0.0):
    """Back-to-back episodes as one TaskRecord.

    ``modes`` is a mode name, a sequence of names (one per episode) or
    ``"mixed"`` for a random mode per episode. Returns ``(task, episodes)``.
    """
    if isinstance(modes, str) and modes != "mixed":
        modes = [modes] * n_episodes
    episodes = []
    steps = []
    t = t0
    n_decoys = len(getattr(domain, "decoys", ()))
    for e in range(n_episodes):
        mode = MODES[int(rng.integers(2))] if modes == "mixed" else modes[e]
        decoy = int(rng.integers(n_decoys)) if n_decoys else 0
        sched = DegradationSchedule(p_fail, mode, decoy, noise_sigma)
        ep = simulate_episode(domain, ensemble, sched, rng, episode_id=e, t0=t)
        episodes.append(ep)
        steps.extend(ep.steps)
        t = ep.steps[-1].time + domain.dt + gap_s
    return TaskRecord(tuple(steps), domain.name, interaction), episodes


__all__ = [
    "DegradationSchedule", "Episode", "Policy", "PolicyEnsemble", "build_ensemble",
    "degrade_discrete", "make_domain", "perturb_continuous", "rollout_success",
    "sample_point_of_failure", "simulate_episode", "simulate_task",
]
