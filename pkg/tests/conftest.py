import numpy as np
import pytest

from neuroloop.data import (
    ContinuousAction,
    Demonstration,
    DiscreteAction,
    NeuralRecord,
    TaskRecord,
    TransitionStep,
    quantize,
)

RATE = 5.2


def make_task(n_steps=40, t0=25.0, dt=1.0, discrete=True, seed=0, steps_per_episode=10):
    rng = np.random.default_rng(seed)
    steps = []
    for i in range(n_steps):
        ep = i // steps_per_episode
        if discrete:
            p = quantize(rng.dirichlet(np.ones(4)))
            p[-1] = quantize(1.0 - p[:-1].sum())
            if p[-1] < 0:
                p = np.array([0.25, 0.25, 0.25, 0.25])
            action = DiscreteAction(p, int(np.argmax(p)))
        else:
            action = ContinuousAction(quantize(rng.normal(size=3)))
        failed = (i % steps_per_episode) >= steps_per_episode // 2
        v = int(rng.integers(1, 3)) if failed else 0
        steps.append(TransitionStep(t0 + i * dt, ep, quantize(rng.normal(size=3)), action,
                                    quantize(rng.normal()), int(v > 0), v,
                                    quantize(abs(rng.normal()))))
    return TaskRecord(tuple(steps), "lunar" if discrete else "robot", "passive")


def make_demo(n_steps=40, seed=0, discrete=True, subject="S01"):
    rng = np.random.default_rng(seed)
    task = make_task(n_steps, seed=seed, discrete=discrete)
    n_base = int(20 * RATE)
    n_total = int(np.floor(task.time_range[1] * RATE)) + 2
    ts = quantize(np.arange(n_total) / RATE)
    x = quantize(rng.normal(size=(n_total, 8)))
    return Demonstration(subject, NeuralRecord(ts[:n_base], x[:n_base]),
                         NeuralRecord(ts[n_base:], x[n_base:]), task)


@pytest.fixture
def demo():
    return make_demo()


@pytest.fixture(scope="session")
def small_cohort():
    from neuroloop.synth import SynthSpec, synthesize
    return [d for d, _ in synthesize(SynthSpec(n_subjects=5, episodes=16, seed=7))]


@pytest.fixture(scope="session")
def small_tables(small_cohort):
    from neuroloop.evaluation import build_tables
    return build_tables(small_cohort)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
