"""Shared model builders and the seeded random-model generator."""

import warnings

import numpy as np
import pytest

from roving.model import (
    EXHAUSTIVE,
    GATED,
    DistributionSpec,
    NetworkModel,
    QueueSpec,
    solve_traffic,
)

det = DistributionSpec.deterministic
expd = DistributionSpec.exponential
erlang = DistributionSpec.erlang
hyper = DistributionSpec.hyperexponential
gamma = DistributionSpec.gamma_shape_rate


def takacs_model(m_batch=1, mu=1.0, lam=1.0 / 6.0):
    """Two-stage feedback system: free waiting room, exponential service
    room, batch of overhead services modelled as an Erlang switch-over."""
    q1 = QueueSpec(lam, det(0.0), erlang(m_batch, mu), GATED)
    q2 = QueueSpec(0.0, expd(mu), det(0.0), GATED)
    return NetworkModel(queues=(q1, q2), routing=((0.0, 0.0, 1.0), (2.0 / 3.0, 1.0 / 3.0, 0.0)))


def katayama_model(rho=0.5):
    """Two parallel first-stage queues feeding a second stage, exhaustive
    service, deterministic times; total load parametrized by ``rho``."""
    lam1 = rho / 66.0
    queues = (
        QueueSpec(lam1, det(1.0), det(0.0), EXHAUSTIVE),
        QueueSpec(10.0 * lam1, det(1.0), det(2.0), EXHAUSTIVE),
        QueueSpec(0.0, det(5.0), det(2.0), EXHAUSTIVE),
    )
    routing = ((0, 0, 0, 1), (0, 0, 0, 1), (1, 0, 0, 0))
    return NetworkModel(queues=queues, routing=routing)


def vacation_model(lam=0.5, mu=1.0, d=1.0):
    """Single exhaustive queue with a deterministic server vacation."""
    return NetworkModel(
        queues=(QueueSpec(lam, expd(mu), det(d), EXHAUSTIVE),),
        routing=((1.0, 0.0),),
    )


def pure_polling_model(disc=GATED):
    """Two queues, no rerouting, arrival rates large enough that the
    external-marking identity can be probed at unit-scale arguments."""
    queues = (
        QueueSpec(1.2, expd(8.0), det(0.4), disc),
        QueueSpec(1.5, expd(10.0), det(0.3), disc),
    )
    return NetworkModel(queues=queues, routing=((1, 0, 0), (1, 0, 0)))


def _random_dist(rng, allow_zero=False):
    kind = rng.choice(["det", "exp", "erlang", "hyperexp", "gamma"])
    if kind == "det":
        if allow_zero and rng.random() < 0.4:
            return det(0.0)
        return det(float(rng.uniform(0.2, 2.0)))
    if kind == "exp":
        return expd(float(rng.uniform(0.5, 3.0)))
    if kind == "erlang":
        return erlang(int(rng.integers(1, 5)), float(rng.uniform(0.5, 3.0)))
    if kind == "hyperexp":
        w = float(rng.uniform(0.2, 0.8))
        return hyper((w, 1.0 - w), (float(rng.uniform(0.5, 2.0)), float(rng.uniform(2.0, 6.0))))
    return gamma(float(rng.uniform(0.4, 3.0)), float(rng.uniform(0.5, 3.0)))


def random_model(rng, max_queues=4, rho_max=0.8, min_exit=0.2):
    """Random stable network: mixed disciplines, routing with exit mass at
    least ``min_exit`` per queue, external feed everywhere, at least one
    positive switch-over, total load drawn up to ``rho_max``."""
    n = int(rng.integers(1, max_queues + 1))
    queues = []
    for j in range(n):
        queues.append(QueueSpec(
            arrival_rate=float(rng.uniform(0.1, 1.0)),
            service=_random_dist(rng),
            switchover_after=_random_dist(rng, allow_zero=True),
            discipline=GATED if rng.random() < 0.5 else EXHAUSTIVE,
        ))
    if all(q.switchover_after.mean == 0.0 for q in queues):
        queues[0] = QueueSpec(queues[0].arrival_rate, queues[0].service,
                              det(float(rng.uniform(0.3, 1.5))), queues[0].discipline)
    rows = []
    for i in range(n):
        exit_mass = float(rng.uniform(min_exit, 1.0))
        split = rng.dirichlet(np.ones(n)) * (1.0 - exit_mass)
        rows.append((exit_mass, *map(float, split)))
    model = NetworkModel(queues=tuple(queues), routing=tuple(rows))
    rho_target = float(rng.uniform(0.1, rho_max))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # the unscaled draw may be overloaded
        base = solve_traffic(model).rho
    scale = rho_target / base
    queues = tuple(
        QueueSpec(q.arrival_rate * scale, q.service, q.switchover_after, q.discipline)
        for q in model.queues
    )
    return NetworkModel(queues=queues, routing=model.routing)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
