"""Static description of the network: rates, distributions, routing, loads.

A model is a cyclically ordered list of queues served by one server.
External arrivals are Poisson per queue; after each service the customer
is rerouted according to a routing row whose first entry is the exit
probability.  Everything here is immutable and safe to share.
"""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    NegativeParameter,
    RowSumError,
    SingularRouting,
    StabilityWarning,
)

ROW_SUM_TOL = 1e-12

GATED = "gated"
EXHAUSTIVE = "exhaustive"


@dataclass(frozen=True)
class DistributionSpec:
    """One nonnegative random variable from the supported closed-form families.

    Kinds: ``det`` (point mass), ``exp``, ``erlang``, ``hyperexp``
    (finite exponential mixture), ``gamma``.  Every family has an
    analytic transform and closed-form raw moments of all orders.
    """

    kind: str
    d: float = 0.0
    rate: float = 0.0
    phases: int = 1
    shape: float = 1.0
    weights: tuple = ()
    rates: tuple = ()

    @classmethod
    def deterministic(cls, d):
        if d < 0:
            raise NegativeParameter(f"deterministic value must be >= 0, got {d}")
        return cls("det", d=float(d))

    @classmethod
    def exponential(cls, rate):
        if rate <= 0:
            raise NegativeParameter(f"exponential rate must be > 0, got {rate}")
        return cls("exp", rate=float(rate))

    @classmethod
    def erlang(cls, phases, rate):
        if int(phases) != phases or phases < 1:
            raise NegativeParameter(f"erlang phases must be a positive integer, got {phases}")
        if rate <= 0:
            raise NegativeParameter(f"erlang rate must be > 0, got {rate}")
        return cls("erlang", phases=int(phases), rate=float(rate))

    @classmethod
    def hyperexponential(cls, weights, rates):
        w = tuple(float(x) for x in weights)
        r = tuple(float(x) for x in rates)
        if len(w) != len(r) or not w:
            raise NegativeParameter("hyperexp weights and rates must be nonempty and equal length")
        if any(x <= 0 for x in w) or any(x <= 0 for x in r):
            raise NegativeParameter("hyperexp weights and rates must be > 0")
        total = math.fsum(w)
        if abs(total - 1.0) > ROW_SUM_TOL:
            raise NegativeParameter(f"hyperexp weights must sum to 1, got {total!r}")
        # Store exactly normalized weights so transform identities hold to rounding.
        return cls("hyperexp", weights=tuple(x / total for x in w), rates=r)

    @classmethod
    def gamma_shape_rate(cls, shape, rate):
        if shape <= 0 or rate <= 0:
            raise NegativeParameter("gamma shape and rate must be > 0")
        return cls("gamma", shape=float(shape), rate=float(rate))

    def moment(self, k: int) -> float:
        """Raw moment E[X^k] (k >= 0)."""
        if k == 0:
            return 1.0
        if self.kind == "det":
            return self.d**k
        if self.kind == "exp":
            return math.factorial(k) / self.rate**k
        if self.kind == "erlang":
            num = 1.0
            for j in range(k):
                num *= self.phases + j
            return num / self.rate**k
        if self.kind == "hyperexp":
            fk = math.factorial(k)
            return math.fsum(w * fk / r**k for w, r in zip(self.weights, self.rates))
        if self.kind == "gamma":
            num = 1.0
            for j in range(k):
                num *= self.shape + j
            return num / self.rate**k
        raise ConfigError(f"unknown distribution kind {self.kind!r}")

    @property
    def mean(self) -> float:
        return self.moment(1)

    @property
    def variance(self) -> float:
        return self.moment(2) - self.mean**2

    def is_zero(self) -> bool:
        return self.kind == "det" and self.d == 0.0

    def to_dict(self) -> dict:
        if self.kind == "det":
            return {"type": "det", "value": self.d}
        if self.kind == "exp":
            return {"type": "exp", "rate": self.rate}
        if self.kind == "erlang":
            return {"type": "erlang", "phases": self.phases, "rate": self.rate}
        if self.kind == "hyperexp":
            return {"type": "hyperexp", "weights": list(self.weights), "rates": list(self.rates)}
        return {"type": "gamma", "shape": self.shape, "rate": self.rate}

    @classmethod
    def from_dict(cls, spec: dict) -> "DistributionSpec":
        if not isinstance(spec, dict) or "type" not in spec:
            raise ConfigError(f"distribution spec must be a dict with a 'type', got {spec!r}")
        kind = spec["type"]
        try:
            if kind == "det":
                return cls.deterministic(spec["value"])
            if kind == "exp":
                return cls.exponential(spec["rate"])
            if kind == "erlang":
                return cls.erlang(spec["phases"], spec["rate"])
            if kind == "hyperexp":
                return cls.hyperexponential(spec["weights"], spec["rates"])
            if kind == "gamma":
                return cls.gamma_shape_rate(spec["shape"], spec["rate"])
        except KeyError as exc:
            raise ConfigError(f"distribution spec {spec!r} is missing {exc}") from None
        raise ConfigError(f"unknown distribution type {kind!r}")


@dataclass(frozen=True)
class QueueSpec:
    """One station: Poisson feed, service law, trailing switch-over, discipline."""

    arrival_rate: float
    service: DistributionSpec
    switchover_after: DistributionSpec
    discipline: str = GATED

    def __post_init__(self):
        if self.arrival_rate < 0:
            raise NegativeParameter(f"arrival rate must be >= 0, got {self.arrival_rate}")
        if self.discipline not in (GATED, EXHAUSTIVE):
            raise ConfigError(f"discipline must be 'gated' or 'exhaustive', got {self.discipline!r}")


@dataclass(frozen=True)
class NetworkModel:
    """Validated network: queues in cyclic order plus the routing matrix.

    ``routing[i]`` has length n+1 with the exit probability first:
    ``routing[i][0] = p(i -> out)`` and ``routing[i][1 + j] = p(i -> j)``
    for 0-based queue index j.
    """

    queues: tuple
    routing: tuple

    def __post_init__(self):
        n = len(self.queues)
        if n < 1:
            raise ConfigError("a model needs at least one queue")
        object.__setattr__(self, "queues", tuple(self.queues))
        rows = []
        for i, row in enumerate(self.routing):
            row = tuple(float(x) for x in row)
            if len(row) != n + 1:
                raise ConfigError(f"routing row {i} must have {n + 1} entries, got {len(row)}")
            if any(x < 0 or x > 1 for x in row):
                raise NegativeParameter(f"routing row {i} has entries outside [0, 1]")
            total = math.fsum(row)
            if abs(total - 1.0) > ROW_SUM_TOL:
                raise RowSumError(f"routing row {i} sums to {total!r}, expected 1")
            rows.append(row)
        if len(rows) != n:
            raise ConfigError(f"expected {n} routing rows, got {len(rows)}")
        object.__setattr__(self, "routing", tuple(rows))
        mat = np.eye(n) - self.internal_routing().T
        if n and 1.0 / np.linalg.cond(mat) < 1e-12:
            raise SingularRouting(
                "I - P^T is singular: customers cannot all leave the system, "
                "so the traffic equations have no unique solution"
            )

    @property
    def n(self) -> int:
        return len(self.queues)

    def internal_routing(self) -> np.ndarray:
        """The n x n queue-to-queue part of the routing matrix."""
        return np.array([row[1:] for row in self.routing])

    def exit_prob(self, i: int) -> float:
        return self.routing[i][0]

    def route_prob(self, i: int, j: int) -> float:
        """Probability of moving from queue i to queue j (0-based)."""
        return self.routing[i][1 + j]

    def arrival_rates(self) -> np.ndarray:
        return np.array([q.arrival_rate for q in self.queues])

    def is_exhaustive(self, i: int) -> bool:
        return self.queues[i].discipline == EXHAUSTIVE

    def to_config(self) -> dict:
        return {
            "queues": [
                {
                    "lambda": q.arrival_rate,
                    "service": q.service.to_dict(),
                    "switchover": q.switchover_after.to_dict(),
                    "discipline": q.discipline,
                }
                for q in self.queues
            ],
            "routing": [list(row) for row in self.routing],
        }

    def config_hash(self) -> str:
        canon = json.dumps(self.to_config(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def validate(raw: dict) -> NetworkModel:
    """Build a NetworkModel from a parsed config dict, checking all invariants."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    try:
        queue_specs = raw["queues"]
        routing = raw["routing"]
    except KeyError as exc:
        raise ConfigError(f"config is missing {exc}") from None
    if not isinstance(queue_specs, list) or not queue_specs:
        raise ConfigError("'queues' must be a nonempty list")
    queues = []
    for idx, q in enumerate(queue_specs):
        try:
            queues.append(
                QueueSpec(
                    arrival_rate=float(q["lambda"]),
                    service=DistributionSpec.from_dict(q["service"]),
                    switchover_after=DistributionSpec.from_dict(q["switchover"]),
                    discipline=q.get("discipline", GATED),
                )
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"queue {idx} is malformed: {exc}") from None
    return NetworkModel(queues=tuple(queues), routing=tuple(tuple(r) for r in routing))


@dataclass(frozen=True)
class TrafficSolution:
    """Solved per-queue total arrival rates, loads and cycle length."""

    gamma: tuple
    rho_per_queue: tuple
    rho: float
    r: float
    r2: float
    mean_cycle: float
    stable: bool
    lam: tuple = field(default=())

    def internal_rate(self, i: int) -> float:
        return self.gamma[i] - self.lam[i]


def solve_traffic(model: NetworkModel) -> TrafficSolution:
    """Solve the traffic equations gamma = lambda + P^T gamma directly.

    Emits a StabilityWarning (and sets ``stable=False``) when the total
    load is >= 1; the mean cycle is then reported as infinity.
    """
    n = model.n
    lam = model.arrival_rates()
    mat = np.eye(n) - model.internal_routing().T
    if 1.0 / np.linalg.cond(mat) < 1e-12:
        raise SingularRouting("I - P^T is singular")
    gamma = np.linalg.solve(mat, lam)
    rho_i = tuple(float(g * q.service.mean) for g, q in zip(gamma, model.queues))
    rho = math.fsum(rho_i)
    r = math.fsum(q.switchover_after.mean for q in model.queues)
    var_sum = math.fsum(q.switchover_after.variance for q in model.queues)
    r2 = var_sum + r * r
    stable = rho < 1.0
    if not stable:
        warnings.warn(f"total load rho = {rho:.6g} >= 1", StabilityWarning)
    mean_cycle = r / (1.0 - rho) if stable else math.inf
    return TrafficSolution(
        gamma=tuple(float(g) for g in gamma),
        rho_per_queue=rho_i,
        rho=rho,
        r=r,
        r2=r2,
        mean_cycle=mean_cycle,
        stable=stable,
        lam=tuple(float(x) for x in lam),
    )
