"""Joint queue-length generating functions at period boundaries.

Argument vectors are sequences of length n + 1: one slot per queue plus
a trailing gate slot that is only meaningful during a visit to a gated
queue (it marks the customers already set aside for the next cycle).
The steady-state visit-begin value is the convergent infinite product of
switch-over factors along repeated backward cycles of the laws of motion.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import DeadQueue, IndeterminateScalar, NoConvergence
from .kernels import busy_period, step_back
from .model import NetworkModel
from .transforms import Jet, const_term, jet_div, lst, past_residual

PGF_TOL = 1e-13
PGF_MAX_CYCLES = 10**6


def sigma(model: NetworkModel, z) -> object:
    """Poisson exponent for arrivals anywhere: sum_j lambda_j (1 - z_j)."""
    acc = 0.0
    for j, q in enumerate(model.queues):
        if q.arrival_rate:
            acc = acc + q.arrival_rate * (1.0 - z[j])
    return acc


def sigma_i(model: NetworkModel, i: int, z) -> object:
    """Arrival exponent during a visit to queue i.

    Gated: own arrivals land behind the gate (gate slot); exhaustive:
    the own-queue term is absent, those arrivals are absorbed into the
    busy period."""
    exhaustive = model.is_exhaustive(i)
    acc = 0.0
    for j, q in enumerate(model.queues):
        if not q.arrival_rate:
            continue
        if j == i:
            if not exhaustive:
                acc = acc + q.arrival_rate * (1.0 - z[model.n])
        else:
            acc = acc + q.arrival_rate * (1.0 - z[j])
    return acc


def p_i(model: NetworkModel, i: int, z) -> object:
    """Routing factor for a customer leaving service at queue i.

    Written as 1 minus weighted (1 - z) terms so the all-ones vector maps
    to exactly 1.  Gated: rerouting to the own queue lands behind the gate."""
    exhaustive = model.is_exhaustive(i)
    acc = 1.0
    for j in range(model.n):
        p = model.route_prob(i, j)
        if not p:
            continue
        mark = z[j] if (exhaustive or j != i) else z[model.n]
        acc = acc - p * (1.0 - mark)
    return acc


def p_exh_i(model: NetworkModel, i: int, z) -> object:
    """Routing factor conditioned on finally leaving an exhaustive queue i."""
    p_self = model.route_prob(i, i)
    acc = 1.0
    for j in range(model.n):
        if j == i:
            continue
        p = model.route_prob(i, j)
        if p:
            acc = acc - (p / (1.0 - p_self)) * (1.0 - z[j])
    return acc


def _visit_completion_to_begin(model: NetworkModel, j: int, z: list) -> list:
    """Backward substitution across the visit to queue j."""
    z = list(z)
    if model.is_exhaustive(j):
        spec = model.queues[j]
        z_j = busy_period(
            spec.service, spec.arrival_rate, model.route_prob(j, j),
            p_exh_i(model, j, z), sigma_i(model, j, z),
        )
        z[j] = z_j
        z[model.n] = 1.0
    else:
        z[j] = lst(model.queues[j].service, sigma_i(model, j, z)) * p_i(model, j, z)
    return z


def _switch_begin_to_visit_completion(model: NetworkModel, j: int, z: list) -> list:
    """Backward gate removal: customers behind the gate at queue j become
    ordinary queue-j customers when its visit ends.  No-op for exhaustive."""
    if model.is_exhaustive(j):
        return list(z)
    z = list(z)
    z[model.n] = z[j]
    return z


def cycle_map(model: NetworkModel, i: int, z) -> tuple:
    """One full cycle of the laws of motion backward from a visit begin at
    queue i to the previous one.  Returns the transformed argument vector
    and the accumulated switch-over factor."""
    factor = 1.0
    z = list(z)
    for step in range(1, model.n + 1):
        j = step_back(i, step, model.n)
        factor = factor * lst(model.queues[j].switchover_after, sigma(model, z))
        z = _switch_begin_to_visit_completion(model, j, z)
        z = _visit_completion_to_begin(model, j, z)
    return z, factor


def _dist_to_fixed(x, target: float) -> float:
    if isinstance(x, Jet):
        d = abs(x.c[0] - target)
        for c in x.c[1:]:
            d = max(d, abs(c))
        return d
    return abs(x - target)


def lb_visit(model: NetworkModel, i: int, z, *, tol: float = PGF_TOL,
             max_cycles: int = PGF_MAX_CYCLES):
    """Steady-state joint queue-length PGF at the beginning of a visit to
    queue i, evaluated as the infinite product of per-cycle switch-over
    factors along the backward orbit of the cycle map.

    Stops once the argument has contracted to all-ones and the incremental
    factor to 1, both within ``tol``; the orbit contracts geometrically for
    stable models."""
    value = 1.0
    z = list(z)
    for _ in range(max_cycles):
        dist = max(_dist_to_fixed(zj, 1.0) for zj in z[: model.n])
        if dist < tol:
            return value
        z, factor = cycle_map(model, i, z)
        value = value * factor
        if _dist_to_fixed(factor, 1.0) < tol and max(
            _dist_to_fixed(zj, 1.0) for zj in z[: model.n]
        ) < tol:
            return value
    raise NoConvergence(f"visit-begin product did not converge in {max_cycles} cycles")


class Boundary(Enum):
    VISIT_BEGIN = "visit_begin"
    VISIT_END = "visit_end"
    SWITCH_BEGIN = "switch_begin"
    SWITCH_END = "switch_end"
    SERVICE_BEGIN = "service_begin"
    SERVICE_END = "service_end"


@dataclass
class BoundaryPGFValue:
    value: object
    boundary: Boundary
    queue: int


def boundary_pgf(model: NetworkModel, boundary: Boundary, i: int, z, *,
                 traffic=None, tol: float = PGF_TOL) -> BoundaryPGFValue:
    """Joint queue-length PGF at the named period boundary of queue i."""
    if boundary is Boundary.VISIT_BEGIN:
        val = lb_visit(model, i, z, tol=tol)
    elif boundary is Boundary.VISIT_END:
        val = lb_visit(model, i, _visit_completion_to_begin(model, i, list(z)), tol=tol)
    elif boundary is Boundary.SWITCH_BEGIN:
        w = _switch_begin_to_visit_completion(model, i, list(z))
        val = lb_visit(model, i, _visit_completion_to_begin(model, i, w), tol=tol)
    elif boundary is Boundary.SWITCH_END:
        w = _switch_begin_to_visit_completion(model, i, list(z))
        val = lb_visit(model, i, _visit_completion_to_begin(model, i, w), tol=tol)
        val = val * lst(model.queues[i].switchover_after, sigma(model, z))
    elif boundary is Boundary.SERVICE_BEGIN:
        val = lb_service(model, i, z, traffic=traffic, tol=tol)
    else:
        val = lc_service(model, i, z, traffic=traffic, tol=tol)
    return BoundaryPGFValue(value=val, boundary=boundary, queue=i)


def _service_factor(model: NetworkModel, i: int, z):
    """B_i(arrival exponent during its service) * routing factor.

    Exhaustive queues see every arrival join the plain queue, so the full
    exponent applies and the routing factor has no gate marking."""
    if model.is_exhaustive(i):
        return lst(model.queues[i].service, sigma(model, z)) * p_i(model, i, z)
    return lst(model.queues[i].service, sigma_i(model, i, z)) * p_i(model, i, z)


def lb_service(model: NetworkModel, i: int, z, *, traffic, tol: float = PGF_TOL):
    """Joint queue-length PGF at service beginnings in queue i.

    Derived from the visit-boundary values through the service/visit
    counting identity; the ratio is a removable singularity at the
    all-ones point and is taken through cancelling series division."""
    if traffic is None:
        raise ValueError("lb_service needs a solved TrafficSolution")
    weight = traffic.gamma[i] * traffic.mean_cycle
    if weight <= 0.0:
        raise DeadQueue(f"queue {i} serves no customers (gamma * E[C] = {weight})")
    vb = lb_visit(model, i, z, tol=tol)
    ve = lb_visit(model, i, _visit_completion_to_begin(model, i, list(z)), tol=tol)
    num = vb - ve
    den = 1.0 - _service_factor(model, i, z) / z[i]
    if isinstance(num, Jet) or isinstance(den, Jet):
        return jet_div(num, den) * (1.0 / weight)
    if abs(den) < 1e-12:
        raise IndeterminateScalar(
            "service-begin PGF is 0/0 at this scalar argument; evaluate on jets"
        )
    return num / den / weight


def lc_service(model: NetworkModel, i: int, z, *, traffic, tol: float = PGF_TOL):
    """Joint queue-length PGF right after service completions in queue i,
    before the served customer is rerouted."""
    sb = lb_service(model, i, z, traffic=traffic, tol=tol)
    if model.is_exhaustive(i):
        return sb * lst(model.queues[i].service, sigma(model, z)) / z[i]
    return sb * lst(model.queues[i].service, sigma_i(model, i, z)) / z[i]


def visit_epoch_pgf(model: NetworkModel, j: int, z, *, traffic, residual=None,
                    tol: float = PGF_TOL):
    """Joint queue lengths at a uniform random instant of a visit to queue j,
    optionally jointly with the residual part of the running service."""
    exponent = sigma(model, z) if model.is_exhaustive(j) else sigma_i(model, j, z)
    res = 0.0 if residual is None else residual
    sb = lb_service(model, j, z, traffic=traffic, tol=tol)
    return sb * past_residual(model.queues[j].service, exponent, res)


def switch_epoch_pgf(model: NetworkModel, j: int, z, *, residual=None,
                     tol: float = PGF_TOL):
    """Joint queue lengths at a uniform random instant of switch-over j,
    optionally jointly with the residual switch-over time."""
    exponent = sigma(model, z)
    res = 0.0 if residual is None else residual
    rb = boundary_pgf(model, Boundary.SWITCH_BEGIN, j, z, tol=tol).value
    return rb * past_residual(model.queues[j].switchover_after, exponent, res)


def arbitrary_epoch_pgf(model: NetworkModel, z, *, traffic, tol: float = PGF_TOL):
    """Joint queue-length PGF at an arbitrary instant: the time-weighted
    mixture of per-period values over visits and switch-overs."""
    ec = traffic.mean_cycle
    acc = 0.0
    for j, q in enumerate(model.queues):
        ev = traffic.rho_per_queue[j] * ec
        if ev > 0.0:
            acc = acc + (ev / ec) * visit_epoch_pgf(model, j, z, traffic=traffic, tol=tol)
        rj = q.switchover_after.mean
        if rj > 0.0:
            acc = acc + (rj / ec) * switch_epoch_pgf(model, j, z, tol=tol)
    return acc


def lb_visit_external_marked(model: NetworkModel, i: int, mark, *,
                             tol: float = PGF_TOL, max_cycles: int = PGF_MAX_CYCLES):
    """Visit-begin PGF with queue i's external customers marked ``mark``
    and everything else at one.

    Tracks the external/internal split for queue i only: external arrivals
    carry the mark, rerouted arrivals into i carry a separate coordinate,
    and the gate at i keeps the two apart until it is lifted.  The marked
    count equals the externals that arrived over one full cycle when queue
    i is gated, and over one intervisit period when it is exhaustive (its
    own-visit arrivals are cleared within the visit).  Scalar-only.
    """
    n = model.n
    lam = [q.arrival_rate for q in model.queues]
    zq = [1.0] * n  # zq[i] marks queue-i externals; other slots are unsplit
    zq[i] = float(mark)
    w = 1.0  # queue-i internals
    zg = 1.0  # gate slot (externals when the gate is at queue i)
    wg = 1.0  # gate slot for queue-i internals
    value = 1.0
    for _ in range(max_cycles):
        if max(abs(x - 1.0) for x in (*zq, w)) < tol:
            return value
        start = value
        for step in range(1, n + 1):
            j = step_back(i, step, n)
            s_all = 0.0
            for l in range(n):
                if lam[l]:
                    s_all += lam[l] * (1.0 - zq[l])
            value *= lst(model.queues[j].switchover_after, s_all)
            if model.is_exhaustive(j):
                s_j = s_all - (lam[j] * (1.0 - zq[j]) if lam[j] else 0.0)
                p_self = model.route_prob(j, j)
                acc = 1.0
                for l in range(n):
                    if l == j:
                        continue
                    p = model.route_prob(j, l)
                    if p:
                        markl = w if l == i else zq[l]
                        acc -= (p / (1.0 - p_self)) * (1.0 - markl)
                v = busy_period(model.queues[j].service, lam[j], p_self, acc, s_j)
                zq[j] = v
                if j == i:
                    w = v
                zg = wg = 1.0
            else:
                if j == i:
                    zg, wg = zq[i], w
                else:
                    zg = zq[j]
                s_j = 0.0
                for l in range(n):
                    if not lam[l]:
                        continue
                    s_j += lam[l] * (1.0 - (zg if l == j else zq[l]))
                acc = 1.0
                for l in range(n):
                    p = model.route_prob(j, l)
                    if not p:
                        continue
                    if l == j:
                        markl = wg if j == i else zg
                    else:
                        markl = w if l == i else zq[l]
                    acc -= p * (1.0 - markl)
                v = lst(model.queues[j].service, s_j) * acc
                zq[j] = v
                if j == i:
                    w = v
        if abs(value - start) < tol * abs(start) and max(
            abs(x - 1.0) for x in (*zq, w)
        ) < tol:
            return value
    raise NoConvergence(f"marked visit-begin product did not converge in {max_cycles} cycles")
