"""Cycle-time and waiting-time transforms, moment extraction, reporting.

Waiting times are assembled per arriving class.  A rerouted (internal)
customer lands exactly at some service completion; an external customer
lands at a uniform random instant of some visit or switch-over period.
Each conditional transform multiplies a boundary generating function,
evaluated at kernel-built argument vectors, by the extended switch-over
transforms the customer must still sit through.  Evaluating on jets in
the transform variable and differentiating at zero yields the moments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import (
    DeadQueue,
    DegenerateModel,
    ImpossibleCondition,
    NoExternalArrivals,
    NoInternalArrivals,
    UnstableModel,
    ZeroSwitchover,
)
from .kernels import KernelTable, UVectors, kernel_table, step_back
from .model import NetworkModel, TrafficSolution, solve_traffic
from .pgf import (
    PGF_TOL,
    Boundary,
    boundary_pgf,
    lb_service,
    lb_visit,
    lb_visit_external_marked,
    lc_service,
)
from .transforms import Jet, Moments, lst, moments_from_jet, past_residual

INTERNAL_RATE_TOL = 1e-12


class _Eval:
    """Shared workspace for one (model, traffic, transform argument).

    Caches kernel tables per target queue so that a full report touches
    each table exactly once; everything here is read-only after creation.
    """

    def __init__(self, model: NetworkModel, omega, traffic: TrafficSolution,
                 *, tol: float = PGF_TOL):
        if traffic.rho >= 1.0:
            raise UnstableModel(f"analysis needs rho < 1, got rho = {traffic.rho:.6g}")
        if traffic.r <= 0.0:
            raise DegenerateModel("analysis needs a positive total switch-over time")
        self.model = model
        self.omega = omega
        self.traffic = traffic
        self.tol = tol
        self._tables: dict[int, KernelTable] = {}
        self._chains: dict[int, list] = {}
        self._plain: dict[int, object] = {}

    def table(self, t: int) -> KernelTable:
        if t not in self._tables:
            self._tables[t] = kernel_table(self.model, t, self.omega, traffic=self.traffic)
        return self._tables[t]

    def uvec(self, i: int) -> UVectors:
        prev = self.table(step_back(i, 1, self.model.n))
        return UVectors(model=self.model, table=self.table(i), prev=prev)

    def plain(self, i: int):
        if i not in self._plain:
            self._plain[i] = lst(self.model.queues[i].service, self.omega)
        return self._plain[i]

    def switch_product(self, i: int, upto: int):
        """Product of the first ``upto`` extended switch-over transforms on
        the path from the arrival period to the visit at queue i."""
        prev = self.table(step_back(i, 1, self.model.n))
        acc = 1.0
        for j in range(upto):
            acc = acc * prev.rtilde[j]
        return acc

    def lam_chain(self, i: int) -> list:
        """Partial sums over queues between the arrival period and queue i
        of the arrival exponents marked with extended services."""
        if i not in self._chains:
            n = self.model.n
            prev = self.table(step_back(i, 1, n))
            chain = [0.0]
            for m in range(1, n):
                lam = self.model.queues[step_back(i, m, n)].arrival_rate
                term = lam * (1.0 - prev.btilde[m - 1]) if lam else 0.0
                chain.append(chain[m - 1] + term)
            self._chains[i] = chain
        return self._chains[i]

    # -- cycle time ---------------------------------------------------------

    def cycle_time(self, i: int):
        n = self.model.n
        prev = self.table(step_back(i, 1, n))
        vec = [1.0] * (n + 1)
        for k in range(n):
            vec[step_back(i, k + 1, n)] = prev.btilde[k]
        return lb_visit(self.model, i, vec, tol=self.tol) * self.switch_product(i, n)

    def intervisit_time(self, i: int):
        """Transform of the time from the end of a visit to exhaustive queue
        i until the next visit to it begins: everything left in the other
        queues extended to the target visit, plus all extended switch-overs.
        Only meaningful for exhaustive queues, which end their visits empty."""
        if not self.model.is_exhaustive(i):
            raise ImpossibleCondition(
                f"queue {i} is gated: its visits do not end with an empty queue"
            )
        n = self.model.n
        prev = self.table(step_back(i, 1, n))
        vec = [1.0] * (n + 1)
        for k in range(n - 1):
            vec[step_back(i, k + 1, n)] = prev.btilde[k]
        rb = boundary_pgf(self.model, Boundary.SWITCH_BEGIN, i, vec, tol=self.tol).value
        return rb * self.switch_product(i, n)

    # -- internal customers -------------------------------------------------

    def wait_internal_cond(self, i: int, k: int):
        n = self.model.n
        source = step_back(i, k, n)
        if self.traffic.gamma[source] * self.model.route_prob(source, i) <= 0.0:
            raise ImpossibleCondition(
                f"no customers are rerouted from queue {source} to queue {i}"
            )
        exhaustive = self.model.is_exhaustive(i)
        if exhaustive:
            if not 0 <= k <= n - 1:
                raise ImpossibleCondition(f"k must be in 0..{n - 1} for an exhaustive target")
        elif not 1 <= k <= n:
            raise ImpossibleCondition(f"k must be in 1..{n} for a gated target")
        vec = self.uvec(i).gate_mix(k, bare_own=exhaustive)
        val = lc_service(self.model, source, vec, traffic=self.traffic, tol=self.tol)
        return val * self.switch_product(i, k)

    def wait_internal(self, i: int):
        lam_i = self.model.queues[i].arrival_rate
        internal = self.traffic.gamma[i] - lam_i
        if internal <= INTERNAL_RATE_TOL * (1.0 + self.traffic.gamma[i]):
            raise NoInternalArrivals(f"queue {i} receives no rerouted customers")
        n = self.model.n
        ks = range(0, n) if self.model.is_exhaustive(i) else range(1, n + 1)
        acc = 0.0
        for k in ks:
            source = step_back(i, k, n)
            w = self.traffic.gamma[source] * self.model.route_prob(source, i) / internal
            if w > 0.0:
                acc = acc + w * self.wait_internal_cond(i, k)
        return acc

    # -- external customers -------------------------------------------------

    def wait_switch(self, i: int, k: int):
        n = self.model.n
        source = step_back(i, k, n)
        spec = self.model.queues[source].switchover_after
        if spec.mean <= 0.0:
            raise ZeroSwitchover(f"switch-over after queue {source} has zero length")
        lam_i = self.model.queues[i].arrival_rate
        chain = self.lam_chain(i)[k - 1]
        own = lam_i * (1.0 - self.plain(i)) if lam_i else 0.0
        arg_p = chain + own
        arg_r = self.omega + chain
        vec = self.uvec(i).gate_mix(k - 1, bare_own=self.model.is_exhaustive(i))
        rb = boundary_pgf(self.model, Boundary.SWITCH_BEGIN, source, vec, tol=self.tol).value
        return past_residual(spec, arg_p, arg_r) * rb * self.switch_product(i, k - 1)

    def wait_visit(self, i: int, k: int):
        n = self.model.n
        source = step_back(i, k, n)
        if self.traffic.gamma[source] * self.model.queues[source].service.mean <= 0.0:
            raise ImpossibleCondition(f"queue {source} has no service periods")
        lam_i = self.model.queues[i].arrival_rate
        service = self.model.queues[source].service
        if k == 0:
            # Arrival at its own exhaustively served queue mid-visit: waits for
            # the queued customers' bare services plus the residual service.
            own = lam_i * (1.0 - self.plain(i)) if lam_i else 0.0
            sb = lb_service(self.model, i, self.uvec(i).exhaustive_zero(),
                            traffic=self.traffic, tol=self.tol)
            return past_residual(service, own, self.omega) * sb / self.plain(i)
        prev = self.table(step_back(i, 1, n))
        chain = self.lam_chain(i)[k - 1]
        own = lam_i * (1.0 - self.plain(i)) if lam_i else 0.0
        arg_p = chain + own
        arg_r = self.omega + chain
        vec = self.uvec(i).gate_mix(k, bare_own=self.model.is_exhaustive(i))
        sb = lb_service(self.model, source, vec, traffic=self.traffic, tol=self.tol)
        base = sb * self.switch_product(i, k)
        if self.model.is_exhaustive(source):
            # Arrivals at the source during both parts of the running service
            # are cleared within the same visit, and the served customer may
            # legally return to the source itself.
            lam_s = self.model.queues[source].arrival_rate
            extra = lam_s * (1.0 - prev.btilde[k - 1]) if lam_s else 0.0
            route = 1.0
            for j in range(k):
                p = self.model.route_prob(source, step_back(i, j + 1, n))
                if p:
                    route = route - p * (1.0 - prev.btilde[j])
            pr = past_residual(service, arg_p + extra, arg_r + extra)
        else:
            route = prev.ptilde[k - 1]
            pr = past_residual(service, arg_p, arg_r)
        return pr * base * route / prev.btilde[k - 1]

    def wait_external(self, i: int):
        if self.model.queues[i].arrival_rate <= 0.0:
            raise NoExternalArrivals(f"queue {i} has no external arrivals")
        n = self.model.n
        ec = self.traffic.mean_cycle
        acc = 0.0
        visit_ks = range(0, n) if self.model.is_exhaustive(i) else range(1, n + 1)
        for k in visit_ks:
            source = step_back(i, k, n)
            w = self.traffic.rho_per_queue[source]  # E[V_source] / E[C]
            if w > 0.0:
                acc = acc + w * self.wait_visit(i, k)
        for k in range(1, n + 1):
            source = step_back(i, k, n)
            w = self.model.queues[source].switchover_after.mean / ec
            if w > 0.0:
                acc = acc + w * self.wait_switch(i, k)
        return acc

    def wait_arbitrary(self, i: int):
        gamma = self.traffic.gamma[i]
        if gamma <= 0.0:
            raise DeadQueue(f"queue {i} never receives customers")
        lam = self.model.queues[i].arrival_rate
        internal = gamma - lam
        if internal <= INTERNAL_RATE_TOL * (1.0 + gamma):
            return self.wait_external(i)
        if lam <= 0.0:
            return self.wait_internal(i)
        return (internal / gamma) * self.wait_internal(i) + (lam / gamma) * self.wait_external(i)


def _eval(model, omega, traffic, tol=PGF_TOL) -> _Eval:
    return _Eval(model, omega, traffic if traffic is not None else solve_traffic(model), tol=tol)


def cycle_time(model: NetworkModel, i: int, omega, *, traffic=None):
    """Transform of the cycle time starting at a visit to queue i."""
    return _eval(model, omega, traffic).cycle_time(i)


def intervisit_time(model: NetworkModel, i: int, omega, *, traffic=None):
    """Transform of the intervisit time of exhaustive queue i (visit end to
    next visit beginning)."""
    return _eval(model, omega, traffic).intervisit_time(i)


def _marked_window(model: NetworkModel, i: int, omega: float, traffic) -> float:
    lam = model.queues[i].arrival_rate
    if lam <= 0.0:
        raise NoExternalArrivals(f"queue {i} has no external arrivals")
    if isinstance(omega, Jet):
        raise TypeError("the external-marking route is scalar-only")
    if not 0.0 <= omega <= lam:
        raise ValueError(f"omega must lie in [0, lambda_{i}] = [0, {lam}]")
    if traffic.rho >= 1.0:
        raise UnstableModel(f"analysis needs rho < 1, got rho = {traffic.rho:.6g}")
    return lb_visit_external_marked(model, i, 1.0 - omega / lam)


def cycle_time_little(model: NetworkModel, i: int, omega: float, *, traffic=None):
    """Cycle-time transform through the distributional law of the number of
    externally arrived customers found at a visit beginning; a scalar-only
    cross-check of the direct formula.

    Only valid for gated queues: at an exhaustive queue the cycle length
    depends on the own-visit arrivals the count would include, so the
    distributional law's prerequisites fail there (the marked count then
    spans an intervisit period instead, see ``intervisit_time_little``)."""
    traffic = traffic if traffic is not None else solve_traffic(model)
    if model.is_exhaustive(i):
        raise ImpossibleCondition(
            f"queue {i} is exhaustive: externals found at a visit beginning "
            "count one intervisit period, not one cycle"
        )
    return _marked_window(model, i, omega, traffic)


def intervisit_time_little(model: NetworkModel, i: int, omega: float, *, traffic=None):
    """Intervisit-time transform of exhaustive queue i through the same
    external-customer marking; scalar-only cross-check of the direct
    formula."""
    traffic = traffic if traffic is not None else solve_traffic(model)
    if not model.is_exhaustive(i):
        raise ImpossibleCondition(
            f"queue {i} is gated: externals found at a visit beginning "
            "count one full cycle, not one intervisit period"
        )
    return _marked_window(model, i, omega, traffic)


def wait_internal_cond(model: NetworkModel, i: int, k: int, omega, *, traffic=None):
    """Waiting time of a customer rerouted to queue i right after a service
    completion at the queue k steps back."""
    return _eval(model, omega, traffic).wait_internal_cond(i, k)


def wait_internal(model: NetworkModel, i: int, omega, *, traffic=None):
    """Waiting time of an arbitrary rerouted customer landing in queue i."""
    return _eval(model, omega, traffic).wait_internal(i)


def wait_switch(model: NetworkModel, i: int, k: int, omega, *, traffic=None):
    """Waiting time of an external arrival at queue i during the switch-over
    k periods before the visit to i."""
    return _eval(model, omega, traffic).wait_switch(i, k)


def wait_visit(model: NetworkModel, i: int, k: int, omega, *, traffic=None):
    """Waiting time of an external arrival at queue i during the visit to the
    queue k steps back (k = 0: its own exhaustive visit)."""
    return _eval(model, omega, traffic).wait_visit(i, k)


def wait_external(model: NetworkModel, i: int, omega, *, traffic=None):
    """Waiting time of an arbitrary external (Poisson) arrival at queue i."""
    return _eval(model, omega, traffic).wait_external(i)


def wait_arbitrary(model: NetworkModel, i: int, omega, *, traffic=None):
    """Waiting time of an arbitrary customer at queue i: the class mixture of
    rerouted and external arrivals."""
    return _eval(model, omega, traffic).wait_arbitrary(i)


@dataclass
class QueueWaitReport:
    queue: int
    internal_weight: float
    external_weight: float
    internal: Moments | None
    external: Moments | None
    arbitrary: Moments | None
    cycle: Moments
    little_delta: float | None = None
    lst_samples: list = field(default_factory=list)
    dead: bool = False


@dataclass
class WaitReport:
    model_hash: str
    rho: float
    mean_cycle: float
    gamma: tuple
    queues: list
    jet_order: int
    omega_grid: tuple = ()


LITTLE_FRACTIONS = (0.15, 0.35, 0.55, 0.75, 0.95)


def little_gap(model: NetworkModel, i: int, *, traffic=None, points=LITTLE_FRACTIONS) -> float:
    """Max pointwise gap between the direct transform of the visit-to-visit
    window and its external-marking route, probed at fractions of the
    external arrival rate.  The window is one cycle for a gated queue and
    one intervisit period for an exhaustive one."""
    traffic = traffic if traffic is not None else solve_traffic(model)
    lam = model.queues[i].arrival_rate
    exhaustive = model.is_exhaustive(i)
    gap = 0.0
    for frac in points:
        w = frac * lam
        if exhaustive:
            direct = intervisit_time(model, i, w, traffic=traffic)
            marked = intervisit_time_little(model, i, w, traffic=traffic)
        else:
            direct = cycle_time(model, i, w, traffic=traffic)
            marked = cycle_time_little(model, i, w, traffic=traffic)
        gap = max(gap, abs(direct - marked))
    return gap


def report(model: NetworkModel, *, traffic=None, jet_order: int = 4,
           omega_grid=(), little_check: bool = True, moments_upto: int = 3,
           tol: float = PGF_TOL) -> WaitReport:
    """Full per-queue moment report plus optional transform samples.

    One jet evaluation per queue covers all classes; scalar evaluations on
    ``omega_grid`` sample the arbitrary-customer transform pointwise.  The
    distributional-Little cross-check runs wherever the queue has external
    arrivals.
    """
    traffic = traffic if traffic is not None else solve_traffic(model)
    ev = _Eval(model, Jet.variable(jet_order), traffic, tol=tol)
    upto = min(moments_upto, jet_order)
    rows = []
    for i in range(model.n):
        gamma = traffic.gamma[i]
        lam = model.queues[i].arrival_rate
        cyc = moments_from_jet(ev.cycle_time(i), upto=upto)
        if gamma <= 0.0:
            rows.append(QueueWaitReport(
                queue=i, internal_weight=0.0, external_weight=0.0,
                internal=None, external=None, arbitrary=None, cycle=cyc, dead=True,
            ))
            continue
        internal_rate = gamma - lam
        if internal_rate <= INTERNAL_RATE_TOL * (1.0 + gamma):
            internal_rate = 0.0
        w_int = internal_rate / gamma
        w_ext = lam / gamma
        internal = moments_from_jet(ev.wait_internal(i), upto=upto) if w_int > 0.0 else None
        external = moments_from_jet(ev.wait_external(i), upto=upto) if lam > 0.0 else None
        arbitrary = moments_from_jet(ev.wait_arbitrary(i), upto=upto)
        delta = None
        if little_check and lam > 0.0:
            delta = little_gap(model, i, traffic=traffic)
        rows.append(QueueWaitReport(
            queue=i, internal_weight=w_int, external_weight=w_ext,
            internal=internal, external=external, arbitrary=arbitrary,
            cycle=cyc, little_delta=delta,
        ))
    for w in omega_grid:
        grid_ev = _Eval(model, float(w), traffic, tol=tol)
        for row in rows:
            if not row.dead:
                row.lst_samples.append((float(w), grid_ev.wait_arbitrary(row.queue)))
    return WaitReport(
        model_hash=model.config_hash(),
        rho=traffic.rho,
        mean_cycle=traffic.mean_cycle,
        gamma=traffic.gamma,
        queues=rows,
        jet_order=jet_order,
        omega_grid=tuple(float(w) for w in omega_grid),
    )
