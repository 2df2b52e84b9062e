"""Descendant-completion kernels and the argument vectors built from them.

For a target queue the kernels give, per source queue k steps back in
the cycle, the transform of one customer's service (or one switch-over)
plus everything it drags in before the server next reaches the target:
arrivals during it at queues still to be visited, their offspring, and
the customer's own rerouted future services.  Exhaustive queues swap the
bare service for a busy period.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import NoConvergence, UnstableModel
from .model import DistributionSpec, NetworkModel
from .transforms import Jet, const_term, lst

BP_TOL = 1e-13
BP_MAX_ITER = 10**5


def step_back(i: int, k: int, n: int) -> int:
    """Queue index k steps before queue i in the cyclic order (0-based)."""
    return (i - k) % n


def _sup_diff(a, b) -> float:
    if isinstance(a, Jet) or isinstance(b, Jet):
        ac = a.c if isinstance(a, Jet) else [float(a)]
        bc = b.c if isinstance(b, Jet) else [float(b)]
        n = max(len(ac), len(bc))
        ac = ac + [0.0] * (n - len(ac))
        bc = bc + [0.0] * (n - len(bc))
        return max(abs(x - y) for x, y in zip(ac, bc))
    return abs(a - b)


def exhaustive_service_lst(dist: DistributionSpec, p_self: float, s):
    """Transform of the total service a customer absorbs at an exhaustive
    queue before finally being routed elsewhere: a geometric number of
    passes with return probability ``p_self``."""
    b = lst(dist, s)
    if p_self == 0.0:
        return b
    return (1.0 - p_self) * b / (1.0 - p_self * b)


def busy_period(dist: DistributionSpec, lam: float, p_self: float, z, omega,
                *, tol: float = BP_TOL, max_iter: int = BP_MAX_ITER):
    """Joint transform of a busy period at an exhaustive queue and the
    customers served during it, as the fixed point
    x = z * Bexh(omega + lam * (1 - x)).

    Iterates on full jets; convergence is geometric at the per-queue load
    rate.  When the inputs sit at the normalization point (z = 1, omega = 0)
    the iteration is seeded there so the constant term stays exactly 1.
    """
    rho_e = lam * dist.mean / (1.0 - p_self)
    if rho_e >= 1.0:
        raise NoConvergence(f"busy period diverges: per-queue load {rho_e:.6g} >= 1")
    at_unit = const_term(z) == 1.0 and const_term(omega) == 0.0
    x = 1.0 if at_unit else 0.0
    for _ in range(max_iter):
        arg = omega if lam == 0.0 else omega + lam * (1.0 - x)
        x_new = z * exhaustive_service_lst(dist, p_self, arg)
        if _sup_diff(x_new, x) < tol:
            return x_new
        x = x_new
    raise NoConvergence(f"busy period fixed point did not converge in {max_iter} iterations")


@dataclass
class KernelTable:
    """All kernels for one target queue at one transform argument.

    ``btilde[k]`` / ``ptilde[k]`` for k = 0..n, ``rtilde[k]`` for
    k = 0..n-1; index k refers to the queue k steps before the target.
    """

    target: int
    omega: object
    btilde: list
    ptilde: list
    rtilde: list


def kernel_table(model: NetworkModel, i: int, omega, *, traffic=None,
                 bp_tol: float = BP_TOL) -> KernelTable:
    """Compute the kernel recursion for target queue ``i`` in increasing k.

    Each step k only consumes entries j < k.  The discipline of the queue
    k steps back decides its own kernel form; the routing correction for
    an exhaustive queue reweights by the probability of actually leaving it.
    """
    if traffic is not None and traffic.rho >= 1.0:
        raise UnstableModel(f"kernel recursion needs rho < 1, got {traffic.rho:.6g}")
    n = model.n
    btilde, ptilde, rtilde = [], [], []
    lam_sum = 0.0  # sum_{j<k} lambda_{i-j} (1 - btilde[j]), grown incrementally
    for k in range(n + 1):
        q = step_back(i, k, n)
        spec = model.queues[q]
        arg = omega + lam_sum if isinstance(lam_sum, Jet) or lam_sum != 0.0 else omega
        if model.is_exhaustive(q):
            p_self = model.route_prob(q, q)
            pt = 1.0
            for j in range(k):
                p = model.route_prob(q, step_back(i, j, n))
                if p:
                    pt = pt - (p / (1.0 - p_self)) * (1.0 - btilde[j])
            bt = busy_period(spec.service, spec.arrival_rate, p_self, pt, arg, tol=bp_tol)
        else:
            pt = 1.0
            for j in range(k):
                p = model.route_prob(q, step_back(i, j, n))
                if p:
                    pt = pt - p * (1.0 - btilde[j])
            bt = lst(spec.service, arg) * pt
        ptilde.append(pt)
        btilde.append(bt)
        if k < n:
            rtilde.append(lst(spec.switchover_after, arg))
        if spec.arrival_rate:
            lam_sum = lam_sum + spec.arrival_rate * (1.0 - bt)
    return KernelTable(target=i, omega=omega, btilde=btilde, ptilde=ptilde, rtilde=rtilde)


def arg_ones(n: int) -> list:
    """All-ones argument vector: n queue slots plus the trailing gate slot."""
    return [1.0] * (n + 1)


@dataclass
class UVectors:
    """Elementary and composite argument vectors for one target queue.

    Built from the target's own kernel table and the table of the queue
    one step before it, which carries the per-source kernels appearing in
    the waiting-time and cycle-time formulas.
    """

    model: NetworkModel
    table: KernelTable
    prev: KernelTable

    def elementary(self, k: int) -> list:
        """Single-kernel vector: kernel k of the target's table at the queue
        k steps back, or (k = n) the bare k = 0 kernel in the gate slot."""
        n = self.model.n
        vec = arg_ones(n)
        if k == n:
            vec[n] = self.table.btilde[0]
        else:
            vec[step_back(self.table.target, k, n)] = self.table.btilde[k]
        return vec

    def plain_service(self):
        """Bare service transform of the target at the table's argument."""
        return lst(self.model.queues[self.table.target].service, self.table.omega)

    def exhaustive_zero(self) -> list:
        """Own-queue vector carrying the bare service instead of a busy
        period: what one queued customer costs an arrival that everything
        after it will queue behind."""
        n = self.model.n
        vec = arg_ones(n)
        vec[self.table.target] = self.plain_service()
        return vec

    def gate_mix(self, k: int, *, bare_own: bool = False) -> list:
        """Composite vector for an arrival k periods before the target's
        visit: own-queue services, per-source kernels from the predecessor
        table, and for k = n the gate slot carries the bare service of the
        customers already set aside for the next cycle.

        ``bare_own`` forces the bare service transform at the target's own
        slot; required when the target is served exhaustively, where the
        k = 0 kernel would wrongly charge a whole busy period per queued
        customer."""
        n = self.model.n
        i = self.table.target
        vec = arg_ones(n)
        if k == n:
            for j in range(n):
                pos = step_back(i, j + 1, n)
                vec[pos] = vec[pos] * self.prev.btilde[j]
            vec[n] = self.table.btilde[0]
            return vec
        vec[i] = self.plain_service() if bare_own else self.table.btilde[0]
        for j in range(k):
            pos = step_back(i, j + 1, n)
            vec[pos] = vec[pos] * self.prev.btilde[j]
        return vec


def u_vectors(table: KernelTable, model: NetworkModel, *, prev: KernelTable | None = None) -> UVectors:
    """Assemble the argument-vector helpers for ``table``'s target queue."""
    if prev is None:
        prev = kernel_table(model, step_back(table.target, 1, model.n), table.omega)
    return UVectors(model=model, table=table, prev=prev)
