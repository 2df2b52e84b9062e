"""Discrete-event simulation of the network; the independent oracle.

The server walks the queues in cyclic order.  A gated visit serves exactly
the customers found at the visit beginning; an exhaustive visit serves
until the queue drains, including arrivals and self-feedback landing
mid-visit.  Routing happens at each service completion and takes no time;
a rerouted customer joins the target queue's tail immediately and starts a
fresh waiting clock.  Arrivals are tagged external/internal and with the
server period they landed in, so conditional waits per arrival period can
be checked against the analytic formulas.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelMismatch, NegativeParameter
from .model import NetworkModel

# two-sided 97.5% Student t quantiles for small replication counts
_T975 = {1: 12.706, 2: 4.303, 3: 3.182, 4: 2.776, 5: 2.571, 6: 2.447, 7: 2.365,
         8: 2.306, 9: 2.262, 10: 2.228, 11: 2.201, 12: 2.179, 13: 2.160,
         14: 2.145, 15: 2.131, 20: 2.086, 25: 2.060, 30: 2.042}

EXTERNAL, INTERNAL = 0, 1
CLASSES = ("internal", "external", "arbitrary")


def _t975(df: int) -> float:
    if df <= 0:
        return math.inf
    if df in _T975:
        return _T975[df]
    return min((v for k, v in _T975.items() if k >= df), default=1.96)


@dataclass(frozen=True)
class SimConfig:
    seed: int = 12345
    warmup_cycles: int = 1000
    measured_cycles: int = 100_000
    replications: int = 10
    collect_conditionals: bool = True
    collect_boundary_lengths: bool = False

    def __post_init__(self):
        if self.measured_cycles < 100:
            raise NegativeParameter("measured_cycles must be >= 100")
        if self.replications < 1:
            raise NegativeParameter("replications must be >= 1")


class _Tally:
    """Running count / sum / sum of squares."""

    __slots__ = ("n", "s", "s2")

    def __init__(self):
        self.n = 0
        self.s = 0.0
        self.s2 = 0.0

    def add(self, x):
        self.n += 1
        self.s += x
        self.s2 += x * x

    def mean(self):
        return self.s / self.n if self.n else math.nan

    def sd(self):
        if self.n < 2:
            return math.nan
        v = self.s2 / self.n - (self.s / self.n) ** 2
        return math.sqrt(max(v, 0.0))


class _Stream:
    """Block-buffered draws from one generator; refills amortize RNG cost."""

    __slots__ = ("draw", "buf", "pos")

    def __init__(self, draw, block=8192):
        self.draw = lambda: draw(block).tolist()
        self.buf = self.draw()
        self.pos = 0

    def next(self):
        if self.pos >= len(self.buf):
            self.buf = self.draw()
            self.pos = 0
        x = self.buf[self.pos]
        self.pos += 1
        return x


def _sampler(rng, dist):
    """Vectorized sampler for one DistributionSpec; None for a point mass."""
    kind = dist.kind
    if kind == "det":
        d = dist.d
        return lambda size: np.full(size, d)
    if kind == "exp":
        scale = 1.0 / dist.rate
        return lambda size: rng.exponential(scale, size)
    if kind == "erlang":
        k, scale = dist.phases, 1.0 / dist.rate
        return lambda size: rng.gamma(k, scale, size)
    if kind == "gamma":
        a, scale = dist.shape, 1.0 / dist.rate
        return lambda size: rng.gamma(a, scale, size)
    cum = np.cumsum(dist.weights)
    rates = np.asarray(dist.rates)

    def draw(size):
        idx = np.searchsorted(cum, rng.random(size))
        return rng.exponential(1.0, size) / rates[idx]

    return draw


@dataclass
class _RepStats:
    """Everything one replication measured."""

    wait: list  # [queue][class] -> _Tally
    cycle: list  # [queue] -> _Tally
    cond: dict  # (queue, class, (period_kind, period_queue)) -> _Tally
    vb_len: dict = field(default_factory=dict)  # (visited, queue) -> _Tally
    sc_len: dict = field(default_factory=dict)  # (served, queue) -> _Tally
    time: float = 0.0
    exits: int = 0
    area: list = field(default_factory=list)  # time-integral of live customers
    area_first_half: float = 0.0
    time_first_half: float = 0.0
    end_backlog: int = 0


def _simulate_rep(model: NetworkModel, cfg: SimConfig, rep: int) -> _RepStats:
    n = model.n
    rng = np.random.default_rng(cfg.seed + rep)
    lam = [q.arrival_rate for q in model.queues]
    service = [_Stream(_sampler(rng, q.service)) for q in model.queues]
    switch = [_Stream(_sampler(rng, q.switchover_after)) for q in model.queues]
    route_u = [_Stream(lambda size, r=rng: r.random(size)) for _ in model.queues]
    arrival = [
        _Stream(lambda size, r=rng, s=1.0 / lam[j]: r.exponential(s, size))
        if lam[j] > 0 else None
        for j in range(n)
    ]
    cum_route = [np.cumsum(row).tolist() for row in model.routing]

    queues = [deque() for _ in range(n)]
    next_arrival = [arrival[j].next() if lam[j] > 0 else math.inf for j in range(n)]
    now = 0.0
    stats = _RepStats(
        wait=[[_Tally(), _Tally()] for _ in range(n)],
        cycle=[_Tally() for _ in range(n)],
        cond={},
    )
    # live[j] counts waiting plus in-service customers at queue j; the area
    # integral of it supports the in-sim law-of-large-numbers checks
    live = [0] * n
    area = [0.0] * n
    last_change = [0.0] * n
    recording = False
    t0 = 0.0
    last_visit_begin = [None] * n

    def bump(j, t, delta):
        if recording:
            area[j] += live[j] * (t - last_change[j])
            last_change[j] = t
        live[j] += delta

    def advance(until, per):
        """Insert all external arrivals up to ``until`` under period ``per``."""
        for j in range(n):
            t = next_arrival[j]
            if t > until:
                continue
            stream = arrival[j]
            while t <= until:
                bump(j, t, 1)
                queues[j].append((t, EXTERNAL, per))
                t += stream.next()
            next_arrival[j] = t

    def record_wait(q, cls, per, w):
        stats.wait[q][cls].add(w)
        if cfg.collect_conditionals:
            key = (q, cls, per)
            tally = stats.cond.get(key)
            if tally is None:
                tally = stats.cond[key] = _Tally()
            tally.add(w)

    def snapshot(table, visited):
        for j in range(n):
            key = (visited, j)
            tally = table.get(key)
            if tally is None:
                tally = table[key] = _Tally()
            tally.add(live[j])

    def serve_one(q, per):
        nonlocal now
        t_arr, cls, arr_per = queues[q].popleft()
        if recording:
            record_wait(q, cls, arr_per, now - t_arr)
        end = now + service[q].next()
        advance(end, per)
        now = end
        bump(q, now, -1)
        if recording and cfg.collect_boundary_lengths:
            snapshot(stats.sc_len, q)
        u = route_u[q].next()
        row = cum_route[q]
        if u < row[0]:
            if recording:
                stats.exits += 1
            return
        tgt = 0
        while tgt < n - 1 and row[tgt + 1] <= u:
            tgt += 1
        bump(tgt, now, 1)
        queues[tgt].append((now, INTERNAL, per))

    total_cycles = cfg.warmup_cycles + cfg.measured_cycles
    half_at = cfg.warmup_cycles + cfg.measured_cycles // 2
    for cycle_idx in range(total_cycles):
        if cycle_idx == cfg.warmup_cycles:
            recording = True
            t0 = now
            last_change = [now] * n
            last_visit_begin = [None] * n
        if cycle_idx == half_at:
            stats.area_first_half = sum(
                a + live[j] * (now - last_change[j]) for j, a in enumerate(area)
            )
            stats.time_first_half = now - t0
        for q in range(n):
            per = (0, q)
            advance(now, per)
            if recording:
                if last_visit_begin[q] is not None:
                    stats.cycle[q].add(now - last_visit_begin[q])
                last_visit_begin[q] = now
                if cfg.collect_boundary_lengths:
                    snapshot(stats.vb_len, q)
            if model.is_exhaustive(q):
                while queues[q]:
                    serve_one(q, per)
            else:
                for _ in range(len(queues[q])):
                    serve_one(q, per)
            r = switch[q].next()
            if r > 0.0:
                advance(now + r, (1, q))
                now += r

    for j in range(n):
        area[j] += live[j] * (now - last_change[j])
        last_change[j] = now
    stats.time = now - t0
    stats.area = area
    stats.end_backlog = sum(live)
    return stats


@dataclass
class SimEstimate:
    """Replication-level simulation results plus aggregation helpers."""

    model_hash: str
    config: SimConfig
    n: int
    wait_mean: list  # [rep][queue][class-index incl. arbitrary]
    wait_sd: list
    wait_count: list
    cycle_mean: list  # [rep][queue]
    cycle_sd: list
    cond_mean: dict  # (queue, class, period) -> list of per-rep means
    throughput: list
    mean_queue_len: list  # [rep][queue], time-averaged
    divergence: bool
    vb_len_mean: dict = field(default_factory=dict)  # (visited, queue) -> per-rep means
    sc_len_mean: dict = field(default_factory=dict)  # (served, queue) -> per-rep means

    @staticmethod
    def _agg(values):
        vals = [v for v in values if v is not None and not math.isnan(v)]
        if not vals:
            return math.nan, math.inf, 0
        m = sum(vals) / len(vals)
        if len(vals) == 1:
            return m, math.inf, 1
        var = sum((v - m) ** 2 for v in vals) / (len(vals) - 1)
        se = math.sqrt(var / len(vals))
        return m, se, len(vals)

    def wait(self, queue: int, cls: str, stat: str = "mean"):
        """Aggregated waiting-time statistic: (estimate, se, ci_half)."""
        c = CLASSES.index(cls)
        per_rep = self.wait_mean if stat == "mean" else self.wait_sd
        m, se, k = self._agg([rep[queue][c] for rep in per_rep])
        return m, se, _t975(k - 1) * se

    def cycle(self, queue: int, stat: str = "mean"):
        per_rep = self.cycle_mean if stat == "mean" else self.cycle_sd
        m, se, k = self._agg([rep[queue] for rep in per_rep])
        return m, se, _t975(k - 1) * se

    def conditional(self, queue: int, cls: str, period):
        """Mean wait of ``cls`` arrivals at ``queue`` landing in ``period`` =
        (kind, queue) with kind 0 for a visit and 1 for a switch-over."""
        key = (queue, CLASSES.index(cls), period)
        m, se, k = self._agg(self.cond_mean.get(key, []))
        return m, se, _t975(k - 1) * se

    def boundary_len(self, kind: str, at: int, queue: int):
        """Mean length of ``queue`` at visit beginnings of (kind='visit') or
        service completions in (kind='service') queue ``at``."""
        table = self.vb_len_mean if kind == "visit" else self.sc_len_mean
        m, se, k = self._agg(table.get((at, queue), []))
        return m, se, _t975(k - 1) * se

    def count(self, queue: int, cls: str) -> int:
        c = CLASSES.index(cls)
        return sum(rep[queue][c] for rep in self.wait_count)


def _merge_classes(tallies):
    merged = _Tally()
    for t in tallies:
        merged.n += t.n
        merged.s += t.s
        merged.s2 += t.s2
    return merged


def simulate(model: NetworkModel, config: SimConfig | None = None) -> SimEstimate:
    """Run ``config.replications`` independent replications and collect
    per-replication means; the spread across replications drives every
    confidence interval downstream."""
    cfg = config or SimConfig()
    n = model.n
    wait_mean, wait_sd, wait_count = [], [], []
    cycle_mean, cycle_sd = [], []
    cond_mean: dict = {}
    vb_len_mean: dict = {}
    sc_len_mean: dict = {}
    throughput, qlen = [], []
    divergence = False
    for rep in range(cfg.replications):
        st = _simulate_rep(model, cfg, rep)
        wm, ws, wc = [], [], []
        for q in range(n):
            internal, external = st.wait[q][INTERNAL], st.wait[q][EXTERNAL]
            arbitrary = _merge_classes([internal, external])
            wm.append([internal.mean(), external.mean(), arbitrary.mean()])
            ws.append([internal.sd(), external.sd(), arbitrary.sd()])
            wc.append([internal.n, external.n, arbitrary.n])
        wait_mean.append(wm)
        wait_sd.append(ws)
        wait_count.append(wc)
        cycle_mean.append([st.cycle[q].mean() for q in range(n)])
        cycle_sd.append([st.cycle[q].sd() for q in range(n)])
        for (q, cls, per), tally in st.cond.items():
            cond_mean.setdefault((q, cls, per), []).append(tally.mean())
        for key, tally in st.vb_len.items():
            vb_len_mean.setdefault(key, []).append(tally.mean())
        for key, tally in st.sc_len.items():
            sc_len_mean.setdefault(key, []).append(tally.mean())
        throughput.append(st.exits / st.time if st.time > 0 else math.nan)
        qlen.append([a / st.time if st.time > 0 else math.nan for a in st.area])
        if st.time_first_half > 0.0 and st.time > st.time_first_half:
            avg1 = st.area_first_half / st.time_first_half
            avg2 = (sum(st.area) - st.area_first_half) / (st.time - st.time_first_half)
            if avg2 > 1.5 * avg1 + 5.0:
                divergence = True
    return SimEstimate(
        model_hash=model.config_hash(),
        config=cfg,
        n=n,
        wait_mean=wait_mean,
        wait_sd=wait_sd,
        wait_count=wait_count,
        cycle_mean=cycle_mean,
        cycle_sd=cycle_sd,
        cond_mean=cond_mean,
        throughput=throughput,
        mean_queue_len=qlen,
        divergence=divergence,
        vb_len_mean=vb_len_mean,
        sc_len_mean=sc_len_mean,
    )


@dataclass
class CompareRow:
    queue: int
    cls: str
    metric: str
    analytic: float
    simulated: float
    se: float
    ci_half: float
    z: float


@dataclass
class Comparison:
    rows: list
    passed: bool
    max_abs_z: float

    def row(self, queue, cls, metric):
        for r in self.rows:
            if (r.queue, r.cls, r.metric) == (queue, cls, metric):
                return r
        raise KeyError((queue, cls, metric))


def compare(report, estimate: SimEstimate, *, z_limit: float = 3.0,
            perturb_means: float = 0.0) -> Comparison:
    """Line up analytic moments against simulated ones with z-scores from
    the replication spread.  ``perturb_means`` shifts every analytic mean
    by a constant; useful as a negative control."""
    if report.model_hash != estimate.model_hash:
        raise ModelMismatch("report and simulation come from different models")
    rows = []

    def push(queue, cls, metric, analytic, sim_tuple):
        sim, se, ci = sim_tuple
        if math.isnan(sim):
            return
        z = (sim - analytic) / se if se > 0 else math.inf * abs(sim - analytic)
        if se == 0.0 and sim == analytic:
            z = 0.0
        rows.append(CompareRow(queue, cls, metric, analytic, sim, se, ci, z))

    for qr in report.queues:
        q = qr.queue
        pairs = (("internal", qr.internal), ("external", qr.external),
                 ("arbitrary", qr.arbitrary))
        for cls, moments in pairs:
            if moments is None:
                continue
            push(q, cls, "mean", moments.mean + perturb_means, estimate.wait(q, cls, "mean"))
            push(q, cls, "sd", moments.sd, estimate.wait(q, cls, "sd"))
        push(q, "cycle", "mean", qr.cycle.mean + perturb_means, estimate.cycle(q, "mean"))
        push(q, "cycle", "sd", qr.cycle.sd, estimate.cycle(q, "sd"))
    max_z = max((abs(r.z) for r in rows), default=0.0)
    return Comparison(rows=rows, passed=max_z <= z_limit, max_abs_z=max_z)
