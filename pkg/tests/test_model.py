import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import det, expd, katayama_model, random_model, takacs_model
from roving.errors import (
    ConfigError,
    NegativeParameter,
    RowSumError,
    SingularRouting,
    StabilityWarning,
)
from roving.model import (
    DistributionSpec,
    NetworkModel,
    QueueSpec,
    solve_traffic,
    validate,
)


def one_queue(lam=0.3, exit_prob=1.0, self_prob=0.0):
    return NetworkModel(
        queues=(QueueSpec(lam, expd(1.0), det(1.0)),),
        routing=((exit_prob, self_prob),),
    )


class TestValidation:
    def test_single_queue_identity_case(self):
        model = one_queue()
        assert model.n == 1
        assert model.exit_prob(0) == 1.0

    def test_closed_two_queue_loop_is_singular(self):
        queues = (QueueSpec(0.1, expd(1.0), det(1.0)),
                  QueueSpec(0.0, expd(1.0), det(1.0)))
        with pytest.raises(SingularRouting):
            NetworkModel(queues=queues, routing=((0.0, 0.0, 1.0), (0.0, 1.0, 0.0)))

    def test_feedback_example_routing_is_valid(self):
        model = takacs_model()
        assert model.route_prob(0, 1) == 1.0
        assert model.route_prob(1, 0) == pytest.approx(1.0 / 3.0)
        assert model.exit_prob(1) == pytest.approx(2.0 / 3.0)

    def test_row_sum_error(self):
        queues = (QueueSpec(0.1, expd(1.0), det(1.0)),)
        with pytest.raises(RowSumError):
            NetworkModel(queues=queues, routing=((0.5, 0.4),))

    def test_entries_outside_unit_interval(self):
        queues = (QueueSpec(0.1, expd(1.0), det(1.0)),)
        with pytest.raises(NegativeParameter):
            NetworkModel(queues=queues, routing=((1.5, -0.5),))

    def test_negative_arrival_rate(self):
        with pytest.raises(NegativeParameter):
            QueueSpec(-0.1, expd(1.0), det(1.0))

    def test_bad_discipline(self):
        with pytest.raises(ConfigError):
            QueueSpec(0.1, expd(1.0), det(1.0), discipline="fifo")

    def test_validate_from_config_dict(self):
        cfg = takacs_model().to_config()
        model = validate(cfg)
        assert model.config_hash() == takacs_model().config_hash()

    def test_validate_rejects_missing_keys(self):
        with pytest.raises(ConfigError):
            validate({"queues": []})


class TestDistributions:
    def test_moment_closed_forms(self):
        assert det(2.0).moment(3) == 8.0
        assert expd(2.0).moment(2) == pytest.approx(2.0 / 4.0)
        assert DistributionSpec.erlang(3, 2.0).mean == pytest.approx(1.5)
        assert DistributionSpec.erlang(3, 2.0).variance == pytest.approx(0.75)
        h = DistributionSpec.hyperexponential((0.5, 0.5), (1.0, 2.0))
        assert h.mean == pytest.approx(0.75)
        g = DistributionSpec.gamma_shape_rate(2.5, 2.0)
        assert g.mean == pytest.approx(1.25)
        assert g.moment(2) == pytest.approx(2.5 * 3.5 / 4.0)

    def test_hyperexp_weight_validation(self):
        with pytest.raises(NegativeParameter):
            DistributionSpec.hyperexponential((0.5, 0.4), (1.0, 2.0))

    def test_erlang_phase_validation(self):
        with pytest.raises(NegativeParameter):
            DistributionSpec.erlang(0, 1.0)

    def test_dict_round_trip(self):
        for d in (det(1.5), expd(2.0), DistributionSpec.erlang(2, 3.0),
                  DistributionSpec.hyperexponential((0.3, 0.7), (1.0, 4.0)),
                  DistributionSpec.gamma_shape_rate(0.7, 1.1)):
            assert DistributionSpec.from_dict(d.to_dict()) == d


class TestTraffic:
    def test_no_routing_gives_external_rates(self):
        model = one_queue(lam=0.4)
        tr = solve_traffic(model)
        assert tr.gamma == (0.4,)

    def test_feedback_example_rates(self):
        # hand solve: g1 = lam + g2/3, g2 = g1  =>  g1 = g2 = 3 lam / 2
        lam = 1.0 / 6.0
        tr = solve_traffic(takacs_model(lam=lam))
        assert tr.gamma[0] == pytest.approx(1.5 * lam, rel=1e-12)
        assert tr.gamma[1] == pytest.approx(1.5 * lam, rel=1e-12)

    def test_feedback_example_load(self):
        # rho = gamma_2 * b_2 = (3 lam / 2) / mu = 1/4 at lam/mu = 1/6
        tr = solve_traffic(takacs_model())
        assert tr.rho == pytest.approx(0.25, rel=1e-12)
        assert tr.mean_cycle == pytest.approx(1.0 / 0.75, rel=1e-12)

    def test_example_fixture_cycle_scaling(self):
        tr = solve_traffic(katayama_model(rho=0.5))
        assert tr.rho == pytest.approx(0.5, rel=1e-12)
        assert tr.mean_cycle == pytest.approx(4.0 / 0.5, rel=1e-12)

    def test_unstable_model_warns(self):
        model = one_queue(lam=1.5)
        with pytest.warns(StabilityWarning):
            tr = solve_traffic(model)
        assert not tr.stable
        assert math.isinf(tr.mean_cycle)

    def test_total_rates_dominate_external(self, rng):
        for _ in range(25):
            model = random_model(rng)
            tr = solve_traffic(model)
            for g, q in zip(tr.gamma, model.queues):
                assert g >= q.arrival_rate - 1e-12

    def test_throughput_conservation(self, rng):
        for _ in range(25):
            model = random_model(rng)
            tr = solve_traffic(model)
            out = sum(g * model.exit_prob(i) for i, g in enumerate(tr.gamma))
            lam_in = sum(q.arrival_rate for q in model.queues)
            assert out == pytest.approx(lam_in, abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), perm_seed=st.integers(0, 10_000))
def test_relabelling_queues_preserves_loads(seed, perm_seed):
    gen = np.random.default_rng(seed)
    model = random_model(gen, max_queues=4)
    n = model.n
    perm = np.random.default_rng(perm_seed).permutation(n)
    queues = tuple(model.queues[perm[k]] for k in range(n))
    rows = []
    for k in range(n):
        src = perm[k]
        row = [model.exit_prob(src)]
        row.extend(model.route_prob(src, perm[j]) for j in range(n))
        rows.append(tuple(row))
    permuted = NetworkModel(queues=queues, routing=tuple(rows))
    tr, trp = solve_traffic(model), solve_traffic(permuted)
    assert trp.rho == pytest.approx(tr.rho, rel=1e-10)
    for k in range(n):
        assert trp.gamma[k] == pytest.approx(tr.gamma[perm[k]], rel=1e-10)
