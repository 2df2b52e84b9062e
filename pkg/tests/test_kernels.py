import pytest

from conftest import det, expd, katayama_model, random_model, takacs_model
from roving.errors import NoConvergence
from roving.kernels import (
    busy_period,
    exhaustive_service_lst,
    kernel_table,
    step_back,
    u_vectors,
)
from roving.model import EXHAUSTIVE, GATED, NetworkModel, QueueSpec, solve_traffic
from roving.transforms import Jet, lst, moments_from_jet


def all_ones(vec):
    flat = []
    for entry in vec:
        flat.extend(entry.c if isinstance(entry, Jet) else [entry])
    head = flat[0]
    return head == pytest.approx(1.0, abs=1e-12)


class TestBusyPeriod:
    def test_no_arrivals_degenerates_to_single_pass(self):
        dist = expd(1.0)
        for w in (0.0, 0.5, 2.0):
            val = busy_period(dist, 0.0, 0.0, 0.9, w)
            assert val == pytest.approx(0.9 * lst(dist, w), rel=1e-12)

    def test_no_self_feedback_uses_bare_service(self):
        dist = expd(2.0)
        assert exhaustive_service_lst(dist, 0.0, 1.3) == lst(dist, 1.3)

    def test_self_feedback_geometric_mean(self):
        # total service over a geometric number of passes: mean b / (1 - p)
        dist = expd(1.0)
        j = exhaustive_service_lst(dist, 0.25, Jet.variable(2))
        assert moments_from_jet(j).mean == pytest.approx(1.0 / 0.75, rel=1e-10)

    def test_mg1_busy_period_mean(self):
        # classic single-queue busy period: E = b / (1 - rho)
        j = busy_period(expd(1.0), 0.5, 0.0, 1.0, Jet.variable(2))
        assert moments_from_jet(j).mean == pytest.approx(2.0, rel=1e-9)

    def test_fixed_point_self_check(self, rng):
        dist = expd(1.0)
        for z, w in ((1.0, 0.3), (0.8, 0.1), (0.95, 1.0)):
            x = busy_period(dist, 0.4, 0.1, z, w)
            again = z * exhaustive_service_lst(dist, 0.1, w + 0.4 * (1.0 - x))
            assert again == pytest.approx(x, abs=1e-12)

    def test_jet_fixed_point_self_check(self):
        dist = expd(1.0)
        w = Jet.variable(4)
        x = busy_period(dist, 0.4, 0.1, 1.0, w)
        again = 1.0 * exhaustive_service_lst(dist, 0.1, w + 0.4 * (1.0 - x))
        for a, b in zip(again.c, x.c):
            assert a == pytest.approx(b, abs=1e-12)

    def test_overloaded_queue_rejected(self):
        with pytest.raises(NoConvergence):
            busy_period(expd(1.0), 1.2, 0.0, 1.0, 0.5)
        with pytest.raises(NoConvergence):
            busy_period(expd(1.0), 0.8, 0.5, 1.0, 0.5)  # 0.8 / 0.5 > 1


class TestKernelTable:
    def test_zero_step_kernel_is_bare_service_for_gated(self):
        model = takacs_model()
        w = Jet.variable(3)
        table = kernel_table(model, 1, w)
        assert table.btilde[0].c == pytest.approx(lst(model.queues[1].service, w).c)

    def test_all_entries_one_at_zero_argument(self, rng):
        for _ in range(5):
            model = random_model(rng)
            table = kernel_table(model, 0, Jet.variable(3))
            for seq in (table.btilde, table.ptilde, table.rtilde):
                for entry in seq:
                    assert (entry.c[0] if isinstance(entry, Jet) else entry) == 1.0

    def test_single_queue_switch_kernel_is_bare(self):
        model = NetworkModel(
            queues=(QueueSpec(0.3, expd(1.0), det(1.5), GATED),),
            routing=((1.0, 0.0),),
        )
        for w in (0.2, 1.0):
            table = kernel_table(model, 0, w)
            assert table.rtilde[0] == pytest.approx(lst(det(1.5), w), rel=1e-12)

    def test_pure_polling_routing_kernels_trivial(self, rng):
        # with all customers leaving after service, the routing correction vanishes
        model = random_model(rng, min_exit=1.0)
        table = kernel_table(model, 0, 0.7)
        for entry in table.ptilde:
            assert entry == 1.0

    def test_monotone_in_argument(self, rng):
        for _ in range(5):
            model = random_model(rng)
            t1 = kernel_table(model, 0, 0.3)
            t2 = kernel_table(model, 0, 0.8)
            for a, b in zip(t1.btilde, t2.btilde):
                assert a >= b - 1e-12

    def test_extended_service_dominates_bare(self, rng):
        for _ in range(5):
            model = random_model(rng)
            n = model.n
            table = kernel_table(model, 0, Jet.variable(2))
            for k in range(n + 1):
                mean_ext = -table.btilde[k].c[1]
                assert mean_ext >= model.queues[step_back(0, k, n)].service.mean - 1e-10


class TestUVectors:
    def test_all_ones_at_zero(self):
        model = katayama_model(0.4)
        table = kernel_table(model, 1, Jet.constant(0.0, 2))
        uv = u_vectors(table, model)
        for k in range(model.n + 1):
            assert all_ones(uv.elementary(k))
            assert all_ones(uv.gate_mix(k))

    def test_single_queue_last_vector_fills_gate_slot(self):
        model = NetworkModel(
            queues=(QueueSpec(0.3, expd(1.0), det(1.0), GATED),),
            routing=((1.0, 0.0),),
        )
        table = kernel_table(model, 0, 0.5)
        uv = u_vectors(table, model)
        vec = uv.elementary(1)
        assert vec[0] == 1.0
        assert vec[1] == table.btilde[0]

    def test_full_cycle_mix_carries_gate_factor(self):
        model = takacs_model()
        table = kernel_table(model, 0, 0.5)
        uv = u_vectors(table, model)
        vec = uv.gate_mix(model.n)
        assert vec[model.n] == table.btilde[0]
        assert vec[model.n] != 1.0

    def test_exhaustive_zero_uses_bare_service(self):
        model = katayama_model(0.4)
        w = 0.5
        table = kernel_table(model, 2, w)
        uv = u_vectors(table, model)
        vec = uv.exhaustive_zero()
        assert vec[2] == pytest.approx(lst(model.queues[2].service, w))
        # bare service differs from the own busy-period kernel
        assert vec[2] != table.btilde[0]
