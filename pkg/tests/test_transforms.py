import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import det, expd, erlang, gamma, hyper
from roving.errors import (
    NegativeArgument,
    NotNormalized,
    PoleDetected,
    ZeroMeanDistribution,
)
from roving.transforms import (
    Jet,
    jet_div,
    jet_exp,
    jet_log,
    lst,
    lst_jet,
    moments_from_jet,
    past_residual,
)

FAMILIES = (
    det(2.0),
    expd(1.0),
    erlang(2, 1.0),
    erlang(4, 3.0),
    hyper((0.3, 0.7), (0.5, 2.0)),
    gamma(0.7, 1.3),
    gamma(2.5, 0.8),
)


class TestLstValues:
    def test_point_mass_at_zero_argument(self):
        assert lst(det(2.0), 0.0) == 1.0

    def test_exponential(self):
        assert lst(expd(1.0), 1.0) == pytest.approx(0.5)

    def test_erlang_two_phases(self):
        assert lst(erlang(2, 1.0), 1.0) == pytest.approx(0.25)

    def test_negative_argument_rejected(self):
        with pytest.raises(NegativeArgument):
            lst(expd(1.0), -0.5)

    @pytest.mark.parametrize("dist", FAMILIES, ids=lambda d: d.kind + str(d.rate))
    def test_unit_normalization_is_exact(self, dist):
        assert lst(dist, 0.0) == 1.0
        j = lst_jet(dist, 3)
        assert j.c[0] == 1.0

    @pytest.mark.parametrize("dist", FAMILIES, ids=lambda d: d.kind + str(d.rate))
    def test_jet_leading_coefficients(self, dist):
        j = lst_jet(dist, 4)
        assert j.c[1] == pytest.approx(-dist.mean, rel=1e-12)
        for k in range(j.order + 1):
            # alternating signs: (-1)^k c_k = m_k / k! >= 0
            assert (-1.0) ** k * j.c[k] >= -1e-12
            assert (-1.0) ** k * j.c[k] * math.factorial(k) == pytest.approx(
                dist.moment(k), rel=1e-10)

    @pytest.mark.parametrize("dist", FAMILIES, ids=lambda d: d.kind + str(d.rate))
    def test_jet_matches_central_differences(self, dist):
        # first two derivatives at 0.5 vs central differences of the scalar path
        j = lst(dist, Jet.variable(2, at=0.5))
        h = 1e-5
        f = lambda x: lst(dist, x)
        d1 = (f(0.5 + h) - f(0.5 - h)) / (2 * h)
        d2 = (f(0.5 + h) - 2 * f(0.5) + f(0.5 - h)) / h**2
        assert j.c[1] == pytest.approx(d1, rel=1e-6)
        assert 2 * j.c[2] == pytest.approx(d2, rel=1e-5)


class TestJetAlgebra:
    def test_division_cancels_leading_zero(self):
        out = jet_div(Jet([0, 1, 1, 0]), Jet([0, 1, 0, 0]))
        assert out.c == pytest.approx([1.0, 1.0, 0.0])

    def test_geometric_series(self):
        out = Jet([1, 1, 0]) / Jet([1, -1, 0])
        assert out.c == pytest.approx([1.0, 2.0, 2.0])

    def test_double_zero_cancellation_reduces_order(self):
        out = jet_div(Jet([0, 0, 1, 0]), Jet([0, 1, 0, 0]))
        assert out.order == 2
        assert out.c == pytest.approx([0.0, 1.0, 0.0])

    def test_true_pole_detected(self):
        with pytest.raises(PoleDetected):
            jet_div(Jet([1, 1, 0]), Jet([0, 1, 0]))
        with pytest.raises(PoleDetected):
            jet_div(Jet([0, 1]), Jet([0, 0]))

    def test_exp_log_round_trip(self):
        x = Jet([0.7, -0.3, 0.2, 0.05])
        back = jet_log(jet_exp(jet_log(x)))
        assert back.c == pytest.approx(jet_log(x).c, rel=1e-12)

    def test_mixed_order_operations_truncate(self):
        a, b = Jet([1.0, 2.0, 3.0]), Jet([2.0, 1.0])
        assert (a * b).order == 1
        assert (a + b).order == 1


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=3, max_size=5),
       st.lists(st.floats(-2, 2), min_size=3, max_size=5))
def test_product_linearity_in_first_factor(xs, ys):
    a, b = Jet(xs), Jet(ys)
    lhs = (a + b) * b
    rhs = a * b + b * b
    assert lhs.c == pytest.approx(rhs.c, rel=1e-9, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=4, max_size=4))
def test_strict_division_inverts_product(xs):
    a = Jet(xs)
    b = Jet([1.5, -0.2, 0.1, 0.3])
    assert ((a * b) / b).c == pytest.approx(a.c, rel=1e-9, abs=1e-9)


class TestMoments:
    def test_exponential_moments(self):
        mo = moments_from_jet(lst_jet(expd(1.0), 3))
        assert mo.raw == pytest.approx((1.0, 2.0, 6.0))
        assert mo.variance == pytest.approx(1.0)

    def test_point_mass_has_zero_variance(self):
        mo = moments_from_jet(lst_jet(det(2.0), 2))
        assert mo.mean == pytest.approx(2.0)
        assert mo.variance == pytest.approx(0.0, abs=1e-12)

    def test_not_normalized_rejected(self):
        with pytest.raises(NotNormalized):
            moments_from_jet(Jet([0.9, -1.0, 0.5]))


class TestPastResidual:
    def test_normalization_at_origin(self):
        for dist in FAMILIES:
            assert past_residual(dist, 0.0, 0.0) == pytest.approx(1.0, abs=1e-12)

    def test_point_mass_residual(self):
        # residual of a point mass at 2 is uniform on (0, 2)
        val = past_residual(det(2.0), 0.0, 1.0)
        assert val == pytest.approx((1.0 - math.exp(-2.0)) / 2.0, rel=1e-12)

    def test_exponential_memorylessness(self):
        for s in (0.3, 1.0, 2.5):
            assert past_residual(expd(1.3), 0.0, s) == pytest.approx(
                1.3 / (1.3 + s), rel=1e-12)

    @pytest.mark.parametrize("dist", FAMILIES, ids=lambda d: d.kind + str(d.rate))
    def test_matches_stationary_excess(self, dist):
        for s in (0.2, 1.0, 4.0):
            excess = (1.0 - lst(dist, s)) / (s * dist.mean)
            assert past_residual(dist, 0.0, s) == pytest.approx(excess, abs=1e-12)

    @pytest.mark.parametrize("dist", FAMILIES, ids=lambda d: d.kind + str(d.rate))
    def test_symmetry(self, dist):
        assert past_residual(dist, 0.3, 1.1) == pytest.approx(
            past_residual(dist, 1.1, 0.3), rel=1e-12)

    def test_zero_mean_rejected(self):
        with pytest.raises(ZeroMeanDistribution):
            past_residual(det(0.0), 0.0, 1.0)

    @pytest.mark.parametrize("dist", FAMILIES, ids=lambda d: d.kind + str(d.rate))
    def test_jet_path_matches_scalar_path(self, dist):
        # same arguments once as jets, once as scalars
        wp = Jet([0.4, 0.5, -0.1, 0.02])
        wr = Jet([0.9, 1.0, 0.3, -0.05])
        out = past_residual(dist, wp, wr)
        assert out.c[0] == pytest.approx(past_residual(dist, 0.4, 0.9), rel=1e-10)

    @pytest.mark.parametrize("dist", FAMILIES, ids=lambda d: d.kind + str(d.rate))
    def test_nearly_coincident_jets_are_stable(self, dist):
        # arguments with identical constant terms hit the divided-difference path
        wp = Jet([0.0, 0.5, 0.1, 0.0, 0.0])
        wr = Jet([0.0, 1.3, -0.2, 0.1, 0.0])
        out = past_residual(dist, wp, wr)
        # compare against slightly separated scalars along the same rays
        eps = 1e-4
        approx = past_residual(dist, 0.5 * eps, 1.3 * eps)
        assert out.c[0] == pytest.approx(1.0, abs=1e-10)
        assert out.c[0] == pytest.approx(approx, abs=1e-3)
