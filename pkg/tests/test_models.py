import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import gamma

from ztangle.models import (FISHINGNET, ISING, ModelDomainError, PoleError, fishingnet_R, fishingnet_weight,
                            get_model, ising_coupling, ising_fpair, ising_weight)
from ztangle.surface import EdgeKind

PLAIN, BARRED = EdgeKind.PLAIN, EdgeKind.BARRED
angles = st.floats(0.05, 1.45)
spins = st.sampled_from([1, -1])


class TestIsing:
    def test_quarter_angle(self):
        # sinh(2J) = 1 gives J = ln(1 + sqrt 2) / 2
        assert ising_weight(PLAIN, math.pi / 4, 1, 1) == pytest.approx(math.sqrt(1 + math.sqrt(2)), rel=1e-14)
        assert abs(ising_weight(PLAIN, math.pi / 4, 1, 1) - 1.55377) < 1e-5

    @pytest.mark.parametrize("x,y", [(1, 1), (1, -1), (-1, -1)])
    def test_zero_angle(self, x, y):
        assert ising_weight(PLAIN, 0.0, x, y) == 1

    def test_singular(self):
        with pytest.raises(ModelDomainError):
            ising_weight(PLAIN, math.pi / 2, 1, 1)
        with pytest.raises(ModelDomainError):
            ising_weight(BARRED, 0.0, 1, -1)

    def test_reflected_barred_is_complex(self):
        w = ising_weight(BARRED, -0.3, 1, 1)
        assert abs(w.imag) > 1e-3

    def test_model_lookup(self):
        assert get_model("ising") is ISING and get_model("fishingnet") is FISHINGNET
        with pytest.raises(ValueError, match="unknown model"):
            get_model("potts")

    def test_edge_table(self):
        t = ISING.edge_table(PLAIN, 0.9, 0.3)
        assert t.shape == (2, 2)
        assert t[0, 0] == t[1, 1] and t[0, 1] == t[1, 0]
        assert t[0, 0] * t[0, 1] == pytest.approx(1.0)

    def test_spin_sum(self):
        assert ISING.spin_sum() == 2
        with pytest.raises(ModelDomainError):
            FISHINGNET.spin_sum()


@given(angles)
def test_coupling_odd(theta):
    assert ising_coupling(-theta) == pytest.approx(-ising_coupling(theta), abs=1e-14)


@given(angles)
def test_coupling_sinh(theta):
    assert cmath.sinh(2 * ising_coupling(theta)).real == pytest.approx(math.tan(theta), rel=1e-12)


@given(angles, spins, spins)
def test_inversion_one(a, x, y):
    assert abs(ising_weight(PLAIN, a, x, y) * ising_weight(PLAIN, -a, x, y) - 1) < 1e-14


@given(angles, spins, spins)
def test_barred_positive(a, x, y):
    w = ising_weight(BARRED, a, x, y)
    assert w.imag == 0 and w.real > 0


@given(angles)
def test_fpair_closed_form(a):
    # diagonal of the bubble sum: 2 cosh(J(pi/2 - a) + J(pi/2 + a)) with principal branches
    ja, jb = ising_coupling(math.pi / 2 - a), ising_coupling(math.pi / 2 + a)
    assert abs(2 * cmath.cosh(ja + jb) - ising_fpair(a)) < 1e-12 * max(1, abs(ising_fpair(a)))


class TestFishingNet:
    def test_zero_exponent(self):
        assert fishingnet_weight(PLAIN, 0.0, 0.3, 2.0) == 1

    def test_half_pi(self):
        assert fishingnet_weight(PLAIN, math.pi / 2, 3.0, 1.0) == pytest.approx(2 ** -0.5, rel=1e-15)

    def test_crossing(self):
        assert fishingnet_weight(BARRED, 0.7, 0.2, -1.1) == fishingnet_weight(PLAIN, math.pi - 0.7, 0.2, -1.1)

    def test_pole(self):
        with pytest.raises(PoleError):
            fishingnet_weight(PLAIN, 0.5, 1.0, 1.0)

    def test_R_value(self):
        # independent gamma evaluation of the closed form
        ref = math.sqrt(math.pi) * gamma(1 / 6) ** 3 / gamma(1 / 3) ** 3
        assert fishingnet_R(math.pi / 3, math.pi / 3) == pytest.approx(ref, rel=1e-13)
        assert abs(ref - 15.90) < 0.01

    def test_R_domain(self):
        with pytest.raises(ModelDomainError):
            fishingnet_R(math.pi / 2, math.pi / 2)
        with pytest.raises(ModelDomainError):
            fishingnet_R(-0.1, 0.5)

    def test_inversion_one(self):
        assert FISHINGNET.weight(PLAIN, 0.9, 0.2, 0.3, 1.7) * FISHINGNET.weight(PLAIN, 0.2, 0.9, 0.3, 1.7) \
            == pytest.approx(1.0, abs=1e-14)

    def test_validity(self):
        assert FISHINGNET.validity(1.0, 0.2) and not FISHINGNET.validity(0.2, 1.0)


@given(st.floats(0.05, 3.0), st.floats(0.05, 3.0))
def test_R_symmetric(alpha, beta):
    if alpha + beta >= math.pi - 1e-3:
        return
    assert fishingnet_R(alpha, beta) == pytest.approx(fishingnet_R(beta, alpha), rel=1e-12)


def test_s_weight_is_one():
    for model in (ISING, FISHINGNET):
        assert model.s_weight(0.3 if model is FISHINGNET else 1) == 1
    assert np.isclose(ISING.spin_sum(), ISING.modulus)
