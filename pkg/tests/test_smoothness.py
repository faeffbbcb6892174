import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vardesign.errors import ConfigError, DomainError
from vardesign.smoothness import (
    Profile,
    SmoothnessModel,
    alpha_at,
    power_law_model,
    validate_c1_c2,
    zone_coefficients,
)


def test_alpha_at_examples(model):
    assert alpha_at(model, 0.0) == 1.0
    assert alpha_at(model, 0.5) == 1.5
    quad = power_law_model(1.0, 1.0, 2.0)
    # independent evaluation of 1 + t^2
    assert alpha_at(quad, 0.5) == pytest.approx(1.0 + 0.5 * 0.5, abs=1e-15)


@pytest.mark.parametrize("t", [-0.1, 1.0000001, 2.0])
def test_alpha_at_domain(model, t):
    with pytest.raises(DomainError):
        alpha_at(model, t)


def test_c1_c2_pass_for_linear(model):
    rep = validate_c1_c2(model)
    assert rep.ok and rep.range_ok
    assert rep.fitted_b == pytest.approx(1.0, abs=1e-12)


def test_constant_alpha_fails_c1():
    # b must be positive, so a flat profile is encoded as alpha0 + b t - b t
    flat = SmoothnessModel(1.0, 1.0, 1.0, remainder="poly:[0, -1]")
    rep = validate_c1_c2(flat)
    assert not rep.unique_minimum
    assert not rep.ok


def test_remainder_quadratic_passes():
    m = SmoothnessModel(1.0, 1.0, 1.0, remainder="poly:[0, 0, 0.1]")
    rep = validate_c1_c2(m)
    assert rep.ok
    assert abs(rep.fitted_b - 1.0) < 1e-6


def test_wrong_gamma_fails_limit():
    # alpha = 1 + sqrt(t) declared with gamma = 1: the ratio blows up
    m = SmoothnessModel(1.0, 1.0, 1.0, remainder=lambda t: np.sqrt(t) - t)
    assert not validate_c1_c2(m).limit_ok


def test_alpha_above_two_is_only_a_warning():
    m = power_law_model(1.5, 1.0, 1.0)
    rep = validate_c1_c2(m)
    assert rep.ok and not rep.range_ok
    assert rep.warnings


def test_grid_size_precondition(model):
    with pytest.raises(DomainError):
        validate_c1_c2(model, grid_size=8)


def test_zone_coefficients_linear(model):
    z = zone_coefficients(model, 0.25, 0.5)
    assert (z.beta1, z.beta2, z.alpha1) == pytest.approx((0.625, 1.0, 1.25), abs=1e-15)
    assert z.b_star == pytest.approx(0.5)
    assert z.exact


def test_zone_coefficients_grid_path_agrees_with_exact(model):
    # a callable remainder forces the grid path
    m = SmoothnessModel(1.0, 1.0, 1.0, remainder=lambda t: 0.0 * np.asarray(t))
    z = zone_coefficients(m, 0.25, 0.5)
    assert not z.exact and z.converged
    assert z.beta1 == pytest.approx(0.625, rel=1e-12)
    assert z.beta2 == pytest.approx(1.0, rel=1e-9)
    assert z.alpha1 == pytest.approx(1.25, rel=1e-12)
    assert z.b_star == pytest.approx(0.5, rel=1e-12)


def test_beta1_small_rho_limit(model):
    z = zone_coefficients(model, 1e-9, 0.7)
    assert z.beta1 == pytest.approx(0.7 * model.alpha0, rel=1e-8)


@settings(max_examples=20, deadline=None)
@given(q2=st.floats(0.05, 0.95), rho=st.floats(0.01, 0.99), gamma=st.floats(0.5, 3.0))
def test_a3_first_inequality_closed_form(q2, rho, gamma):
    # for alpha = 1 + t^gamma: beta1 < beta2 iff rho < (1/q2 - 1)^(1/gamma)
    m = power_law_model(1.0, 1.0, gamma)
    z = zone_coefficients(m, rho, q2)
    edge = (1.0 / q2 - 1.0) ** (1.0 / gamma)
    if abs(rho - edge) > 1e-9:
        assert (z.beta1 < z.beta2) == (rho < edge)


@settings(max_examples=25, deadline=None)
@given(a0=st.floats(0.1, 1.9), b=st.floats(0.01, 3.0), g=st.floats(0.2, 4.0), rho=st.floats(0.001, 0.999))
def test_alpha1_exceeds_alpha0(a0, b, g, rho):
    z = zone_coefficients(power_law_model(a0, b, g), rho, 0.5)
    assert z.alpha1 > a0


def test_power_law_is_increasing(model):
    t = np.linspace(0, 1, 1001)
    a = model.alpha(t)
    assert np.all(np.diff(a) > 0) and np.argmin(a) == 0


def test_json_round_trip():
    m = SmoothnessModel(0.8, 1.3, 2.0, remainder="table:[0, 0.01, 0.03]", c="poly:[1, 0.5]")
    data = json.loads(json.dumps(m.to_dict()))
    back = SmoothnessModel.from_dict(data)
    t = np.linspace(0, 1, 17)
    assert np.array_equal(back.alpha(t), m.alpha(t))
    assert np.array_equal(back.scale(t), m.scale(t))


def test_profile_parsing():
    assert Profile("const:2.5")(0.3) == 2.5
    assert Profile("table:[0, 1]")(0.25) == pytest.approx(0.25)
    assert Profile("zero").is_zero
    for bad in ("nope", "table:[1]", "const:x", "poly:oops"):
        with pytest.raises(ConfigError):
            Profile(bad)


def test_model_rejects_nonpositive():
    with pytest.raises(DomainError):
        SmoothnessModel(0.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        SmoothnessModel(1.0, -1.0, 1.0)
    with pytest.raises(ConfigError):
        SmoothnessModel.from_dict({"alpha0": 1, "b": 1})


def test_model_is_immutable(model):
    with pytest.raises(Exception):
        model.alpha0 = 2.0
