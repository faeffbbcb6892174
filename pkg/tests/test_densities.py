import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vardesign.densities import (
    ExpPower,
    Pareto,
    SingularPower,
    Uniform01,
    check_a1,
    check_a2,
    check_a3,
    density_from_dict,
    dilate,
    dilation,
    invert_cdf,
    pstar,
)
from vardesign.errors import AssumptionError, ConfigError, DomainError, NumericalError
from vardesign.quadrature import adaptive_gauss_legendre
from vardesign.smoothness import power_law_model

FAMILIES = [ExpPower(1.0, 1.0), ExpPower(0.5, 1.0), ExpPower(2.0, 2.0), ExpPower(0.3, 0.5),
            Pareto(-2.0), Pareto(-1.5), Pareto(-4.0), SingularPower(0.5), SingularPower(0.1),
            Uniform01()]


def test_quantile_examples():
    assert ExpPower(1.0, 1.0).quantile(0.5) == pytest.approx(math.log(2.0), abs=1e-12)
    assert Pareto(-2.0).quantile(0.5) == pytest.approx(1.0, abs=1e-15)
    assert Uniform01().quantile(0.37) == pytest.approx(0.37, abs=1e-16)


@pytest.mark.parametrize("density", FAMILIES, ids=lambda d: repr(d))
def test_cdf_quantile_round_trip(density, rng):
    q = rng.uniform(1e-6, 1 - 1e-6, 1000)
    assert np.max(np.abs(density.cdf(density.quantile(q)) - q)) < 1e-9


@pytest.mark.parametrize("density", FAMILIES, ids=lambda d: repr(d))
def test_quantile_inverts_cdf_in_bulk(density, rng):
    u = density.quantile(rng.uniform(1e-6, 1 - 1e-6, 200))
    back = density.quantile(density.cdf(u))
    assert np.allclose(back, u, rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("density", FAMILIES, ids=lambda d: repr(d))
def test_cdf_monotone_and_total_mass(density):
    u = np.linspace(0, 1, 501) if density.support == "unit" else np.geomspace(1e-6, 1e8, 501)
    c = density.cdf(u)
    assert np.all(np.diff(c) >= 0)
    top = 1.0 if density.support == "unit" else 1e300
    assert density.cdf(top) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("q", [0.0, 1.0, -0.2, 1.5, float("nan")])
def test_quantile_domain(q):
    with pytest.raises(DomainError):
        ExpPower(1.0, 1.0).quantile(q)


@pytest.mark.parametrize("beta,gamma", [(0.5, 1.0), (1.0, 2.0), (3.0, 0.7), (0.2, 3.0)])
def test_exppower_normalized(beta, gamma):
    d = ExpPower(beta, gamma)
    total = 0.0
    for lo, hi in [(0, 1), (1, 10), (10, 100), (100, 400)]:
        total += adaptive_gauss_legendre(d.pdf, lo, hi, atol=1e-14, rtol=1e-14)[0]
    assert total == pytest.approx(1.0, abs=1e-10)


def test_pstar_constant(model):
    p = pstar(model)
    assert p.beta == 0.5
    assert p.norm == pytest.approx(0.5, abs=1e-15)


def test_check_a1_examples(model, p_star):
    cert = check_a1(p_star, model)
    assert cert.q2 == 0.5 and cert.q1 == pytest.approx(0.5)
    with pytest.raises(AssumptionError) as exc:
        check_a1(ExpPower(1.5, 1.0), model)
    assert exc.value.clause == "q2 range"
    cert = check_a1(Pareto(-2.0), model)
    assert cert.q2 == pytest.approx(0.5)
    u = np.linspace(0, 50, 5001)
    assert cert.q1 == pytest.approx(np.min(Pareto(-2.0).pdf(u) * np.exp(0.5 * u)), rel=1e-12)


def test_check_a1_clauses(model):
    with pytest.raises(AssumptionError) as exc:
        check_a1(Uniform01(), model)
    assert exc.value.clause == "support"
    with pytest.raises(AssumptionError) as exc:
        check_a1(ExpPower(0.5, 2.0), model)
    assert exc.value.clause == "pointwise"


def test_exp_lower_bound_holds_on_grid(model):
    for d in (ExpPower(0.5, 1.0), Pareto(-2.0), Pareto(-3.0)):
        cert = check_a1(d, model)
        u = np.linspace(0, 200, 20001)
        assert np.all(d.pdf(u) >= cert.q1 * np.exp(-cert.q2 * u) * (1 - 1e-12))


def test_check_a2_examples():
    assert check_a2(Pareto(-2.0), lambdas=(2.0,)) == pytest.approx(-2.0, abs=1e-5)
    assert check_a2(Pareto(-1.5), lambdas=(3.0,)) == pytest.approx(-1.5, abs=1e-5)
    with pytest.raises(AssumptionError):
        check_a2(ExpPower(1.0, 1.0), lambdas=(2.0,), u_grid=[10.0, 20.0, 40.0, 1e4])
    with pytest.raises(DomainError):
        check_a2(Pareto(-2.0), u_grid=[1.0, 10.0, 100.0])


def test_check_a3_examples(model):
    ok = check_a3(model, 0.25, 0.5)
    assert ok.ok and ok.rho_margin == pytest.approx(0.875)
    bad = check_a3(model, 0.99, 0.9)
    assert not bad.ok and bad.sup_inf_margin < 0
    wide = power_law_model(0.5, 1.5, 1.0)
    v = check_a3(wide, 0.6, 2.0)
    assert v.rho_margin == pytest.approx(-0.2) and "q2·ρ^γ < 1" in v.message


def test_dilation_examples():
    assert dilation(10**6, 2.0, log_n=4.0) == 2.0
    assert dilation(1000, 1.0) == pytest.approx(6.907755, abs=1e-6)
    dd = dilate(Pareto(-2.0), 1000, 1.0)
    assert dd.mass == pytest.approx(1 - 1 / (1 + math.log(1000)), abs=1e-14)
    assert dd.mass == pytest.approx(0.87354, abs=1e-5)
    with pytest.raises(DomainError):
        dilation(2, 1.0)


def test_dilated_pdf_scaling():
    dd = dilate(ExpPower(0.5, 1.0), 1000, 1.0)
    t = np.linspace(0, 1, 11)
    assert np.allclose(dd.pdf(t), dd.d_n * 0.5 * np.exp(-0.5 * dd.d_n * t))


def test_dilated_mass_increases_with_n():
    masses = [dilate(p, n, 1.0).mass for p in (Pareto(-2.0), ExpPower(0.5, 1.0))
              for n in (10, 100, 1000, 10**4)]
    for k in range(0, 8, 4):
        assert all(b > a for a, b in zip(masses[k:k + 4], masses[k + 1:k + 4]))


def test_density_from_dict(model):
    assert density_from_dict({"family": "pstar"}, model) == ExpPower(0.5, 1.0)
    assert density_from_dict({"family": "pareto", "r": -2}) == Pareto(-2.0)
    for spec in ({"family": "pareto"}, {"family": "what"}, {"r": 1}, {"family": "pareto", "r": -0.5}):
        with pytest.raises(ConfigError):
            density_from_dict(spec)
    for d in FAMILIES:
        assert density_from_dict(d.to_dict()) == d


def test_invert_cdf_nonconvergence_reports():
    # a cdf that never reaches its target cannot be bracketed
    with pytest.raises(NumericalError):
        invert_cdf(lambda x: 0.5 * np.ones_like(x), lambda x: np.zeros_like(x), np.array([0.9]))


@settings(max_examples=30, deadline=None)
@given(beta=st.floats(0.05, 5.0), gamma=st.floats(0.3, 4.0), q=st.floats(1e-6, 1 - 1e-6))
def test_exppower_quantile_property(beta, gamma, q):
    d = ExpPower(beta, gamma)
    assert abs(d.cdf(d.quantile(q)) - q) < 1e-9
