import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vardesign.config import RunConfig
from vardesign.densities import ExpPower, Pareto, Uniform01, dilation, pstar
from vardesign.designs import composite_design, dilated_design, regular_design, uniform_tail_design
from vardesign.errors import DomainError, NumericalError
from vardesign.imse import interval_error_closed
from vardesign.rates import (
    SweepRow,
    SweepTable,
    extrapolate_limit,
    fit_log_correction,
    gap_detector,
    prop1_certificate,
    rate_separation,
    sweep,
    tail_gap_lower_bound,
)
from vardesign.smoothness import power_law_model


def synthetic(values, ns=(1000, 10000, 100000)):
    rows = [SweepRow(n, n, v, v, 2.0, (v - 2.0) / 2.0) for n, v in zip(ns, values)]
    return SweepTable(rows, "composite")


def test_extrapolation_recovers_model():
    ns = (1000, 10000, 100000)
    t = synthetic([2 + 3 / math.log(n) for n in ns], ns)
    assert extrapolate_limit(t) == pytest.approx(2.0, abs=1e-9)
    fit = fit_log_correction(t.n, t.normalized)
    assert fit.b == pytest.approx(3.0, abs=1e-8)


def test_extrapolation_constant_rows():
    fit = fit_log_correction([1e3, 1e4, 1e5], [0.7, 0.7, 0.7])
    assert fit.a == pytest.approx(0.7, abs=1e-12) and abs(fit.b) < 1e-10


def test_extrapolation_log_log_term():
    ns = np.array([1e3, 1e4, 1e5, 1e6])
    L = np.log(ns)
    y = 1.0 + 2.0 / L - 0.5 * np.log(L) / L
    fit = fit_log_correction(ns, y, last=4, log_log=True)
    assert (fit.a, fit.b, fit.c) == pytest.approx((1.0, 2.0, -0.5), abs=1e-8)


def test_extrapolation_degenerate():
    with pytest.raises(NumericalError):
        fit_log_correction([1e3, 1e3, 1e3], [1.0, 2.0, 3.0])
    with pytest.raises(DomainError):
        fit_log_correction([1e3, 1e4], [1.0, 2.0])


def test_table_requires_increasing_n():
    with pytest.raises(DomainError):
        synthetic([1.0, 1.0, 1.0], (10, 10, 100))


def test_sweep_csv_round_trip():
    cfg = RunConfig.from_dict({"model": {"alpha0": 1, "b": 1, "gamma": 1}, "design": {"kind": "regular"}})
    t = sweep(cfg.design, cfg.model, [100, 1000, 10000])
    text = t.to_csv()
    lines = text.strip().split("\n")
    assert lines[0] == "n,N,e2,normalized,target,deviation"
    assert float(lines[2].split(",")[2]) == t.rows[1].e2
    assert t.deviation_decreasing()


def test_sweep_threads_identical():
    cfg = RunConfig.from_dict({"model": {"alpha0": 1, "b": 1, "gamma": 1},
                               "design": {"kind": "composite", "rho": 0.25}})
    a = sweep(cfg.design, cfg.model, [1000, 3000, 10000])
    b = sweep(cfg.design, cfg.model, [1000, 3000, 10000], threads=3)
    assert a.to_csv() == b.to_csv()


def test_prop1_uniform_example(model):
    d = regular_design(Uniform01(), 100)
    cert = prop1_certificate(d, model)
    r = 1 / math.log(100)
    assert cert.r_n == pytest.approx(0.21715, abs=1e-5)
    assert cert.a_n == pytest.approx(1 + r, rel=1e-12)
    assert cert.bound == pytest.approx(0.5 * r ** (2 + r) / 100 ** (1 + r), rel=1e-12)
    assert cert.J_n == 22 and cert.holds
    assert cert.e2 >= cert.bound


def test_prop1_first_knot_beyond_r(model):
    d = regular_design(Uniform01(), 1)
    cert = prop1_certificate(d, model, n=100)
    assert cert.J_n == 1 and cert.holds


@settings(max_examples=50, deadline=None)
@given(a0=st.floats(0.2, 1.5), b=st.floats(0.2, 2.0), g=st.floats(0.5, 2.0),
       n=st.integers(5, 5000), kind=st.sampled_from(["regular", "composite", "uniform", "dilated"]))
def test_prop1_holds_on_random_configs(a0, b, g, n, kind):
    m = power_law_model(a0, b, g)
    p = pstar(m)
    if kind == "regular":
        d = regular_design(Uniform01(), n)
    elif kind == "composite":
        d = composite_design(p, 0.1, Pareto(-2.0), n, g, model=m, unchecked=True)
    elif kind == "uniform":
        d = uniform_tail_design(p, 0.1, n, g, mu=0.8, unchecked=True)
    else:
        d = dilated_design(p, n, g, unchecked=True)
    cert = prop1_certificate(d, m)
    assert cert.bound > 0 and cert.holds


def test_prop1_scaled_correction_bounded(model):
    for n in (10**3, 10**4, 10**5, 10**6):
        d = regular_design(Uniform01(), 10)
        cert = prop1_certificate(d, model, n=n)
        assert cert.correction >= math.exp(-2 * model.b)
        d_n = dilation(n, 1.0)
        assert cert.correction == pytest.approx((d_n * n) ** -(1.0 / math.log(n)), rel=1e-9)


def test_gap_detector_cases(model, p_star, pareto2):
    u = gap_detector(regular_design(Uniform01(), 50), 0.1)
    assert u.interior_in_tail and u.last_gap == pytest.approx(1 / 50)
    c = gap_detector(composite_design(p_star, 0.25, pareto2, 10**4, 1.0, model=model), 0.1)
    assert c.interior_in_tail
    with pytest.raises(DomainError):
        gap_detector(regular_design(Uniform01(), 5), 1.5)


def test_pathology_gap_and_floor(model):
    p = ExpPower(1.2, 1.0)
    n = 10**5
    d = dilated_design(p, n, 1.0, unchecked=True)
    g = gap_detector(d, 0.1)
    assert not g.interior_in_tail
    assert tail_gap_lower_bound(n, 1.2, 1.2, 1.0, 0.1) > 0.1
    floor = interval_error_closed(g.last_interior, 1.0, model)
    assert floor > 0.002


def test_rate_separation_synthetic(model):
    ns = np.array([1e3, 1e4, 1e5, 1e6])
    fast = 1.0 / (ns * np.log(ns) ** 2)
    slow = 1.0 / (ns * np.log(ns))
    sep = rate_separation(ns, fast, slow, model)
    assert sep.decreasing and sep.slope == pytest.approx(-1.0, abs=1e-12)


def test_quasi_regular_converges_to_derived_constant():
    # the log log n / log n correction is essential here: a two-term fit stalls near 0.83
    cfg = RunConfig.from_dict({
        "model": {"alpha0": 1.0, "b": 1.0, "gamma": 1.0, "c": "const:1.0", "remainder": "zero"},
        "design": {"kind": "quasi-regular", "kappa": 0.5},
    })
    table = sweep(cfg.design, cfg.model, [10**4, 10**5, 10**6, 10**7])
    lead = table.meta["leading_constant"]
    assert lead == pytest.approx(math.gamma(1.5), rel=1e-14)
    a = fit_log_correction(table.n, table.normalized, last=4, log_log=True).a
    assert a == pytest.approx(lead, rel=5e-3)
