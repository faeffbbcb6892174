import math

import numpy as np
import pytest
from scipy import special as sp

from vardesign.special import gammainc_lower, gammainc_upper


@pytest.mark.parametrize("a", [0.25, 0.5, 1.0, 2.0, 7.5, 40.0])
def test_matches_scipy(a):
    x = np.concatenate([np.geomspace(1e-8, 1e3, 200), [a, a + 1.0]])
    ref = sp.gammainc(a, x)
    got = gammainc_lower(a, x)
    mask = ref > 1e-300
    assert np.allclose(got[mask], ref[mask], rtol=1e-12, atol=0)
    up = gammainc_upper(a, x)
    refu = sp.gammaincc(a, x)
    good = refu > 1e-280
    assert np.allclose(up[good], refu[good], rtol=1e-11, atol=0)


def test_exponential_case_is_closed_form():
    x = np.linspace(0.0, 30.0, 61)
    assert np.allclose(gammainc_lower(1.0, x), -np.expm1(-x), rtol=1e-14, atol=1e-300)
    assert np.allclose(gammainc_upper(1.0, x), np.exp(-x), rtol=1e-13)


def test_edges_and_scalars():
    assert gammainc_lower(2.0, 0.0) == 0.0
    assert gammainc_upper(2.0, 0.0) == 1.0
    assert gammainc_lower(2.0, math.inf) == 1.0
    assert isinstance(gammainc_lower(0.5, 1.0), float)
    # P(1/2, x) = erf(sqrt x)
    assert gammainc_lower(0.5, 2.0) == pytest.approx(math.erf(math.sqrt(2.0)), rel=1e-14)
