import math

import mpmath
import numpy as np
import pytest
from scipy.stats import norm

from rinlink import (
    Constellation,
    LinkParams,
    ThresholdSet,
    analytic_ser,
    build_channel,
    build_thresholds,
    mutual_information,
    q_function,
)
from rinlink.link import ChannelModel
from rinlink.metrics import GH_ORDER, SER_FLOOR, mutual_information_from_arrays

from .oracles import random_pmf

Q1 = 0.15865525393145705141  # mpmath erfc(1/sqrt 2)/2, 40 digits


def test_q_function_special_values():
    assert q_function(0.0) == 0.5
    assert q_function(math.inf) == 0.0
    assert q_function(-math.inf) == 1.0
    assert q_function(1.0) == pytest.approx(Q1, rel=1e-15)


def test_q_function_accuracy_against_mpmath():
    mpmath.mp.dps = 40
    for x in np.linspace(-8, 8, 161):
        ref = float(mpmath.erfc(mpmath.mpf(float(x)) / mpmath.sqrt(2)) / 2)
        assert q_function(x) == pytest.approx(ref, rel=1e-14)


def test_q_function_deep_tail():
    mpmath.mp.dps = 40
    q38 = q_function(38.0)
    assert q38 > 0
    ref = float(mpmath.erfc(mpmath.mpf(38) / mpmath.sqrt(2)) / 2)
    assert q38 == pytest.approx(ref, rel=1e-6)
    assert np.allclose(q_function(np.array([0.0, 1.0])), [0.5, Q1])


def test_binary_ser_is_q1():
    m = ChannelModel(1.0, 0.0, 1.0, Constellation([-1.0, 1.0]))
    s = analytic_ser(m, ThresholdSet([0.0], "optimal"))
    assert s.average == pytest.approx(Q1, rel=1e-14)
    assert np.allclose(s.per_symbol, Q1, rtol=1e-14)


def test_noiseless_ser_is_zero():
    m = build_channel(LinkParams(thermal_asd=0.0, rin_db_hz=-math.inf), Constellation.pam(4), 0.0)
    assert analytic_ser(m, build_thresholds(m, "approx")).average == 0.0


def test_ser_breakdown_invariants(pam6_channel):
    c = Constellation.pam(6, [0.3, 0.1, 0.2, 0.1, 0.2, 0.1])
    m = pam6_channel.with_constellation(c)
    s = analytic_ser(m, build_thresholds(m, "optimal"))
    assert np.all((s.per_symbol >= 0) & (s.per_symbol <= 1))
    assert s.average == pytest.approx(float(np.dot(c.probs, s.per_symbol)), abs=1e-14)


def test_ser_underflow_is_flagged():
    m = ChannelModel(1e-6, 0.0, 3.0, Constellation.pam(4))
    s = analytic_ser(m, build_thresholds(m, "optimal"))
    assert s.average == 0.0 and s.clamped
    assert SER_FLOOR == 1e-320


def test_map_optimality_against_perturbations():
    rng = np.random.default_rng(5)
    for order in (4, 6, 8):
        c = Constellation.pam(order, random_pmf(rng, order, 2.0))
        m = build_channel(LinkParams.for_order(order), c, 1.0)
        best = analytic_ser(m, build_thresholds(m, "optimal")).average
        assert best <= analytic_ser(m, build_thresholds(m, "approx")).average + 1e-12
        r = build_thresholds(m, "optimal").thresholds
        for _ in range(20):
            t = np.sort(r + rng.normal(0, 0.05, r.size))
            assert best <= analytic_ser(m, t).average + 1e-12


def test_error_floor_differences_shrink():
    c = Constellation.pam(6)
    p = LinkParams.for_order(6)
    sers = [analytic_ser(m, build_thresholds(m, "optimal")).average
            for m in (build_channel(p, c, oma) for oma in range(2, 16, 2))]
    diffs = -np.diff(sers)
    assert np.all(diffs > 0)
    assert np.all(np.diff(diffs) < 0)


def test_mi_limits():
    c = Constellation.pam(4, [0.4, 0.3, 0.2, 0.1])
    useless = ChannelModel(1e6 * c.span**2, 0.0, 3.0, c)
    assert 0.0 <= mutual_information(useless) < 1e-3
    clean = ChannelModel(1e-8, 0.0, 3.0, c)
    assert mutual_information(clean) == pytest.approx(c.entropy(), abs=1e-6)
    noiseless = ChannelModel(0.0, 0.0, 3.0, c)
    assert mutual_information(noiseless) == c.entropy()


def test_mi_bounds_and_monotonicity():
    rng = np.random.default_rng(9)
    for order in (4, 6, 8):
        for oma in (-2.0, 4.0, 10.0):
            c = Constellation.pam(order, random_pmf(rng, order, 1.5))
            m = build_channel(LinkParams.for_order(order), c, oma)
            values = [mutual_information(m.scaled_noise(lam)) for lam in (1, 2, 4, 8)]
            assert all(0 <= v <= c.entropy() + 1e-12 for v in values)
            assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("order,oma", [(4, 4.0), (4, -2.0), (6, 0.0), (6, 14.0), (8, -2.0), (8, 14.0)])
def test_mi_quadrature_converged(order, oma):
    m = build_channel(LinkParams.for_order(order), Constellation.pam(order), oma)
    assert abs(mutual_information(m) - mutual_information(m, 2 * GH_ORDER)) < 1e-9


def monte_carlo_mi(m, n, seed, chunk=10**6):
    """Sample mean of log2 p(y|x) / sum_k P(k) p(y|x_k) over channel draws."""
    rng = np.random.default_rng(seed)
    total = 0.0
    for start in range(0, n, chunk):
        k = min(chunk, n - start)
        idx = rng.choice(m.order, size=k, p=m.probs)
        y = m.points[idx] + rng.standard_normal(k) * m.cond_sigma[idx]
        dens = norm.pdf(y[:, None], loc=m.points, scale=m.cond_sigma)
        cond = dens[np.arange(k), idx]
        total += np.sum(np.log2(cond / (dens @ m.probs)))
    return total / n


def test_mi_matches_monte_carlo_pam6():
    m = build_channel(LinkParams.for_order(6), Constellation.pam(6, [0.1, 0.2, 0.3, 0.2, 0.1, 0.1]), -2.0)
    assert mutual_information(m) == pytest.approx(monte_carlo_mi(m, 2 * 10**6, 0), abs=2e-3)


def test_mi_from_arrays_ignores_zero_prior():
    a = mutual_information_from_arrays([-1.0, 0.0, 1.0], [0.3, 0.3, 0.3], [0.5, 0.0, 0.5])
    b = mutual_information_from_arrays([-1.0, 1.0], [0.3, 0.3], [0.5, 0.5])
    assert a == pytest.approx(b, abs=1e-14)
