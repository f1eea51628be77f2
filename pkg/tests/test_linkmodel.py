import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from chunksched.errors import DegenerateStateError, ParameterError
from chunksched.linkmodel import (
    DelayModel, LinkSpec, LossModel, conditional_pmf, delay_preset, discretize, fresh_pmf,
    loss_preset, moments, on_time_probability, sample_outcome,
)

# first two bins of lognormal(0.5, 0.5), computed independently with mpmath (30 digits)
P1_I = 0.15865525393145707
P2_I = 0.49170540796785201


def test_unit_pmf():
    assert discretize("unit", 8) == [1.0] + [0.0] * 7
    assert DelayModel.unit().pmf == (1.0,)


def test_lognormal_first_bins():
    pmf = discretize("lognormal", 1024, mu=0.5, sigma=0.5)
    assert pmf[0] == pytest.approx(P1_I, abs=1e-12)
    assert pmf[1] == pytest.approx(P2_I, abs=1e-12)


@pytest.mark.parametrize("mu,sigma", [(0.5, 0.5), (1.0, 0.5), (1.0, 1.0)])
def test_pmf_normalized_and_mean_bracketed(mu, sigma):
    d = DelayModel.lognormal(mu, sigma)
    assert abs(sum(d.pmf) - 1.0) <= 1e-9
    cont = moments(mu, sigma)[0]
    assert cont <= d.mean() <= cont + 1


@pytest.mark.parametrize(
    "mu,sigma,mean,var",
    [(0.5, 0.5, 1.86, 0.99), (1.0, 0.5, 3.08, 2.69), (1.0, 1.0, 4.48, 34.51)],
)
def test_moments_table(mu, sigma, mean, var):
    m, v = moments(mu, sigma)
    assert abs(m - mean) <= 0.01
    assert abs(v - var) <= 0.01


def test_bad_parameters():
    with pytest.raises(ParameterError):
        discretize("lognormal", 10, mu=0, sigma=0)
    with pytest.raises(ParameterError):
        LossModel(1.5)
    with pytest.raises(ParameterError):
        DelayModel.table([0.5, 0.4])


def test_table_kind_folds_tail():
    d = DelayModel.table([0.25, 0.25, 0.5], z_cap=2)
    assert d.pmf == (0.25, 0.75)


def test_sample_outcome_lossless_unit():
    spec = LinkSpec()
    rng = random.Random(0)
    assert all(sample_outcome(spec, rng) == 1 for _ in range(100))


def test_sample_outcome_always_erased():
    spec = LinkSpec(LossModel(1.0))
    rng = random.Random(0)
    assert all(sample_outcome(spec, rng) is None for _ in range(100))


def test_sample_outcome_erasure_rate():
    spec = LinkSpec(LossModel(1 / 3))
    rng = random.Random(1)
    n = 100_000
    erased = sum(sample_outcome(spec, rng) is None for _ in range(n))
    sigma = math.sqrt(n * (1 / 3) * (2 / 3))
    assert abs(erased - n / 3) <= 3 * sigma


def test_sample_outcome_consumes_two_uniforms():
    spec = LinkSpec(LossModel(1.0))
    a, b = random.Random(7), random.Random(7)
    sample_outcome(spec, a)
    b.random(), b.random()
    assert a.random() == b.random()


def test_sample_follows_pmf():
    d = DelayModel.lognormal(0.5, 0.5)
    rng = random.Random(2)
    n = 50_000
    ones = sum(d.sample(rng.random()) == 1 for _ in range(n))
    assert abs(ones / n - P1_I) <= 3.5 * math.sqrt(P1_I * (1 - P1_I) / n)


def test_conditional_unit_is_degenerate():
    with pytest.raises(DegenerateStateError):
        conditional_pmf(LinkSpec(), 1, 2)


def test_conditional_lognormal():
    spec = LinkSpec(LossModel(0.0), DelayModel.lognormal(0.5, 0.5))
    [(z, p)] = conditional_pmf(spec, 1, 1)
    assert z == 2
    assert p == pytest.approx(P2_I / (1 - P1_I), rel=1e-12)
    assert p == pytest.approx(0.5844, abs=1e-4)
    half = LinkSpec(LossModel(0.5), spec.delay)
    assert conditional_pmf(half, 1, 1)[0][1] == pytest.approx(p / 2, rel=1e-12)


def test_fresh_pmf():
    assert fresh_pmf(LinkSpec(), 1) == [(1, 1.0)]
    spec = LinkSpec(LossModel(0.0), DelayModel.lognormal(0.5, 0.5))
    got = fresh_pmf(spec, 2)
    assert [z for z, _ in got] == [1, 2]
    assert got[0][1] == pytest.approx(0.15866, abs=1e-5)
    assert got[1][1] == pytest.approx(0.4917, abs=1e-4)
    dead = LinkSpec(LossModel(1.0), spec.delay)
    assert all(p == 0 for _, p in fresh_pmf(dead, 3))


@settings(max_examples=60, deadline=None)
@given(st.sampled_from([(0.5, 0.5), (1.0, 0.5), (1.0, 1.0)]), st.integers(1, 30),
       st.integers(1, 6), st.sampled_from([0.0, 1 / 3, 0.5]))
def test_on_time_matches_window_sum(params, age, delta, pe):
    spec = LinkSpec(LossModel(pe), DelayModel.lognormal(*params))
    window = sum(p for _, p in conditional_pmf(spec, age, delta))
    assert on_time_probability(spec, age, delta) == pytest.approx(window, rel=1e-9, abs=1e-15)
    assert window <= 1 - pe + 1e-12


def test_delay_presets():
    assert delay_preset("I", 2)[0] == DelayModel.lognormal(0.5, 0.5)
    iv = delay_preset("IV", 8)
    assert iv[3] == DelayModel.lognormal(0.5, 0.5) and iv[4] == DelayModel.lognormal(1, 1)
    v = delay_preset("V", 8)
    assert v[0] == DelayModel.lognormal(1, 1) and v[7] == DelayModel.lognormal(0.5, 0.5)


def test_loss_presets():
    assert loss_preset("II", 8)[2].pe == 0.125
    assert loss_preset("I", 2)[1].pe == pytest.approx(1 / 3)
    assert loss_preset("III", 8)[0].pe == pytest.approx(1 / 3)
    assert loss_preset("III", 8)[7].pe == pytest.approx(1 / 24)
