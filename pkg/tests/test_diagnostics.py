import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from zklayer.diagnostics import (
    DecayPrediction,
    Identity,
    conservation_report,
    decay_experiment,
    fit_decay_rate,
    friedrichs_min_rayleigh,
    identity_residual,
    identity_residual_series,
    interpolation_exponent,
    interpolation_ratio,
    rayleigh_quotient,
)
from zklayer.domain import DomainSpec, Field
from zklayer.errors import UsageError
from zklayer.initial import gaussian_pulse, philox, random_bandlimited, single_mode
from zklayer.solver import SolverConfig, run
from zklayer.weights import WeightKind, WeightSpec

ONE = WeightSpec(WeightKind.ONE)


@pytest.fixture
def dom():
    return DomainSpec(math.pi, math.pi, 20.0, 64, 8, 8)


# -- conservation ---------------------------------------------------------------


def test_zero_trajectory_has_no_drift(dom):
    rep = conservation_report(run(Field.zeros(dom), SolverConfig(dt=1e-2, T=0.1)))
    assert rep.mass_drift == 0 and rep.energy_drift == 0


def test_linear_run_mass_drift(dom):
    state = run(gaussian_pulse(dom, 1.0, 3.0), SolverConfig(nonlinearity="off", dt=1e-2, T=0.5))
    assert conservation_report(state).mass_drift <= 1e-12


def test_conservation_report_errors(dom):
    u = gaussian_pulse(dom, 0.5, 3.0)
    forced = run(u, SolverConfig(dt=1e-2, T=0.1), f=single_mode(dom, 1, (1, 1), 0.01))
    with pytest.raises(UsageError):
        conservation_report(forced)
    single = run(u, SolverConfig(dt=1e-2, T=1e-2, snapshot_stride=1))
    single.metrics = single.metrics[:1]
    with pytest.raises(UsageError):
        conservation_report(single)


# -- Friedrichs ------------------------------------------------------------------


@pytest.mark.parametrize(
    "L1, L2, expected",
    [(math.pi, math.pi, 2.0), (1.0, 2.0, 5 * math.pi**2 / 4)],
)
def test_friedrichs_examples(L1, L2, expected):
    rep = friedrichs_min_rayleigh(DomainSpec(L1, L2, 5.0, 8, 6, 6))
    assert rep.min_rayleigh == pytest.approx(expected, rel=1e-12)
    assert rep.side_constant_is_weaker


@given(L1=st.floats(0.1, 20.0), L2=st.floats(0.1, 20.0))
def test_side_constant_is_never_sharper(L1, L2):
    rep = friedrichs_min_rayleigh(DomainSpec(L1, L2, 5.0, 8, 4, 4))
    assert rep.side_constant_is_weaker
    assert rep.min_rayleigh == pytest.approx(math.pi**2 * (1 / L1**2 + 1 / L2**2), rel=1e-12)


def test_random_fields_respect_friedrichs():
    dom = DomainSpec(1.0, 2.5, 5.0, 16, 8, 8)
    rng = philox(7)
    lam11 = friedrichs_min_rayleigh(dom).lambda11
    for _ in range(100):
        phi = Field(dom, physical=rng.standard_normal(dom.shape))
        assert rayleigh_quotient(phi) >= lam11 * (1 - 1e-12)


def test_rayleigh_of_basis_function_is_its_eigenvalue():
    dom = DomainSpec(1.0, 2.0, 5.0, 16, 8, 8)
    phi = single_mode(dom, 0, (2, 3))
    assert rayleigh_quotient(phi) == pytest.approx(math.pi**2 * (4 + 9 / 4), rel=1e-12)


# -- interpolation ---------------------------------------------------------------


def test_zero_field_is_degenerate(dom):
    res = interpolation_ratio(Field.zeros(dom), 1, 0, 2, ONE, ONE)
    assert res.degenerate and math.isnan(res.ratio)


def test_exponent_zero_case_gives_half(dom):
    # s = 0: both sides reduce to the L2 norm, RHS counts it twice
    phi = random_bandlimited(dom, seed=3, kmax=8, lmax=4)
    res = interpolation_ratio(phi, 1, 0, 2, ONE, ONE)
    assert res.s == 0
    assert res.ratio == pytest.approx(0.5, rel=1e-12)
    assert res.c0 == 1.0


@pytest.mark.parametrize(
    "k, m, q, s",
    [(1, 0, 2, 0.0), (1, 0, 6, 0.5), (2, 0, 4, 3 / 16), (2, 1, 2, 1 / 4)],
)
def test_exponent_table(k, m, q, s):
    assert interpolation_exponent(k, m, q) == pytest.approx(s, abs=1e-15)


@pytest.mark.parametrize("k, m, q", [(1, 0, 8), (1, 1, 2), (3, 0, 2), (2, 0, math.inf), (1, 0, 1)])
def test_invalid_triples(k, m, q):
    with pytest.raises(UsageError):
        interpolation_exponent(k, m, q)


def test_scaling_invariance(dom):
    # both sides are homogeneous of degree one in phi
    phi = random_bandlimited(dom, seed=5, kmax=8, lmax=4)
    w1 = WeightSpec(WeightKind.RHO, 0.75, order=1)
    w2 = WeightSpec(WeightKind.RHO, 0.75)
    a = interpolation_ratio(phi, 2, 0, 4, w1, w2).ratio
    b = interpolation_ratio(Field(dom, physical=3.0 * phi.values()), 2, 0, 4, w1, w2).ratio
    assert a == pytest.approx(b, rel=1e-12)


# -- decay ------------------------------------------------------------------------


@pytest.fixture
def decay_dom():
    return DomainSpec(math.pi, math.pi, 100.0, 256, 8, 8)


def _linear_cfg():
    return SolverConfig(nonlinearity="off", delta=0.0, dt=1e-2, T=3.0, snapshot_stride=10)


def test_zero_data_is_trivial(decay_dom):
    rep = decay_experiment(Field.zeros(decay_dom), _linear_cfg(), 0.1)
    assert rep.status == "trivial" and not rep.rate_defined


def test_decay_prediction_value():
    p = DecayPrediction.for_domain(DomainSpec(math.pi, math.pi, 10.0, 8, 4, 4), 0.1)
    assert p.predicted_linear_rate == pytest.approx(0.2 * (2 - 0.04))
    assert p.beta_reference is None


def test_linear_decay_is_scale_free(decay_dom):
    u = gaussian_pulse(decay_dom, 1.0, 6.0)
    full = decay_experiment(u, _linear_cfg(), 0.1)
    half = decay_experiment(Field(decay_dom, physical=0.5 * u.values()), _linear_cfg(), 0.1)
    assert full.status == half.status == "ok"
    assert full.nonincreasing and half.nonincreasing
    assert half.rate == pytest.approx(full.rate, rel=1e-10)
    assert full.norm_rate == 0.5 * full.rate
    assert full.rate > 0


def test_decay_rejects_large_data_and_positive_drift(decay_dom):
    u = gaussian_pulse(decay_dom, 1.0, 6.0)
    with pytest.raises(UsageError):
        decay_experiment(u, _linear_cfg(), 0.1, eps0=1e-3)
    cfg = SolverConfig(b=0.5, nonlinearity="off", delta=0.0, dt=1e-2, T=1.0)
    with pytest.raises(UsageError):
        decay_experiment(u, cfg, 0.1)


def test_escaping_pulse_is_invalid():
    dom = DomainSpec(math.pi, math.pi, 30.0, 128, 8, 8)
    u = gaussian_pulse(dom, 1.0, 3.0, center=-12.0)
    cfg = SolverConfig(nonlinearity="off", delta=0.0, dt=1e-2, T=4.0, snapshot_stride=10)
    rep = decay_experiment(u, cfg, 0.1)
    assert rep.status == "invalid"


@given(r=st.floats(0.01, 5.0), c=st.floats(0.1, 10.0))
def test_fit_recovers_exponential(r, c):
    t = np.linspace(0, 3, 31)
    assert fit_decay_rate(t, c * np.exp(-r * t)) == pytest.approx(r, rel=1e-9, abs=1e-12)


# -- identities --------------------------------------------------------------------


def test_zero_trajectory_residuals(dom):
    state = run(Field.zeros(dom), SolverConfig(h=0.1, dt=1e-2, T=0.1, alpha=0.1))
    for which in Identity:
        assert identity_residual(state, which) == 0


def test_linear_identity_reduces_to_conservation(dom):
    state = run(gaussian_pulse(dom, 1.0, 3.0), SolverConfig(nonlinearity="off", dt=1e-2, T=0.5))
    assert identity_residual(state, "l2_linear") <= 1e-12


def test_identity_preconditions(dom):
    state = run(gaussian_pulse(dom, 0.5, 3.0), SolverConfig(h=0.1, delta=0.05, dt=1e-2, T=0.1))
    with pytest.raises(UsageError):
        identity_residual_series(state, Identity.L2_REGULARIZED)
    with pytest.raises(UsageError):
        identity_residual_series(state, Identity.WEIGHTED_EXP)
    state.metrics = state.metrics[:1]
    with pytest.raises(UsageError):
        identity_residual_series(state, Identity.L2_LINEAR)
