import math

import numpy as np
import pytest

from zklayer.diagnostics import Identity, identity_residual
from zklayer.domain import DomainSpec, Field, dealias_mask, half_to_full
from zklayer.errors import DataError, InstabilityError, UsageError
from zklayer.initial import gaussian_pulse, single_mode
from zklayer.linear import propagate
from zklayer.solver import (
    SolverConfig,
    continuous_dependence_experiment,
    initial_state,
    nonlinear_rhs,
    run,
    seam_magnitude,
    step,
)
from zklayer.weights import WeightKind, WeightSpec


@pytest.fixture
def dom():
    return DomainSpec(math.pi, math.pi, 20.0, 64, 8, 8)


@pytest.fixture
def pulse(dom):
    return gaussian_pulse(dom, 0.5, 3.0)


# -- configuration -------------------------------------------------------------


@pytest.mark.parametrize(
    "kwargs, msg",
    [
        (dict(dt=-1.0), "dt must be positive"),
        (dict(T=0.0), "T must be positive"),
        (dict(dt=0.3, T=1.0), "whole number"),
        (dict(snapshot_stride=0), "snapshot_stride"),
        (dict(nonlinearity="cubic"), "nonlinearity"),
        (dict(h=2.0), "h must"),
    ],
)
def test_config_validation(kwargs, msg):
    with pytest.raises(UsageError, match=msg):
        SolverConfig(**kwargs)


def test_delta_follows_h_and_mode_resolution():
    assert SolverConfig(h=0.2).params.delta == 0.2
    assert SolverConfig(h=0.2, delta=0.0).params.delta == 0.0
    assert SolverConfig(h=0.0).mode == "quadratic"
    assert SolverConfig(h=0.1).mode == "gh"
    assert SolverConfig(h=0.0, nonlinearity="gh").mode == "quadratic"


# -- right-hand side -----------------------------------------------------------


def test_rhs_of_zero_and_constant_in_x(dom):
    cfg = SolverConfig(h=0.5)
    assert np.all(nonlinear_rhs(Field.zeros(dom), None, 0.5, cfg).spectral == 0)
    # constant along x: only the transverse shape varies
    _, Y, Z = dom.mesh()
    c = Field(dom, physical=np.sin(Y) * np.sin(Z) * 1.5)
    out = nonlinear_rhs(c, None, 0.5, cfg).values()
    assert np.max(np.abs(out)) < 1e-13


@pytest.mark.parametrize("h", [0.0, 0.2])
def test_rhs_matches_pointwise_product(dom, h):
    u = single_mode(dom, 2, (1, 1), amplitude=0.8)
    X, Y, Z = dom.mesh()
    xi = math.pi * 2 / dom.X
    shape = np.sin(math.pi * Y / dom.L1) * np.sin(math.pi * Z / dom.L2)
    uu = 0.8 * np.cos(xi * X) * shape
    ux = -0.8 * xi * np.sin(xi * X) * shape
    oracle = Field(dom, physical=-uu * ux).coefficients() * dealias_mask(dom)
    got = nonlinear_rhs(u, None, h, SolverConfig(h=h)).spectral
    assert np.max(np.abs(got - oracle)) <= 1e-12 * np.max(np.abs(oracle))


def test_rhs_adds_forcing(dom, pulse):
    f = single_mode(dom, 1, (1, 2), amplitude=0.1)
    cfg = SolverConfig()
    a = nonlinear_rhs(pulse, f, 0.0, cfg).spectral
    b = nonlinear_rhs(pulse, None, 0.0, cfg).spectral
    np.testing.assert_allclose(a - b, f.coefficients() * dealias_mask(dom), atol=1e-14)


def test_rhs_rejects_non_finite(dom):
    vals = np.zeros(dom.shape)
    vals[3, 2, 1] = np.nan
    with pytest.raises(DataError, match=r"\(3, 2, 1\)"):
        nonlinear_rhs(_RawField(dom, vals), None, 0.0, SolverConfig())


class _RawField:
    """Minimal stand-in carrying raw (unchecked) grid values."""

    def __init__(self, dom, vals):
        self.dom = dom
        self._vals = vals

    def values(self):
        return self._vals


def test_gh_and_quadratic_agree_inside_core(dom):
    u = gaussian_pulse(dom, 0.5, 3.0)
    a = run(u, SolverConfig(h=0.1, delta=0.0, nonlinearity="gh", dt=1e-2, T=0.1))
    b = run(u, SolverConfig(h=0.1, delta=0.0, nonlinearity="quadratic", dt=1e-2, T=0.1))
    assert np.array_equal(a.uh, b.uh)


# -- stepping --------------------------------------------------------------------


def test_zero_trajectory(dom):
    state = run(Field.zeros(dom), SolverConfig(dt=1e-2, T=0.1, h=0.1))
    assert np.all(state.uh == 0)
    assert all(m["mass"] == 0 and m["energy"] == 0 for m in state.metrics)


def test_linear_step_is_exact_propagation(dom, pulse):
    cfg = SolverConfig(delta=0.3, b=0.5, nonlinearity="off", dt=1e-2, T=1e-2)
    state = initial_state(pulse, cfg)
    start = Field(dom, spectral=half_to_full(state.uh, dom))
    step(state, cfg)
    ref = propagate(start, cfg.dt, cfg.params).spectral
    got = half_to_full(state.uh, dom)
    assert np.max(np.abs(got - ref)) <= 1e-14 * np.max(np.abs(ref))
    assert state.t == cfg.dt and state.step_count == 1


def test_linear_run_conserves_l2(dom, pulse):
    state = run(pulse, SolverConfig(nonlinearity="off", dt=1e-2, T=1.0, snapshot_stride=10))
    m = [r["mass"] for r in state.metrics]
    assert max(abs(v - m[0]) for v in m) <= 1e-12 * m[0]
    assert len(state.metrics) == 11


def test_instability_names_step(dom):
    u = single_mode(dom, 8, (3, 3), amplitude=50.0)
    cfg = SolverConfig(h=0.0, delta=0.0, dt=0.1, T=50.0, check_guard=False)
    with pytest.raises(InstabilityError) as err:
        run(u, cfg)
    assert err.value.step >= 1
    assert f"step {err.value.step}" in str(err.value)


def test_seam_guard_rejects_wide_data(dom):
    u = gaussian_pulse(dom, 1.0, 8.0)
    assert seam_magnitude(u.values(), dom) > 1e-8
    with pytest.raises(UsageError, match="seam"):
        run(u, SolverConfig())


def test_cfl_guard(dom):
    u = gaussian_pulse(dom, 40.0, 3.0)
    with pytest.raises(UsageError, match="reduce dt"):
        run(u, SolverConfig(dt=0.05, T=0.1))


def test_mid_run_seam_warning_is_flagged():
    dom = DomainSpec(math.pi, math.pi, 10.0, 128, 8, 8)
    u = gaussian_pulse(dom, 0.5, 1.5, center=-2.0)
    state = run(u, SolverConfig(nonlinearity="off", dt=0.05, T=3.0))
    assert state.flags.get("seam_warning") is True


# -- identities ------------------------------------------------------------------


def test_regularized_identity_residual(dom, pulse):
    state = run(pulse, SolverConfig(h=0.1, dt=1e-3, T=0.2, snapshot_stride=1))
    assert identity_residual(state, Identity.L2_REGULARIZED) <= 1e-6


def test_forced_linear_identity(dom, pulse):
    f = single_mode(dom, 1, (1, 1), amplitude=0.05)
    f = Field(dom, physical=f.values() * np.exp(-(dom.x[:, None, None] / 3) ** 2))
    state = run(pulse, SolverConfig(nonlinearity="off", delta=0.1, dt=1e-3, T=0.2), f=f)
    assert state.flags["forced"]
    assert identity_residual(state, Identity.L2_LINEAR) <= 1e-8


def test_weighted_identity_residual(dom, pulse):
    cfg = SolverConfig(h=0.1, dt=1e-3, T=0.2, alpha=0.1, window_right=10.0)
    state = run(pulse, cfg)
    assert identity_residual(state, Identity.WEIGHTED_EXP) <= 1e-6


def test_picard_check_flag(dom, pulse):
    state = run(pulse, SolverConfig(h=0.1, dt=1e-3, T=1e-3, picard_check=True))
    info = state.flags["picard"]
    assert info["distance"] <= 1e-6
    d = info["differences"]
    assert all(b < a for a, b in zip(d, d[1:]))


# -- continuous dependence ---------------------------------------------------------


def test_zero_perturbation_is_exact_match(dom, pulse):
    rep = continuous_dependence_experiment(
        pulse, Field.zeros(dom), 1e-3, SolverConfig(dt=1e-2, T=0.1), WeightSpec(WeightKind.KAPPA, 1.0, 1.0)
    )
    assert rep.exact_match and math.isnan(rep.ratio)


def test_linear_isometry_ratio_is_one(dom, pulse):
    p = gaussian_pulse(dom, 1.0, 2.5, center=2.0, modes=(1, 2))
    rep = continuous_dependence_experiment(
        pulse, p, 1e-3, SolverConfig(nonlinearity="off", delta=0.0, dt=1e-2, T=0.5), WeightSpec(WeightKind.ONE)
    )
    assert rep.ratio == pytest.approx(1.0, abs=1e-10)


def test_unsupported_weight_is_rejected(dom, pulse):
    with pytest.raises(UsageError):
        continuous_dependence_experiment(
            pulse, pulse, 1e-3, SolverConfig(dt=1e-2, T=0.1), WeightSpec(WeightKind.RHO, 0.5)
        )
