import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from zklayer.domain import DomainSpec, Field, l2_norm
from zklayer.errors import DataError, DomainError, UsageError
from zklayer.weights import (
    WeightKind,
    WeightSpec,
    admissibility_constant,
    eta,
    eval_weight,
    eval_weight_derivative,
    local_smoothing_lambda,
    weighted_h1_seminorm,
    weighted_l2_norm,
)

RHO = WeightKind.RHO
KAPPA = WeightKind.KAPPA
XS = np.linspace(-20, 20, 40001)

ALL_WEIGHTS = [
    WeightSpec(RHO, 0.0),
    WeightSpec(RHO, 0.5),
    WeightSpec(RHO, 0.75),
    WeightSpec(RHO, 1.0),
    WeightSpec(KAPPA, 0.0, 0.5),
    WeightSpec(KAPPA, 0.25, 2.0),
    WeightSpec(KAPPA, 1.0, 1.0),
    WeightSpec(WeightKind.EXP, 0.1),
    WeightSpec(WeightKind.EXP, 0.5),
    WeightSpec(WeightKind.ONE),
    WeightSpec(RHO, 0.75, order=1),
]


def test_eta_examples():
    assert eta(0.0) == 0.0
    assert eta(1.0) == 1.0
    assert eta(0.5) == 0.5
    assert eta(-3.0) == 0.0 and eta(7.0) == 1.0


def test_eta_symmetry_and_monotonicity():
    x = np.linspace(-0.5, 1.5, 10_000)
    assert np.max(np.abs(eta(x) + eta(1 - x) - 1)) <= 1e-15
    assert np.all(np.diff(eta(x)) >= 0)


def test_rho_and_kappa_examples():
    assert eval_weight(WeightSpec(RHO, 0.0), 0.0) == pytest.approx(2.0, abs=1e-15)
    assert eval_weight(WeightSpec(RHO, 1.0), 1.0) == pytest.approx(5.0, abs=1e-15)
    assert eval_weight(WeightSpec(RHO, 0.3), -2.0) == pytest.approx(1 + math.exp(-4), abs=1e-15)
    assert eval_weight(WeightSpec(KAPPA, 0.0, 1.7), 0.0) == pytest.approx(1.0, abs=1e-15)


def test_derivative_examples():
    assert eval_weight_derivative(WeightSpec(RHO, 1.0), 1.0) == pytest.approx(4.0, abs=1e-14)
    for beta in (0.5, 1.0, 2.0):
        w = WeightSpec(KAPPA, 0.5, beta)
        assert eval_weight_derivative(w, -2.0) == pytest.approx(2 * beta * math.exp(-4 * beta), rel=1e-14)


def test_outer_pieces_are_exact():
    x_right = np.linspace(0, 10, 101)
    x_left = np.linspace(-10, -1, 91)
    for a in (0.25, 1.0):
        w = WeightSpec(RHO, a)
        np.testing.assert_allclose(eval_weight(w, x_right), 1 + (1 + x_right) ** (2 * a), rtol=1e-15)
        np.testing.assert_allclose(eval_weight(w, x_left), 1 + np.exp(2 * x_left), rtol=1e-15)
    np.testing.assert_allclose(
        eval_weight(WeightSpec(RHO, 0.0), x_right), 3 - (1 + x_right) ** -0.5, rtol=1e-15
    )


@pytest.mark.parametrize("w", ALL_WEIGHTS, ids=lambda w: f"{w.kind.value}-{w.alpha}-{w.beta}-{w.order}")
def test_positive_monotone_admissible(w):
    psi = eval_weight(w, XS)
    dpsi = eval_weight_derivative(w, XS)
    assert np.all(psi > 0)
    if w.order == 0:
        assert np.all(np.diff(psi) >= 0)
        assert np.all(dpsi >= 0)
    assert admissibility_constant(w, XS) <= w.envelope()


@pytest.mark.parametrize("w", ALL_WEIGHTS[:7], ids=str)
def test_bridge_is_c1_and_derivative_consistent(w):
    # finite differences of the value match the analytic derivative everywhere
    x = np.linspace(-3, 2, 5001)
    hstep = 1e-6
    fd = (eval_weight(w, x + hstep) - eval_weight(w, x - hstep)) / (2 * hstep)
    np.testing.assert_allclose(fd, eval_weight_derivative(w, x), rtol=1e-6, atol=1e-8)


def test_rho_equals_one_plus_kappa():
    for a in (0.0, 0.5, 0.75, 1.0):
        np.testing.assert_allclose(
            eval_weight(WeightSpec(RHO, a), XS), 1 + eval_weight(WeightSpec(KAPPA, a, 1.0), XS),
            rtol=0, atol=1e-15,
        )


def test_non_monotone_bridge_is_rejected():
    with pytest.raises(DomainError):
        eval_weight(WeightSpec(RHO, 2.0), 0.0)


@pytest.mark.parametrize("kwargs", [dict(kind="Nope"), dict(kind=RHO, alpha=-1), dict(kind=KAPPA, beta=0.0)])
def test_weight_spec_validation(kwargs):
    with pytest.raises(DomainError):
        WeightSpec(**kwargs)


@pytest.fixture
def dom():
    return DomainSpec(math.pi, 2.0, 12.0, 256, 6, 7)


def test_weighted_l2_zero_and_one(dom, rng):
    assert weighted_l2_norm(Field.zeros(dom), WeightSpec(RHO, 0.5)) == 0.0
    f = Field(dom, physical=rng.standard_normal(dom.shape))
    assert weighted_l2_norm(f, WeightSpec(WeightKind.ONE)) == l2_norm(f)


def test_weighted_l2_rejects_nan(dom):
    u = np.zeros(dom.shape)
    u[0, 0, 0] = np.inf
    with pytest.raises(DataError):
        weighted_l2_norm(Field(dom, physical=u), WeightSpec())


@pytest.mark.parametrize("w", [WeightSpec(WeightKind.EXP, 0.3), WeightSpec(KAPPA, 1.0, 1.0)], ids=str)
def test_weighted_l2_against_quadrature(w):
    dom = DomainSpec(math.pi, 2.0, 12.0, 4096, 6, 7)
    f = Field.from_function(
        dom, lambda x, y, z: np.exp(-((x - 0.5) ** 2)) * np.sin(y) * np.sin(math.pi * z / 2.0)
    )
    xint, _ = integrate.quad(lambda x: np.exp(-2 * (x - 0.5) ** 2) * eval_weight(w, x), -12, 12,
                             points=[-1, 0], limit=200, epsabs=1e-13)
    exact = math.sqrt(xint * dom.L1 * dom.L2 / 4)
    assert weighted_l2_norm(f, w) == pytest.approx(exact, rel=1e-6)


def test_h1_seminorm_single_mode(dom):
    f = Field.from_function(dom, lambda x, y, z: np.sin(2 * y) * np.sin(3 * math.pi * z / 2.0) + 0 * x)
    lam = 4 + (3 * math.pi / 2.0) ** 2
    assert weighted_h1_seminorm(f, WeightSpec()) == pytest.approx(math.sqrt(lam) * l2_norm(f), rel=1e-12)
    assert weighted_h1_seminorm(Field.zeros(dom), WeightSpec()) == 0.0


def test_h1_seminorm_against_quadrature():
    dom = DomainSpec(math.pi, 2.0, 12.0, 1024, 6, 7)
    w = WeightSpec(WeightKind.EXP, 0.2)
    f = Field.from_function(dom, lambda x, y, z: np.exp(-(x**2)) * np.sin(y) * np.sin(math.pi * z / 2.0))
    lam = 1 + (math.pi / 2) ** 2
    integrand = lambda x: ((2 * x) ** 2 + lam) * np.exp(-2 * x * x) * math.exp(0.4 * x)
    xint, _ = integrate.quad(integrand, -12, 12, epsabs=1e-13)
    exact = math.sqrt(xint * dom.L1 * dom.L2 / 4)
    assert weighted_h1_seminorm(f, w) == pytest.approx(exact, rel=1e-6)


def test_local_smoothing_examples(dom):
    zero = [Field.zeros(dom)] * 3
    assert local_smoothing_lambda(zero, [0.0, 0.5, 1.0]) == 0.0
    with pytest.raises(UsageError):
        local_smoothing_lambda([], [])
    f = Field.from_function(dom, lambda x, y, z: np.exp(-(x**2)) * np.sin(y) * np.sin(math.pi * z / 2.0))
    T = 2.0
    lam_T = local_smoothing_lambda([f] * 5, np.linspace(0, T, 5))
    # unit-window spatial integral of |Du|^2, maximized over grid origins
    p = (4 * dom.x**2 + 1 + (math.pi / 2) ** 2) * np.exp(-2 * dom.x**2) * dom.L1 * dom.L2 / 4
    n = math.ceil(1 / dom.dx)
    window = max(np.sum(np.roll(p, -j)[:n]) for j in range(dom.Nx)) * dom.dx
    assert lam_T == pytest.approx(T * window, rel=1e-10)


@given(shift=st.integers(0, 255))
def test_local_smoothing_translation_invariant(shift):
    dom = DomainSpec(math.pi, 2.0, 12.0, 256, 6, 7)
    f = Field.from_function(dom, lambda x, y, z: np.exp(-(x**2)) * np.sin(y) * np.sin(math.pi * z / 2.0))
    g = Field(dom, physical=np.roll(f.values(), shift, axis=0))
    a = local_smoothing_lambda([f, f], [0.0, 1.0])
    b = local_smoothing_lambda([g, g], [0.0, 1.0])
    assert b == pytest.approx(a, rel=1e-10)
