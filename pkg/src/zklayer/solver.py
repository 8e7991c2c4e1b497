r"""Time integration of the regularized Zakharov-Kuznetsov equation

.. math::

    u_t + b u_x + \Delta u_x - h\Delta u + (g_h(u))_x = f

on the truncated layer.  The linear part is integrated exactly through
exponential factors of its symbol and the remaining nonlinear and forcing
terms by the classical four-stage Runge-Kutta method (integrating-factor
RK4).  The state is held as real-FFT half-spectrum coefficients.

The nonlinearity is chosen by ``SolverConfig.nonlinearity``:

``"auto"``
    ``u**2/2`` when ``h == 0`` and ``g_h`` otherwise;
``"gh"`` / ``"quadratic"``
    force one of the two;
``"off"``
    linear equation (forcing only).

Products are formed on the collocation grid and the result is filtered
with the 2/3 mask; the initial state is projected onto the same mask.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import fft

from .domain import (
    DomainSpec,
    Field,
    dealias_mask_half,
    forward_half,
    full_to_half,
    half_to_full,
    inverse_half,
)
from .errors import DataError, InstabilityError, UsageError
from .linear import LinearParams, forcing_coefficients, picard_iterate, symbol
from .truncation import g_h_eval, g_h_prime, g_primitive_values, g_values
from .weights import WeightSpec, WeightKind, weighted_l2_norm

__all__ = [
    "g_h_eval",
    "g_h_prime",
    "SolverConfig",
    "SimulationState",
    "nonlinear_rhs",
    "step",
    "run",
    "seam_magnitude",
    "PerturbationReport",
    "continuous_dependence_experiment",
    "continuous_dependence_ladder",
    "initial_state",
]

NONLINEARITIES = ("auto", "gh", "quadratic", "off")
CFL_LIMIT = 0.5
SEAM_FRACTION = 0.9


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of one integration.

    ``delta`` defaults to ``h`` (the regularized problem); set it to 0 with
    ``nonlinearity="off"`` for the dispersive linear equation.  ``alpha``
    switches on the exponentially weighted diagnostics, evaluated on the
    window ``[-X, window_right]`` (default ``X/2``).
    """

    b: float = 0.0
    h: float = 0.0
    delta: float | None = None
    dt: float = 1e-3
    T: float = 1.0
    snapshot_stride: int = 1
    dealias: bool = True
    picard_check: bool = False
    nonlinearity: str = "auto"
    alpha: float | None = None
    window_right: float | None = None
    keep_fields: bool = False
    seam_tol: float = 1e-8
    check_guard: bool = True

    def __post_init__(self):
        if not (0.0 <= self.h <= 1.0):
            raise UsageError(f"h must be 0 or lie in (0, 1], got {self.h!r}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise UsageError("dt must be positive")
        if not (math.isfinite(self.T) and self.T > 0):
            raise UsageError("T must be positive")
        if self.T < self.dt * (1 - 1e-12):
            raise UsageError("T must be at least dt")
        n = round(self.T / self.dt)
        if abs(n * self.dt - self.T) > 1e-9 * self.T:
            raise UsageError(f"T={self.T} is not a whole number of steps dt={self.dt}")
        if int(self.snapshot_stride) != self.snapshot_stride or self.snapshot_stride < 1:
            raise UsageError("snapshot_stride must be an integer >= 1")
        if self.nonlinearity not in NONLINEARITIES:
            raise UsageError(f"nonlinearity must be one of {NONLINEARITIES}")
        if self.alpha is not None and not (math.isfinite(self.alpha) and self.alpha > 0):
            raise UsageError("alpha must be positive")
        self.params  # validates delta

    @property
    def params(self) -> LinearParams:
        return LinearParams(self.b, self.h if self.delta is None else self.delta)

    @property
    def steps(self):
        return round(self.T / self.dt)

    @property
    def mode(self):
        """Resolved nonlinearity: ``"gh"``, ``"quadratic"`` or ``"off"``."""
        if self.nonlinearity == "auto":
            return "quadratic" if self.h == 0 else "gh"
        if self.nonlinearity == "gh" and self.h == 0:
            return "quadratic"
        return self.nonlinearity


@dataclass
class SimulationState:
    """Solver state: half-spectrum coefficients plus recorded diagnostics."""

    dom: DomainSpec
    uh: np.ndarray
    t: float = 0.0
    step_count: int = 0
    metrics: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    flags: dict = field(default_factory=dict)
    config: SolverConfig | None = None

    @property
    def u(self) -> Field:
        return Field(self.dom, physical=inverse_half(self.uh, self.dom))


# -- pointwise pieces ----------------------------------------------------------


def _g(u, h, mode):
    if mode == "quadratic":
        return u * u / 2.0
    return g_values(u, h)


def _primitive(u, h, mode):
    if mode == "off":
        return np.zeros_like(u)
    if mode == "quadratic":
        return u**3 / 3.0
    return g_primitive_values(u, h)


class _Operators:
    """Quantities fixed for one (domain, config) pair."""

    def __init__(self, dom, cfg):
        self.dom = dom
        self.cfg = cfg
        self.mode = cfg.mode
        self.mask = dealias_mask_half(dom) if cfg.dealias else np.ones(dom.half_shape, bool)
        L = symbol(dom.xi_half[:, None, None], dom.lam[None], cfg.params)
        self.E = np.exp(L * cfg.dt / 2.0)
        self.E2 = self.E * self.E
        self.ixi = 1j * dom.xi_half[:, None, None]
        self._const_forcing = None

    def forcing(self, f, t):
        if f is None:
            return None
        if isinstance(f, Field):
            if self._const_forcing is None:
                self._const_forcing = self.mask * full_to_half(f.coefficients(), self.dom)
            return self._const_forcing
        fh = forcing_coefficients(f, t, self.dom)
        return None if fh is None else self.mask * full_to_half(fh, self.dom)

    def rhs(self, vh, t, f):
        out = None
        if self.mode != "off":
            u = inverse_half(vh, self.dom)
            gh = forward_half(_g(u, self.cfg.h, self.mode), self.dom)
            out = -self.ixi * (self.mask * gh)
        fh = self.forcing(f, t)
        if fh is not None:
            out = fh if out is None else out + fh
        if out is None:
            return np.zeros_like(vh)
        return out


def nonlinear_rhs(u: Field, f, h, cfg: SolverConfig) -> Field:
    """``-d_x[g(u)] + f`` with dealiasing, as a Field (full spectral layout).

    ``f`` may be None, a Field or a callable of time (evaluated at 0).
    """
    vals = u.values()
    if not np.all(np.isfinite(vals)):
        bad = tuple(int(i) for i in np.argwhere(~np.isfinite(vals))[0])
        raise DataError(f"non-finite input to the nonlinearity at index {bad}")
    if h != cfg.h:
        cfg = replace(cfg, h=h)
    ops = _Operators(u.dom, cfg)
    vh = full_to_half(u.coefficients(), u.dom)
    return Field(u.dom, spectral=half_to_full(ops.rhs(vh, 0.0, f), u.dom))


def _rk4(ops, vh, t, f):
    dt = ops.cfg.dt
    E, E2 = ops.E, ops.E2
    k1 = ops.rhs(vh, t, f)
    k2 = ops.rhs(E * (vh + 0.5 * dt * k1), t + 0.5 * dt, f)
    k3 = ops.rhs(E * vh + 0.5 * dt * k2, t + 0.5 * dt, f)
    k4 = ops.rhs(E2 * vh + dt * E * k3, t + dt, f)
    return E2 * vh + (dt / 6.0) * (E2 * k1 + 2.0 * E * (k2 + k3) + k4)


def step(state: SimulationState, cfg: SolverConfig, f=None, ops=None) -> SimulationState:
    """Advance ``state`` by one step of ``cfg.dt`` (in place; also returned)."""
    ops = ops or _Operators(state.dom, cfg)
    with np.errstate(over="ignore", invalid="ignore"):
        new = _rk4(ops, state.uh, state.t, f)
    n = state.step_count + 1
    if not np.all(np.isfinite(new)):
        raise InstabilityError(f"non-finite values after step {n} (t={n * cfg.dt:g})", step=n)
    state.uh = new
    state.step_count = n
    state.t = n * cfg.dt
    return state


# -- diagnostics recorded during a run ----------------------------------------


def seam_magnitude(u: np.ndarray, dom: DomainSpec):
    """Largest ``|u|`` on the x columns within 10% of the torus seam."""
    near = np.abs(dom.x) >= SEAM_FRACTION * dom.X
    return float(np.max(np.abs(u[near]))) if np.any(near) else 0.0


def _record(ops, vh, t, step_count, f):
    dom, cfg = ops.dom, ops.cfg
    u = inverse_half(vh, dom)
    hw = dom.half_weights[:, None, None]
    a2 = np.abs(vh) ** 2
    norm = 1.0 / (2.0 * dom.X)
    mass = float(np.sum(hw * a2)) * norm
    k2 = dom.xi_half[:, None, None] ** 2 + dom.lam[None]
    grad2 = float(np.sum(hw * k2 * a2)) * norm
    cubic = float(np.sum(u**3)) * dom.cell_volume
    rec = {
        "t": t,
        "step": step_count,
        "mass": mass,
        "grad2": grad2,
        "cubic": cubic,
        "energy": grad2 - cubic / 3.0,
        "max_abs": float(np.max(np.abs(u))),
        "seam": seam_magnitude(u, dom),
    }
    fh = ops.forcing(f, t)
    fu = None
    if fh is not None:
        fu = inverse_half(fh, dom)
        rec["forcing_work"] = float(np.sum(fu * u)) * dom.cell_volume
    else:
        rec["forcing_work"] = 0.0
    if cfg.alpha is not None:
        rec.update(_weighted_terms(ops, vh, u, fu))
    return rec, u


def _weighted_terms(ops, vh, u, fu):
    """Window integrals entering the exponentially weighted identity."""
    dom, cfg = ops.dom, ops.cfg
    alpha = cfg.alpha
    right = cfg.window_right if cfg.window_right is not None else 0.5 * dom.X
    inside = dom.x <= right
    psi = np.where(inside, np.exp(2.0 * alpha * dom.x), 0.0)
    dpsi = 2.0 * alpha * psi
    ph = vh * dom.phase_half[:, None, None]
    c = fft.irfft(ph, n=dom.Nx, axis=0) / dom.dx
    cx = fft.irfft(ops.ixi * ph, n=dom.Nx, axis=0) / dom.dx
    p0 = np.sum(c * c, axis=(1, 2))
    px = np.sum(cx * cx, axis=(1, 2))
    pt = np.sum(dom.lam[None] * c * c, axis=(1, 2))
    dx = dom.dx
    prim = np.sum(_primitive(u, cfg.h, ops.mode), axis=(1, 2)) * dom.dy * dom.dz
    out = {
        "w_mass": float(np.sum(psi * p0)) * dx,
        "w_flux": float(np.sum(dpsi * (3.0 * px + pt))) * dx,
        "w_grad2": float(np.sum(psi * (px + pt))) * dx,
        "w_nl": float(np.sum(dpsi * prim)) * dx,
        "w_forcing": 0.0,
        "outside_max": float(np.max(np.abs(u[~inside]))) if np.any(~inside) else 0.0,
    }
    if fu is not None:
        out["w_forcing"] = float(np.sum(psi[:, None, None] * fu * u)) * dom.cell_volume
    return out


# -- driver --------------------------------------------------------------------


def initial_state(u0: Field, cfg: SolverConfig) -> SimulationState:
    """Project ``u0`` onto the dealiasing mask and check the start-up guards."""
    dom = u0.dom
    uh = full_to_half(u0.coefficients(), dom)
    if cfg.dealias:
        uh = uh * dealias_mask_half(dom)
    vals = inverse_half(uh, dom)
    if not np.all(np.isfinite(vals)):
        raise DataError("initial data contains non-finite values")
    if cfg.check_guard:
        seam = seam_magnitude(vals, dom)
        if seam > cfg.seam_tol:
            raise UsageError(
                f"initial data has magnitude {seam:.3e} near the torus seam "
                f"(guard {cfg.seam_tol:.1e}); enlarge X or move the pulse"
            )
        if cfg.mode != "off":
            cfl = cfg.dt * float(np.max(np.abs(vals))) * float(np.max(np.abs(dom.xi)))
            if cfl > CFL_LIMIT:
                raise UsageError(
                    f"dt*max|u|*max|xi| = {cfl:.3g} exceeds {CFL_LIMIT}; reduce dt"
                )
    return SimulationState(dom, uh)


def _store(state, ops, f, keep):
    rec, u = _record(ops, state.uh, state.t, state.step_count, f)
    state.metrics.append(rec)
    if keep:
        state.snapshots.append((state.t, u))
    if rec["seam"] > ops.cfg.seam_tol and not state.flags.get("seam_warning"):
        state.flags["seam_warning"] = True
        state.flags["seam_warning_t"] = state.t


def run(u0: Field, cfg: SolverConfig, f=None, callback=None) -> SimulationState:
    """Integrate from ``u0`` to ``cfg.T``.

    Metrics are recorded at t=0, every ``snapshot_stride`` steps and at the
    final time.  ``callback(state)`` is called after each record.  The
    seam guard is enforced on the initial data; a later violation only sets
    ``state.flags["seam_warning"]``.
    """
    state = initial_state(u0, cfg)
    state.config = cfg
    state.flags["forced"] = f is not None
    ops = _Operators(u0.dom, cfg)
    if cfg.picard_check:
        _picard_check(state, cfg, f)
    _store(state, ops, f, cfg.keep_fields)
    if callback:
        callback(state)
    n = cfg.steps
    for i in range(1, n + 1):
        step(state, cfg, f, ops)
        if i % cfg.snapshot_stride == 0 or i == n:
            _store(state, ops, f, cfg.keep_fields)
            if callback:
                callback(state)
    return state


def _picard_check(state, cfg, f, n_iter=4):
    if cfg.params.delta <= 0 or cfg.mode == "off":
        state.flags["picard"] = "skipped"
        return
    u0 = Field(state.dom, spectral=half_to_full(state.uh, state.dom))
    h = 0.0 if cfg.mode == "quadratic" else cfg.h
    res = picard_iterate(u0, f, cfg.params, h, n_iter, cfg.dt)
    probe = step(SimulationState(state.dom, state.uh.copy()), cfg, f)
    diff = full_to_half(res.field.coefficients(), state.dom) - probe.uh
    hw = state.dom.half_weights[:, None, None]
    dist = math.sqrt(float(np.sum(hw * np.abs(diff) ** 2)) / (2.0 * state.dom.X))
    state.flags["picard"] = {"distance": dist, "differences": res.differences}


# -- continuous dependence ---------------------------------------------------


@dataclass
class PerturbationReport:
    eps: float
    ratio: float
    exact_match: bool
    initial_distance: float
    distances: list
    times: list


def _weighted_distance(a, b, dom, w):
    return weighted_l2_norm(Field(dom, physical=a - b), w)


def continuous_dependence_ladder(u0: Field, perturbation: Field, eps_values, cfg, w):
    """Perturbed runs compared with one shared unperturbed run.

    Distances are measured in the weighted L2 norm of ``w`` at every
    recorded snapshot; the ratio is ``sup_t dist(t) / dist(0)``.
    """
    return _ladder(u0, perturbation, eps_values, cfg, w)[1]


def _ladder(u0, perturbation, eps_values, cfg, w):
    if w.kind not in (WeightKind.KAPPA, WeightKind.EXP, WeightKind.ONE):
        raise UsageError(f"unsupported weight kind {w.kind.value} for the perturbation study")
    for eps in eps_values:
        if not eps > 0:
            raise UsageError("eps must be positive")
    cfg = replace(cfg, keep_fields=True)
    base = run(u0, cfg)
    reports = []
    pvals = perturbation.values()
    for eps in eps_values:
        pert = Field(u0.dom, physical=u0.values() + eps * pvals)
        other = run(pert, cfg)
        dists = [
            _weighted_distance(ua, ub, u0.dom, w)
            for (_, ua), (_, ub) in zip(base.snapshots, other.snapshots)
        ]
        times = [t for t, _ in base.snapshots]
        d0 = dists[0]
        if d0 == 0:
            reports.append(PerturbationReport(eps, math.nan, True, 0.0, dists, times))
        else:
            reports.append(PerturbationReport(eps, max(dists) / d0, False, d0, dists, times))
    return base, reports


def continuous_dependence_experiment(u0: Field, perturbation: Field, eps, cfg, w: WeightSpec):
    """Amplification ``sup_t ||u - u~||_w / ||u0 - u0~||_w`` for ``u0~ = u0 + eps*p``.

    The distance at t=0 is taken after projection onto the dealiasing
    mask, i.e. between the states actually integrated.
    """
    return continuous_dependence_ladder(u0, perturbation, [eps], cfg, w)[0]
