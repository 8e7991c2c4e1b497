r"""Exact solution operator of the linear problem

.. math::

    u_t + b u_x + \Delta u_x - \delta\Delta u = f

Every Fourier-sine mode evolves independently with the symbol

.. math::

    L(\xi, \lambda) = i(\xi^3 - b\xi + \xi\lambda) - \delta(\xi^2 + \lambda),

so the homogeneous flow is a pointwise multiplication by ``exp(L t)``.
Forcing enters through the Duhamel integral, evaluated by Gauss-Legendre
quadrature in time.  :func:`picard_iterate` runs the fixed-point map of the
contraction argument for the truncated equation and serves as an
independent check of the time stepper.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre
from scipy import interpolate

from .domain import DomainSpec, Field, dealias_mask, forward_full, inverse_full
from .errors import ConvergenceError, DomainError, UsageError
from .truncation import g_values

__all__ = [
    "LinearParams",
    "symbol",
    "symbol_grid",
    "propagate",
    "SampledForcing",
    "forcing_coefficients",
    "duhamel_apply",
    "PicardResult",
    "picard_iterate",
    "spectral_l2",
]


@dataclass(frozen=True)
class LinearParams:
    """Drift ``b`` and parabolic regularization ``delta`` in ``[0, 1]``."""

    b: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.b) and math.isfinite(self.delta)):
            raise DomainError("b and delta must be finite")
        if not (0.0 <= self.delta <= 1.0):
            raise DomainError(f"delta must lie in [0, 1], got {self.delta!r}")


def symbol(xi, lam, p):
    """Per-mode growth rate ``i(xi^3 - b xi + xi lam) - delta (xi^2 + lam)``."""
    xi = np.asarray(xi, dtype=float)
    lam = np.asarray(lam, dtype=float)
    out = np.asarray(1j * (xi**3 - p.b * xi + xi * lam) - p.delta * (xi * xi + lam))
    return out if out.ndim else complex(out)


def symbol_grid(dom: DomainSpec, p: LinearParams, half=False):
    """The symbol on the full (or real-FFT half) spectral grid."""
    xi = dom.xi_half if half else dom.xi
    return symbol(xi[:, None, None], dom.lam[None, :, :], p)


def spectral_l2(dom, uhat):
    """L2 norm from full-layout coefficients (Parseval)."""
    return math.sqrt(float(np.sum(np.abs(uhat) ** 2)) / (2.0 * dom.X))


def propagate(u0: Field, t, p: LinearParams) -> Field:
    """Homogeneous linear flow over time ``t >= 0``."""
    if not t >= 0:
        raise UsageError(f"propagation time must be >= 0, got {t!r}")
    uhat = u0.coefficients()
    if t == 0:
        return Field(u0.dom, spectral=uhat.copy())
    return Field(u0.dom, spectral=uhat * np.exp(symbol_grid(u0.dom, p) * t))


# -- forcing -----------------------------------------------------------------


class SampledForcing:
    """Forcing given by snapshots at increasing times.

    Coefficients are interpolated in time by a cubic spline (linear for two
    samples).  Evaluation outside the sampled interval is a usage error.
    """

    def __init__(self, times, fields):
        times = np.asarray(times, dtype=float)
        fields = list(fields)
        if len(fields) < 2 or times.shape != (len(fields),):
            raise UsageError("need at least two samples with one time each")
        if np.any(np.diff(times) <= 0):
            raise UsageError("sample times must increase")
        self.dom = fields[0].dom
        self.t0, self.t1 = float(times[0]), float(times[-1])
        coeffs = np.stack([f.coefficients() for f in fields])
        self._spline = interpolate.make_interp_spline(times, coeffs, k=min(3, len(fields) - 1))

    def covers(self, a, b):
        tol = 1e-12 * max(1.0, abs(self.t1))
        return a >= self.t0 - tol and b <= self.t1 + tol

    def __call__(self, t):
        if not self.covers(t, t):
            raise UsageError(f"forcing sampled on [{self.t0}, {self.t1}] evaluated at t={t}")
        return Field(self.dom, spectral=self._spline(t))


def forcing_coefficients(f, t, dom):
    """Full-layout coefficients of the forcing at time ``t`` (None if absent).

    ``f`` may be None, a Field (time independent) or a callable returning a
    Field or a physical array.
    """
    if f is None:
        return None
    val = f(t) if callable(f) else f
    if val is None:
        return None
    if isinstance(val, Field):
        return val.coefficients()
    arr = np.asarray(val, dtype=float)
    if arr.shape != dom.shape:
        raise UsageError(f"forcing has shape {arr.shape}, expected {dom.shape}")
    return forward_full(arr, dom)


def _check_coverage(f, t):
    if isinstance(f, SampledForcing) and not f.covers(0.0, t):
        raise UsageError(f"forcing samples [{f.t0}, {f.t1}] do not cover [0, {t}]")


def _gauss_nodes(t, nq):
    x, w = legendre.leggauss(nq)
    return 0.5 * t * (x + 1.0), 0.5 * t * w, x


def duhamel_apply(u0: Field, f, t, p: LinearParams, nq=8) -> Field:
    """Mild solution at time ``t``: free flow plus the Duhamel integral."""
    if nq < 2:
        raise UsageError("nq must be at least 2")
    out = propagate(u0, t, p).spectral
    if f is None or t == 0:
        return Field(u0.dom, spectral=out)
    _check_coverage(f, t)
    L = symbol_grid(u0.dom, p)
    tau, w, _ = _gauss_nodes(t, nq)
    for tj, wj in zip(tau, w):
        fh = forcing_coefficients(f, tj, u0.dom)
        if fh is not None:
            out = out + wj * np.exp(L * (t - tj)) * fh
    return Field(u0.dom, spectral=out)


# -- Picard iteration ----------------------------------------------------------


@dataclass
class PicardResult:
    field: Field
    differences: list = field(default_factory=list)

    @property
    def ratios(self):
        d = self.differences
        return [d[i + 1] / d[i] for i in range(len(d) - 1) if d[i] > 0]


def _integration_matrix(x):
    """``S[j, i] = int_{-1}^{x_j} l_i(s) ds`` for the Lagrange basis on ``x``."""
    n = len(x)
    V = legendre.legvander(x, n - 1)
    coeffs = np.linalg.inv(V)
    S = np.empty((n, n))
    for i in range(n):
        S[:, i] = legendre.legval(x, legendre.legint(coeffs[:, i], lbnd=-1.0))
    return S


def picard_iterate(u0: Field, f, p: LinearParams, h, n_iter, t, nq=8) -> PicardResult:
    """Iterate ``v -> e^{tL} u0 + int e^{(t-s)L} (f - d_x g_h(v))(s) ds``.

    The iterates live on the Gauss-Legendre nodes of ``[0, t]``; the time
    integral uses the collocation integration matrix on those nodes for
    interior values and the quadrature weights for the final value.  The
    nonlinear term is dealiased with the mask of the domain, and ``u0`` is
    projected onto it, matching the time stepper.  ``h = 0`` selects
    ``u**2/2``.

    Returns the final-time iterate and the L2 norms of successive
    final-time differences.  Raises :class:`ConvergenceError` if a
    difference grows tenfold over the previous one.
    """
    if not p.delta > 0:
        raise UsageError("Picard iteration needs delta > 0")
    if n_iter < 1:
        raise UsageError("n_iter must be >= 1")
    if not t > 0:
        raise UsageError("t must be positive")
    _check_coverage(f, t)
    dom = u0.dom
    mask = dealias_mask(dom)
    L = symbol_grid(dom, p)
    uh0 = np.where(mask, u0.coefficients(), 0.0)
    tau, w, x = _gauss_nodes(t, nq)
    S = 0.5 * t * _integration_matrix(x)
    free = [np.exp(L * tj) * uh0 for tj in tau]
    forcing = []
    for tj in tau:
        fh = forcing_coefficients(f, tj, dom)
        forcing.append(None if fh is None else np.where(mask, fh, 0.0))
    ixi = 1j * dom.xi[:, None, None]

    nodes = free
    final = np.exp(L * t) * uh0
    diffs = []
    for _ in range(n_iter):
        F = []
        for j, vj in enumerate(nodes):
            gh = forward_full(g_values(inverse_full(vj, dom), h), dom)
            rhs = -ixi * np.where(mask, gh, 0.0)
            if forcing[j] is not None:
                rhs = rhs + forcing[j]
            F.append(rhs)
        new_nodes = []
        for j, tj in enumerate(tau):
            acc = free[j].copy()
            for i, ti in enumerate(tau):
                if S[j, i] != 0:
                    acc += S[j, i] * np.exp(L * (tj - ti)) * F[i]
            new_nodes.append(acc)
        new_final = np.exp(L * t) * uh0
        for i, ti in enumerate(tau):
            new_final = new_final + w[i] * np.exp(L * (t - ti)) * F[i]
        d = spectral_l2(dom, new_final - final)
        if diffs and diffs[-1] > 0 and d > 10.0 * diffs[-1]:
            raise ConvergenceError(
                f"Picard iteration diverges: difference grew from {diffs[-1]:.3e} to {d:.3e}"
            )
        diffs.append(d)
        nodes, final = new_nodes, new_final
    return PicardResult(Field(dom, spectral=final), diffs)
