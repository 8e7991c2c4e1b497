r"""Admissible weight functions, the cut-off :math:`\eta`, and weighted norms.

Four weight families are provided:

* ``RhoAlpha``: :math:`\rho_\alpha(x) = 1 + e^{2x}` for ``x <= -1``,
  :math:`1 + (1+x)^{2\alpha}` (``alpha > 0``) or :math:`3 - (1+x)^{-1/2}`
  (``alpha = 0``) for ``x >= 0``;
* ``KappaAlphaBeta``: :math:`\kappa_{\alpha,\beta}(x) = e^{2\beta x}` for
  ``x <= -1``, :math:`(1+x)^{2\alpha}` or :math:`2 - (1+x)^{-1/2}` for ``x >= 0``;
* ``Exp2Alpha``: :math:`e^{2\alpha x}`;
* ``One``: the constant 1.

On the bridge ``(-1, 0)`` the piecewise families use the quintic Hermite
polynomial matching value, slope and curvature of both outer pieces, so the
weights are C^2.  Positivity of the slope on the bridge is checked when a
weight is first evaluated.  :math:`\rho_\alpha` is built as
:math:`1 + \kappa_{\alpha,1}`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .domain import transverse_profiles
from .errors import DataError, DomainError, UsageError

__all__ = [
    "WeightKind",
    "WeightSpec",
    "eta",
    "eval_weight",
    "eval_weight_derivative",
    "admissibility_constant",
    "weighted_l2_norm",
    "weighted_h1_seminorm",
    "window_mask",
    "local_smoothing_lambda",
]


class WeightKind(str, enum.Enum):
    RHO = "RhoAlpha"
    KAPPA = "KappaAlphaBeta"
    EXP = "Exp2Alpha"
    ONE = "One"


@dataclass(frozen=True)
class WeightSpec:
    """An admissible weight.

    ``order=1`` selects the derivative of the weight as the weight itself
    (e.g. :math:`\\rho'_{3/4}`), which is again admissible.
    """

    kind: WeightKind = WeightKind.ONE
    alpha: float = 0.0
    beta: float = 1.0
    order: int = 0

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", WeightKind(self.kind))
        except ValueError:
            raise DomainError(f"unknown weight kind {self.kind!r}") from None
        if not (math.isfinite(self.alpha) and self.alpha >= 0):
            raise DomainError(f"alpha must be >= 0, got {self.alpha!r}")
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise DomainError(f"beta must be > 0, got {self.beta!r}")
        if self.order not in (0, 1):
            raise DomainError(f"order must be 0 or 1, got {self.order!r}")
        if self.order == 1 and self.kind is WeightKind.ONE:
            raise DomainError("the constant weight has no admissible derivative weight")
        if self.order == 1 and self.kind is WeightKind.EXP and self.alpha == 0:
            raise DomainError("derivative of exp(0*x) vanishes identically")

    def envelope(self):
        """Conservative bound on ``|psi'|/psi`` used by the property tests."""
        return 2.0 * max(1.0, 2.0 * self.alpha, 2.0 * self.beta) + 1.0


def _phi(x):
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def eta(x):
    """Smooth non-decreasing cut-off: 0 for ``x <= 0``, 1 for ``x >= 1``.

    Realized as ``phi(x) / (phi(x) + phi(1 - x))`` with
    ``phi(x) = exp(-1/x)`` for positive x, which gives
    ``eta(x) + eta(1 - x) = 1`` up to rounding.
    """
    xa = np.asarray(x, dtype=float)
    a = _phi(np.atleast_1d(xa))
    b = _phi(np.atleast_1d(1.0 - xa))
    out = a / (a + b)
    return out.reshape(xa.shape) if xa.ndim else float(out[0])


# -- piecewise families ------------------------------------------------------


def _left(beta, x, n):
    return (2.0 * beta) ** n * np.exp(2.0 * beta * x)


def _right(alpha, x, n):
    s = 1.0 + x
    if alpha > 0:
        p = 2.0 * alpha
        coef = [1.0, p, p * (p - 1.0)][n]
        return coef * s ** (p - n)
    if n == 0:
        return 2.0 - s**-0.5
    return [None, 0.5, -0.75][n] * s ** (-0.5 - n)


@lru_cache(maxsize=None)
def _bridge_coeffs(alpha, beta):
    """Monomial coefficients in ``t = x + 1`` of the quintic bridge."""
    lo = [float(_left(beta, np.float64(-1.0), n)) for n in range(3)]
    hi = [float(_right(alpha, np.float64(0.0), n)) for n in range(3)]
    a0, a1, a2 = lo[0], lo[1], lo[2] / 2.0
    A = hi[0] - (a0 + a1 + a2)
    B = hi[1] - (a1 + 2.0 * a2)
    C = hi[2] - 2.0 * a2
    a3 = 10.0 * A - 4.0 * B + C / 2.0
    a4 = -15.0 * A + 7.0 * B - C
    a5 = 6.0 * A - 3.0 * B + C / 2.0
    coeffs = np.array([a0, a1, a2, a3, a4, a5])
    t = np.linspace(0.0, 1.0, 4001)
    slope = np.polynomial.polynomial.polyval(t, np.polynomial.polynomial.polyder(coeffs))
    if np.min(slope) <= 0:
        raise DomainError(
            f"quintic bridge is not increasing for alpha={alpha}, beta={beta}; "
            "choose smaller parameters"
        )
    return coeffs


def _kappa(alpha, beta, x, n):
    coeffs = _bridge_coeffs(alpha, beta)
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    left = x <= -1.0
    right = x >= 0.0
    mid = ~(left | right)
    out[left] = _left(beta, x[left], n)
    out[right] = _right(alpha, x[right], n)
    c = coeffs
    for _ in range(n):
        c = np.polynomial.polynomial.polyder(c)
    out[mid] = np.polynomial.polynomial.polyval(x[mid] + 1.0, c)
    return out


def _weight(w, x, n):
    kind = w.kind
    if kind is WeightKind.ONE:
        return np.ones_like(x) if n == 0 else np.zeros_like(x)
    if kind is WeightKind.EXP:
        return (2.0 * w.alpha) ** n * np.exp(2.0 * w.alpha * x)
    if kind is WeightKind.KAPPA:
        return _kappa(w.alpha, w.beta, x, n)
    val = _kappa(w.alpha, 1.0, x, n)
    return 1.0 + val if n == 0 else val


def eval_weight(w, x):
    """Value of the weight (or of its derivative when ``w.order == 1``)."""
    xa = np.asarray(x, dtype=float)
    out = _weight(w, np.atleast_1d(xa), w.order)
    return out.reshape(xa.shape) if xa.ndim else float(out[0])


def eval_weight_derivative(w, x):
    """Analytic derivative of :func:`eval_weight` in x."""
    xa = np.asarray(x, dtype=float)
    out = _weight(w, np.atleast_1d(xa), w.order + 1)
    return out.reshape(xa.shape) if xa.ndim else float(out[0])


def admissibility_constant(w, x):
    """Empirical ``max |psi'| / psi`` over the sample points ``x``."""
    return float(np.max(np.abs(eval_weight_derivative(w, x)) / eval_weight(w, x)))


# -- weighted norms ----------------------------------------------------------


def window_mask(dom, window):
    if window is None:
        return np.ones(dom.Nx, dtype=bool)
    lo, hi = window
    return (dom.x >= lo) & (dom.x <= hi)


def _weight_on_grid(dom, w, window):
    psi = eval_weight(w, dom.x)
    if window is not None:
        psi = np.where(window_mask(dom, window), psi, 0.0)
    return psi


def weighted_l2_norm(u, w, window=None):
    r"""Grid version of :math:`\|u\,\psi^{1/2}\|_{L_2}`.

    ``window=(a, b)`` restricts the x-sum to ``a <= x <= b``.
    """
    vals = u.values()
    if not np.all(np.isfinite(vals)):
        raise DataError("field contains non-finite values")
    psi = _weight_on_grid(u.dom, w, window)
    return math.sqrt(float(np.sum(vals * vals * psi[:, None, None])) * u.dom.cell_volume)


def weighted_h1_seminorm(u, w, window=None):
    r"""Grid version of :math:`\||Du|\,\psi^{1/2}\|_{L_2}` with spectral derivatives."""
    if not np.all(np.isfinite(u.coefficients())):
        raise DataError("field contains non-finite values")
    _, px, pt = transverse_profiles(u)
    psi = _weight_on_grid(u.dom, w, window)
    return math.sqrt(float(np.sum(psi * (px + pt))) * u.dom.dx)


def local_smoothing_lambda(fields, times):
    """Supremum over unit x-windows of the time-integrated squared gradient.

    ``fields`` are snapshots of ``u`` at the equally spaced ``times``; the
    time integral uses the trapezoidal rule and window origins run over the
    x grid (periodically).
    """
    fields = list(fields)
    if not fields:
        raise UsageError("empty snapshot series")
    times = np.asarray(times, dtype=float)
    if times.shape != (len(fields),):
        raise UsageError("need one time per snapshot")
    if len(times) > 2:
        steps = np.diff(times)
        if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * np.max(steps):
            raise UsageError("snapshots must have a fixed positive stride")
    dom = fields[0].dom
    profiles = []
    for f in fields:
        _, px, pt = transverse_profiles(f)
        profiles.append(px + pt)
    profiles = np.array(profiles)
    if len(times) == 1:
        q = np.zeros(dom.Nx)
    else:
        q = np.trapezoid(profiles, times, axis=0)
    n = math.ceil(1.0 / dom.dx - 1e-12)
    n = min(n, dom.Nx)
    ext = np.concatenate([q, q[: n - 1]]) if n > 1 else q
    csum = np.concatenate([[0.0], np.cumsum(ext)])
    sums = csum[n : n + dom.Nx] - csum[:dom.Nx]
    return float(np.max(sums) * dom.dx)
