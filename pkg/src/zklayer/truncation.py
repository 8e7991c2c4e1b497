r"""The globally Lipschitz surrogate :math:`g_h` of :math:`u^2/2`.

.. math::

    g_h(u) = \int_0^u \Big[\theta\,\eta(2 - h|\theta|)
        + \frac{2\,\mathrm{sgn}\,\theta}{h}\,\eta(h|\theta| - 1)\Big]\,d\theta

It equals ``u**2/2`` for ``|u| <= 1/h`` and grows linearly with slope
``2/h`` beyond ``2/h``.  Substituting ``s = h*theta`` shows
``g_h(u) = g_1(h*u) / h**2``, so one table of ``g_1`` on the band
``[1, 2]`` serves every h.  The same holds for the primitive
``G_h(u) = int_0^u g_h'(theta) theta dtheta`` with a factor ``h**-3``.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import integrate, interpolate

from .errors import DomainError
from .weights import eta

__all__ = [
    "g_h_prime",
    "g_h_eval",
    "g_h_primitive_eval",
    "GhTable",
    "gh_table",
    "g_values",
    "g_primitive_values",
]

TABLE_POINTS = 4096
TABLE_TOL = 1e-10
_QUAD_ABS = 1e-13
_QUAD_REL = 1e-13


def _check_h(h):
    if not (0.0 < h <= 1.0):
        raise DomainError(f"h must lie in (0, 1], got {h!r}")


def g_h_prime(u, h):
    """Derivative ``g_h'(u)``, i.e. the integrand of the definition at ``u``."""
    _check_h(h)
    ua = np.asarray(u, dtype=float)
    au = np.abs(ua)
    out = ua * eta(2.0 - h * au) + (2.0 * np.sign(ua) / h) * eta(h * au - 1.0)
    # on the band h|g'| is a convex combination of h|u| and 2; keep the cap exact
    out = np.sign(ua) * np.minimum(np.abs(out), 2.0 / h)
    return out if ua.ndim else float(out)


def _quad(func, a, b):
    val, _ = integrate.quad(func, a, b, epsabs=_QUAD_ABS, epsrel=_QUAD_REL, limit=200)
    return val


def g_h_eval(u, h):
    """Scalar ``g_h(u)``; the band ``1/h < |u| < 2/h`` uses adaptive quadrature."""
    _check_h(h)
    u = float(u)
    if not math.isfinite(u):
        raise DomainError(f"u must be finite, got {u!r}")
    a = abs(u)
    if a <= 1.0 / h:
        return u * u / 2.0
    base = 0.5 / h**2
    if a < 2.0 / h:
        return base + _quad(lambda t: g_h_prime(t, h), 1.0 / h, a)
    c_h = base + _quad(lambda t: g_h_prime(t, h), 1.0 / h, 2.0 / h)
    return c_h + (2.0 / h) * (a - 2.0 / h)


def g_h_primitive_eval(u, h):
    """Scalar ``int_0^u g_h'(t) t dt`` (odd in u); quadrature on the band."""
    _check_h(h)
    u = float(u)
    a = abs(u)
    sign = math.copysign(1.0, u)
    if a <= 1.0 / h:
        return u**3 / 3.0
    base = 1.0 / (3.0 * h**3)
    top = min(a, 2.0 / h)
    val = base + _quad(lambda t: g_h_prime(t, h) * t, 1.0 / h, top)
    if a > 2.0 / h:
        val += (a * a - 4.0 / h**2) / h
    return sign * val


class GhTable:
    """Cubic Hermite tables of ``g_1`` and its primitive on ``[1, 2]``.

    Node values accumulate 8-point Gauss-Legendre integrals over the cells
    between consecutive nodes (the integrand is smooth and the cells are
    tiny, so each cell integral is exact to rounding); node slopes are exact.
    """

    def __init__(self, points=TABLE_POINTS):
        s = np.linspace(1.0, 2.0, points)
        d1 = g_h_prime(s, 1.0)
        d2 = d1 * s
        gx, gw = np.polynomial.legendre.leggauss(8)
        mid = 0.5 * (s[:-1] + s[1:])[:, None]
        half = 0.5 * np.diff(s)[:, None]
        t = mid + half * gx[None, :]
        gp = g_h_prime(t, 1.0)
        inc1 = np.sum(gw * gp, axis=1) * half[:, 0]
        inc2 = np.sum(gw * gp * t, axis=1) * half[:, 0]
        g = 0.5 + np.concatenate([[0.0], np.cumsum(inc1)])
        prim = 1.0 / 3.0 + np.concatenate([[0.0], np.cumsum(inc2)])
        self.nodes = s
        self._g = interpolate.CubicHermiteSpline(s, g, d1)
        self._p = interpolate.CubicHermiteSpline(s, prim, d2)
        self.g_top = float(g[-1])
        self.p_top = float(prim[-1])
        self.max_error = self._verify()

    def _verify(self, samples=17):
        """Compare against adaptive quadrature at off-node points of the band."""
        probe = 1.0 + (np.arange(samples) + 0.37) / samples
        ref = np.array([g_h_eval(v, 1.0) for v in probe])
        err = float(np.max(np.abs(self._g(probe) - ref)))
        if err > TABLE_TOL:
            raise RuntimeError(f"g_h table error {err:.3e} exceeds {TABLE_TOL:.0e}")
        return err

    def g1(self, s):
        """``g_1`` on ``s >= 0``."""
        s = np.asarray(s, dtype=float)
        out = np.where(s <= 1.0, 0.5 * s * s, 0.0)
        band = (s > 1.0) & (s < 2.0)
        out[band] = self._g(s[band])
        top = s >= 2.0
        out[top] = self.g_top + 2.0 * (s[top] - 2.0)
        return out

    def p1(self, s):
        """Primitive ``int_0^s g_1'(t) t dt`` on ``s >= 0``."""
        s = np.asarray(s, dtype=float)
        out = np.where(s <= 1.0, s**3 / 3.0, 0.0)
        band = (s > 1.0) & (s < 2.0)
        out[band] = self._p(s[band])
        top = s >= 2.0
        out[top] = self.p_top + (s[top] ** 2 - 4.0)
        return out

    def g(self, u, h):
        """Vectorized ``g_h(u)``; exactly ``u*u/2`` where ``|u| <= 1/h``."""
        _check_h(h)
        u = np.asarray(u, dtype=float)
        quad = u * u / 2.0
        outside = np.abs(u) > 1.0 / h
        if not np.any(outside):
            return quad
        quad[outside] = self.g1(h * np.abs(u[outside])) / h**2
        return quad

    def primitive(self, u, h):
        _check_h(h)
        u = np.asarray(u, dtype=float)
        out = u**3 / 3.0
        outside = np.abs(u) > 1.0 / h
        if np.any(outside):
            uo = u[outside]
            out[outside] = np.sign(uo) * self.p1(h * np.abs(uo)) / h**3
        return out


@lru_cache(maxsize=1)
def gh_table():
    """Shared table, built on first use."""
    return GhTable()


def g_values(u, h):
    """Pointwise nonlinearity: ``u**2/2`` for ``h == 0``, else ``g_h``."""
    if h == 0:
        return u * u / 2.0
    return gh_table().g(u, h)


def g_primitive_values(u, h):
    """Pointwise ``int_0^u g'(t) t dt`` matching :func:`g_values`."""
    if h == 0:
        return u**3 / 3.0
    return gh_table().primitive(u, h)
