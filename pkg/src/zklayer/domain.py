r"""Discretization of the layer :math:`\mathbb{R}\times\Omega`.

The propagation axis is truncated to the periodic window ``[-X, X)`` and
sampled at ``Nx`` equispaced points; the cross-section
:math:`\Omega = (0, L_1)\times(0, L_2)` is represented in the Dirichlet
eigenbasis

.. math::

    \psi_l(y, z) = \frac{2}{\sqrt{L_1 L_2}}
        \sin\frac{\pi l_1 y}{L_1}\sin\frac{\pi l_2 z}{L_2},
    \qquad \lambda_l = \frac{\pi^2 l_1^2}{L_1^2} + \frac{\pi^2 l_2^2}{L_2^2},

with collocation on the interior points ``y_m = m*dy`` (``m = 1..Ny``) and
``z_n = n*dz``.  The endpoints are excluded because ``u`` vanishes there.

Normalization
-------------
Spectral coefficients approximate

.. math::

    \hat u(\xi_k, l) = \iiint e^{-i\xi_k x}\psi_l(y,z)\,u\,dx\,dy\,dz,
    \qquad \xi_k = \pi k / X,

by the rectangle rule, and the inverse is the matching discretization of
:math:`(2\pi)^{-1}\int d\xi\sum_l`, i.e. ``(1/2X) sum_k``.  With this choice

.. math::

    \frac{1}{2X}\sum_{k,l}|\hat u|^2 = \Delta x\,\Delta y\,\Delta z\sum u^2

holds to rounding (Parseval).  The x-transform is a DFT, the transverse
ones are orthonormal DST-I transforms rescaled by ``sqrt(dy*dz)``.

The Nyquist wavenumber ``k = -Nx/2`` is assigned ``xi = 0`` so that every
odd-order x operator maps real fields to real fields.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import fft

from .errors import DataError, DomainError, UsageError

__all__ = [
    "DomainSpec",
    "TransverseMode",
    "Field",
    "eigenvalue",
    "transverse_modes",
    "to_spectral",
    "to_physical",
    "dealias_mask",
    "derivative",
    "transverse_coefficients",
    "transverse_profiles",
    "l2_norm",
]

MAX_NX = 1 << 14
MAX_NYZ = 1 << 11


@dataclass(frozen=True)
class DomainSpec:
    """Geometry and resolution of the truncated layer.

    Parameters
    ----------
    L1, L2 : float
        Side lengths of the rectangular cross-section (y and z extents).
    X : float
        Half-length of the periodic x window ``[-X, X)``.
    Nx : int
        Number of x grid points (even, at least 8).
    Ny, Nz : int
        Number of transverse sine modes, equal to the number of interior
        collocation points (at least 4).
    dealias : bool
        Whether :func:`dealias_mask` applies the 2/3 rule.
    """

    L1: float
    L2: float
    X: float
    Nx: int
    Ny: int
    Nz: int
    dealias: bool = True

    def __post_init__(self):
        for name in ("L1", "L2", "X"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise DomainError(f"{name} must be positive and finite, got {val!r}")
        for name in ("Nx", "Ny", "Nz"):
            val = getattr(self, name)
            if int(val) != val:
                raise DomainError(f"{name} must be an integer, got {val!r}")
            object.__setattr__(self, name, int(val))
        if self.Nx < 8 or self.Nx % 2:
            raise DomainError(f"Nx must be even and >= 8, got {self.Nx}")
        if self.Nx > MAX_NX:
            raise DomainError(f"Nx must not exceed {MAX_NX}, got {self.Nx}")
        for name in ("Ny", "Nz"):
            val = getattr(self, name)
            if not 4 <= val <= MAX_NYZ:
                raise DomainError(f"{name} must lie in [4, {MAX_NYZ}], got {val}")

    @property
    def shape(self):
        return (self.Nx, self.Ny, self.Nz)

    @property
    def half_shape(self):
        return (self.Nx // 2 + 1, self.Ny, self.Nz)

    @property
    def dx(self):
        return 2.0 * self.X / self.Nx

    @property
    def dy(self):
        return self.L1 / (self.Ny + 1)

    @property
    def dz(self):
        return self.L2 / (self.Nz + 1)

    @property
    def cell_volume(self):
        return self.dx * self.dy * self.dz

    @property
    def area(self):
        """Measure of the cross-section."""
        return self.L1 * self.L2

    @cached_property
    def x(self):
        return -self.X + self.dx * np.arange(self.Nx)

    @cached_property
    def y(self):
        return self.dy * np.arange(1, self.Ny + 1)

    @cached_property
    def z(self):
        return self.dz * np.arange(1, self.Nz + 1)

    @cached_property
    def k_index(self):
        """Integer x wavenumbers in FFT order."""
        return np.fft.fftfreq(self.Nx, 1.0 / self.Nx).astype(int)

    @cached_property
    def xi(self):
        """Angular x wavenumbers ``pi*k/X`` in FFT order, Nyquist set to 0."""
        k = self.k_index.astype(float)
        k[self.Nx // 2] = 0.0
        return np.pi * k / self.X

    @cached_property
    def xi_half(self):
        """Non-negative wavenumbers matching the real-FFT layout."""
        xi = np.pi * np.arange(self.Nx // 2 + 1) / self.X
        xi[-1] = 0.0
        return xi

    @cached_property
    def ky(self):
        return np.pi * np.arange(1, self.Ny + 1) / self.L1

    @cached_property
    def kz(self):
        return np.pi * np.arange(1, self.Nz + 1) / self.L2

    @cached_property
    def lam(self):
        """Transverse eigenvalues, shape ``(Ny, Nz)``."""
        return self.ky[:, None] ** 2 + self.kz[None, :] ** 2

    @cached_property
    def lambda11(self):
        return math.pi**2 * (1.0 / self.L1**2 + 1.0 / self.L2**2)

    @cached_property
    def phase(self):
        # exp(-i xi_k x_0) with x_0 = -X is (-1)^k
        return np.where(self.k_index % 2 == 0, 1.0, -1.0)

    @cached_property
    def phase_half(self):
        return np.where(np.arange(self.Nx // 2 + 1) % 2 == 0, 1.0, -1.0)

    @cached_property
    def half_weights(self):
        """Multiplicity of each real-FFT wavenumber in a full sum."""
        w = np.full(self.Nx // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return w

    def mesh(self):
        """Return the ``(x, y, z)`` collocation grid as broadcastable arrays."""
        return np.meshgrid(self.x, self.y, self.z, indexing="ij")


@dataclass(frozen=True)
class TransverseMode:
    """One Dirichlet eigenpair index of the rectangle."""

    l1: int
    l2: int
    lam: float


def eigenvalue(l1, l2, dom):
    """Eigenvalue of the transverse Dirichlet Laplacian for mode ``(l1, l2)``."""
    if int(l1) != l1 or int(l2) != l2 or l1 < 1 or l2 < 1:
        raise DomainError(f"mode indices must be positive integers, got ({l1}, {l2})")
    return math.pi**2 * l1**2 / dom.L1**2 + math.pi**2 * l2**2 / dom.L2**2


def transverse_modes(dom, count=None):
    """Resolved transverse modes sorted by eigenvalue (ties by index)."""
    modes = [
        TransverseMode(l1, l2, eigenvalue(l1, l2, dom))
        for l1 in range(1, dom.Ny + 1)
        for l2 in range(1, dom.Nz + 1)
    ]
    modes.sort(key=lambda m: (m.l1**2 / dom.L1**2 + m.l2**2 / dom.L2**2, m.l1, m.l2))
    return modes if count is None else modes[:count]


@dataclass
class Field:
    """A scalar state on the layer grid.

    Holds a physical array (real, shape ``dom.shape``), a spectral array
    (complex, same shape, FFT order in x), or both.  Use
    :func:`to_spectral` / :func:`to_physical` to populate the other one.
    """

    dom: DomainSpec
    physical: np.ndarray | None = None
    spectral: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.physical is None and self.spectral is None:
            raise UsageError("a Field needs a physical or a spectral array")
        if self.physical is not None:
            self.physical = np.asarray(self.physical, dtype=float)
            if self.physical.shape != self.dom.shape:
                raise UsageError(
                    f"physical array has shape {self.physical.shape}, expected {self.dom.shape}"
                )
        if self.spectral is not None:
            self.spectral = np.asarray(self.spectral, dtype=complex)
            if self.spectral.shape != self.dom.shape:
                raise UsageError(
                    f"spectral array has shape {self.spectral.shape}, expected {self.dom.shape}"
                )

    @property
    def representation(self):
        if self.physical is not None and self.spectral is not None:
            return "both"
        return "physical" if self.physical is not None else "spectral"

    @classmethod
    def zeros(cls, dom):
        return cls(dom, physical=np.zeros(dom.shape))

    @classmethod
    def from_function(cls, dom, func):
        """Sample ``func(x, y, z)`` on the collocation grid."""
        X, Y, Z = dom.mesh()
        return cls(dom, physical=np.broadcast_to(func(X, Y, Z), dom.shape).astype(float))

    def synced(self):
        """Return a Field carrying both representations."""
        if self.physical is None:
            return to_physical(self)
        if self.spectral is None:
            return to_spectral(self)
        return self

    def values(self):
        """Physical values, transforming if necessary."""
        return self.physical if self.physical is not None else to_physical(self).physical

    def coefficients(self):
        """Spectral coefficients, transforming if necessary."""
        return self.spectral if self.spectral is not None else to_spectral(self).spectral

    def copy(self):
        return Field(
            self.dom,
            None if self.physical is None else self.physical.copy(),
            None if self.spectral is None else self.spectral.copy(),
        )


# -- transforms -------------------------------------------------------------


def _transverse_forward(u, dom):
    return fft.dstn(u, type=1, axes=(1, 2), norm="ortho") * math.sqrt(dom.dy * dom.dz)


def _transverse_inverse(c, dom):
    return fft.dstn(c, type=1, axes=(1, 2), norm="ortho") / math.sqrt(dom.dy * dom.dz)


def forward_full(u, dom):
    c = _transverse_forward(u, dom)
    return fft.fft(c, axis=0) * (dom.dx * dom.phase)[:, None, None]


def inverse_full(uhat, dom):
    c = fft.ifft(uhat * dom.phase[:, None, None], axis=0).real / dom.dx
    return _transverse_inverse(c, dom)


def forward_half(u, dom):
    """Real-FFT layout counterpart of :func:`forward_full` (``Nx//2+1`` rows)."""
    c = _transverse_forward(u, dom)
    return fft.rfft(c, axis=0) * (dom.dx * dom.phase_half)[:, None, None]


def inverse_half(uh, dom):
    c = fft.irfft(uh * dom.phase_half[:, None, None], n=dom.Nx, axis=0) / dom.dx
    return _transverse_inverse(c, dom)


def half_to_full(uh, dom):
    n = dom.Nx
    full = np.empty(dom.shape, dtype=complex)
    full[: n // 2 + 1] = uh
    full[n // 2 + 1 :] = np.conj(uh[1 : n // 2][::-1])
    return full


def full_to_half(uhat, dom):
    return uhat[: dom.Nx // 2 + 1].copy()


def _check_finite(a, what):
    if not np.all(np.isfinite(a)):
        bad = np.argwhere(~np.isfinite(a))[0]
        raise DataError(f"{what} contains non-finite values (first at index {tuple(bad)})")


def to_spectral(f):
    """Populate the spectral representation of ``f``.

    Returns a new Field with both representations.
    """
    if f.physical is None:
        if f.spectral is None:
            raise UsageError("field has no representation")
        return Field(f.dom, to_physical(f).physical, f.spectral)
    _check_finite(f.physical, "physical field")
    return Field(f.dom, f.physical, forward_full(f.physical, f.dom))


def to_physical(f):
    """Populate the physical representation of ``f`` (inverse of :func:`to_spectral`)."""
    if f.spectral is None:
        raise UsageError("field has no spectral representation")
    _check_finite(f.spectral, "spectral field")
    return Field(f.dom, inverse_full(f.spectral, f.dom), f.spectral)


def dealias_mask(dom):
    """Boolean 2/3-rule mask in the full spectral layout.

    Keeps ``|k| <= Nx/3`` and transverse indices ``l1 <= 2*Ny/3``,
    ``l2 <= 2*Nz/3``.  All true when ``dom.dealias`` is off.
    """
    if not dom.dealias:
        return np.ones(dom.shape, dtype=bool)
    mx = np.abs(dom.k_index) <= dom.Nx / 3
    return _combine_mask(mx, dom)


def dealias_mask_half(dom):
    if not dom.dealias:
        return np.ones(dom.half_shape, dtype=bool)
    mx = np.arange(dom.Nx // 2 + 1) <= dom.Nx / 3
    return _combine_mask(mx, dom)


def _combine_mask(mx, dom):
    my = np.arange(1, dom.Ny + 1) <= 2 * dom.Ny / 3
    mz = np.arange(1, dom.Nz + 1) <= 2 * dom.Nz / 3
    return mx[:, None, None] & my[None, :, None] & mz[None, None, :]


# -- derivatives and norms ----------------------------------------------------


def _eval_transverse(c, axis, cosine, n_modes):
    """Evaluate a sine (or cosine) series along ``axis`` at interior nodes.

    ``c`` holds orthonormal-basis coefficients already scaled so that the
    sine case is a plain orthonormal DST-I.
    """
    if not cosine:
        return fft.dst(c, type=1, axis=axis, norm="ortho")
    pad = [(0, 0)] * c.ndim
    pad[axis] = (1, 1)
    vals = fft.dct(np.pad(c, pad), type=1, axis=axis)
    vals = np.take(vals, np.arange(1, n_modes + 1), axis=axis)
    return vals * 0.5 * math.sqrt(2.0 / (n_modes + 1))


def derivative(f, nx=0, ny=0, nz=0):
    r"""Pointwise spectral derivative :math:`\partial_x^{nx}\partial_y^{ny}\partial_z^{nz} u`.

    Odd transverse orders turn sines into cosines; those are evaluated at
    the interior nodes with a padded DCT-I.
    """
    dom = f.dom
    uhat = f.coefficients()
    work = uhat * ((1j * dom.xi) ** nx)[:, None, None]
    # real because the Nyquist wavenumber is zeroed
    c = fft.ifft(work * dom.phase[:, None, None], axis=0).real / dom.dx
    signs = {0: 1.0, 1: 1.0, 2: -1.0, 3: -1.0}
    c = c * (signs[ny % 4] * dom.ky**ny)[None, :, None]
    c = c * (signs[nz % 4] * dom.kz**nz)[None, None, :]
    c = c / math.sqrt(dom.dy * dom.dz)
    c = _eval_transverse(c, 1, ny % 2 == 1, dom.Ny)
    c = _eval_transverse(c, 2, nz % 2 == 1, dom.Nz)
    return c


def transverse_coefficients(f, nx=0):
    """Coefficients ``c_l(x)`` of the transverse eigenbasis at every grid x.

    Returns the real array of shape ``(Nx, Ny, Nz)`` holding
    ``d^nx/dx^nx`` of the coefficients, so that
    ``sum_l c_l(x)**2 = iint u(x, y, z)**2 dy dz`` exactly.
    """
    dom = f.dom
    uhat = f.coefficients()
    work = uhat * ((1j * dom.xi) ** nx)[:, None, None]
    return fft.ifft(work * dom.phase[:, None, None], axis=0).real / dom.dx


def transverse_profiles(f):
    """Cross-section integrals as functions of x.

    Returns ``(p0, px, pt)`` with ``p0 = iint u^2``, ``px = iint u_x^2`` and
    ``pt = iint (u_y^2 + u_z^2)``, each of length ``Nx``.  Transverse
    integrals are evaluated exactly in the eigenbasis.
    """
    c = transverse_coefficients(f)
    cx = transverse_coefficients(f, nx=1)
    lam = f.dom.lam
    p0 = np.sum(c * c, axis=(1, 2))
    px = np.sum(cx * cx, axis=(1, 2))
    pt = np.sum(lam[None] * c * c, axis=(1, 2))
    return p0, px, pt


def l2_norm(f):
    """Discrete L2 norm ``(sum u^2 dx dy dz)^(1/2)``."""
    u = f.values()
    return math.sqrt(float(np.sum(u * u)) * f.dom.cell_volume)
