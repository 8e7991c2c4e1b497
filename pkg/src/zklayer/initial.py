"""Initial data on the layer grid.

All generators return physical Fields that vanish on the transverse
boundary.  Random data uses the Philox counter-based generator keyed by
the seed, so a given seed yields the same field on every platform.
"""
from __future__ import annotations

import math

import numpy as np

from .domain import DomainSpec, Field, inverse_full
from .errors import DomainError

__all__ = ["gaussian_pulse", "single_mode", "random_bandlimited", "philox", "scale_to_l2"]


def _sines(dom, l1, l2):
    sy = np.sin(math.pi * l1 * dom.y / dom.L1)
    sz = np.sin(math.pi * l2 * dom.z / dom.L2)
    return sy[:, None] * sz[None, :]


def gaussian_pulse(dom: DomainSpec, amplitude=1.0, width=3.5, center=0.0, modes=(1, 1)):
    """``A exp(-((x - x0)/w)^2) sin(pi l1 y/L1) sin(pi l2 z/L2)``."""
    if not width > 0:
        raise DomainError("width must be positive")
    l1, l2 = modes
    if l1 < 1 or l2 < 1:
        raise DomainError("mode indices start at 1")
    env = amplitude * np.exp(-(((dom.x - center) / width) ** 2))
    return Field(dom, physical=env[:, None, None] * _sines(dom, l1, l2)[None])


def single_mode(dom: DomainSpec, k=1, modes=(1, 1), amplitude=1.0, phase=0.0):
    """``A cos(xi_k x + phase)`` times one transverse eigenfunction shape."""
    l1, l2 = modes
    if l1 < 1 or l2 < 1:
        raise DomainError("mode indices start at 1")
    if not 0 <= abs(k) < dom.Nx // 2:
        raise DomainError(f"x wavenumber index {k} not resolved by Nx={dom.Nx}")
    xi = math.pi * k / dom.X
    env = amplitude * np.cos(xi * dom.x + phase)
    return Field(dom, physical=env[:, None, None] * _sines(dom, l1, l2)[None])


def philox(seed):
    return np.random.Generator(np.random.Philox(key=int(seed)))


def random_bandlimited(dom: DomainSpec, seed=0, kmax=None, lmax=4, decay=1.0, rng=None):
    """Random real field with i.i.d. Gaussian coefficients on a low-mode block.

    Keeps ``|k| <= kmax`` (default ``Nx // 8``) and ``l1, l2 <= lmax``;
    coefficient standard deviation falls off like ``(1 + |k| + l1 + l2)**-decay``.
    The result is normalized to unit L2 norm.
    """
    rng = rng or philox(seed)
    kmax = dom.Nx // 8 if kmax is None else kmax
    if kmax >= dom.Nx // 2:
        raise DomainError("kmax must be below Nx/2")
    lmax_y = min(lmax, dom.Ny)
    lmax_z = min(lmax, dom.Nz)
    coeffs = np.zeros(dom.shape, dtype=complex)
    ks = np.arange(0, kmax + 1)
    ly = np.arange(1, lmax_y + 1)
    lz = np.arange(1, lmax_z + 1)
    scale = (1.0 + ks[:, None, None] + ly[None, :, None] + lz[None, None, :]) ** -decay
    shape = scale.shape
    block = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * scale
    block[0] = block[0].real
    coeffs[: kmax + 1, :lmax_y, :lmax_z] = block
    if kmax > 0:
        coeffs[-kmax:, :lmax_y, :lmax_z] = np.conj(block[1:][::-1])
    u = inverse_full(coeffs, dom)
    return scale_to_l2(Field(dom, physical=u), 1.0)


def scale_to_l2(f: Field, target):
    """Rescale ``f`` to the given discrete L2 norm."""
    u = f.values()
    norm = math.sqrt(float(np.sum(u * u)) * f.dom.cell_volume)
    if norm == 0:
        raise DomainError("cannot rescale a zero field")
    return Field(f.dom, physical=u * (target / norm))
