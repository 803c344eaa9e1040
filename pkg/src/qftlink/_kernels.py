"""Gaussian-smeared commutator functions of free fields in position space.

For a mollifier pair whose transforms multiply to ``exp(-A k^2 - A m^2 / 2)``
on the shell ``p^2 = m^2``,

    D(t, r) = int d^4p eps(p0) delta(p^2 - m^2) G(p) exp(-i p.x)
            = -(4 pi i / r) int_0^inf dk (k / w) G sin(k r) sin(w t).

At ``m = 0`` this has the closed form
``-i pi^(3/2) A^(-1/2) (e_- - e_+) / r`` with ``e_-+ = exp(-(t -+ r)^2 / 4A)``.
"""

from math import factorial

import numpy as np

from ._quadrature import composite_gauss

_PI32 = np.pi**1.5
_NS = 12
_S_COEF = np.array([1.0 / factorial(2 * n + 1) for n in range(_NS)])
_T_COEF = np.array([(2 * n + 2) / factorial(2 * n + 3) for n in range(_NS)])


def _poly(coef, z2):
    out = np.zeros_like(z2)
    for c in coef[::-1]:
        out = out * z2 + c
    return out


def _shape_parts(t, r, A):
    """``E0*S(z)`` and ``E0*T(z)`` with ``S = sinh z / z``, ``T = (z cosh z - sinh z)/z^3``."""
    alpha = 0.5 / A
    z = alpha * t * r
    small = np.abs(z) <= 1.0
    z2 = z * z
    e0 = np.exp(-0.5 * alpha * (t * t + r * r))
    zs = np.where(small, 1.0, z)
    em = np.exp(-0.5 * alpha * (t - r) ** 2)
    ep = np.exp(-0.5 * alpha * (t + r) ** 2)
    es_big = (em - ep) / (2 * zs)
    et_big = (zs * 0.5 * (em + ep) - 0.5 * (em - ep)) / zs**3
    es = np.where(small, e0 * _poly(_S_COEF, z2), es_big)
    et = np.where(small, e0 * _poly(_T_COEF, z2), et_big)
    return alpha, z, es, et


def massless_value(x, A):
    """Smeared massless commutator function ``D(x)`` for points (..., 4)."""
    x = np.asarray(x, dtype=float)
    t = x[..., 0]
    r = np.sqrt(np.sum(x[..., 1:] ** 2, axis=-1))
    alpha, _, es, _ = _shape_parts(t, r, A)
    return (-1j * _PI32 / np.sqrt(A)) * (2 * alpha * t * es)


def massless_gradient(x, A):
    """Covariant gradient ``d_tau D(x)``, shape (..., 4)."""
    x = np.asarray(x, dtype=float)
    t = x[..., 0]
    r = np.sqrt(np.sum(x[..., 1:] ** 2, axis=-1))
    alpha, z, es, et = _shape_parts(t, r, A)
    phi_t = 2 * alpha * (es * (1 - alpha * t * t) + z * z * et)
    phi_r_over_r = 2 * alpha**2 * t * (alpha * t * t * et - es)
    pref = -1j * _PI32 / np.sqrt(A)
    out = np.empty(x.shape, dtype=complex)
    out[..., 0] = pref * phi_t
    out[..., 1:] = (pref * phi_r_over_r)[..., None] * x[..., 1:]
    return out


class MassiveKernel:
    """Radial quadrature for ``D`` at mass ``m > 0``.

    ``k`` runs over ``[0, sqrt(cut / A)]`` with composite Gauss-Legendre
    panels sized for phases up to ``reach * k`` (``reach`` bounds ``|t| + r``).
    """

    def __init__(self, mass, A, reach, cut=40.0, level=0, order=8):
        self.mass = float(mass)
        self.A = float(A)
        kmax = np.sqrt(cut / A)
        panels = int(np.ceil(kmax * reach / (2 * np.pi))) + 4
        panels *= 2**level
        k, w = composite_gauss(np.linspace(0.0, kmax, panels + 1), order)
        om = np.sqrt(k * k + mass * mass)
        self.k = k
        self.omega = om
        self.w = w * k * k / om * np.exp(-A * k * k - 0.5 * A * mass * mass)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        t = x[..., 0]
        r = np.sqrt(np.sum(x[..., 1:] ** 2, axis=-1))
        flat_t = t.reshape(-1, 1)
        flat_r = r.reshape(-1, 1)
        vals = np.empty(flat_t.shape[0])
        step = max(1, (1 << 22) // len(self.k))
        for i in range(0, len(vals), step):
            sl = slice(i, i + step)
            vals[sl] = (np.sin(flat_t[sl] * self.omega)
                        * np.sinc(flat_r[sl] * self.k / np.pi)) @ self.w
        return (-4j * np.pi) * vals.reshape(t.shape)
