"""The aspect-ratio-parameterized spectral law of long random noise matrices.

For an n x m matrix with i.i.d. mean-zero entries of variance 1/n and
ratio parameter phi = sqrt(m/n) >= 1:

* the eigenvalues of Z Z^T / phi follow a Marchenko-Pastur density on
  [(sqrt(phi)-1/sqrt(phi))^2, (sqrt(phi)+1/sqrt(phi))^2],
* the singular values of Z follow its pushforward under x -> sqrt(phi*x),
  supported on [phi-1, phi+1],
* the Stieltjes transform m(z) of the symmetrized singular law solves
  m^2 + ((phi^2-1)/z - z) m + 1 = 0, with the branch that vanishes at
  infinity (|m| <= 1; the two roots of the quadratic multiply to 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MpLaw:
    """Spectral law for ratio parameter ``phi`` = sqrt(cols/rows) >= 1."""

    phi: float

    def __post_init__(self):
        if not np.isfinite(self.phi) or self.phi < 1.0:
            raise ValueError("phi must be finite and >= 1")

    @property
    def eigen_support(self) -> tuple[float, float]:
        r = math.sqrt(self.phi)
        return ((r - 1.0 / r) ** 2, (r + 1.0 / r) ** 2)

    @property
    def singular_support(self) -> tuple[float, float]:
        return (self.phi - 1.0, self.phi + 1.0)


def mp_density(law: MpLaw, x: float) -> float:
    """Eigenvalue density at ``x``; zero outside the open support."""
    lo, hi = law.eigen_support
    if x <= lo or x >= hi:
        return 0.0
    prod = (x - lo) * (hi - x)
    if prod <= 0.0:
        return 0.0
    return law.phi * math.sqrt(prod) / (2.0 * math.pi * x)


def singular_density(law: MpLaw, x: float) -> float:
    """Singular-value density at ``x``; zero outside [phi-1, phi+1].

    Equals the pushforward 2*(x/phi) * mp_density(x^2/phi) pointwise.
    """
    lo, hi = law.singular_support
    if x <= lo or x >= hi:
        return 0.0
    prod = (x * x - lo * lo) * (hi * hi - x * x)
    if prod <= 0.0:
        return 0.0
    return math.sqrt(prod) / (math.pi * x)


def _adaptive_simpson(f, a: float, b: float, tol: float) -> float:
    """Adaptive Simpson quadrature with interval-wise error splitting."""
    if a == b:
        return 0.0

    def simp(fa, fm, fb, h):
        return h * (fa + 4.0 * fm + fb) / 6.0

    m = 0.5 * (a + b)
    fa, fm, fb = f(a), f(m), f(b)
    whole = simp(fa, fm, fb, b - a)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    total = 0.0
    while stack:
        a0, b0, fa0, fm0, fb0, whole0, tol0, depth = stack.pop()
        m0 = 0.5 * (a0 + b0)
        lm, rm = 0.5 * (a0 + m0), 0.5 * (m0 + b0)
        flm, frm = f(lm), f(rm)
        left = simp(fa0, flm, fm0, m0 - a0)
        right = simp(fm0, frm, fb0, b0 - m0)
        delta = left + right - whole0
        if depth >= 48 or abs(delta) <= 15.0 * tol0:
            total += left + right + delta / 15.0
        else:
            stack.append((a0, m0, fa0, flm, fm0, left, tol0 / 2.0, depth + 1))
            stack.append((m0, b0, fm0, frm, fb0, right, tol0 / 2.0, depth + 1))
    return total


def mp_tail_mass(law: MpLaw, nu: float, tol: float = 1e-12) -> float:
    """Mass of the eigenvalue law above ``nu``.

    The integrand has inverse-square-root edges; substituting
    x = edge -/+ t^2 on the half of the support nearest to ``nu`` restores
    a smooth integrand before adaptive Simpson.
    """
    lo, hi = law.eigen_support
    if nu <= lo:
        return 1.0
    if nu >= hi:
        return 0.0
    mid = 0.5 * (lo + hi)
    if nu >= mid:
        g = lambda t: 2.0 * t * mp_density(law, hi - t * t)
        return _adaptive_simpson(g, 0.0, math.sqrt(hi - nu), tol)
    g = lambda t: 2.0 * t * mp_density(law, lo + t * t)
    head = _adaptive_simpson(g, 0.0, math.sqrt(nu - lo), tol)
    return 1.0 - head


def _bisect_tail(law: MpLaw, target: float, a: float, b: float) -> float:
    # tail mass is strictly decreasing across the support
    mid = 0.5 * (a + b)
    for _ in range(200):
        mid = 0.5 * (a + b)
        mass = mp_tail_mass(law, mid)
        if abs(mass - target) <= 1e-10:
            break
        if mass > target:
            a = mid
        else:
            b = mid
    return mid


def mp_quantile(law: MpLaw, i: int, n: int) -> float:
    """The i-th of n law locations: tail mass above it equals (i-1/2)/n.

    Bisection on the tail mass down to a residual of 1e-10.
    """
    if not 1 <= i <= n:
        raise ValueError(f"index i={i} outside 1..{n}")
    lo, hi = law.eigen_support
    return _bisect_tail(law, (i - 0.5) / n, lo, hi)


def predicted_singular_locations(law: MpLaw, n: int) -> np.ndarray:
    """Deterministic singular-value locations sqrt(phi * nu_i), descending."""
    if n < 1:
        raise ValueError("n must be >= 1")
    out = np.empty(n)
    lo, hi = law.eigen_support
    for i in range(1, n + 1):
        # quantiles decrease in i: the previous one brackets from above
        out[i - 1] = _bisect_tail(law, (i - 0.5) / n, lo, hi)
        hi = out[i - 1]
    return np.sqrt(law.phi * out)


def stieltjes(law: MpLaw, z: complex) -> complex:
    """Stieltjes transform of the symmetrized singular law at ``z``.

    Convention m(z) = integral rho_sym(x)/(z-x) dx, so Im m < 0 on the
    upper half-plane and m(z) ~ 1/z at infinity.  Real ``z`` must lie off
    the symmetrized support; the support edges themselves return the
    continuous limit from outside (+-1), which float evaluation of the
    quadratic cannot reach directly because the discriminant vanishes.
    """
    z = complex(z)
    if not (np.isfinite(z.real) and np.isfinite(z.imag)):
        raise ValueError("z must be finite")
    if z.imag < 0.0:
        raise ValueError("evaluation requires Im z >= 0")
    phi = law.phi
    lo_s, hi_s = law.singular_support
    if z.imag == 0.0:
        E = z.real
        a = abs(E)
        if a == hi_s:
            return complex(math.copysign(1.0, E), 0.0)
        if a == lo_s:
            if lo_s == 0.0:
                raise ValueError("on support")
            return complex(-math.copysign(1.0, E), 0.0)
        if lo_s < a < hi_s:
            raise ValueError("on support")
        if E == 0.0:
            return 0.0 + 0.0j
    b = (phi * phi - 1.0) / z - z
    s = np.sqrt(complex(b * b - 4.0))
    r1 = (-b + s) / 2.0
    r2 = (-b - s) / 2.0
    big = r1 if abs(r1) >= abs(r2) else r2
    m = 1.0 / big  # roots multiply to 1; keep the branch with |m| <= 1
    if z.imag == 0.0:
        m = complex(m.real, 0.0)
    return m
