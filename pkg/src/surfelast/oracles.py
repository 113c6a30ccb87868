"""Semi-analytical reference solutions.

* Catenoid liquid bridge between two coaxial rings.
* Minimal-stretch bridge for the energy ``alpha ||Fhat||``, a two-point BVP.
* Onset of the zero-wavenumber bifurcation of a stretched cylinder with
  surface energy; unknowns are the radial stretch ``a`` and one of
  ``(gamma_t, alpha_t, lambda)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import ExistenceError, InputError, NonConvergenceError

#: root of t tanh(t) = 1, where h(C) = C cosh(L/2C) - R is minimal (t = L/2C)
_T_STAR = 1.1996786402577338


@dataclass(frozen=True)
class BridgeGeometry:
    L: float
    R: float

    def __post_init__(self):
        if not (self.L > 0 and self.R > 0):
            raise InputError(f"bridge geometry needs L, R > 0, got L={self.L}, R={self.R}")


# --------------------------------------------------------------------------
# catenoid
# --------------------------------------------------------------------------

def catenoid_constant(g: BridgeGeometry) -> float:
    """Larger root ``C`` of ``C cosh(L/2C) = R``.

    Raises
    ------
    ExistenceError
        When ``min_C (C cosh(L/2C) - R) > 0``; ``exc.gap`` is that minimum.
    """
    h = lambda c: c * np.cosh(g.L / (2.0 * c)) - g.R
    c_min = g.L / (2.0 * _T_STAR)
    gap = h(c_min)
    if gap > 0:
        raise ExistenceError(f"no catenoid spans L={g.L}, R={g.R} (min gap {gap:.3e})", gap=gap)
    if gap == 0:
        return c_min
    C = brentq(h, c_min, g.R, xtol=1e-15 * g.R, rtol=4 * np.finfo(float).eps, maxiter=500)
    return float(C)


def catenoid_profile(g: BridgeGeometry, x) -> np.ndarray:
    """Radius ``C cosh(x/C)`` at axial positions ``|x| <= L/2``."""
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 0.5 * g.L * (1 + 1e-12)):
        raise InputError("catenoid profile requested outside |x| <= L/2")
    C = catenoid_constant(g)
    return C * np.cosh(x / C)


# --------------------------------------------------------------------------
# minimal-stretch bridge
# --------------------------------------------------------------------------

@dataclass
class StretchProfile:
    """Axial displacement ``u`` and inward radial displacement ``w`` on ``[0, L/2]``."""

    x: np.ndarray
    u: np.ndarray
    w: np.ndarray
    du: np.ndarray
    dw: np.ndarray
    R: float
    iterations: int

    @property
    def neck_radius(self) -> float:
        return float(self.R - self.w[0])

    def radius(self, z) -> np.ndarray:
        """Deformed radius at deformed axial positions ``z`` (symmetric extension)."""
        zd = self.x + self.u
        return np.interp(np.abs(np.asarray(z, dtype=float)), zd, self.R - self.w)


def _stretch_rhs(u, du, w, dw, R):
    d = R - w
    return du, -2.0 * dw * (1.0 + du) / d, dw, -(2.0 * R * R * dw * dw + R * R - 2.0 * R * w + w * w) / (R * R * d)


def _shoot(w0: float, du0: float, g: BridgeGeometry, n: int, keep: bool = False):
    """RK4 from x = 0 with ``w(0) = w0``, ``u'(0) = du0``; returns the end state.

    Scalar loop: for four unknowns plain floats are much faster than arrays.
    """
    R, h = g.R, 0.5 * g.L / n
    y = (0.0, float(du0), float(w0), 0.0)
    path = [y] if keep else None
    for _ in range(n):
        k1 = _stretch_rhs(*y, R)
        k2 = _stretch_rhs(*(yi + 0.5 * h * ki for yi, ki in zip(y, k1)), R)
        k3 = _stretch_rhs(*(yi + 0.5 * h * ki for yi, ki in zip(y, k2)), R)
        k4 = _stretch_rhs(*(yi + h * ki for yi, ki in zip(y, k3)), R)
        y = tuple(yi + h / 6.0 * (a + 2 * b + 2 * c + d) for yi, a, b, c, d in zip(y, k1, k2, k3, k4))
        if keep:
            path.append(y)
    return np.array(path) if keep else np.array(y)


def minimal_stretch_profile(g: BridgeGeometry, n: int = 10_000, tol: float = 1e-8,
                            max_iter: int = 50) -> StretchProfile:
    """Shooting solution of the minimal-stretch bridge equations.

    Unknowns ``(w(0), u'(0))`` are found by Newton on ``(u(L/2), w(L/2)) = 0``
    with a central-difference Jacobian; the ODE is integrated by RK4 with
    ``n`` steps. The profile is symmetric about ``x = 0``.
    """
    s = np.array([0.1 * g.R, 0.0])
    eps = 1e-7 * g.R
    trace = []
    for it in range(max_iter):
        pts = [s, s + [eps, 0], s - [eps, 0], s + [0, eps], s - [0, eps]]
        try:
            end = np.array([_shoot(p[0], p[1], g, n) for p in pts])
        except (ZeroDivisionError, OverflowError):
            raise NonConvergenceError("shooting trajectory diverged", trace) from None
        res = end[0, [0, 2]]
        trace.append((s.copy(), res.copy()))
        if not np.all(np.isfinite(res)):
            raise NonConvergenceError("shooting trajectory diverged", trace)
        if np.max(np.abs(res)) <= tol * min(g.R, 1.0):
            break
        J = np.column_stack([(end[1] - end[2])[[0, 2]], (end[3] - end[4])[[0, 2]]]) / (2 * eps)
        ds = np.linalg.solve(J, -res)
        # keep the neck away from the axis
        t = 1.0
        while s[0] + t * ds[0] >= g.R and t > 1e-6:
            t *= 0.5
        s = s + t * ds
    else:
        raise NonConvergenceError("shooting Newton did not converge", trace)
    path = _shoot(s[0], s[1], g, n, keep=True)
    x = np.linspace(0.0, 0.5 * g.L, n + 1)
    return StretchProfile(x, path[:, 0], path[:, 2], path[:, 1], path[:, 3], g.R, it)


# --------------------------------------------------------------------------
# bifurcation onset of a stretched cylinder
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BifurcationPoint:
    """Radial stretch ``a``, axial stretch ``lam`` and normalized groups.

    ``gamma_t = gamma/(mu R)``, ``alpha_t = alpha/(mu R)``, ``kappa_t = kappa/mu``.
    """

    a: float
    lam: float
    gamma_t: float
    alpha_t: float
    kappa_t: float
    converged: bool = False
    iterations: int = 0
    residuals: tuple = field(default=(np.nan, np.nan), compare=False)


def radial_equilibrium_residual(p: BifurcationPoint) -> float:
    """Radial traction balance of the homogeneously stretched cylinder."""
    a, l, g, al, k = p.a, p.lam, p.gamma_t, p.alpha_t, p.kappa_t
    if not a > 0:
        raise InputError(f"radial stretch must be positive, got {a}")
    return g * l - (k / 2 + 1) / a + a * (k * a * a * l * l / 2 + 1) + a * al / np.sqrt(a * a + l * l)


def theta0_bracket(a, l, g, al, k):
    """Polynomial factor of the zero-wavenumber determinant (vectorized)."""
    a, l, g, al, k = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, l, g, al, k)))
    s = (a * a + l * l) ** 1.5
    return (4 * k * s + 4 * s + 4 * a**2 * s + k**2 * s + 4 * l**2 * s + 4 * a**2 * l**2 * s
            + 12 * a**2 * al * l**2 + 4 * a**2 * al * l**4 + 8 * a**4 * al * l**2
            + 2 * a**2 * k * s + 2 * k * l**2 * s + 4 * a**4 * k**2 * l**2 * s
            - 5 * a**8 * k**2 * l**4 * s + 8 * a**4 * k * l**2 * s + 6 * a**4 * k * l**4 * s
            + 2 * a**6 * k * l**2 * s + 16 * a**3 * al * g * l**3 + 6 * a**2 * al * k * l**2
            + 30 * a**6 * al * k * l**4 - 8 * a**2 * g**2 * l**2 * s - 16 * a**5 * g * k * l**3 * s)


def theta0_raw(a, l, g, al, k):
    """Zero-wavenumber determinant, vectorized over its arguments."""
    a, l, g, al, k = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, l, g, al, k)))
    s = (a * a + l * l) ** 1.5
    den = (8 * a**4 * s * np.sqrt(k * a**4 * l * l + 2 * a * a + k + 2)
           * np.sqrt(k * a**4 * l * l + 2 * l * l + k + 2))
    return l * (a * a - l * l) * theta0_bracket(a, l, g, al, k) / den


def theta0(p: BifurcationPoint) -> float:
    if not (p.a > 0 and p.lam > 0):
        raise InputError("theta0 needs a, lambda > 0")
    return float(theta0_raw(p.a, p.lam, p.gamma_t, p.alpha_t, p.kappa_t))


_UNKNOWNS = ("gamma_t", "alpha_t", "lam")


def bifurcation_onset(kappa_t: float, lam: Optional[float] = None, alpha_t: Optional[float] = None,
                      gamma_t: Optional[float] = None, guess: Optional[BifurcationPoint] = None,
                      tol: float = 1e-10, max_iter: int = 60) -> BifurcationPoint:
    """Solve radial equilibrium together with ``Theta_0 = 0``.

    Exactly two of ``lam, alpha_t, gamma_t`` are fixed; the third and ``a``
    are unknown. The trivial factor ``a^2 - lam^2`` of ``Theta_0`` is removed
    before Newton so iterates are not attracted to ``a = lam``. Without a
    ``guess`` the iteration starts from ``a = 1, gamma_t = 4`` (or
    ``alpha_t = 0``, ``lam = 1`` for the other unknowns).
    """
    given = {"lam": lam, "alpha_t": alpha_t, "gamma_t": gamma_t}
    free = [k for k, v in given.items() if v is None]
    if len(free) != 1:
        raise InputError("fix exactly two of lam, alpha_t, gamma_t")
    zname = free[0]
    start = {"gamma_t": 4.0, "alpha_t": 0.0, "lam": 1.0}
    if guess is not None:
        a, z = guess.a, float(getattr(guess, zname))
    else:
        a, z = 1.0, start[zname]
    vals = {k: v for k, v in given.items() if v is not None}

    def point(a_, z_):
        return BifurcationPoint(a_, **{**vals, zname: z_}, kappa_t=kappa_t)

    def F(a_, z_):
        p = point(a_, z_)
        return np.array([radial_equilibrium_residual(p),
                         float(theta0_bracket(p.a, p.lam, p.gamma_t, p.alpha_t, p.kappa_t))])

    trace = []
    for it in range(max_iter):
        r = F(a, z)
        p = point(a, z)
        th = theta0(p)
        trace.append((a, z, r[0], th))
        if abs(r[0]) <= 1e-2 * tol and abs(th) <= 1e-2 * tol:
            break
        ha, hz = 1e-7 * max(1.0, abs(a)), 1e-7 * max(1.0, abs(z))
        J = np.column_stack([(F(a + ha, z) - F(a - ha, z)) / (2 * ha),
                             (F(a, z + hz) - F(a, z - hz)) / (2 * hz)])
        try:
            d = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            raise NonConvergenceError("singular onset Jacobian", trace) from None
        t = 1.0
        while (a + t * d[0] <= 0 or (zname == "lam" and z + t * d[1] <= 0)) and t > 1e-8:
            t *= 0.5
        a, z = a + t * d[0], z + t * d[1]
        if not np.isfinite([a, z]).all():
            raise NonConvergenceError("onset Newton diverged", trace)
        if abs(t * d[0]) < 1e-15 * max(abs(a), 1) and abs(t * d[1]) < 1e-15 * max(abs(z), 1):
            break
    p = point(a, z)
    res = (radial_equilibrium_residual(p), theta0(p))
    ok = abs(res[0]) <= tol and abs(res[1]) <= tol
    if not ok:
        raise NonConvergenceError(f"onset Newton stalled at residuals {res}", trace)
    return replace(p, converged=True, iterations=it, residuals=res)


def onset_curve(lams: Sequence[float], alpha_t: float, kappa_t: float) -> List[BifurcationPoint]:
    """Onset ``gamma_t`` along ``lams``; each point seeds the next (sequential)."""
    out: List[BifurcationPoint] = []
    guess = None
    for lam in lams:
        p = bifurcation_onset(kappa_t, lam=lam, alpha_t=alpha_t, guess=guess)
        out.append(p)
        guess = p
    return out


#: standard (lambda, alpha_t) grid of the onset curve family
FIG_LAMBDAS = tuple(np.round(np.arange(0.5, 1.6001, 0.1), 10))
FIG_ALPHAS = (0.0, 0.06, 0.12, 0.18, 0.24, 0.3)


def onset_grid(lams=FIG_LAMBDAS, alphas=FIG_ALPHAS, kappa_t: float = 4.0):
    """``{alpha_t: [BifurcationPoint, ...]}`` over a ``(lambda, alpha_t)`` grid."""
    return {al: onset_curve(lams, al, kappa_t) for al in alphas}
