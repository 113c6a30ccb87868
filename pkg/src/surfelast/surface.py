"""Surface-polyconvex constitutive models.

Four variants are provided, all built from the same additive terms:

==========  ====================================================
``Fluid``   ``gamma Jhat``
``IsoPoly`` ``alpha ||Fhat|| + gamma Jhat``
``Ogden``   ``sum_I alpha_I (l1^b_I + l2^b_I)^(1/b_I) + gamma l1 l2``
``Aniso``   ``alpha ||Fhat|| + gamma Jhat + eta ||Fhat a|| + beta sqrt(||C a||)``
==========  ====================================================

Tangents are returned in the projected form ``A_ijkl = H_iakb Ihat_aj Ihat_bl``
which is the unique representative acting on superficial increments and has
major symmetry.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from .errors import InputError, SingularityError
from .tensor import (I3, SurfaceState, _require_rank2, check_fiber,
                     d_surface_jacobian, dyad4, major_transpose, norm2, obar,
                     outer, piola_surface, polar_decompose, surface_jacobian, ubar)

#: relative step of the directional finite difference used for the Ogden tangent
OGDEN_FD_STEP = 1e-7


def _nonneg(**kw):
    for k, v in kw.items():
        if not (np.isfinite(v) and v >= 0):
            raise InputError(f"surface parameter {k} must be finite and non-negative, got {v}")


@dataclass(frozen=True)
class Fluid:
    gamma: float = 0.0

    def __post_init__(self):
        _nonneg(gamma=self.gamma)


@dataclass(frozen=True)
class IsoPoly:
    alpha: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        _nonneg(alpha=self.alpha, gamma=self.gamma)


@dataclass(frozen=True)
class Ogden:
    terms: Tuple[Tuple[float, float], ...] = ()
    gamma: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((float(a), float(b)) for a, b in self.terms))
        _nonneg(gamma=self.gamma)
        for a, b in self.terms:
            _nonneg(alpha_I=a)
            if not b > 0:
                raise InputError(f"Ogden exponent must be positive, got {b}")


@dataclass(frozen=True)
class Aniso:
    alpha: float = 0.0
    gamma: float = 0.0
    eta: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        _nonneg(alpha=self.alpha, gamma=self.gamma, eta=self.eta, beta=self.beta)

    @property
    def needs_fiber(self) -> bool:
        return self.eta > 0 or self.beta > 0


SurfaceMaterial = Union[Fluid, IsoPoly, Ogden, Aniso]


def _coeffs(m: SurfaceMaterial):
    """(alpha, gamma, eta, beta) of the additive terms."""
    if isinstance(m, Fluid):
        return 0.0, m.gamma, 0.0, 0.0
    if isinstance(m, IsoPoly):
        return m.alpha, m.gamma, 0.0, 0.0
    if isinstance(m, Aniso):
        return m.alpha, m.gamma, m.eta, m.beta
    if isinstance(m, Ogden):
        return 0.0, m.gamma, 0.0, 0.0
    raise InputError(f"unknown surface material {m!r}")


def _fiber(s: SurfaceState, m, a):
    if isinstance(m, Aniso) and m.needs_fiber:
        if a is None:
            raise InputError("anisotropic surface material requires a fiber direction")
        a = np.asarray(a, dtype=float)
        check_fiber(a, s.N)
        return a
    return None


def _mv(A, v):
    return np.einsum("...ij,...j->...i", A, v)


# --------------------------------------------------------------------------
# individual terms: each returns (energy, stress, tangent-or-None)
# --------------------------------------------------------------------------

def _norm_term(s, alpha, tangent):
    nF = norm2(s.Fhat)
    if np.any(~(nF > 0)):
        raise SingularityError("||Fhat|| = 0: derivative of the norm term is undefined", value=0.0)
    W = alpha * nF
    P = alpha * s.Fhat / nF[..., None, None]
    A = None
    if tangent:
        Ib = np.broadcast_to(I3, s.Fhat.shape)
        A = (alpha / nF)[..., None, None, None, None] * (
            obar(Ib, s.Ihat) - dyad4(s.Fhat, s.Fhat) / (nF**2)[..., None, None, None, None])
    return W, P, A


def _jacobian_term(s, gamma, tangent):
    J = surface_jacobian(s)
    W = gamma * J
    dJ = d_surface_jacobian(s)
    P = gamma * dJ
    A = None
    if tangent:
        F = s.Fhat
        C = s.C
        trC = np.trace(C, axis1=-2, axis2=-1)
        Ib = np.broadcast_to(I3, F.shape)
        FFt = F @ np.swapaxes(F, -1, -2)
        H = (-dyad4(dJ, dJ) + obar(Ib, trC[..., None, None] * s.Ihat - C)
             + 2.0 * dyad4(F, F) - ubar(F, np.swapaxes(F, -1, -2)) - obar(FFt, s.Ihat))
        A = (gamma / J)[..., None, None, None, None] * H
    return W, P, A


def _fiber_norm_term(s, eta, a, tangent):
    Fa = _mv(s.Fhat, a)
    n = np.linalg.norm(Fa, axis=-1)
    if np.any(~(n > 0)):
        raise SingularityError("||Fhat a|| = 0: fiber stress is singular", value=0.0)
    W = eta * n
    G = outer(Fa, a)
    P = eta * G / n[..., None, None]
    A = None
    if tangent:
        Ib = np.broadcast_to(I3, s.Fhat.shape)
        A = eta * (obar(Ib, outer(a, a)) / n[..., None, None, None, None]
                   - dyad4(G, G) / (n**3)[..., None, None, None, None])
    return W, P, A


def _fiber_sqrt_term(s, beta, a, tangent):
    F = s.Fhat
    Ca = _mv(s.C, a)
    sn = np.linalg.norm(Ca, axis=-1)
    if np.any(~(sn > 0)):
        raise SingularityError("||C a|| = 0: fiber stress is singular", value=0.0)
    W = beta * np.sqrt(sn)
    M = outer(a, Ca) + outer(Ca, a)
    T = F @ M
    c = beta / (2.0 * sn**1.5)
    P = c[..., None, None] * T
    A = None
    if tangent:
        Fa = _mv(F, a)
        Ib = np.broadcast_to(I3, F.shape)
        FFt = F @ np.swapaxes(F, -1, -2)
        T1 = np.einsum("...il,...j,...k->...ijkl", F, a, Fa)
        T2 = np.einsum("...ik,...j,...l->...ijkl", FFt, a, a)
        T3 = np.einsum("...i,...k,...jl->...ijkl", Fa, Fa, s.Ihat)
        T4 = np.einsum("...i,...kj,...l->...ijkl", Fa, F, a)
        A = (-0.75 * beta / sn**3.5)[..., None, None, None, None] * dyad4(T, T) \
            + c[..., None, None, None, None] * (obar(Ib, M) + T1 + T2 + T3 + T4)
    return W, P, A


def _ogden_energy(s, m: Ogden):
    lam = polar_decompose(s).stretches
    W = m.gamma * lam[..., 0] * lam[..., 1]
    for al, be in m.terms:
        W = W + al * (lam[..., 0]**be + lam[..., 1]**be)**(1.0 / be)
    return W


def _ogden_stress(Fhat, N, m: Ogden):
    s = SurfaceState(Fhat, N)
    _require_rank2(s, "Ogden stress")
    U, sv, Vt = np.linalg.svd(Fhat)
    l1, l2 = sv[..., 0], sv[..., 1]
    d1 = m.gamma * l2
    d2 = m.gamma * l1
    for al, be in m.terms:
        base = (l1**be + l2**be)**(1.0 / be - 1.0)
        d1 = d1 + al * base * l1**(be - 1.0)
        d2 = d2 + al * base * l2**(be - 1.0)
    return (d1[..., None, None] * outer(U[..., :, 0], Vt[..., 0, :])
            + d2[..., None, None] * outer(U[..., :, 1], Vt[..., 1, :]))


def _ogden_tangent(s, m: Ogden):
    """Central directional differences of the analytic stress, then symmetrized."""
    F = s.Fhat
    h = OGDEN_FD_STEP * np.maximum(norm2(F), 1.0)
    Ih = s.Ihat
    A = np.zeros(F.shape + (3, 3))
    for k in range(3):
        for l in range(3):
            D = np.zeros(F.shape)
            D[..., k, :] = Ih[..., l, :]
            Dh = D * h[..., None, None]
            dP = (_ogden_stress(F + Dh, s.N, m) - _ogden_stress(F - Dh, s.N, m)) / (2.0 * h[..., None, None])
            A[..., :, :, k, l] = dP
    # project the stress index j as well
    A = np.einsum("...iakl,...aj->...ijkl", A, Ih)
    return 0.5 * (A + major_transpose(A))


# --------------------------------------------------------------------------
# public API
# --------------------------------------------------------------------------

def surface_response(s: SurfaceState, m: SurfaceMaterial, a=None, tangent: bool = True):
    """Energy density, first Piola-Kirchhoff stress and tangent in one pass.

    Returns
    -------
    W : ndarray (...)
    P : ndarray (..., 3, 3)
    A : ndarray (..., 3, 3, 3, 3) or None
    """
    a = _fiber(s, m, a)
    shape = s.Fhat.shape[:-2]
    W = np.zeros(shape)
    P = np.zeros(shape + (3, 3))
    A = np.zeros(shape + (3, 3, 3, 3)) if tangent else None

    if isinstance(m, Ogden):
        W = _ogden_energy(s, m)
        P = _ogden_stress(s.Fhat, s.N, m)
        if tangent:
            A = _ogden_tangent(s, m)
        return W, P, A

    alpha, gamma, eta, beta = _coeffs(m)
    terms = []
    if alpha > 0:
        terms.append(_norm_term(s, alpha, tangent))
    if gamma > 0:
        terms.append(_jacobian_term(s, gamma, tangent))
    if eta > 0:
        terms.append(_fiber_norm_term(s, eta, a, tangent))
    if beta > 0:
        terms.append(_fiber_sqrt_term(s, beta, a, tangent))
    for Wt, Pt, At in terms:
        W = W + Wt
        P = P + Pt
        if tangent:
            A = A + At
    return W, P, A


def surface_energy(s: SurfaceState, m: SurfaceMaterial, a=None):
    """Surface energy density per unit reference area."""
    a = _fiber(s, m, a)
    if isinstance(m, Ogden):
        return _ogden_energy(s, m)
    alpha, gamma, eta, beta = _coeffs(m)
    W = alpha * norm2(s.Fhat) + gamma * surface_jacobian(s)
    if eta > 0:
        W = W + eta * np.linalg.norm(_mv(s.Fhat, a), axis=-1)
    if beta > 0:
        W = W + beta * np.sqrt(np.linalg.norm(_mv(s.C, a), axis=-1))
    return W


def surface_stress_pk(s: SurfaceState, m: SurfaceMaterial, a=None):
    """First Piola-Kirchhoff surface stress ``dPsi/dFhat``."""
    return surface_response(s, m, a, tangent=False)[1]


def surface_stress_cauchy(s: SurfaceState, m: SurfaceMaterial, a=None):
    """Surface Cauchy stress ``(1/Jhat) P Fhat^T``."""
    return piola_surface(surface_stress_pk(s, m, a), s)


def surface_tangent(s: SurfaceState, m: SurfaceMaterial, a=None):
    """First surface elasticity tensor in projected form."""
    return surface_response(s, m, a, tangent=True)[2]


def fiber_identity_check(s: SurfaceState, a):
    """Return ``(||Fhat a||, sqrt(||C a||))``; equal when ``a`` is principal."""
    a = np.asarray(a, dtype=float)
    return (np.linalg.norm(_mv(s.Fhat, a), axis=-1),
            np.sqrt(np.linalg.norm(_mv(s.C, a), axis=-1)))


def material_from_dict(d: dict) -> SurfaceMaterial:
    """Build a surface material from ``{"model": ..., params}``."""
    d = dict(d)
    model = d.pop("model")
    if model == "fluid":
        return Fluid(**d)
    if model == "isopoly":
        return IsoPoly(**d)
    if model == "ogden":
        return Ogden(terms=tuple(tuple(t) for t in d.pop("terms", ())), **d)
    if model == "aniso":
        return Aniso(**d)
    raise InputError(f"unknown surface model {model!r}")
