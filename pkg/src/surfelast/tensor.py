"""Pointwise tensor algebra and surface kinematics.

Every function accepts a single tensor of shape ``(3, 3)`` or a batch of shape
``(..., 3, 3)``; vectors are ``(..., 3)``. All quantities live in the global
Cartesian frame.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, SingularityError

#: singular-value ratio below which a surface state counts as rank deficient
RANK_TOL = 1e-8

LEVI_CIVITA = np.zeros((3, 3, 3))
LEVI_CIVITA[0, 1, 2] = LEVI_CIVITA[1, 2, 0] = LEVI_CIVITA[2, 0, 1] = 1.0
LEVI_CIVITA[0, 2, 1] = LEVI_CIVITA[2, 1, 0] = LEVI_CIVITA[1, 0, 2] = -1.0

I3 = np.eye(3)


# --------------------------------------------------------------------------
# generic helpers
# --------------------------------------------------------------------------

def outer(a, b):
    """Dyadic product of two vectors, broadcasting over leading axes."""
    return a[..., :, None] * b[..., None, :]


def dyad4(A, B):
    """``[A (x) B]_ijkl = A_ij B_kl``."""
    return A[..., :, :, None, None] * B[..., None, None, :, :]


def obar(A, B):
    """Upper nonstandard product ``[A (x)bar B]_ijkl = A_ik B_jl``."""
    return A[..., :, None, :, None] * B[..., None, :, None, :]


def ubar(A, B):
    """Lower nonstandard product ``[A (x)underbar B]_ijkl = A_il B_jk``."""
    return A[..., :, None, None, :] * B[..., None, :, :, None]


def ddot(A, B):
    """Double contraction ``A : B`` of second-order tensors."""
    return np.einsum("...ij,...ij->...", A, B)


def ddot42(A, B):
    """Contract a fourth-order tensor with a second-order one, ``A_ijkl B_kl``."""
    return np.einsum("...ijkl,...kl->...ij", A, B)


def norm2(A):
    """Frobenius norm over the last two axes."""
    return np.sqrt(np.einsum("...ij,...ij->...", A, A))


def major_transpose(A):
    """``A_klij``."""
    return np.swapaxes(np.swapaxes(A, -4, -2), -3, -1)


def tensor_cross(F, G):
    """Tensor cross product ``[F x G]_ij = e_imn e_jop F_mo G_np``."""
    return np.einsum("imn,jop,...mo,...np->...ij", LEVI_CIVITA, LEVI_CIVITA, F, G)


def cofactor(F):
    """Cofactor ``cof F = (1/2) F x F``; also valid for singular ``F``.

    Evaluated column-wise as ``[f2 x f3, f3 x f1, f1 x f2]`` for the columns
    ``f_i`` of ``F``, which is algebraically identical to the cross product form.
    """
    f1, f2, f3 = F[..., :, 0], F[..., :, 1], F[..., :, 2]
    return np.stack([np.cross(f2, f3), np.cross(f3, f1), np.cross(f1, f2)], axis=-1)


def projector(N):
    """Orthogonal projection ``I - N (x) N`` onto the plane normal to ``N``."""
    N = np.asarray(N, dtype=float)
    nrm = np.linalg.norm(N, axis=-1)
    if np.any(np.abs(nrm - 1.0) > 1e-12):
        raise InputError(f"normal must be a unit vector, got norm {np.max(np.abs(nrm)):.3e}")
    return I3 - outer(N, N)


# --------------------------------------------------------------------------
# surface state
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SurfaceState:
    """Admissible pair ``(Fhat, N)`` with ``Fhat @ N = 0``.

    Arrays may carry leading batch axes.
    """

    Fhat: np.ndarray
    N: np.ndarray

    def check(self, tol: float = 1e-10) -> None:
        nrm = np.linalg.norm(self.N, axis=-1)
        if np.any(np.abs(nrm - 1.0) > 1e-12):
            raise InputError("surface normal is not a unit vector")
        FN = np.linalg.norm(np.einsum("...ij,...j->...i", self.Fhat, self.N), axis=-1)
        if np.any(FN > tol * np.maximum(norm2(self.Fhat), 1e-300)):
            raise InputError("Fhat N != 0: state is not superficial")

    @property
    def Ihat(self):
        return I3 - outer(self.N, self.N)

    @property
    def C(self):
        return np.swapaxes(self.Fhat, -1, -2) @ self.Fhat


@dataclass(frozen=True)
class PolarDecomposition:
    """Rank-2 polar factors ``Fhat = Rhat @ Uhat``."""

    Rhat: np.ndarray
    Uhat: np.ndarray
    stretches: np.ndarray  # (..., 2), descending


def surface_deformation_gradient(F, N) -> SurfaceState:
    """Surface deformation gradient ``Fhat = F Ihat`` paired with ``N``."""
    F = np.asarray(F, dtype=float)
    N = np.asarray(N, dtype=float)
    return SurfaceState(F @ projector(N), N)


def surface_jacobian(s: SurfaceState):
    """Area ratio ``Jhat = ||cof Fhat||``."""
    return norm2(cofactor(s.Fhat))


def surface_jacobian_forms(F, N):
    """All equivalent expressions for the surface Jacobian.

    Parameters
    ----------
    F : array_like
        Bulk deformation gradient (need not be superficial).
    N : array_like
        Unit reference normal.

    Returns
    -------
    dict
        Keys ``cofF_N``, ``cofFhat_N``, ``cofFhat``, ``tr_cofC``, ``sqrt_I2``,
        ``stretch_product``.
    """
    F = np.asarray(F, dtype=float)
    N = np.asarray(N, dtype=float)
    s = surface_deformation_gradient(F, N)
    C = s.C
    trC = np.trace(C, axis1=-2, axis2=-1)
    trCC = np.einsum("...ij,...ij->...", C, C)
    sv = np.linalg.svd(s.Fhat, compute_uv=False)
    return {
        "cofF_N": np.linalg.norm(np.einsum("...ij,...j->...i", cofactor(F), N), axis=-1),
        "cofFhat_N": np.linalg.norm(np.einsum("...ij,...j->...i", cofactor(s.Fhat), N), axis=-1),
        "cofFhat": norm2(cofactor(s.Fhat)),
        "tr_cofC": np.sqrt(np.trace(cofactor(C), axis1=-2, axis2=-1)),
        "sqrt_I2": np.sqrt(np.maximum(0.5 * trC**2 - 0.5 * trCC, 0.0)),
        "stretch_product": sv[..., 0] * sv[..., 1],
    }


def surface_stretches(s: SurfaceState):
    """Principal surface stretches ``(lam1, lam2)`` from the invariants.

    Uses ``lam1^2 + lam2^2 = ||Fhat||^2`` and ``lam1 lam2 = Jhat`` and avoids
    an SVD, so it is cheap for large batches.
    """
    I1 = np.einsum("...ij,...ij->...", s.Fhat, s.Fhat)
    J = surface_jacobian(s)
    disc = np.sqrt(np.maximum(I1**2 - 4.0 * J**2, 0.0))
    l1sq = 0.5 * (I1 + disc)
    l2sq = np.where(l1sq > 0, J**2 / np.where(l1sq > 0, l1sq, 1.0), 0.0)
    return np.sqrt(l1sq), np.sqrt(l2sq)


def _require_rank2(s: SurfaceState, what: str):
    l1, l2 = surface_stretches(s)
    bad = ~(l2 > RANK_TOL * l1) | ~(l1 > 0)
    if np.any(bad):
        idx = np.flatnonzero(np.atleast_1d(bad))
        lam2 = np.ravel(l2)[idx[0]]
        raise SingularityError(
            f"{what}: surface state is rank deficient (lambda2 = {lam2:.3e})",
            value=float(lam2), where=idx)
    return l1, l2


def polar_decompose(s: SurfaceState) -> PolarDecomposition:
    """Rank-2 polar decomposition through the SVD of ``Fhat``.

    Singular values are sorted descending and the third pair of singular
    vectors is flipped so that ``det(U) det(V) = +1``.
    """
    U, sv, Vt = np.linalg.svd(s.Fhat)
    sign = np.sign(np.linalg.det(U) * np.linalg.det(Vt))
    U = U.copy()
    U[..., :, 2] *= sign[..., None]
    V = np.swapaxes(Vt, -1, -2)
    Rhat = np.einsum("...ia,...ja->...ij", U[..., :, :2], V[..., :, :2])
    Uhat = np.einsum("...ia,...a,...ja->...ij", V[..., :, :2], sv[..., :2], V[..., :, :2])
    return PolarDecomposition(Rhat, Uhat, sv[..., :2])


def pseudo_inverse(s: SurfaceState):
    """Surface pseudo-inverse with ``inv(Fhat) Fhat = Ihat`` and ``Fhat inv(Fhat) = ihat``.

    Built from ``Fhat^{-T} = Fhat (tr C Ihat - C) / Jhat^2``.
    """
    _require_rank2(s, "pseudo_inverse")
    return np.swapaxes(_inverse_transpose(s), -1, -2)


def _inverse_transpose(s: SurfaceState):
    C = s.C
    trC = np.trace(C, axis1=-2, axis2=-1)
    cof = cofactor(s.Fhat)
    J2 = np.einsum("...ij,...ij->...", cof, cof)
    return s.Fhat @ (trC[..., None, None] * s.Ihat - C) / J2[..., None, None]


def deformed_normal(s: SurfaceState):
    """Deformed unit normal ``n = cof(Fhat) N / Jhat``."""
    _require_rank2(s, "deformed_normal")
    cN = np.einsum("...ij,...j->...i", cofactor(s.Fhat), s.N)
    return cN / np.linalg.norm(cN, axis=-1)[..., None]


def surface_invariants(s: SurfaceState, a=None):
    """Invariants ``(I1, I2, I4, I5)``; the fiber terms are ``None`` without ``a``.

    ``I1 = ||Fhat||^2``, ``I2 = ||cof Fhat||^2``, ``I4 = ||Fhat a||^2``,
    ``I5 = ||C a||^2``.
    """
    I1 = np.einsum("...ij,...ij->...", s.Fhat, s.Fhat)
    cof = cofactor(s.Fhat)
    I2 = np.einsum("...ij,...ij->...", cof, cof)
    if a is None:
        return I1, I2, None, None
    a = np.asarray(a, dtype=float)
    check_fiber(a, s.N)
    Fa = np.einsum("...ij,...j->...i", s.Fhat, a)
    Ca = np.einsum("...ij,...j->...i", s.C, a)
    return I1, I2, np.einsum("...i,...i->...", Fa, Fa), np.einsum("...i,...i->...", Ca, Ca)


def check_fiber(a, N, tol: float = 1e-10):
    nrm = np.linalg.norm(a, axis=-1)
    if np.any(np.abs(nrm - 1.0) > tol):
        raise InputError("fiber direction must be a unit vector")
    if np.any(np.abs(np.einsum("...i,...i->...", a, N)) > tol):
        raise InputError("fiber direction must be tangent to the surface (a . N = 0)")


def d_surface_jacobian(s: SurfaceState):
    """Derivative ``dJhat/dFhat = Jhat Fhat^{-T} = Fhat (tr C Ihat - C) / Jhat``."""
    _require_rank2(s, "d_surface_jacobian")
    C = s.C
    trC = np.trace(C, axis1=-2, axis2=-1)
    J = surface_jacobian(s)
    return s.Fhat @ (trC[..., None, None] * s.Ihat - C) / J[..., None, None]


def piola_surface(W, s: SurfaceState):
    """Surface Piola transform ``(1/Jhat) W Fhat^T``."""
    _require_rank2(s, "piola_surface")
    J = surface_jacobian(s)
    return np.asarray(W) @ np.swapaxes(s.Fhat, -1, -2) / J[..., None, None]


def random_rotation(rng: np.random.Generator):
    """Uniformly random proper rotation (QR of a Gaussian matrix)."""
    Q, R = np.linalg.qr(rng.standard_normal((3, 3)))
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] *= -1
    return Q


def random_unit(rng: np.random.Generator, size=None):
    v = rng.standard_normal((3,) if size is None else (size, 3))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def random_surface_state(rng: np.random.Generator, min_stretch: float = 0.1,
                         max_stretch: float = 3.0) -> SurfaceState:
    """Random rank-2 state with prescribed stretch range (test fixture helper)."""
    N = random_unit(rng)
    P = projector(N)
    # orthonormal tangent basis
    t1 = P @ random_unit(rng)
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(N, t1)
    lam = rng.uniform(min_stretch, max_stretch, size=2)
    Q = random_rotation(rng)
    th = rng.uniform(0, 2 * np.pi)
    v1 = np.cos(th) * t1 + np.sin(th) * t2
    v2 = -np.sin(th) * t1 + np.cos(th) * t2
    Fhat = lam[0] * np.outer(Q[:, 0], v1) + lam[1] * np.outer(Q[:, 1], v2)
    return SurfaceState(Fhat, N)
