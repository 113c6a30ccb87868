"""Compressible neo-Hookean bulk response.

``Psi = mu/2 (F:F - 3 - 2 ln J) + kappa/2 (1/2 (J^2 - 1) - ln J)``
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InadmissibleDeformationError, InputError
from .tensor import I3, obar


@dataclass(frozen=True)
class BulkMaterial:
    """Shear modulus ``mu`` and first Lame-type constant ``kappa``."""

    mu: float = 1.0
    kappa: float = 0.0

    def __post_init__(self):
        if not (self.mu > 0):
            raise InputError(f"mu must be positive, got {self.mu}")
        if not (self.kappa >= 0):
            raise InputError(f"kappa must be non-negative, got {self.kappa}")


def _det(F):
    J = np.linalg.det(F)
    if np.any(~(J > 0)):
        bad = np.min(J)
        raise InadmissibleDeformationError(f"det F = {bad:.3e} <= 0", detF=float(bad))
    return J


def bulk_energy(F, m: BulkMaterial):
    F = np.asarray(F, dtype=float)
    J = _det(F)
    lnJ = np.log(J)
    FF = np.einsum("...ij,...ij->...", F, F)
    return 0.5 * m.mu * (FF - 3.0 - 2.0 * lnJ) + 0.5 * m.kappa * (0.5 * (J**2 - 1.0) - lnJ)


def bulk_stress(F, m: BulkMaterial):
    """First Piola-Kirchhoff stress ``mu (F - F^-T) + kappa/2 (J^2 - 1) F^-T``."""
    F = np.asarray(F, dtype=float)
    J = _det(F)
    FiT = np.swapaxes(np.linalg.inv(F), -1, -2)
    c = 0.5 * m.kappa * (J**2 - 1.0)
    return m.mu * (F - FiT) + c[..., None, None] * FiT


def bulk_tangent(F, m: BulkMaterial):
    """First elasticity tensor ``A_ijkl = dP_ij / dF_kl``."""
    F = np.asarray(F, dtype=float)
    J = _det(F)
    Fi = np.linalg.inv(F)
    FiT = np.swapaxes(Fi, -1, -2)
    # d(F^-T)_ij / dF_kl = -Fi_jk Fi_li
    dFiT = -np.einsum("...li,...jk->...ijkl", Fi, Fi)
    c = 0.5 * m.kappa * (J**2 - 1.0)
    A = m.mu * obar(np.broadcast_to(I3, F.shape), np.broadcast_to(I3, F.shape)) \
        - m.mu * dFiT + c[..., None, None, None, None] * dFiT \
        + (m.kappa * J**2)[..., None, None, None, None] * FiT[..., :, :, None, None] * FiT[..., None, None, :, :]
    return A
