"""Element shape functions and Gauss rules.

Node orderings follow the legacy VTK conventions; quadratic edge nodes are
ordered ``(0,1),(1,2),(0,2),(0,3),(1,3),(2,3)`` for tet10 and
``(0,1),(1,2),(2,0)`` for tri6.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

_G2 = np.array([-1.0, 1.0]) / np.sqrt(3.0)


@dataclass(frozen=True)
class ElementType:
    name: str
    pdim: int        # parametric dimension
    nnodes: int
    vtk_id: int
    points: np.ndarray   # (nq, pdim)
    weights: np.ndarray  # (nq,)
    shape: Callable      # xi (..., pdim) -> N (..., nnodes)
    dshape: Callable     # xi (..., pdim) -> dN/dxi (..., nnodes, pdim)
    faces: tuple = ()    # local node lists of boundary facets (outward ordering)

    def eval(self):
        """Shape values and parametric derivatives at the Gauss points."""
        return self.shape(self.points), self.dshape(self.points)


# --- 1D -------------------------------------------------------------------

def _line2_N(xi):
    x = xi[..., 0]
    return np.stack([(1 - x) / 2, (1 + x) / 2], axis=-1)


def _line2_dN(xi):
    x = xi[..., 0]
    d = np.stack([-0.5 * np.ones_like(x), 0.5 * np.ones_like(x)], axis=-1)
    return d[..., None]


# --- 2D -------------------------------------------------------------------

_Q4 = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], dtype=float)


def _quad4_N(xi):
    return 0.25 * (1 + xi[..., None, 0] * _Q4[:, 0]) * (1 + xi[..., None, 1] * _Q4[:, 1])


def _quad4_dN(xi):
    a = 1 + xi[..., None, 0] * _Q4[:, 0]
    b = 1 + xi[..., None, 1] * _Q4[:, 1]
    return 0.25 * np.stack([_Q4[:, 0] * b, a * _Q4[:, 1]], axis=-1)


def _tri3_N(xi):
    return np.stack([1 - xi[..., 0] - xi[..., 1], xi[..., 0], xi[..., 1]], axis=-1)


def _tri3_dN(xi):
    d = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    return np.broadcast_to(d, xi.shape[:-1] + d.shape).copy()


_T6E = ((0, 1), (1, 2), (2, 0))


def _bary2(xi):
    L = np.stack([1 - xi[..., 0] - xi[..., 1], xi[..., 0], xi[..., 1]], axis=-1)
    dL = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    return L, dL


def _tri6_N(xi):
    L, _ = _bary2(xi)
    c = [L[..., i] * (2 * L[..., i] - 1) for i in range(3)]
    e = [4 * L[..., a] * L[..., b] for a, b in _T6E]
    return np.stack(c + e, axis=-1)


def _tri6_dN(xi):
    L, dL = _bary2(xi)
    c = [(4 * L[..., i, None] - 1) * dL[i] for i in range(3)]
    e = [4 * (L[..., b, None] * dL[a] + L[..., a, None] * dL[b]) for a, b in _T6E]
    return np.stack(c + e, axis=-2)


# --- 3D -------------------------------------------------------------------

_H8 = np.array([[-1, -1, -1], [1, -1, -1], [1, 1, -1], [-1, 1, -1],
                [-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1]], dtype=float)


def _hex8_N(xi):
    return 0.125 * np.prod(1 + xi[..., None, :] * _H8, axis=-1)


def _hex8_dN(xi):
    f = 1 + xi[..., None, :] * _H8  # (..., 8, 3)
    out = np.empty(f.shape)
    for d in range(3):
        others = [k for k in range(3) if k != d]
        out[..., d] = 0.125 * _H8[:, d] * f[..., others[0]] * f[..., others[1]]
    return out


def _bary3(xi):
    L = np.stack([1 - xi[..., 0] - xi[..., 1] - xi[..., 2], xi[..., 0], xi[..., 1], xi[..., 2]], axis=-1)
    dL = np.array([[-1.0, -1.0, -1.0], [1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0]])
    return L, dL


def _tet4_N(xi):
    return _bary3(xi)[0]


def _tet4_dN(xi):
    dL = _bary3(xi)[1]
    return np.broadcast_to(dL, xi.shape[:-1] + dL.shape).copy()


_T10E = ((0, 1), (1, 2), (0, 2), (0, 3), (1, 3), (2, 3))


def _tet10_N(xi):
    L, _ = _bary3(xi)
    c = [L[..., i] * (2 * L[..., i] - 1) for i in range(4)]
    e = [4 * L[..., a] * L[..., b] for a, b in _T10E]
    return np.stack(c + e, axis=-1)


def _tet10_dN(xi):
    L, dL = _bary3(xi)
    c = [(4 * L[..., i, None] - 1) * dL[i] for i in range(4)]
    e = [4 * (L[..., b, None] * dL[a] + L[..., a, None] * dL[b]) for a, b in _T10E]
    return np.stack(c + e, axis=-2)


def _gauss_tensor(pdim):
    if pdim == 1:
        return _G2[:, None], np.ones(2)
    if pdim == 2:
        p = np.array([[x, y] for y in _G2 for x in _G2])
        return p, np.ones(4)
    p = np.array([[x, y, z] for z in _G2 for y in _G2 for x in _G2])
    return p, np.ones(8)


_ta, _tb = 0.5854101966249685, 0.1381966011250105

ELEMENTS = {
    "line2": ElementType("line2", 1, 2, 3, *_gauss_tensor(1), _line2_N, _line2_dN),
    "quad4": ElementType("quad4", 2, 4, 9, *_gauss_tensor(2), _quad4_N, _quad4_dN,
                         faces=((0, 1), (1, 2), (2, 3), (3, 0))),
    "tri3": ElementType("tri3", 2, 3, 5, np.array([[1 / 3, 1 / 3]]), np.array([0.5]),
                        _tri3_N, _tri3_dN),
    "tri6": ElementType("tri6", 2, 6, 22,
                        np.array([[1 / 6, 1 / 6], [2 / 3, 1 / 6], [1 / 6, 2 / 3]]),
                        np.full(3, 1 / 6), _tri6_N, _tri6_dN),
    "hex8": ElementType("hex8", 3, 8, 12, *_gauss_tensor(3), _hex8_N, _hex8_dN,
                        faces=((0, 3, 2, 1), (4, 5, 6, 7), (0, 1, 5, 4),
                               (1, 2, 6, 5), (2, 3, 7, 6), (3, 0, 4, 7))),
    "tet4": ElementType("tet4", 3, 4, 10, np.array([[0.25, 0.25, 0.25]]), np.array([1 / 6]),
                        _tet4_N, _tet4_dN,
                        faces=((0, 2, 1), (0, 1, 3), (1, 2, 3), (0, 3, 2))),
    "tet10": ElementType("tet10", 3, 10, 24,
                         np.array([[_tb, _tb, _tb], [_ta, _tb, _tb], [_tb, _ta, _tb], [_tb, _tb, _ta]]),
                         np.full(4, 1 / 24), _tet10_N, _tet10_dN,
                         faces=((0, 2, 1, 6, 5, 4), (0, 1, 3, 4, 8, 7),
                                (1, 2, 3, 5, 9, 8), (0, 3, 2, 7, 9, 6))),
}

#: surface element kind matching each bulk facet
FACET_KIND = {"hex8": "quad4", "tet4": "tri3", "tet10": "tri6", "quad4": "line2"}


def get(kind: str) -> ElementType:
    try:
        return ELEMENTS[kind]
    except KeyError:
        from ..errors import InputError
        raise InputError(f"unknown element kind {kind!r}") from None
