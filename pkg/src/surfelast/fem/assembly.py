"""Residual, tangent and energy assembly for bulk plus surface energies.

Each element block is reduced to a linear operator ``G`` with
``F[e, q] = sum_a G[e, q, a] x[e, a]`` where ``a`` runs over the element's
degrees of freedom. This covers 3D continua, axisymmetric continua (hoop
stretch ``r/R``), 3D surface facets and axisymmetric surface lines with one
code path:

    R_e = sum_q w P : G_a,    K_e = sum_q w G_a : A : G_b

Accumulation into the global arrays uses ``np.bincount`` on a fixed
COO-to-CSR map, so results are deterministic and independent of element order
up to floating point summation order, which is itself fixed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.sparse as sp

from ..bulk import BulkMaterial, bulk_energy, bulk_stress, bulk_tangent
from ..errors import InputError, InvertedElementError, SingularityError
from ..surface import Aniso, SurfaceMaterial, surface_response
from ..tensor import SurfaceState, surface_jacobian
from . import elements as el
from .mesh import Block, Mesh

TWO_PI = 2.0 * np.pi
#: warping tolerance for quad4 facets, relative to the longest edge
WARP_TOL = 1e-6


@dataclass
class LoadCase:
    """Dirichlet data and dead loads.

    Attributes
    ----------
    fixed_dofs : ndarray of int
        Global dof indices ``node * dim + component``.
    fixed_values : ndarray
        Prescribed deformed coordinates for those dofs.
    body_force : ndarray or None
        Dead body force per reference volume.
    traction : ndarray or None
        Dead traction per reference area applied on all surface elements.
    """

    fixed_dofs: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    fixed_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    body_force: Optional[np.ndarray] = None
    traction: Optional[np.ndarray] = None

    def __post_init__(self):
        self.fixed_dofs = np.asarray(self.fixed_dofs, dtype=np.int64)
        self.fixed_values = np.asarray(self.fixed_values, dtype=float)
        if self.fixed_dofs.shape != self.fixed_values.shape:
            raise InputError("fixed_dofs and fixed_values must have equal length")
        if len(np.unique(self.fixed_dofs)) != len(self.fixed_dofs):
            raise InputError("a dof is constrained twice")

    @classmethod
    def fix_nodes(cls, mesh: Mesh, nodes, components, values=None) -> "LoadCase":
        """Constrain ``components`` of ``nodes``; values default to reference coordinates."""
        lc = cls()
        return lc.with_fixed(mesh, nodes, components, values)

    def with_fixed(self, mesh: Mesh, nodes, components, values=None) -> "LoadCase":
        """Add constraints; ``values`` maps component -> scalar or per-node array.

        Components missing from ``values`` keep their reference coordinate.
        Later constraints on an already fixed dof replace the earlier value.
        """
        nodes = np.asarray(nodes, dtype=np.int64)
        values = values or {}
        dofs, vals = [self.fixed_dofs], [self.fixed_values]
        for c in components:
            dofs.append(nodes * mesh.dim + c)
            v = values.get(c, mesh.nodes[nodes, c])
            vals.append(np.broadcast_to(np.asarray(v, dtype=float), nodes.shape).copy())
        d = np.concatenate(dofs)[::-1]
        v = np.concatenate(vals)[::-1]
        d, first = np.unique(d, return_index=True)
        return LoadCase(d, v[first], self.body_force, self.traction)


@dataclass
class AssembledSystem:
    R: np.ndarray
    K: Optional[sp.csr_matrix]
    energy: float
    force_scale: float

    @property
    def ndof(self):
        return len(self.R)


@dataclass
class ReducedSystem:
    R: np.ndarray
    K: Optional[sp.csr_matrix]
    free: np.ndarray
    energy: float
    force_scale: float


@dataclass
class _Operator:
    kind: str
    elem_ids: np.ndarray        # (ne,)
    dofs: np.ndarray            # (ne, nd) global dofs
    G: np.ndarray               # (ne, nq, nd, 3, 3)
    w: np.ndarray               # (ne, nq) integration weight incl. Jacobian
    N: Optional[np.ndarray] = None      # surface: (ne, nq, 3) reference normals
    fiber: Optional[np.ndarray] = None  # surface: (ne, nq, 3) projected fibers
    shape: Optional[np.ndarray] = None  # (nq, nnodes) shape values for loads
    nodes: Optional[np.ndarray] = None  # (ne, nnodes)


def _block_dofs(conn, dim):
    return (conn[:, :, None] * dim + np.arange(dim)).reshape(len(conn), -1)


def _bulk_operator(mesh: Mesh, block: Block, offset: int) -> _Operator:
    et = el.get(block.kind)
    Nq, dNq = et.eval()                          # (nq, nn), (nq, nn, pdim)
    X = mesh.nodes[block.conn]                   # (ne, nn, dim)
    ne, nn, dim = X.shape
    if et.pdim != dim:
        raise InputError(f"bulk element {block.kind} does not match mesh dimension {dim}")
    Jm = np.einsum("eai,qaj->eqij", X, dNq)      # dX/dxi
    detJ = np.linalg.det(Jm)
    bad = np.flatnonzero((detJ <= 0).any(axis=1))
    if bad.size:
        raise InputError(f"reference elements with non-positive Jacobian: {(bad + offset)[:10].tolist()}")
    dNdX = np.einsum("qaj,eqji->eqai", dNq, np.linalg.inv(Jm))
    nq = len(et.weights)
    G = np.zeros((ne, nq, nn, dim, 3, 3))
    for c in range(dim):
        G[:, :, :, c, c, :dim] = dNdX
    w = detJ * et.weights
    if dim == 2:
        Rq = np.einsum("qa,ea->eq", Nq, X[:, :, 0])
        if np.any(Rq <= 0):
            raise InputError("axisymmetric quadrature point on or behind the axis")
        G[:, :, :, 0, 2, 2] = Nq[None] / Rq[:, :, None]
        w = w * TWO_PI * Rq
    return _Operator(block.kind, np.arange(ne) + offset, _block_dofs(block.conn, dim),
                     G.reshape(ne, nq, nn * dim, 3, 3), w, shape=Nq, nodes=block.conn)


def surface_shape_gradients(X, kind: str):
    """Reference surface gradients of the shape functions of one facet.

    Parameters
    ----------
    X : ndarray, shape (nnodes, 3) or (ne, nnodes, 3)
        Nodal reference coordinates.
    kind : {'tri3', 'tri6', 'quad4'}

    Returns
    -------
    grad : ndarray (..., nq, nnodes, 3)
        ``grad N_a = sum_alpha dN_a/dxi_alpha G^alpha`` with the dual tangent
        basis ``G^alpha``; on flat facets this equals ``grad N_a (I - N x N)``.
    N : ndarray (..., nq, 3)
        Unit normal from the facet orientation.
    dA : ndarray (..., nq)
        Area element times Gauss weight.
    """
    X = np.asarray(X, dtype=float)
    single = X.ndim == 2
    if single:
        X = X[None]
    et = el.get(kind)
    if kind == "quad4":
        _check_planar(X)
    _, dNq = et.eval()
    Gt = np.einsum("eai,qak->eqki", X, dNq)      # covariant tangents (ne, nq, 2, 3)
    g = np.einsum("eqki,eqli->eqkl", Gt, Gt)
    gi = np.linalg.inv(g)
    Gd = np.einsum("eqkl,eqli->eqki", gi, Gt)    # dual basis
    grad = np.einsum("qak,eqki->eqai", dNq, Gd)
    nrm = np.cross(Gt[:, :, 0], Gt[:, :, 1])
    a = np.linalg.norm(nrm, axis=-1)
    N = nrm / a[..., None]
    dA = a * et.weights
    if single:
        return grad[0], N[0], dA[0]
    return grad, N, dA


def _check_planar(X):
    n = np.cross(X[:, 1] - X[:, 0], X[:, 3] - X[:, 0])
    n /= np.linalg.norm(n, axis=-1, keepdims=True)
    off = np.abs(np.einsum("ei,ei->e", X[:, 2] - X[:, 0], n))
    edge = np.max(np.linalg.norm(X - np.roll(X, 1, axis=1), axis=-1), axis=1)
    bad = np.flatnonzero(off > WARP_TOL * edge)
    if bad.size:
        raise InputError(f"warped quad4 surface elements: {bad[:10].tolist()}")


def _surface_operator(mesh: Mesh, block: Block, offset: int) -> _Operator:
    et = el.get(block.kind)
    Nq, dNq = et.eval()
    X = mesh.nodes[block.conn]
    ne, nn, dim = X.shape
    nq = len(et.weights)
    G = np.zeros((ne, nq, nn, dim, 3, 3))
    if dim == 2:
        if block.kind != "line2":
            raise InputError("axisymmetric surfaces must use line2 elements")
        dXdxi = np.einsum("eai,qa->eqi", X, dNq[:, :, 0])              # (ne, nq, 2)
        ds = np.linalg.norm(dXdxi, axis=-1)
        T = dXdxi / ds[..., None]
        dNdS = dNq[None, :, :, 0] / ds[:, :, None]                    # (ne, nq, nn)
        Rq = np.einsum("qa,ea->eq", Nq, X[:, :, 0])
        if np.any(Rq <= 0):
            raise InputError("axisymmetric surface element on the axis")
        for c in range(2):
            G[:, :, :, c, c, :2] = dNdS[..., None] * T[:, :, None, :]
        G[:, :, :, 0, 2, 2] = Nq[None] / Rq[:, :, None]
        N = np.zeros((ne, nq, 3))
        N[..., 0], N[..., 1] = T[..., 1], -T[..., 0]
        w = ds * et.weights * TWO_PI * Rq
    else:
        grad, N, w = surface_shape_gradients(X, block.kind)
        for c in range(3):
            G[:, :, :, c, c, :] = grad
    fiber = None
    if mesh.fiber_nodes is not None:
        A = np.einsum("qa,eai->eqi", Nq, mesh.fiber_nodes[block.conn])
        A = A - np.einsum("eqi,eqi->eq", A, N)[..., None] * N
        nA = np.linalg.norm(A, axis=-1)
        if np.any(nA < 1e-12):
            raise InputError("fiber field vanishes after projection at a surface quadrature point")
        fiber = A / nA[..., None]
    return _Operator(block.kind, np.arange(ne) + offset, _block_dofs(block.conn, dim),
                     G.reshape(ne, nq, nn * dim, 3, 3), w, N=N, fiber=fiber, shape=Nq,
                     nodes=block.conn)


class Model:
    """Discretized bulk-surface problem.

    Parameters
    ----------
    mesh : Mesh
    bulk : BulkMaterial or None
        ``None`` switches the bulk contribution off.
    surface : SurfaceMaterial or None
    loadcase : LoadCase
    """

    def __init__(self, mesh: Mesh, bulk: Optional[BulkMaterial], surface: Optional[SurfaceMaterial],
                 loadcase: Optional[LoadCase] = None):
        self.mesh = mesh
        self.bulk = bulk
        self.surface = surface
        self.loadcase = loadcase or LoadCase()
        self.dim = mesh.dim
        self.ndof = mesh.n_nodes * mesh.dim
        self._bulk_ops: List[_Operator] = []
        off = 0
        for b in mesh.bulk:
            self._bulk_ops.append(_bulk_operator(mesh, b, off))
            off += len(b.conn)
        self._surf_ops: List[_Operator] = []
        off = 0
        for b in mesh.surface:
            self._surf_ops.append(_surface_operator(mesh, b, off))
            off += len(b.conn)
        self._build_pattern()

    # -- sparsity ----------------------------------------------------------
    def _build_pattern(self):
        rows, cols = [], []
        for op in self._bulk_ops + self._surf_ops:
            d = op.dofs
            rows.append(np.repeat(d, d.shape[1], axis=1).ravel())
            cols.append(np.tile(d, (1, d.shape[1])).ravel())
        rows = np.concatenate(rows) if rows else np.zeros(0, np.int64)
        cols = np.concatenate(cols) if cols else np.zeros(0, np.int64)
        keys = rows * self.ndof + cols
        uniq, inv = np.unique(keys, return_inverse=True)
        self._perm = inv.ravel()
        self._indices = (uniq % self.ndof).astype(np.int64)
        r = uniq // self.ndof
        self._indptr = np.concatenate([[0], np.cumsum(np.bincount(r, minlength=self.ndof))])
        self._nnz = len(uniq)

    @property
    def free(self) -> np.ndarray:
        mask = np.ones(self.ndof, bool)
        mask[self.loadcase.fixed_dofs] = False
        return np.flatnonzero(mask)

    def reference_state(self) -> np.ndarray:
        x = self.mesh.nodes.ravel().copy()
        x[self.loadcase.fixed_dofs] = self.loadcase.fixed_values
        return x

    def apply_dirichlet(self, x) -> np.ndarray:
        x = np.array(x, dtype=float)
        x[self.loadcase.fixed_dofs] = self.loadcase.fixed_values
        return x

    # -- evaluation ----------------------------------------------------------
    def _deformation(self, op: _Operator, x):
        return np.einsum("eqajk,ea->eqjk", op.G, x[op.dofs])

    def bulk_jacobians(self, x):
        """``det F`` at all bulk quadrature points, one array per block."""
        return [np.linalg.det(self._deformation(op, x)) for op in self._bulk_ops]

    def surface_states(self, x):
        """Surface deformation gradients, normals, fibers and weights per block."""
        out = []
        for op in self._surf_ops:
            out.append((self._deformation(op, x), op.N, op.fiber, op.w))
        return out

    def assemble(self, x, tangent: bool = True) -> AssembledSystem:
        x = np.asarray(x, dtype=float)
        R = np.zeros(self.ndof)
        Rabs = np.zeros(self.ndof)
        kdata = [] if tangent else None
        energy = 0.0
        if self.bulk is not None:
            for op in self._bulk_ops:
                F = self._deformation(op, x)
                J = np.linalg.det(F)
                bad = ~(J > 0).all(axis=1)
                if bad.any():
                    ids = op.elem_ids[bad]
                    raise InvertedElementError(
                        f"inverted bulk elements {ids[:10].tolist()} (min det F = {J.min():.3e})", ids)
                W = bulk_energy(F, self.bulk)
                P = bulk_stress(F, self.bulk)
                A = bulk_tangent(F, self.bulk) if tangent else None
                energy += float(np.sum(op.w * W))
                self._accumulate(op, P, A, R, Rabs, kdata)
        elif tangent:
            kdata.extend(np.zeros(op.dofs.size * op.dofs.shape[1]) for op in self._bulk_ops)
        if self.surface is not None:
            for op in self._surf_ops:
                Fh = self._deformation(op, x)
                s = SurfaceState(Fh, np.broadcast_to(op.N, Fh.shape[:-1]))
                fib = op.fiber if isinstance(self.surface, Aniso) and self.surface.needs_fiber else None
                if isinstance(self.surface, Aniso) and self.surface.needs_fiber and fib is None:
                    raise InputError("anisotropic surface material needs a mesh fiber field")
                try:
                    W, P, A = surface_response(s, self.surface, fib, tangent)
                except SingularityError as exc:
                    where = np.atleast_1d(exc.where) if exc.where is not None else np.zeros(0, int)
                    nq = Fh.shape[1]
                    ids = op.elem_ids[where // nq] if where.size else op.elem_ids[:0]
                    raise SingularityError(
                        f"{exc} in surface elements {ids[:10].tolist()} (quadrature points "
                        f"{(where % nq)[:10].tolist()})", value=exc.value, where=ids) from exc
                energy += float(np.sum(op.w * W))
                self._accumulate(op, P, A, R, Rabs, kdata)
        elif tangent:
            kdata.extend(np.zeros(op.dofs.size * op.dofs.shape[1]) for op in self._surf_ops)
        energy += self._dead_loads(x, R, Rabs)
        K = None
        if tangent:
            data = (np.bincount(self._perm, weights=np.concatenate(kdata), minlength=self._nnz)
                    if kdata else np.zeros(self._nnz))
            K = sp.csr_matrix((data, self._indices.copy(), self._indptr.copy()),
                              shape=(self.ndof, self.ndof))
        return AssembledSystem(R, K, energy, float(np.linalg.norm(Rabs)))

    def _accumulate(self, op, P, A, R, Rabs, kdata):
        fe = np.einsum("eq,eqjk,eqajk->eqa", op.w, P, op.G)
        Re = fe.sum(axis=1)
        np.add.at(R, op.dofs.ravel(), Re.ravel())
        np.add.at(Rabs, op.dofs.ravel(), np.abs(fe).sum(axis=1).ravel())
        if kdata is not None:
            ne, nq, nd = op.G.shape[:3]
            Gm = op.G.reshape(ne, nq, nd, 9)
            GA = Gm @ A.reshape(ne, nq, 9, 9)
            Ke = np.einsum("eq,eqam,eqbm->eab", op.w, GA, Gm, optimize=True)
            kdata.append(Ke.ravel())

    def _dead_loads(self, x, R, Rabs):
        energy = 0.0
        lc = self.loadcase
        for ops, load in ((self._bulk_ops, lc.body_force), (self._surf_ops, lc.traction)):
            if load is None:
                continue
            load = np.asarray(load, dtype=float)
            for op in ops:
                # consistent nodal loads: sum_q w N_a
                na = np.einsum("eq,qa->ea", op.w, op.shape)         # (ne, nn)
                f = na[:, :, None] * load[None, None, :]
                idx = (op.nodes[:, :, None] * self.dim + np.arange(self.dim)).ravel()
                np.add.at(R, idx, -f.ravel())
                np.add.at(Rabs, idx, np.abs(f).ravel())
                energy -= float(np.sum(f.ravel() * x[idx]))
        return energy

    def total_energy(self, x) -> float:
        return self.assemble(x, tangent=False).energy

    def surface_area(self, x) -> float:
        """Deformed area of all surface elements (axisymmetric: of the revolved surface)."""
        area = 0.0
        for op in self._surf_ops:
            Fh = self._deformation(op, x)
            area += float(np.sum(op.w * surface_jacobian(SurfaceState(Fh, op.N))))
        return area

    def surface_quadrature_points(self):
        """Reference positions of the surface quadrature points per block."""
        return [np.einsum("qa,eai->eqi", op.shape, self.mesh.nodes[op.nodes]) for op in self._surf_ops]

    def reduce(self, sysm: AssembledSystem) -> ReducedSystem:
        return apply_constraints(sysm, self.loadcase)


def apply_constraints(sysm: AssembledSystem, lc: LoadCase) -> ReducedSystem:
    """Eliminate constrained rows and columns (reduction, not penalty)."""
    mask = np.ones(sysm.ndof, bool)
    mask[lc.fixed_dofs] = False
    free = np.flatnonzero(mask)
    K = None
    if sysm.K is not None:
        K = sysm.K[free][:, free].tocsr()
    return ReducedSystem(sysm.R[free], K, free, sysm.energy, sysm.force_scale)


def insert_free(x_full, free, x_free):
    """Write free-dof values back into a full state vector."""
    x = np.array(x_full, dtype=float)
    x[free] = x_free
    return x
