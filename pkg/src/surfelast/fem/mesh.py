"""Mesh container, structured generators and the plain-text mesh format.

Text format (whitespace separated, ``#`` starts a comment)::

    mesh <n_nodes> <n_bulk> <n_surface> dim <2|3>
    <id> <X> <Y> [<Z>]                  # n_nodes lines, ids 0..n-1
    <id> <kind> <node ids...>           # n_bulk lines
    <id> <kind> <node ids...>           # n_surface lines
    set <name> <node ids...>            # optional named node sets
    fiber <node id> <a1> <a2> <a3>      # optional nodal fiber vectors

``dim 2`` meshes are axisymmetric with coordinates ``(r, z)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..errors import InputError
from . import elements as el


@dataclass
class Block:
    kind: str
    conn: np.ndarray  # (ne, nnodes) int
    ids: Optional[np.ndarray] = None  # global element ids, defaults to running index

    def __post_init__(self):
        self.conn = np.asarray(self.conn, dtype=np.int64)
        if self.conn.ndim != 2 or self.conn.shape[1] != el.get(self.kind).nnodes:
            raise InputError(f"{self.kind} connectivity must have {el.get(self.kind).nnodes} columns")


@dataclass
class Mesh:
    """Nodes, bulk and surface blocks, named node sets and an optional fiber field."""

    nodes: np.ndarray
    bulk: List[Block]
    surface: List[Block] = field(default_factory=list)
    node_sets: Dict[str, np.ndarray] = field(default_factory=dict)
    fiber_nodes: Optional[np.ndarray] = None

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        if self.nodes.ndim != 2 or self.nodes.shape[1] not in (2, 3):
            raise InputError("nodes must be an (n, 2) or (n, 3) array")
        n = len(self.nodes)
        for b in self.bulk + self.surface:
            if b.conn.size and (b.conn.min() < 0 or b.conn.max() >= n):
                raise InputError("connectivity references a missing node")
        self.node_sets = {k: np.asarray(v, dtype=np.int64) for k, v in self.node_sets.items()}

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def axisymmetric(self) -> bool:
        return self.dim == 2

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_bulk(self) -> int:
        return sum(len(b.conn) for b in self.bulk)

    @property
    def n_surface(self) -> int:
        return sum(len(b.conn) for b in self.surface)

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.nodes.max(axis=0) - self.nodes.min(axis=0)))

    def surface_nodes(self) -> np.ndarray:
        if not self.surface:
            return np.zeros(0, dtype=np.int64)
        return np.unique(np.concatenate([b.conn.ravel() for b in self.surface]))


# --------------------------------------------------------------------------
# boundary extraction
# --------------------------------------------------------------------------

def boundary_facets(nodes, block: Block, predicate=None) -> Block:
    """Facets of ``block`` that belong to one element only, outward ordered.

    Parameters
    ----------
    predicate : callable, optional
        ``predicate(centroids) -> bool mask`` selecting which boundary facets
        to keep.
    """
    et = el.get(block.kind)
    fkind = el.FACET_KIND[block.kind]
    ncorner = {"line2": 2, "tri3": 3, "tri6": 3, "quad4": 4}[fkind]
    faces = np.concatenate([block.conn[:, list(f)] for f in et.faces], axis=0)
    keys = np.sort(faces[:, :ncorner], axis=1)
    _, inv, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    inv = inv.ravel()
    faces = faces[counts[inv] == 1]
    if predicate is not None:
        cent = nodes[faces[:, :ncorner]].mean(axis=1)
        faces = faces[np.asarray(predicate(cent), dtype=bool)]
    return Block(fkind, faces)


# --------------------------------------------------------------------------
# generators
# --------------------------------------------------------------------------

def axisym_rect(L: float, R: float, nx: int, ny: int, z0: Optional[float] = None) -> Mesh:
    """Axisymmetric rectangle ``r in [0, R]``, ``z in [z0, z0 + L]``.

    ``nx`` elements along the axis, ``ny`` along the radius; the lateral
    surface ``r = R`` carries line elements. ``z0`` defaults to ``-L/2``.
    """
    _counts(nx, ny)
    if not (L > 0 and R > 0):
        raise InputError("L and R must be positive")
    z0 = -0.5 * L if z0 is None else z0
    r = np.linspace(0.0, R, ny + 1)
    z = np.linspace(z0, z0 + L, nx + 1)
    rr, zz = np.meshgrid(r, z)          # rows: z index, cols: r index
    nodes = np.column_stack([rr.ravel(), zz.ravel()])
    nid = np.arange(nodes.shape[0]).reshape(nx + 1, ny + 1)
    conn = np.column_stack([nid[:-1, :-1].ravel(), nid[:-1, 1:].ravel(),
                            nid[1:, 1:].ravel(), nid[1:, :-1].ravel()])
    bulk = Block("quad4", conn)
    surf = boundary_facets(nodes, bulk, lambda c: np.isclose(c[:, 0], R))
    sets = {"bottom": nid[0, :], "top": nid[-1, :], "axis": nid[:, 0], "outer": nid[:, -1]}
    return Mesh(nodes, [bulk], [surf], sets)


def _counts(*ns):
    for n in ns:
        if int(n) != n or n < 1:
            raise InputError(f"element counts must be positive integers, got {n}")


def _ogrid_section(R: float, m: int, k: int, core: float = 0.5):
    """Quarter-disk O-grid: ``m x m`` core square plus two ``m x k`` outer blocks.

    Returns 2D points, quad connectivity (counter-clockwise) and arc node ids.
    """
    c = core * R
    pts: Dict[Tuple, int] = {}
    coords: List[Tuple[float, float]] = []

    def node(key, xy):
        if key not in pts:
            pts[key] = len(coords)
            coords.append(xy)
        return pts[key]

    quads = []
    s = np.linspace(0.0, 1.0, m + 1)
    # core square, key ('c', i, j) with i along x
    for j in range(m + 1):
        for i in range(m + 1):
            node(("c", i, j), (c * s[i], c * s[j]))
    # the two outer blocks share the core edges; key by (block, t index, radial index)
    for blk in (0, 1):
        for i in range(m + 1):
            for r in range(k + 1):
                if blk == 0:
                    inner = ("c", m, i)
                    th = 0.25 * np.pi * s[i]
                    p0 = np.array([c, c * s[i]])
                else:
                    inner = ("c", i, m)
                    th = 0.5 * np.pi - 0.25 * np.pi * s[i]
                    p0 = np.array([c * s[i], c])
                if r == 0:
                    pts[(blk, i, 0)] = pts[inner]
                    continue
                if i == m and blk == 1:
                    pts[(1, i, r)] = pts[(0, m, r)]
                    continue
                p1 = R * np.array([np.cos(th), np.sin(th)])
                t = r / k
                node((blk, i, r), tuple((1 - t) * p0 + t * p1))
    for j in range(m):
        for i in range(m):
            quads.append([pts[("c", i, j)], pts[("c", i + 1, j)], pts[("c", i + 1, j + 1)], pts[("c", i, j + 1)]])
    for i in range(m):
        for r in range(k):
            quads.append([pts[(0, i, r)], pts[(0, i, r + 1)], pts[(0, i + 1, r + 1)], pts[(0, i + 1, r)]])
            quads.append([pts[(1, i, r)], pts[(1, i + 1, r)], pts[(1, i + 1, r + 1)], pts[(1, i, r + 1)]])
    P = np.array(coords)
    Q = np.array(quads)
    # enforce counter-clockwise orientation
    a = P[Q[:, 1]] - P[Q[:, 0]]
    b = P[Q[:, 3]] - P[Q[:, 0]]
    neg = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0] < 0
    Q[neg] = Q[neg][:, ::-1]
    arc = np.array(sorted({pts[(blk, i, k)] for blk in (0, 1) for i in range(m + 1)}))
    return P, Q, arc


def cylinder3d_quarter(L: float, R: float, m: int, k: int, nz: int, core: float = 0.5) -> Mesh:
    """Quarter cylinder ``x, y >= 0`` of length ``L`` centred at ``z = 0``.

    The cross-section is an O-grid with ``m*m + 2*m*k`` quads and ``2*m`` arc
    edges; ``nz`` hex layers along the axis. The lateral (curved) surface
    carries quad4 facets with their planarity checked at assembly.
    """
    _counts(m, k, nz)
    P, Q, arc = _ogrid_section(R, m, k, core)
    npl = len(P)
    z = np.linspace(-0.5 * L, 0.5 * L, nz + 1)
    nodes = np.concatenate([np.column_stack([P, np.full(npl, zz)]) for zz in z])
    conn = np.concatenate([np.column_stack([Q + l * npl, Q + (l + 1) * npl]) for l in range(nz)])
    bulk = Block("hex8", conn)
    arcset = np.zeros(len(nodes), bool)
    arcset[np.concatenate([arc + l * npl for l in range(nz + 1)])] = True
    surf = boundary_facets(nodes, bulk)
    on_arc = arcset[surf.conn].all(axis=1)
    surf = Block(surf.kind, surf.conn[on_arc])
    ids = np.arange(len(nodes))
    sets = {
        "bottom": ids[np.isclose(nodes[:, 2], -0.5 * L)],
        "top": ids[np.isclose(nodes[:, 2], 0.5 * L)],
        "sym_x": ids[np.isclose(nodes[:, 0], 0.0)],
        "sym_y": ids[np.isclose(nodes[:, 1], 0.0)],
        "outer": ids[arcset],
        "profile": ids[arcset & np.isclose(nodes[:, 1], 0.0)],
    }
    return Mesh(nodes, [bulk], [surf], sets)


def _structured_hex(n: int, lo, hi):
    g = [np.linspace(lo[d], hi[d], n + 1) for d in range(3)]
    X, Y, Z = np.meshgrid(*g, indexing="ij")
    nodes = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])
    nid = np.arange(len(nodes)).reshape(n + 1, n + 1, n + 1)
    return nodes, nid


_KUHN = ((0, 1, 3, 7), (0, 1, 5, 7), (0, 2, 3, 7), (0, 2, 6, 7), (0, 4, 5, 7), (0, 4, 6, 7))


def _hex_grid(n, nodes, nid, kind):
    """Connectivity for an ``n^3`` grid as hex8, or Kuhn-split tet4 / tet10."""
    i, j, k = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    i, j, k = i.ravel(), j.ravel(), k.ravel()
    # corner c = (dx, dy, dz) bit pattern dx + 2 dy + 4 dz
    corner = np.stack([nid[i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1)] for c in range(8)], axis=1)
    if kind == "hex8":
        order = [0, 1, 3, 2, 4, 5, 7, 6]
        return nodes, Block("hex8", corner[:, order])
    tets = np.concatenate([corner[:, list(t)] for t in _KUHN])
    v = nodes[tets]
    vol = np.einsum("ij,ij->i", np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]), v[:, 3] - v[:, 0])
    neg = vol < 0
    tets[neg] = tets[neg][:, [0, 2, 1, 3]]
    if kind == "tet4":
        return nodes, Block("tet4", tets)
    if kind != "tet10":
        raise InputError(f"unsupported bulk kind {kind!r}")
    return _add_midside(nodes, tets)


def _add_midside(nodes, tets):
    edges = ((0, 1), (1, 2), (0, 2), (0, 3), (1, 3), (2, 3))
    e = np.concatenate([np.sort(tets[:, list(p)], axis=1) for p in edges])
    uniq, inv = np.unique(e, axis=0, return_inverse=True)
    inv = inv.ravel().reshape(len(edges), len(tets)).T
    mid = 0.5 * (nodes[uniq[:, 0]] + nodes[uniq[:, 1]])
    conn = np.column_stack([tets, inv + len(nodes)])
    return np.concatenate([nodes, mid]), Block("tet10", conn)


def cube(a: float, n: int, kind: str = "hex8", octant: bool = False) -> Mesh:
    """Cube of side ``a`` centred at the origin, or its positive octant.

    For ``octant=True`` only the faces ``x, y, z = a/2`` carry surface elements
    and the node sets ``sym_x, sym_y, sym_z`` hold the symmetry planes.
    """
    _counts(n)
    if not a > 0:
        raise InputError("cube side must be positive")
    h = 0.5 * a
    lo = (0.0, 0.0, 0.0) if octant else (-h, -h, -h)
    nodes, nid = _structured_hex(n, lo, (h, h, h))
    nodes, bulk = _hex_grid(n, nodes, nid, kind)
    if octant:
        surf = boundary_facets(nodes, bulk, lambda c: np.isclose(c, h).any(axis=1))
    else:
        surf = boundary_facets(nodes, bulk)
    ids = np.arange(len(nodes))
    sets = {}
    if octant:
        for d, nm in enumerate("xyz"):
            sets[f"sym_{nm}"] = ids[np.isclose(nodes[:, d], 0.0)]
    return Mesh(nodes, [bulk], [surf], sets)


def sphere_octant(r: float, n: int, kind: str = "tet10") -> Mesh:
    """Positive octant of a ball of radius ``r``.

    A Kuhn-split cube octant is mapped radially, ``p -> r p ||p||_inf / ||p||_2``,
    so the outer cube faces land on the sphere; quadratic midside nodes are
    mapped as well, giving curved tri6 facets. Nodal fibers follow the
    parallels ``e_z x X / |e_z x X|``.
    """
    _counts(n)
    if not r > 0:
        raise InputError("sphere radius must be positive")
    nodes, nid = _structured_hex(n, (0, 0, 0), (1, 1, 1))
    nodes, bulk = _hex_grid(n, nodes, nid, kind)
    on_outer = np.isclose(nodes, 1.0).any(axis=1)
    surf = boundary_facets(nodes, bulk, lambda c: np.isclose(c, 1.0).any(axis=1))
    inf = np.abs(nodes).max(axis=1)
    l2 = np.linalg.norm(nodes, axis=1)
    scale = np.where(l2 > 0, inf / np.where(l2 > 0, l2, 1.0), 0.0)
    X = r * nodes * scale[:, None]
    ids = np.arange(len(X))
    sets = {f"sym_{nm}": ids[np.isclose(X[:, d], 0.0)] for d, nm in enumerate("xyz")}
    sets["outer"] = ids[on_outer]
    fib = np.column_stack([-X[:, 1], X[:, 0], np.zeros(len(X))])
    rho = np.linalg.norm(fib, axis=1)
    fib = np.where(rho[:, None] > 1e-12 * r, fib / np.where(rho > 0, rho, 1.0)[:, None], 0.0)
    return Mesh(X, [bulk], [surf], sets, fib)


def generate_mesh(desc: dict) -> Mesh:
    """Build a mesh from a geometry descriptor ``{"type": ..., params}``."""
    d = dict(desc)
    kind = d.pop("type", None)
    builders = {"axisym-rect": axisym_rect, "cylinder3d-quarter": cylinder3d_quarter,
                "cube": cube, "sphere-octant": sphere_octant}
    if kind not in builders:
        raise InputError(f"unknown geometry type {kind!r}")
    try:
        return builders[kind](**d)
    except TypeError as exc:
        raise InputError(f"bad parameters for {kind}: {exc}") from None


# --------------------------------------------------------------------------
# text format
# --------------------------------------------------------------------------

def write_mesh(mesh: Mesh, path) -> None:
    with open(path, "w") as f:
        f.write("# surfelast mesh\n")
        f.write(f"mesh {mesh.n_nodes} {mesh.n_bulk} {mesh.n_surface} dim {mesh.dim}\n")
        for i, X in enumerate(mesh.nodes):
            f.write(f"{i} " + " ".join(repr(float(v)) for v in X) + "\n")
        eid = 0
        for b in mesh.bulk:
            for c in b.conn:
                f.write(f"{eid} {b.kind} " + " ".join(map(str, c)) + "\n")
                eid += 1
        eid = 0
        for b in mesh.surface:
            for c in b.conn:
                f.write(f"{eid} {b.kind} " + " ".join(map(str, c)) + "\n")
                eid += 1
        for name, ids in mesh.node_sets.items():
            f.write(f"set {name} " + " ".join(map(str, ids)) + "\n")
        if mesh.fiber_nodes is not None:
            for i, a in enumerate(mesh.fiber_nodes):
                f.write(f"fiber {i} " + " ".join(repr(float(v)) for v in a) + "\n")


def read_mesh(path) -> Mesh:
    with open(path) as f:
        lines = [ln.split("#", 1)[0].split() for ln in f]
    lines = [ln for ln in lines if ln]
    if not lines or lines[0][0] != "mesh" or len(lines[0]) != 6 or lines[0][4] != "dim":
        raise InputError("mesh file must start with 'mesh <nodes> <bulk> <surface> dim <d>'")
    nn, nb, ns, dim = int(lines[0][1]), int(lines[0][2]), int(lines[0][3]), int(lines[0][5])
    body = lines[1:]
    if len(body) < nn + nb + ns:
        raise InputError("mesh file is truncated")
    nodes = np.array([[float(v) for v in ln[1:1 + dim]] for ln in body[:nn]])

    def blocks(rows):
        out: Dict[str, list] = {}
        for ln in rows:
            out.setdefault(ln[1], []).append([int(v) for v in ln[2:]])
        return [Block(k, np.array(v)) for k, v in out.items()]

    bulk = blocks(body[nn:nn + nb])
    surf = blocks(body[nn + nb:nn + nb + ns])
    sets, fib = {}, None
    for ln in body[nn + nb + ns:]:
        if ln[0] == "set":
            sets[ln[1]] = np.array([int(v) for v in ln[2:]], dtype=np.int64)
        elif ln[0] == "fiber":
            if fib is None:
                fib = np.zeros((nn, 3))
            fib[int(ln[1])] = [float(v) for v in ln[2:5]]
        else:
            raise InputError(f"unexpected mesh record {ln[0]!r}")
    return Mesh(nodes, bulk, surf, sets, fib)
