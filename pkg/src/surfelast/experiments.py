"""Config-driven experiment driver, analysis helpers and bundled config builders."""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import config as cfgmod
from .bulk import BulkMaterial
from .config import RunConfig
from .errors import InputError
from .fem.assembly import LoadCase, Model
from .fem.mesh import Mesh, generate_mesh, read_mesh
from .io import RUN_LOG_COLUMNS, write_csv, write_vtk
from .solver import BranchState, ContinuationResult, run_continuation
from .surface import Aniso, Fluid, IsoPoly, Ogden, surface_stress_cauchy
from .tensor import SurfaceState

log = logging.getLogger(__name__)

#: environment variable overriding the configured output directory
OUTPUT_ENV = "SURFELAST_OUTPUT_DIR"

_SURFACE_KEYS = ("gamma_t", "alpha_t", "eta_t", "beta_t")


# --------------------------------------------------------------------------
# model construction
# --------------------------------------------------------------------------

def build_mesh(cfg: RunConfig) -> Mesh:
    g = dict(cfg.geometry)
    if g.get("type") == "file":
        path = Path(g["path"])
        if not path.is_absolute() and cfg.source:
            path = Path(cfg.source).parent / path
        return read_mesh(path)
    return generate_mesh(g)


def surface_material(cfg: RunConfig, p: Dict[str, float]):
    s = cfg.mu * cfg.length
    g, a, e, b = (p.get(k, 0.0) * s for k in _SURFACE_KEYS)
    model = cfg.surface_model
    if model == "none":
        return None
    if model == "fluid":
        return Fluid(g)
    if model == "isopoly":
        return IsoPoly(a, g)
    if model == "aniso":
        return Aniso(a, g, e, b)
    if model == "ogden":
        return Ogden(tuple((c * s, beta) for c, beta in (cfg.ogden_terms or ())), g)
    raise InputError(f"unknown surface model {model!r}")


class Binder:
    """Writes a parameter dict into a :class:`Model` (materials and Dirichlet data)."""

    def __init__(self, cfg: RunConfig, mesh: Mesh):
        self.cfg = cfg
        self.mesh = mesh
        self.axial = mesh.dim - 1
        z = mesh.nodes[:, self.axial]
        self.center = 0.5 * (z.min() + z.max())
        for b in cfg.boundary:
            if b.set not in mesh.node_sets:
                raise InputError(f"boundary set {b.set!r} not in mesh (has {sorted(mesh.node_sets)})")
        self.stretch = None

    def loadcase(self, stretch: float) -> LoadCase:
        lc = LoadCase()
        for b in self.cfg.boundary:
            nodes = self.mesh.node_sets[b.set]
            vals = {}
            if b.stretch:
                vals[self.axial] = self.center + stretch * (self.mesh.nodes[nodes, self.axial] - self.center)
            lc = lc.with_fixed(self.mesh, nodes, b.components, vals)
        return lc

    def __call__(self, model: Model, p: Dict[str, float], x_prev) -> Optional[np.ndarray]:
        model.bulk = BulkMaterial(self.cfg.mu, p.get("kappa_t", 0.0) * self.cfg.mu)
        model.surface = surface_material(self.cfg, p)
        lam = p.get("stretch", 1.0)
        guess = None
        if lam != self.stretch:
            old = self.stretch if self.stretch is not None else 1.0
            model.loadcase = self.loadcase(lam)
            if x_prev is not None and old != lam:
                # homogeneous axial predictor
                x = np.array(x_prev, dtype=float).reshape(self.mesh.nodes.shape)
                x[:, self.axial] = self.center + (lam / old) * (x[:, self.axial] - self.center)
                guess = x.ravel()
            self.stretch = lam
        return guess


def build_model(cfg: RunConfig):
    mesh = build_mesh(cfg)
    binder = Binder(cfg, mesh)
    model = Model(mesh, BulkMaterial(cfg.mu, 0.0), None, binder.loadcase(1.0))
    binder.stretch = 1.0
    return model, binder


def reference_params(cfg: RunConfig) -> Dict[str, float]:
    """Parameters for which the undeformed state is an equilibrium."""
    p = cfg.initial_params()
    p.update({k: 0.0 for k in _SURFACE_KEYS})
    p["stretch"] = 1.0
    return p


# --------------------------------------------------------------------------
# driver
# --------------------------------------------------------------------------

@dataclass
class PhaseResult:
    name: str
    control: str
    result: ContinuationResult


@dataclass
class RunResult:
    cfg: RunConfig
    model: Model
    phases: List[PhaseResult] = field(default_factory=list)
    outdir: Optional[Path] = None

    @property
    def states(self) -> List[BranchState]:
        return [s for ph in self.phases for s in ph.result.states]

    @property
    def final(self) -> BranchState:
        return self.states[-1]

    @property
    def log_rows(self) -> List[dict]:
        rows = []
        for i, ph in enumerate(self.phases):
            for j, r in enumerate(ph.result.log_rows):
                rows.append({"phase": ph.name or i, "step": j, **r})
        return rows

    def onset(self, phase: int = -1):
        return self.phases[phase].result.onset


def output_dir(cfg: RunConfig, override=None) -> Path:
    base = override or os.environ.get(OUTPUT_ENV) or cfg.output.dir
    return Path(base) / cfg.name


def run(cfg: RunConfig, write: bool = True, outdir=None, phases=None) -> RunResult:
    """Execute all phases of ``cfg``; optionally write VTK per step and the run log."""
    model, bind = build_model(cfg)
    res = RunResult(cfg, model)
    out = output_dir(cfg, outdir) if write else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        res.outdir = out
    params = cfg.initial_params()
    start = reference_params(cfg)
    x = None
    counter = [0]

    def on_step(i, state):
        if out is not None and cfg.output.vtk and counter[0] % cfg.output.vtk_every == 0:
            write_state_vtk(out / f"{cfg.name}_{counter[0]:04d}.vtk", model, state)
        counter[0] += 1

    selected = cfg.phases if phases is None else [cfg.phases[i] for i in phases]
    for k, ph in enumerate(selected):
        steps = ph.steps(params)
        r = run_continuation(model, steps, bind, cfg.solver, ph.control, x0=x, start=start,
                             on_step=on_step)
        res.phases.append(PhaseResult(ph.name or f"phase{k}", ph.control, r))
        if r.states:
            x = r.final.x
            params = dict(r.final.params)
            start = dict(params)
        if out is not None and cfg.output.csv:
            write_csv(out / f"{cfg.name}_log.csv", res.log_rows, RUN_LOG_COLUMNS)
    if out is not None and cfg.output.csv:
        write_csv(out / f"{cfg.name}_log.csv", res.log_rows, RUN_LOG_COLUMNS)
    return res


def surface_stress_magnitude(model: Model, x) -> np.ndarray:
    """Frobenius norm of the surface Cauchy stress averaged per surface element."""
    out = []
    for Fh, N, fib, w in model.surface_states(x):
        if model.surface is None:
            out.append(np.zeros(Fh.shape[0]))
            continue
        s = SurfaceState(Fh, np.broadcast_to(N, Fh.shape[:-1]))
        a = fib if isinstance(model.surface, Aniso) and model.surface.needs_fiber else None
        sig = surface_stress_cauchy(s, model.surface, a)
        out.append(np.linalg.norm(sig, axis=(-2, -1)).mean(axis=1))
    return np.concatenate(out) if out else np.zeros(0)


def write_state_vtk(path, model: Model, state: BranchState) -> None:
    mesh = model.mesh
    nb = mesh.n_bulk
    ssurf = surface_stress_magnitude(model, state.x)
    cell = {"surface_stress": np.concatenate([np.zeros(nb), ssurf]),
            "is_surface": np.concatenate([np.zeros(nb), np.ones(len(ssurf))])}
    u = state.x.reshape(mesh.nodes.shape) - mesh.nodes
    write_vtk(path, mesh, state.x, {"displacement": u}, cell,
              title=f"control={state.control} branch={state.branch}")


# --------------------------------------------------------------------------
# analysis
# --------------------------------------------------------------------------

def radial_profile(mesh: Mesh, x, node_set: str = "outer"):
    """Deformed ``(z, r)`` of a node set sorted by reference axial position.

    Axisymmetric meshes use ``(r, z)`` directly; 3D meshes use the distance
    from the z axis.
    """
    X = np.asarray(x, dtype=float).reshape(mesh.nodes.shape)
    ids = mesh.node_sets[node_set]
    ax = mesh.dim - 1
    order = np.argsort(mesh.nodes[ids, ax], kind="stable")
    ids = ids[order]
    z = X[ids, ax]
    r = X[ids, 0] if mesh.dim == 2 else np.hypot(X[ids, 0], X[ids, 1])
    return z, r


def neck_radius(mesh: Mesh, x, node_set: str = "outer") -> float:
    z, r = radial_profile(mesh, x, node_set)
    return float(np.interp(0.0, z, r))


def inhomogeneity(mesh: Mesh, x, node_set: str = "outer") -> float:
    """``(max r - min r) / mean r`` over the lateral surface."""
    _, r = radial_profile(mesh, x, node_set)
    return float((r.max() - r.min()) / r.mean())


# --------------------------------------------------------------------------
# config builders (the bundled JSON files are generated from these)
# --------------------------------------------------------------------------

def _solver(**kw):
    return kw


def bridge_config(model: str = "fluid", prestretch: Optional[float] = None, mesh: str = "axisym",
                  L: float = 3.0, R: float = 2.5, steps: int = 30, final: float = 360.0,
                  nx: int = 30, ny: int = 20, m: int = 7, k: int = 7) -> dict:
    """Clamped liquid bridge; ``model`` is ``fluid`` (gamma) or ``isopoly`` (alpha)."""
    key = "gamma_t" if model == "fluid" else "alpha_t"
    vals = [final * (i / steps) ** 2 for i in range(1, steps + 1)]
    L0 = L / prestretch if prestretch else L
    if mesh == "axisym":
        geom = {"type": "axisym-rect", "L": L0, "R": R, "nx": nx, "ny": ny}
        bc = [{"set": "bottom", "components": [0, 1], "stretch": bool(prestretch)},
              {"set": "top", "components": [0, 1], "stretch": bool(prestretch)},
              {"set": "axis", "components": [0]}]
        disc = f"axisymmetric quad4 {ny} radial x {nx} axial, {(nx + 1) * (ny + 1)} nodes"
    else:
        geom = {"type": "cylinder3d-quarter", "L": L0, "R": R, "m": m, "k": k, "nz": nx}
        bc = [{"set": "bottom", "components": [0, 1, 2], "stretch": bool(prestretch)},
              {"set": "top", "components": [0, 1, 2], "stretch": bool(prestretch)},
              {"set": "sym_x", "components": [0]}, {"set": "sym_y", "components": [1]}]
        n_sec = m * m + 2 * m * k
        disc = f"quarter cylinder hex8, {n_sec} per section x {nx} layers"
    phases = []
    if prestretch:
        phases.append({"name": "stretch", "control": "stretch",
                       "values": [1.0 + (prestretch - 1.0) * i / 5 for i in range(1, 6)]})
    phases.append({"name": "surface", "control": key, "values": vals})
    name = f"bridge_{'gamma' if model == 'fluid' else 'alpha'}" + (f"_prestretch{prestretch:g}" if prestretch else "") \
        + ("" if mesh == "axisym" else "_3d")
    full = mesh == "axisym" and nx == 30 and ny == 20 or (mesh != "axisym" and m == 7 and k == 7 and nx == 30)
    return {
        "schema_version": 1, "name": name,
        "header": {"experiment": "liquid bridge without bulk energy" + (" with prestretch" if prestretch else ""),
                   "discretization": disc, "desk_scale": not full,
                   "mapping": ("reference discretization" if full else "coarsened mesh")
                   + f"; {key} = 0.4 -> {final:g} quadratically in {steps} steps, kappa = 0"},
        "geometry": geom, "reference": {"mu": 1.0, "length": R},
        "surface": {"model": model}, "params": {"kappa_t": 0.0},
        "boundary": bc, "phases": phases,
        "solver": _solver(eig_monitor=False, branch_switch=False),
        "output": {"dir": "out", "vtk": True, "vtk_every": 5, "csv": True},
    }


def cylinder_config(lam: float, alpha_t: float = 0.0, kappa_t: float = 4.0, L_t: float = 30.0,
                    per_unit: int = 20, gammas=None, refine: bool = True, branch_switch: bool = False,
                    name: Optional[str] = None) -> dict:
    """Long cylinder, ends fixed axially, stretch ``lam`` then a gamma ramp."""
    nx, ny = int(round(per_unit * L_t)), per_unit
    if gammas is None:
        gammas = [round(0.5 * i, 10) for i in range(1, 15)]
    phases = [{"name": "stretch", "control": "stretch", "values": [lam]}] if lam != 1.0 else []
    phases.append({"name": "surface", "control": "gamma_t", "values": list(gammas)})
    full = per_unit == 20
    return {
        "schema_version": 1,
        "name": name or f"cylinder_lam{lam:g}_alpha{alpha_t:g}_L{L_t:g}",
        "header": {"experiment": "stretched hyperelastic cylinder with surface energy, onset of bifurcation",
                   "discretization": f"axisymmetric quad4 {ny} radial x {nx} axial ({per_unit} per unit length)",
                   "desk_scale": not full,
                   "mapping": f"L/R = {L_t:g}, kappa/mu = {kappa_t:g}, stretch applied in one step, "
                   + ("gamma ramp with onset bisection" if refine else "gamma ramp")
                   + (", branch switching on" if branch_switch else "")},
        "geometry": {"type": "axisym-rect", "L": L_t, "R": 1.0, "nx": nx, "ny": ny},
        "reference": {"mu": 1.0, "length": 1.0},
        "surface": {"model": "isopoly"},
        "params": {"kappa_t": kappa_t, "alpha_t": alpha_t},
        "boundary": [{"set": "bottom", "components": [1], "stretch": True},
                     {"set": "top", "components": [1], "stretch": True},
                     {"set": "axis", "components": [0]}],
        "phases": phases,
        "solver": _solver(eig_monitor=False, refine_onset=refine, branch_switch=branch_switch),
        "output": {"dir": "out", "vtk": True, "vtk_every": 1, "csv": True},
    }


CUBE_SCHEDULE = [0.01 * t**3 for t in range(1, 12)]


def cube_config(model: str = "fluid", n: int = 3, kappa_t: float = 1e4, kind: str = "tet10") -> dict:
    """Cube octant with symmetry planes; gamma_t (or alpha_t) = 0.01 t^3, t = 1..11."""
    key = "gamma_t" if model == "fluid" else "alpha_t"
    return {
        "schema_version": 1, "name": f"cube_{'gamma' if model == 'fluid' else 'alpha'}",
        "header": {"experiment": "nearly incompressible cube with isotropic surface energy",
                   "discretization": f"cube octant, {n}^3 cells split into 6 {kind} each",
                   "desk_scale": True,
                   "mapping": f"penalty kappa/mu = {kappa_t:g} replaces the mixed u-p formulation; "
                   f"normalization length a/2; {key} = 0.01 t^3, t = 1..11"},
        "geometry": {"type": "cube", "a": 1.0, "n": n, "kind": kind, "octant": True},
        "reference": {"mu": 1.0, "length": 0.5},
        "surface": {"model": model}, "params": {"kappa_t": kappa_t},
        "boundary": [{"set": "sym_x", "components": [0]}, {"set": "sym_y", "components": [1]},
                     {"set": "sym_z", "components": [2]}],
        "phases": [{"name": "surface", "control": key, "values": CUBE_SCHEDULE}],
        "solver": _solver(eig_monitor=False, branch_switch=False),
        "output": {"dir": "out", "vtk": True, "vtk_every": 1, "csv": True},
    }


#: sphere octant resolution whose tet4 count (6 n^3) is closest to the reference mesh
SPHERE_REFERENCE_N = 15


def sphere_config(iso: str = "gamma", aniso: str = "eta", ratio: float = 1.5, n: int = 10,
                  iso_final: float = 10.0, kappa_final: float = 1e5, iso_steps: int = 10,
                  aniso_steps: int = 10, kind: str = "tet4") -> dict:
    """Sphere octant: ramp the isotropic term with kappa, then the fiber term to ``ratio``.

    ``ratio`` is eta/gamma (or beta/gamma, or over alpha for ``iso="alpha"``).
    """
    ikey = "gamma_t" if iso == "gamma" else "alpha_t"
    akey = "eta_t" if aniso == "eta" else "beta_t"
    iv = [iso_final * i / iso_steps for i in range(1, iso_steps + 1)]
    kv = [kappa_final ** (i / iso_steps) for i in range(1, iso_steps + 1)]
    phases = [{"name": "isotropic", "control": ikey, "values": iv, "also": {"kappa_t": kv}}]
    if ratio > 0:
        av = [ratio * iso_final * i / aniso_steps for i in range(1, aniso_steps + 1)]
        phases.append({"name": "anisotropic", "control": akey, "values": av})
    return {
        "schema_version": 1, "name": f"sphere_{iso}_{aniso}_{ratio:g}" + ("" if (n, kind) == (10, "tet4") else f"_n{n}_{kind}"),
        "header": {"experiment": "nearly incompressible sphere with anisotropic surface energy",
                   "discretization": f"sphere octant, radially mapped {n}^3 cube cells, 6 {kind} each "
                   f"({6 * n**3} cells, {(n + 1) ** 3} corner nodes)",
                   "desk_scale": not (kind == "tet4" and n >= SPHERE_REFERENCE_N),
                   "mapping": ("" if kind == "tet4" else "tet10 instead of linear tets; ")
                   + ("reference resolution" if n >= SPHERE_REFERENCE_N else f"coarsened from n = {SPHERE_REFERENCE_N}")
                   + f"; {ikey} -> {iso_final:g} with kappa/mu -> {kappa_final:g} (geometric) in {iso_steps} steps, "
                   f"then {akey}/{ikey} -> {ratio:g} in {aniso_steps} steps; fibers along parallels"},
        "geometry": {"type": "sphere-octant", "r": 1.0, "n": n, "kind": kind},
        "reference": {"mu": 1.0, "length": 1.0},
        "surface": {"model": "aniso"}, "params": {"kappa_t": 1.0},
        "boundary": [{"set": "sym_x", "components": [0]}, {"set": "sym_y", "components": [1]},
                     {"set": "sym_z", "components": [2]}],
        "phases": phases,
        "solver": _solver(eig_monitor=False, branch_switch=False),
        "output": {"dir": "out", "vtk": True, "vtk_every": 4, "csv": True},
    }


def from_builder(d: dict) -> RunConfig:
    return cfgmod.from_dict(d)


#: gamma ramp of the bundled unit-stretch cylinder run
UNIT_STRETCH_GAMMAS = [round(0.5 * i, 10) for i in range(1, 10)]
#: homogeneous continuation used before branch switching at gamma_t = 4.7
POST_BIFURCATION_GAMMAS = [1.0, 4.0, 4.32, 4.7]
#: continuation for the homogeneity check with alpha_t = 0.3
HOMOGENEITY_GAMMAS = [1.0, 3.0, 4.5, 5.15]
SPHERE_RATIOS = (0.5, 1.0, 1.5)


def bundled_configs() -> Dict[str, dict]:
    """Every bundled run configuration keyed by its file name."""
    cfgs = [
        bridge_config("fluid"), bridge_config("isopoly"),
        bridge_config("fluid", 1.5), bridge_config("isopoly", 1.5),
        bridge_config("fluid", mesh="3d", m=4, k=3, nx=12),
        cylinder_config(0.6, 0.0, 4.0, 30.0, gammas=[5.0, 5.3, 5.6]),
        cylinder_config(0.6, 0.0, 4.0, 40.0, gammas=[5.0, 5.3, 5.6]),
        cylinder_config(1.0, 0.0, 4.0, 30.0, gammas=UNIT_STRETCH_GAMMAS, branch_switch=True),
        cylinder_config(1.0, 0.0, 4.0, 30.0, gammas=POST_BIFURCATION_GAMMAS, refine=False,
                        branch_switch=True, name="cylinder_post_bifurcation"),
        cylinder_config(1.0, 0.3, 4.0, 30.0, gammas=HOMOGENEITY_GAMMAS, refine=False,
                        branch_switch=True, name="cylinder_alpha0.3_homogeneity"),
        cube_config("fluid"), cube_config("isopoly"),
    ]
    cfgs += [sphere_config("gamma", a, r) for r in SPHERE_RATIOS for a in ("eta", "beta")]
    cfgs += [sphere_config("gamma", a, 1.5, n=SPHERE_REFERENCE_N, aniso_steps=SPHERE_REFERENCE_N)
             for a in ("eta", "beta")]
    return {f"{c['name']}.json": c for c in cfgs}
