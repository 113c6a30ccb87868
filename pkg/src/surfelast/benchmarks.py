"""Benchmark drivers shared by the acceptance tests and the experiment scripts.

Each function builds a bundled configuration, runs it and returns a plain
dict of the measured quantities next to the reference values, so callers
only decide what to assert or print.
"""
from __future__ import annotations

import time
from typing import Dict, Optional, Sequence

import numpy as np

from . import experiments as ex
from . import oracles as orc
from .solver import Problem, branch_switch

BRIDGE = orc.BridgeGeometry(3.0, 2.5)


def _timed(fn, *a, **kw):
    t = time.perf_counter()
    out = fn(*a, **kw)
    return out, time.perf_counter() - t


# --------------------------------------------------------------------------
# liquid bridge
# --------------------------------------------------------------------------

def bridge(model: str = "fluid", prestretch: Optional[float] = None, mesh: str = "axisym",
           write: bool = False, **kw) -> Dict:
    """Run a bridge and compare the final lateral profile with both oracles.

    Deviations are maximum radial differences over the surface nodes divided
    by ``R``; the oracle profiles are evaluated at the deformed axial
    position of each node.
    """
    cfg = ex.from_builder(ex.bridge_config(model, prestretch, mesh, **kw))
    res, dt = _timed(ex.run, cfg, write=write)
    g = BRIDGE
    C = orc.catenoid_constant(g)
    prof = orc.minimal_stretch_profile(g)
    mesh_ = res.model.mesh
    z, r = ex.radial_profile(mesh_, res.final.x)
    surface_phase = res.phases[-1].result.states
    return {
        "runtime": dt,
        "n_nodes": mesh_.n_nodes,
        "n_bulk": mesh_.n_bulk,
        "C_over_R": C / g.R,
        "z": z, "r": r,
        "dev_catenoid": float(np.max(np.abs(r - C * np.cosh(z / C))) / g.R),
        "dev_stretch_ode": float(np.max(np.abs(r - prof.radius(z))) / g.R),
        "neck": ex.neck_radius(mesh_, res.final.x),
        "neck_ode": prof.neck_radius,
        "all_stable": all(s.stable for s in surface_phase),
        "final_control": res.final.control,
        "steps": len(surface_phase),
        "result": res,
    }


# --------------------------------------------------------------------------
# onset oracle
# --------------------------------------------------------------------------

def onset_numbers() -> Dict:
    p06 = orc.bifurcation_onset(4.0, lam=0.6, alpha_t=0.0)
    p10 = orc.bifurcation_onset(4.0, lam=1.0, alpha_t=0.0)
    grid = orc.onset_grid()
    lams = list(orc.FIG_LAMBDAS)
    table = np.array([[p.gamma_t for p in grid[al]] for al in orc.FIG_ALPHAS])  # (alpha, lambda)
    return {"lam0.6": p06, "lam1.0": p10, "grid": table, "lambdas": lams,
            "alphas": list(orc.FIG_ALPHAS),
            "monotone_in_alpha": bool(np.all(np.diff(table, axis=0) > 0))}


# --------------------------------------------------------------------------
# long cylinder
# --------------------------------------------------------------------------

def cylinder_onset(lam: float = 0.6, L_t: float = 30.0, gammas: Sequence[float] = (5.0, 5.3, 5.6),
                   alpha_t: float = 0.0, per_unit: int = 20, refine: bool = True,
                   write: bool = False) -> Dict:
    """Loss of stability of the stretched cylinder along a gamma ramp."""
    cfg = ex.from_builder(ex.cylinder_config(lam, alpha_t, 4.0, L_t, per_unit, list(gammas), refine))
    res, dt = _timed(ex.run, cfg, write=write)
    onset = res.onset()
    oracle = orc.bifurcation_onset(4.0, lam=lam, alpha_t=alpha_t)
    return {"runtime": dt, "bracket": onset, "oracle": oracle.gamma_t,
            "ndof": res.model.ndof, "log": res.log_rows, "result": res}


def post_bifurcation(L_t: float = 30.0, per_unit: int = 20, alpha_t: float = 0.0,
                     gammas: Sequence[float] = tuple(ex.POST_BIFURCATION_GAMMAS)) -> Dict:
    """Homogeneous continuation to the last gamma, then branch switching there."""
    cfg = ex.from_builder(ex.cylinder_config(1.0, alpha_t, 4.0, L_t, per_unit, list(gammas),
                                             refine=False, branch_switch=False))
    res, dt = _timed(ex.run, cfg, write=False)
    model = res.model
    hom = res.final
    out = {"runtime_continuation": dt, "homogeneous": hom,
           "energy_homogeneous": hom.energy,
           "inhomogeneity_homogeneous": ex.inhomogeneity(model.mesh, hom.x)}
    if hom.stable:
        out.update(switched=None, stable=False)
        return out
    pb = Problem(model)
    br, dt2 = _timed(branch_switch, pb, pb.restrict(hom.x), cfg.solver)
    x1 = pb.full(br.y)
    z, r = ex.radial_profile(model.mesh, x1)
    d = np.diff(r)
    out.update(runtime_switch=dt2, switched=x1, stable=br.stability.stable,
               lambda_min=br.stability.lambda_min,
               energy_switched=model.total_energy(x1), z=z, r=r,
               monotone=bool(np.all(d > 0) or np.all(d < 0)),
               r_ends=(float(r[0]), float(r[-1])), r_homogeneous=float(np.mean(
                   ex.radial_profile(model.mesh, hom.x)[1])),
               inhomogeneity_switched=ex.inhomogeneity(model.mesh, x1))
    return out


def homogeneity_check(alpha_t: float = 0.3, gamma_t: float = 5.15, L_t: float = 30.0,
                      per_unit: int = 20) -> Dict:
    """Continuation at unit stretch to ``gamma_t`` with branch switching enabled."""
    gammas = ex.HOMOGENEITY_GAMMAS[:-1] + [gamma_t]
    cfg = ex.from_builder(ex.cylinder_config(1.0, alpha_t, 4.0, L_t, per_unit, gammas,
                                             refine=False, branch_switch=True))
    res, dt = _timed(ex.run, cfg, write=False)
    fin = res.final
    return {"runtime": dt, "stable": fin.stable, "branch": fin.branch,
            "inhomogeneity": ex.inhomogeneity(res.model.mesh, fin.x),
            "onset_oracle": orc.bifurcation_onset(4.0, lam=1.0, alpha_t=alpha_t).gamma_t,
            "all_stable": all(s.stable for s in res.states)}


# --------------------------------------------------------------------------
# cube and sphere
# --------------------------------------------------------------------------

def cube(model: str = "fluid", n: int = 3, kappa_t: float = 1e4) -> Dict:
    cfg = ex.from_builder(ex.cube_config(model, n, kappa_t))
    res, dt = _timed(ex.run, cfg, write=False)
    a = cfg.geometry["a"]
    Rs = (3.0 / (4.0 * np.pi)) ** (1.0 / 3.0) * a
    areas = np.array([8.0 * res.model.surface_area(s.x) for s in res.states])
    return {"runtime": dt, "areas": areas, "sphere_area": 4 * np.pi * Rs**2,
            "cube_area": 6 * a * a, "controls": [s.control for s in res.states],
            "monotone": bool(np.all(np.diff(areas) < 0)),
            "final_rel": float(areas[-1] / (4 * np.pi * Rs**2) - 1)}


def sphere_shape(mesh, x):
    """Polar and equatorial semi-axes of the deformed octant surface."""
    X = np.asarray(x, dtype=float).reshape(mesh.nodes.shape)
    ids = mesh.node_sets["outer"]
    P = X[ids]
    pole = ids[np.argmax(mesh.nodes[ids, 2])]
    eq = np.intersect1d(ids, mesh.node_sets["sym_z"])
    return float(X[pole, 2]), float(np.max(np.hypot(X[eq, 0], X[eq, 1]))), P


def sphere(iso: str = "gamma", ratio: float = 1.5, n: int = 10, **kw) -> Dict:
    """Run the eta and beta variants at one ratio and compare the shapes."""
    out = {"ratio": ratio, "iso": iso}
    shapes = {}
    for aniso in ("eta", "beta"):
        cfg = ex.from_builder(ex.sphere_config(iso, aniso, ratio, n, **kw))
        try:
            res, dt = _timed(ex.run, cfg, write=False)
        except Exception as exc:  # recorded, the caller asserts on completion
            out[aniso] = {"error": f"{type(exc).__name__}: {exc}"}
            continue
        c, a, P = sphere_shape(res.model.mesh, res.final.x)
        shapes[aniso] = P
        out[aniso] = {"runtime": dt, "polar": c, "equatorial": a, "final_control": res.final.control}
    if len(shapes) == 2:
        out["max_node_gap"] = float(np.max(np.linalg.norm(shapes["eta"] - shapes["beta"], axis=1)))
    return out
