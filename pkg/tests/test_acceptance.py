"""Acceptance criteria 1-9.

Every test prints exactly one ``criterion N: PASS|FAIL`` line (repeated in
the pytest terminal summary) listing each sub-check with its measured value.
Tolerances are pinned as module constants below. Runtime targets are
reported, not asserted.
"""
import math

import numpy as np
import pytest

from surfelast import benchmarks as bm
from surfelast import experiments as ex
from surfelast import verify
from surfelast.solver import Problem, ldlt_inertia, smallest_eigenpair

# 1
CATENOID_C_OVER_R = 0.7451
CATENOID_C_TOL = 1e-4
PROFILE_TOL = 0.01                 # fraction of R, criteria 1-3
BRIDGE_NODES, BRIDGE_ELEMENTS = 651, 600
BRIDGE_STEPS = 30
# 4
ONSET_06, ONSET_06_TOL = 5.433, 1e-3
ONSET_10, ONSET_10_TOL = 4.35, 0.01
# 5
FE_ONSET_L30, FE_ONSET_TOL = 5.502, 0.02
BRACKET_RTOL = 1e-3
# 6
INHOMOGENEOUS_MIN = 0.05           # switched branch: (max r - min r) / mean r
HOMOGENEOUS_MAX = 1e-6             # unit-stretch alpha 0.3 state at 5.15
# 7
SPHERE_AREA_TOL = 0.05
# 8
SHAPE_TOL = 0.02                   # fraction of r
# 9
JACOBIAN_TOL, FRAME_TOL = 1e-12, 1e-12
STRESS_FD_TOL, TANGENT_FD_TOL = 1e-6, 1e-5
THETA_TOL = 1e-14


def inertia_agrees(model, x) -> bool:
    """LDL^T inertia and the sign of the smallest eigenvalue give the same verdict."""
    pb = Problem(model)
    K = pb.evaluate(pb.restrict(x)).K
    _, z, neg = ldlt_inertia(K)
    lam, _ = smallest_eigenpair(K)
    thr = 1e-12 * np.abs(K.diagonal()).max()
    return (neg == 0 and z == 0) == (lam > thr)


@pytest.fixture(scope="module")
def bridge_gamma():
    return bm.bridge("fluid")


@pytest.fixture(scope="module")
def bridge_alpha():
    return bm.bridge("isopoly")


def test_criterion_1_catenoid(criterion, bridge_gamma):
    b = bridge_gamma
    with criterion(1) as c:
        c.check("C/R", abs(b["C_over_R"] - CATENOID_C_OVER_R) <= CATENOID_C_TOL, f"{b['C_over_R']:.5f}")
        mesh = b["result"].model.mesh
        c.check("mesh", (mesh.n_nodes, mesh.n_bulk) == (BRIDGE_NODES, BRIDGE_ELEMENTS),
                f"{mesh.n_nodes} nodes, {mesh.n_bulk} elements")
        c.check("steps stable", b["all_stable"] and b["steps"] == BRIDGE_STEPS, f"{b['steps']}")
        c.check("max |r - C cosh(z/C)|/R", b["dev_catenoid"] <= PROFILE_TOL, f"{b['dev_catenoid']:.5f}")
        c.check("inertia vs eigenvalue", inertia_agrees(b["result"].model, b["result"].final.x))
        c.check("runtime", True, f"{b['runtime']:.1f}s")


def test_criterion_2_alpha_bridge(criterion, bridge_gamma, bridge_alpha):
    a, g = bridge_alpha, bridge_gamma
    with criterion(2) as c:
        c.check("max |r - r_ode|/R", a["dev_stretch_ode"] <= PROFILE_TOL, f"{a['dev_stretch_ode']:.5f}")
        c.check("steps stable", a["all_stable"])
        c.check("neck alpha > neck gamma", a["neck"] > g["neck"], f"{a['neck']:.4f} vs {g['neck']:.4f}")
        c.check("inertia vs eigenvalue", inertia_agrees(a["result"].model, a["result"].final.x))


def test_criterion_3_prestretch(criterion, bridge_alpha):
    R = bm.BRIDGE.R
    with criterion(3) as c:
        g = bm.bridge("fluid", prestretch=1.5)
        c.check("gamma prestretch vs catenoid", g["dev_catenoid"] <= PROFILE_TOL, f"{g['dev_catenoid']:.5f}")
        a = bm.bridge("isopoly", prestretch=1.5)
        d1, d0 = R - a["neck"], R - bridge_alpha["neck"]
        c.check("alpha deflection stretched < unstretched", d1 < d0, f"{d1:.4f} vs {d0:.4f}")
        c.check("steps stable", g["all_stable"] and a["all_stable"])


def test_criterion_4_onset_oracle(criterion):
    o = bm.onset_numbers()
    g06, g10 = o["lam0.6"].gamma_t, o["lam1.0"].gamma_t
    with criterion(4) as c:
        c.check("lambda 0.6", abs(g06 - ONSET_06) <= ONSET_06_TOL, f"{g06:.6f}")
        c.check("lambda 1.0", abs(g10 - ONSET_10) <= ONSET_10_TOL, f"{g10:.6f}")
        c.check("monotone in alpha", o["monotone_in_alpha"],
                f"{len(o['alphas'])}x{len(o['lambdas'])} grid")


def test_criterion_5_fe_onset(criterion):
    r30 = bm.cylinder_onset(L_t=30.0)
    r40 = bm.cylinder_onset(L_t=40.0)
    with criterion(5) as c:
        lo, hi = r30["bracket"]
        c.check("L30 bracket meets 5.502 +- 0.02", lo <= FE_ONSET_L30 + FE_ONSET_TOL and hi >= FE_ONSET_L30 - FE_ONSET_TOL,
                f"({lo:.5f}, {hi:.5f}), {r30['ndof']} dofs")
        c.check("L30 bracket width", (hi - lo) <= BRACKET_RTOL * hi, f"{(hi - lo) / hi:.1e}")
        m30, m40 = 0.5 * (lo + hi), 0.5 * sum(r40["bracket"])
        oracle = r30["oracle"]
        c.check("L40 closer to oracle", abs(m40 - oracle) < abs(m30 - oracle) and m40 < m30,
                f"{m30:.4f} -> {m40:.4f} (oracle {oracle:.4f})")
        c.check("runtime", True, f"{r30['runtime']:.0f}s + {r40['runtime']:.0f}s")


def test_criterion_6_post_bifurcation(criterion):
    p = bm.post_bifurcation()
    h = bm.homogeneity_check()
    with criterion(6) as c:
        c.check("homogeneous state unstable at 4.7", p["switched"] is not None)
        c.check("switched state stable", p["stable"], f"lambda_min {p.get('lambda_min', math.nan):.3e}")
        c.check("non-homogeneous", p["inhomogeneity_switched"] >= INHOMOGENEOUS_MIN,
                f"{p['inhomogeneity_switched']:.3f}")
        c.check("monotone profile", p["monotone"])
        r0, r1 = p["r_ends"]
        rh = p["r_homogeneous"]
        c.check("one inflated, one deflated end", min(r0, r1) < rh < max(r0, r1),
                f"{r0:.3f} / {r1:.3f} around {rh:.3f}")
        c.check("energy below homogeneous", p["energy_switched"] < p["energy_homogeneous"],
                f"{p['energy_switched']:.3f} < {p['energy_homogeneous']:.3f}")
        c.check("alpha 0.3 at 5.15 homogeneous", h["stable"] and h["branch"] == "primary"
                and h["inhomogeneity"] <= HOMOGENEOUS_MAX,
                f"inhomogeneity {h['inhomogeneity']:.1e}, oracle onset {h['onset_oracle']:.3f}")


def test_criterion_7_cube(criterion):
    with criterion(7) as c:
        for model, label in (("fluid", "gamma"), ("isopoly", "alpha")):
            r = bm.cube(model)
            c.check(f"{label} area monotone", r["monotone"],
                    f"{r['cube_area']:.3f} -> {r['areas'][-1]:.4f}")
            c.check(f"{label} final within 5% of sphere", abs(r["final_rel"]) <= SPHERE_AREA_TOL,
                    f"{r['final_rel']:+.4f} of {r['sphere_area']:.4f}")


def test_criterion_8_anisotropic_sphere(criterion):
    r_ref = ex.sphere_config()["geometry"]["r"]
    with criterion(8) as c:
        for ratio in ex.SPHERE_RATIOS:
            s = bm.sphere("gamma", ratio)
            done = "max_node_gap" in s
            gap = s.get("max_node_gap", math.nan) / r_ref
            c.check(f"ratio {ratio:g} eta vs beta", done and gap <= SHAPE_TOL,
                    f"{gap:.4f}" if done else f"{s.get('eta')} {s.get('beta')}")
            if ratio == 1.5 and done:
                c.check("ratio 1.5 polar > equatorial",
                        all(s[k]["polar"] > s[k]["equatorial"] for k in ("eta", "beta")),
                        f"{s['eta']['polar']:.3f} > {s['eta']['equatorial']:.3f}")


def test_criterion_9_property_suites(criterion):
    res = verify.run_checks(seed=0)
    by = {r.name: r for r in res}
    pinned = {"kinematics.jacobian_forms": JACOBIAN_TOL, "bulk.frame_indifference": FRAME_TOL,
              "surface.frame_indifference": FRAME_TOL, "oracles.theta0_double_transcription": THETA_TOL,
              "solver.inertia_vs_eigencount": 0.0}
    for name in by:
        if "stress_fd" in name or "energy_gradient_fd" in name:
            pinned[name] = STRESS_FD_TOL
        elif "tangent_fd" in name:
            pinned[name] = TANGENT_FD_TOL
    with criterion(9) as c:
        failed = [r.name for r in res if not r.passed]
        c.check("all properties pass", not failed, f"{len(res) - len(failed)}/{len(res)}"
                + (f" failing {failed}" if failed else ""))
        loose = [n for n, t in pinned.items() if n not in by or by[n].tol > t]
        c.check("tolerances pinned", not loose, f"{len(pinned)} checks" + (f" loose {loose}" if loose else ""))
        ref = by["surface.reference_stress"]
        c.check("reference stress exact", ref.passed, f"{ref.error:.1e}")
