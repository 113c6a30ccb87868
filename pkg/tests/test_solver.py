import logging

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.optimize import bisect

from surfelast import solver as sv
from surfelast.errors import BranchSwitchError, DeflationError, NonConvergenceError
from surfelast.fem import ReducedSystem

CFG = sv.SolverConfig(tol=1e-12, eig_monitor=False)


class Toy:
    """Free-dof problem from a residual, its Jacobian and an energy."""

    diameter = 1.0

    def __init__(self, R, K, E=lambda y: 0.0):
        self.R, self.K, self.E = R, K, E
        self.n_evals = 0

    def evaluate(self, y, tangent=True):
        self.n_evals += 1
        y = np.atleast_1d(np.asarray(y, dtype=float))
        R = np.atleast_1d(self.R(y))
        return ReducedSystem(R, sp.csr_matrix(np.atleast_2d(self.K(y))) if tangent else None,
                             np.arange(len(y)), float(self.E(y)), 1.0)

    def energy(self, y):
        return float(self.E(np.atleast_1d(y)))

    full = restrict = staticmethod(lambda y: np.asarray(y, dtype=float))


def pitchfork(c):
    return Toy(lambda y: y**3 - c * y, lambda y: np.diag(3 * y**2 - c), lambda y: np.sum(y**4 / 4 - c * y * y / 2))


# --- inertia ---------------------------------------------------------------------

def test_inertia_examples():
    assert sv.ldlt_inertia(sp.identity(7, format="csr")) == (7, 0, 0)
    assert sv.ldlt_inertia(sp.diags([1.0, -2.0, 0.0]).tocsr()) == (1, 1, 1)
    assert sv.ldlt_inertia(sp.csr_matrix((0, 0))) == (0, 0, 0)


def test_inertia_random_vs_eigencount(rng):
    for i in range(100):
        Q, _ = np.linalg.qr(rng.standard_normal((20, 20)))
        ev = rng.standard_normal(20)
        if i % 4 == 0:
            ev[:2] = 0.0
        A = (Q * ev) @ Q.T
        A = 0.5 * (A + A.T)
        thr = 1e-12 * np.abs(np.diag(A)).max()
        w = np.linalg.eigvalsh(A)
        ref = (int(np.sum(w > thr)), int(np.sum(np.abs(w) <= thr)), int(np.sum(w < -thr)))
        assert sv.ldlt_inertia(sp.csr_matrix(A)) == ref


def test_inertia_breakdown_falls_back(caplog):
    K = sp.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
    with caplog.at_level(logging.WARNING, logger="surfelast.solver"):
        assert sv.ldlt_inertia(K) == (1, 0, 1)
    assert "broke down" in caplog.text


def test_inertia_large_sparse(rng):
    n = 2000
    main = np.concatenate([rng.uniform(2.5, 4.0, n - 3), [-1.0, -2.0, -0.5]])
    K = sp.diags([main, -np.ones(n - 1), -np.ones(n - 1)], [0, 1, -1]).tocsr()
    ref = np.linalg.eigvalsh(K.toarray())
    assert sv.ldlt_inertia(K) == (int(np.sum(ref > 0)), 0, int(np.sum(ref < 0)))


# --- smallest eigenpair ----------------------------------------------------------------

def test_smallest_eigenpair_examples(rng):
    lam, v = sv.smallest_eigenpair(sp.diags([3.0, 1.0, 5.0]).tocsr())
    assert lam == pytest.approx(1.0)
    np.testing.assert_allclose(np.abs(v), [0, 1, 0], atol=1e-14)
    u = rng.standard_normal(6)
    u /= np.linalg.norm(u)
    lam, v = sv.smallest_eigenpair(sp.csr_matrix(np.eye(6) - 2 * np.outer(u, u)))
    assert lam == pytest.approx(-1.0, abs=1e-12)
    assert abs(abs(v @ u) - 1) <= 1e-12


def test_smallest_eigenpair_shift_invert_vs_dense(rng):
    n = sv.DENSE_LIMIT + 200
    B = sp.random(n, n, density=4.0 / n, random_state=np.random.RandomState(1))
    K = (B @ B.T + sp.identity(n)).tocsr()
    w = rng.standard_normal(n)
    w /= np.linalg.norm(w)
    K = sp.csr_matrix(K.toarray() - 3.0 * np.outer(w, w))
    lam, v = sv.smallest_eigenpair(K)
    ev, V = np.linalg.eigh(K.toarray())
    assert abs(lam - ev[0]) <= 1e-8 * np.abs(ev).max()
    assert np.linalg.norm(K @ v - lam * v) <= 1e-8 * abs(K).sum(axis=1).max()
    assert abs(abs(v @ V[:, 0]) - 1) <= 1e-8


def test_stability_methods_agree(rng):
    for _ in range(20):
        A = rng.standard_normal((8, 8))
        K = sp.csr_matrix(A + A.T + rng.uniform(-2, 6) * np.eye(8))
        a = sv.assess_stability(K, sv.SolverConfig(stability="ldlt_inertia"))
        b = sv.assess_stability(K, sv.SolverConfig(stability="smallest_eig"))
        assert a.stable == b.stable == (a.lambda_min > 0)


def test_config_validation():
    with pytest.raises(ValueError):
        sv.SolverConfig(tol=0.0)
    with pytest.raises(ValueError):
        sv.SolverConfig(stability="power")


# --- deflation -------------------------------------------------------------------------------

def test_deflated_residual_examples(rng):
    R = rng.standard_normal(5)
    x0 = rng.standard_normal(5)
    np.testing.assert_array_equal(sv.deflated_residual(R, x0, []), R)
    e = rng.standard_normal(5)
    e /= np.linalg.norm(e)
    np.testing.assert_allclose(sv.deflated_residual(R, x0 + e, [x0]), 2 * R, rtol=1e-14)
    Rf = sv.deflated_residual(R, x0 + 1e3 * e, [x0])
    assert np.linalg.norm(Rf - R) <= 1e-6 * np.linalg.norm(R)
    two = sv.deflated_residual(R, x0 + e, [x0, x0 + 3 * e])
    np.testing.assert_allclose(two, R * 2 * (1 / 4 + 1), rtol=1e-14)
    with pytest.raises(DeflationError):
        sv.deflated_residual(R, x0, [x0])


def test_deflation_gradient_fd(rng):
    x0, x1, y = rng.standard_normal((3, 4))
    m, g = sv.deflation_factor(y, [x0, x1], 1.7)
    h = 1e-6
    fd = [(sv.deflation_factor(y + h * e, [x0, x1], 1.7)[0] - sv.deflation_factor(y - h * e, [x0, x1], 1.7)[0])
          / (2 * h) for e in np.eye(4)]
    np.testing.assert_allclose(g, fd, rtol=1e-6)


def test_deflation_preserves_roots():
    toy = pitchfork(4.0)
    for root in (np.array([2.0]), np.array([-2.0])):
        R = toy.evaluate(root).R
        assert R[0] == 0.0
        assert sv.deflated_residual(R, root, [np.zeros(1), np.array([0.5])])[0] == 0.0


# --- line search -------------------------------------------------------------------------------

def test_line_search_affine_one_newton_step(rng):
    A = rng.standard_normal((4, 4))
    A = A @ A.T + np.eye(4)
    xs = rng.standard_normal(4)
    toy = Toy(lambda y: A @ (y - xs), lambda y: A)
    y0, d = rng.standard_normal((2, 4))
    res = sv.exact_line_search(toy, y0, d, [], CFG)
    assert res.beta == pytest.approx(d @ A @ (xs - y0) / (d @ A @ d), rel=1e-12)
    assert res.iterations <= 1


def test_line_search_zero_root():
    toy = pitchfork(1.0)
    res = sv.exact_line_search(toy, np.array([1.0]), np.array([1.0]), [], CFG)
    assert res.beta == 0.0


def test_line_search_cubic_vs_sampling():
    c = 3.0
    toy = Toy(lambda y: (y - 0.2) ** 3 - c * (y - 0.2) + 0.4, lambda y: np.diag(3 * (y - 0.2) ** 2 - c))
    ys, d = np.array([2.5]), np.array([-1.0])
    res = sv.exact_line_search(toy, ys, d, [], CFG)
    phi = lambda b: float(toy.evaluate(ys + b * d).R[0] * d[0])
    grid = np.linspace(0, 10, 20001)
    vals = np.array([phi(b) for b in grid])
    roots = [bisect(phi, grid[i], grid[i + 1], xtol=1e-14) for i in np.flatnonzero(np.diff(np.sign(vals)))]
    assert min(abs(res.beta - r) for r in roots) <= 1e-10


# --- Newton ---------------------------------------------------------------------------------------

def test_newton_affine_and_at_solution(rng):
    A = rng.standard_normal((5, 5))
    A = A @ A.T + np.eye(5)
    xs = rng.standard_normal(5)
    toy = Toy(lambda y: A @ (y - xs), lambda y: A, lambda y: 0.5 * (y - xs) @ A @ (y - xs))
    nr = sv.newton_solve(toy, np.zeros(5), CFG)
    assert nr.iterations <= 2
    np.testing.assert_allclose(nr.y, xs, rtol=1e-10)
    again = sv.newton_solve(toy, nr.y, CFG)
    assert again.iterations <= 1 and np.abs(again.y - nr.y).max() <= 1e-12


def test_newton_monotone_on_toy():
    toy = pitchfork(2.0)
    nr = sv.newton_solve(toy, np.array([3.0]), CFG)
    assert nr.y[0] == pytest.approx(np.sqrt(2.0), rel=1e-12)
    assert np.all(np.diff(nr.history[1:]) < 0)


def test_newton_nonconvergence_carries_history():
    toy = pitchfork(2.0)
    with pytest.raises(NonConvergenceError) as ei:
        sv.newton_solve(toy, np.array([30.0]), sv.SolverConfig(tol=1e-12, max_iter=2))
    assert len(ei.value.history) == 3


def test_newton_linear_fe_problem():
    from surfelast.bulk import BulkMaterial
    from surfelast.fem import LoadCase, Model
    from surfelast.fem import mesh as msh
    mesh = msh.cube(1.0, 2, "hex8")
    z = mesh.nodes[:, 2]
    bot, top = np.flatnonzero(z == z.min()), np.flatnonzero(z == z.max())
    lc = LoadCase.fix_nodes(mesh, bot, [0, 1, 2]).with_fixed(mesh, top, [2], {2: 0.5 * (1 + 1e-7)})
    model = Model(mesh, BulkMaterial(1.0, 1.0), None, lc)
    pb = sv.Problem(model)
    nr = sv.newton_solve(pb, pb.restrict(model.reference_state()), sv.SolverConfig(tol=1e-9))
    assert nr.iterations <= 2


# --- branch switching -----------------------------------------------------------------------------

def test_branch_switch_pitchfork():
    c = 2.0
    br = sv.branch_switch(pitchfork(c), np.zeros(1), CFG)
    assert abs(br.y[0]) == pytest.approx(np.sqrt(c), rel=1e-10)
    assert br.stability.stable


def test_branch_switch_two_dof_lower_energy():
    c = 1.5
    toy = Toy(lambda y: y**3 - np.array([c, -1.0]) * y, lambda y: np.diag(3 * y * y - np.array([c, -1.0])),
              lambda y: np.sum(y**4 / 4 - np.array([c, -1.0]) * y * y / 2))
    br = sv.branch_switch(toy, np.zeros(2), CFG)
    np.testing.assert_allclose(np.abs(br.y), [np.sqrt(c), 0.0], atol=1e-10)
    assert toy.energy(br.y) < toy.energy(np.zeros(2))


def test_branch_switch_rejects_stable_state():
    with pytest.raises(BranchSwitchError):
        sv.branch_switch(pitchfork(2.0), np.array([np.sqrt(2.0)]), CFG)


def test_continuation_empty_schedule():
    res = sv.run_continuation(None, [], lambda *a: None, CFG, "gamma_t")
    assert res.states == [] and res.onset is None
