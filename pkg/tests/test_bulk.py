import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from surfelast.bulk import BulkMaterial, bulk_energy, bulk_stress, bulk_tangent
from surfelast.errors import InadmissibleDeformationError, InputError
from surfelast.tensor import random_rotation

seeds = st.integers(0, 2**32 - 1)
MAT = BulkMaterial(1.3, 2.7)


def random_F(r):
    F = np.eye(3) + 0.4 * r.standard_normal((3, 3))
    if np.linalg.det(F) < 0.05:
        F = np.eye(3) + 0.1 * r.standard_normal((3, 3))
    return F


def test_material_validation():
    with pytest.raises(InputError):
        BulkMaterial(0.0, 1.0)
    with pytest.raises(InputError):
        BulkMaterial(1.0, -1.0)
    BulkMaterial(1.0, 0.0)  # kappa = 0 allowed


def test_energy_examples():
    assert bulk_energy(np.eye(3), MAT) == 0.0
    assert bulk_energy(np.diag([2.0, 1, 1]), BulkMaterial(1, 0)) == pytest.approx(1.5 - np.log(2), rel=1e-15)


@given(seeds)
def test_energy_independent_evaluation(seed):
    r = np.random.default_rng(seed)
    F = random_F(r)
    mu, kap = r.uniform(0.1, 5, 2)
    # second implementation from the principal stretches
    lam = np.linalg.svd(F, compute_uv=False)
    J = np.prod(lam)
    ref = 0.5 * mu * (np.sum(lam**2) - 3 - 2 * np.log(J)) + 0.5 * kap * (0.5 * (J * J - 1) - np.log(J))
    W = bulk_energy(F, BulkMaterial(mu, kap))
    assert W == pytest.approx(ref, rel=1e-12, abs=1e-13)
    assert W >= -1e-14


def test_stress_examples():
    np.testing.assert_array_equal(bulk_stress(np.eye(3), MAT), np.zeros((3, 3)))
    np.testing.assert_allclose(bulk_stress(np.diag([2.0, 1, 1]), BulkMaterial(1, 0)),
                               np.diag([1.5, 0, 0]), atol=1e-15)


def test_tangent_at_identity():
    A = bulk_tangent(np.eye(3), BulkMaterial(1.0, 0.0))
    d = np.eye(3)
    ref = np.einsum("ik,jl->ijkl", d, d) + np.einsum("il,jk->ijkl", d, d)
    np.testing.assert_allclose(A, ref, atol=1e-14)


@given(seeds)
def test_stress_and_tangent_fd(seed):
    r = np.random.default_rng(seed)
    F = random_F(r)
    P, A = bulk_stress(F, MAT), bulk_tangent(F, MAT)
    h = 1e-6
    Pfd = np.zeros((3, 3))
    Afd = np.zeros((3, 3, 3, 3))
    for k, l in itertools.product(range(3), range(3)):
        D = np.zeros((3, 3))
        D[k, l] = h
        Pfd[k, l] = (bulk_energy(F + D, MAT) - bulk_energy(F - D, MAT)) / (2 * h)
        Afd[..., k, l] = (bulk_stress(F + D, MAT) - bulk_stress(F - D, MAT)) / (2 * h)
    assert np.linalg.norm(Pfd - P) <= 1e-6 * max(np.linalg.norm(P), 1.0)
    assert np.linalg.norm(Afd - A) <= 1e-5 * np.linalg.norm(A)
    np.testing.assert_allclose(A, A.transpose(2, 3, 0, 1), atol=1e-12 * np.abs(A).max())


def test_frame_indifference(rng):
    for _ in range(100):
        F, Q = random_F(rng), random_rotation(rng)
        W = bulk_energy(F, MAT)
        assert abs(bulk_energy(Q @ F, MAT) - W) <= 1e-12 * max(1.0, abs(W))


def test_energy_blow_up_monotone():
    t = np.geomspace(0.1, 1e-8, 50)
    W = [bulk_energy(np.diag([s, 1, 1]), MAT) for s in t]
    assert np.all(np.diff(W) > 0)


def test_inadmissible_reports_det():
    F = np.diag([-1.0, 1, 1])
    for fn in (bulk_energy, bulk_stress, bulk_tangent):
        with pytest.raises(InadmissibleDeformationError) as ei:
            fn(F, MAT)
        assert ei.value.detF == pytest.approx(-1.0)
