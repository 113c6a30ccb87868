import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from surfelast import surface as sf
from surfelast import tensor as tn
from surfelast.errors import InputError, SingularityError

E3 = np.array([0.0, 0.0, 1.0])
IH = np.diag([1.0, 1.0, 0.0])
seeds = st.integers(0, 2**32 - 1)

VARIANTS = {
    "fluid": sf.Fluid(gamma=1.7),
    "isopoly": sf.IsoPoly(alpha=0.8, gamma=1.3),
    "ogden": sf.Ogden(terms=((0.7, 3.0), (0.4, 1.5)), gamma=0.9),
    "aniso_eta": sf.Aniso(alpha=0.3, gamma=1.0, eta=0.6),
    "aniso_beta": sf.Aniso(alpha=0.3, gamma=1.0, beta=0.6),
}


def fiber_for(s, r):
    a = s.Ihat @ tn.random_unit(r)
    return a / np.linalg.norm(a)


def state_and_fiber(seed):
    r = np.random.default_rng(seed)
    s = tn.random_surface_state(r, 0.3, 2.5)
    return s, fiber_for(s, r)


def tangent_dirs(s):
    """The 9 unit directions E_kl projected onto the tangent plane."""
    for k, l in itertools.product(range(3), range(3)):
        D = np.zeros((3, 3))
        D[k] = s.Ihat[l]
        yield k, l, D


# --- examples -------------------------------------------------------------------

def test_energy_examples():
    assert sf.surface_energy(tn.SurfaceState(IH, E3), sf.IsoPoly(1.0, 0.0)) == pytest.approx(np.sqrt(2), rel=1e-15)
    assert sf.surface_energy(tn.SurfaceState(np.diag([2.0, 3, 0]), E3), sf.Fluid(1.0)) == pytest.approx(6.0)


def test_ogden_reduces_to_isopoly(rng):
    al, ga = 0.9, 1.4
    og, iso = sf.Ogden(terms=((al, 2.0),), gamma=ga), sf.IsoPoly(al, ga)
    for _ in range(100):
        s = tn.random_surface_state(rng)
        assert sf.surface_energy(s, og) == pytest.approx(sf.surface_energy(s, iso), rel=1e-12)


def test_stress_examples():
    al, ga = 0.8, 1.3
    s = tn.SurfaceState(IH, E3)
    ref = (al / np.sqrt(2) + ga) * IH
    np.testing.assert_allclose(sf.surface_stress_pk(s, sf.IsoPoly(al, ga)), ref, atol=1e-15)
    np.testing.assert_allclose(sf.surface_stress_cauchy(s, sf.IsoPoly(al, ga)), ref, atol=1e-15)
    s = tn.SurfaceState(np.diag([2.0, 3, 0]), E3)
    np.testing.assert_allclose(sf.surface_stress_pk(s, sf.Fluid(1.0)), np.diag([3.0, 2, 0]), atol=1e-14)


def test_isopoly_tangent_at_identity():
    s = tn.SurfaceState(IH, E3)
    m = sf.IsoPoly(1.0, 0.0)
    A = sf.surface_tangent(s, m)
    # spatial index is unrestricted, so the left factor is the full identity
    ref = (tn.obar(np.eye(3), IH) - 0.5 * tn.dyad4(IH, IH)) / np.sqrt(2)
    np.testing.assert_allclose(A, ref, atol=1e-14)
    h = 1e-6
    for k, l, D in tangent_dirs(s):
        dP = (sf.surface_stress_pk(tn.SurfaceState(IH + h * D, E3), m)
              - sf.surface_stress_pk(tn.SurfaceState(IH - h * D, E3), m)) / (2 * h)
        np.testing.assert_allclose(dP @ IH, np.einsum("ijkl,kl->ij", ref, D), atol=1e-8)


def test_fluid_cauchy_is_gamma_ihat(rng):
    m = sf.Fluid(2.3)
    for _ in range(50):
        s = tn.random_surface_state(rng)
        n = tn.deformed_normal(s)
        np.testing.assert_allclose(sf.surface_stress_cauchy(s, m), 2.3 * (np.eye(3) - np.outer(n, n)),
                                   atol=1e-12)


def test_fiber_identity_examples():
    F = tn.SurfaceState(np.diag([2.0, 3, 0]), E3)
    np.testing.assert_allclose(sf.fiber_identity_check(F, [1.0, 0, 0]), (2.0, 2.0))
    a = np.array([1.0, 1, 0]) / np.sqrt(2)
    v1, v2 = sf.fiber_identity_check(F, a)
    assert v1 == pytest.approx(np.sqrt(6.5))
    assert v2 == pytest.approx(np.sqrt(np.sqrt(2 * 16 * 0.25 + 2 * 81 * 0.25)))
    assert v1 != pytest.approx(v2)
    np.testing.assert_allclose(sf.fiber_identity_check(tn.SurfaceState(IH, E3), a), (1.0, 1.0))


# --- FD consistency ----------------------------------------------------------------

@pytest.mark.parametrize("name", list(VARIANTS))
@given(seed=seeds)
def test_stress_fd(name, seed):
    m = VARIANTS[name]
    s, a = state_and_fiber(seed)
    P = sf.surface_stress_pk(s, m, a)
    np.testing.assert_allclose(P @ s.Ihat, P, atol=1e-13 * np.abs(P).max())
    h = 1e-6
    an, fd = [], []
    for _, _, D in tangent_dirs(s):
        fd.append((sf.surface_energy(tn.SurfaceState(s.Fhat + h * D, s.N), m, a)
                   - sf.surface_energy(tn.SurfaceState(s.Fhat - h * D, s.N), m, a)) / (2 * h))
        an.append(np.sum(P * D))
    assert np.linalg.norm(np.subtract(fd, an)) <= 1e-6 * np.linalg.norm(an)


@pytest.mark.parametrize("name", list(VARIANTS))
@given(seed=seeds)
def test_tangent_fd_and_symmetry(name, seed):
    m = VARIANTS[name]
    s, a = state_and_fiber(seed)
    A = sf.surface_tangent(s, m, a)
    h = 1e-6
    err = ref = 0.0
    for k, l, D in tangent_dirs(s):
        dP = (sf.surface_stress_pk(tn.SurfaceState(s.Fhat + h * D, s.N), m, a)
              - sf.surface_stress_pk(tn.SurfaceState(s.Fhat - h * D, s.N), m, a)) / (2 * h)
        dA = np.einsum("ijkl,kl->ij", A, D)
        err += np.sum((dP @ s.Ihat - dA) ** 2)
        ref += np.sum(dA**2)
    assert np.sqrt(err) <= 1e-5 * np.sqrt(ref)
    np.testing.assert_allclose(A, A.transpose(2, 3, 0, 1), atol=1e-12 * np.abs(A).max())


# --- properties ------------------------------------------------------------------------

@pytest.mark.parametrize("name", list(VARIANTS))
def test_frame_indifference(name, rng):
    m = VARIANTS[name]
    for _ in range(100):
        s = tn.random_surface_state(rng)
        a = fiber_for(s, rng)
        Q = tn.random_rotation(rng)
        W = sf.surface_energy(s, m, a)
        assert abs(sf.surface_energy(tn.SurfaceState(Q @ s.Fhat, s.N), m, a) - W) <= 1e-12 * max(1, W)


def test_termwise_homogeneity(rng):
    for _ in range(50):
        s = tn.random_surface_state(rng)
        t = rng.uniform(0.2, 4.0)
        st_ = tn.SurfaceState(t * s.Fhat, s.N)
        wa = sf.surface_energy(s, sf.IsoPoly(1.0, 0.0))
        wg = sf.surface_energy(s, sf.IsoPoly(0.0, 1.0))
        assert sf.surface_energy(st_, sf.IsoPoly(1.0, 0.0)) == pytest.approx(t * wa, rel=1e-12)
        assert sf.surface_energy(st_, sf.IsoPoly(0.0, 1.0)) == pytest.approx(t * t * wg, rel=1e-12)


def test_isopoly_cauchy_psd(rng):
    m = sf.IsoPoly(0.8, 1.3)
    for _ in range(1000):
        s = tn.random_surface_state(rng)
        sig = sf.surface_stress_cauchy(s, m)
        n = tn.deformed_normal(s)
        B = np.linalg.svd(np.eye(3) - np.outer(n, n))[0][:, :2]
        assert np.linalg.eigvalsh(B.T @ sig @ B).min() >= -1e-12
        np.testing.assert_allclose(sig, sig.T, atol=1e-12)


def test_energy_non_negative(rng):
    for _ in range(100):
        s = tn.random_surface_state(rng)
        a = fiber_for(s, rng)
        for m in VARIANTS.values():
            assert sf.surface_energy(s, m, a) >= 0


# --- errors -----------------------------------------------------------------------------

def test_parameter_validation():
    with pytest.raises(InputError):
        sf.IsoPoly(-1.0, 0.0)
    with pytest.raises(InputError):
        sf.Fluid(float("nan"))
    with pytest.raises(InputError):
        sf.Ogden(terms=((1.0, 0.0),))


def test_missing_or_normal_fiber():
    s = tn.SurfaceState(IH, E3)
    with pytest.raises(InputError):
        sf.surface_energy(s, sf.Aniso(eta=1.0))
    with pytest.raises(InputError):
        sf.surface_energy(s, sf.Aniso(eta=1.0), E3)
    # isotropic Aniso needs no fiber
    assert sf.surface_energy(s, sf.Aniso(alpha=1.0)) == pytest.approx(np.sqrt(2))


def test_singular_states():
    zero = tn.SurfaceState(np.zeros((3, 3)), E3)
    with pytest.raises(SingularityError):
        sf.surface_stress_pk(zero, sf.IsoPoly(1.0, 0.0))
    rank1 = tn.SurfaceState(np.diag([1.0, 0, 0]), E3)
    with pytest.raises(SingularityError):
        sf.surface_stress_pk(rank1, sf.Fluid(1.0))


def test_material_from_dict_roundtrip():
    assert sf.material_from_dict({"model": "fluid", "gamma": 2.0}) == sf.Fluid(2.0)
    og = sf.material_from_dict({"model": "ogden", "terms": [[1.0, 2.0]], "gamma": 0.5})
    assert og == sf.Ogden(terms=((1.0, 2.0),), gamma=0.5)
    with pytest.raises(InputError):
        sf.material_from_dict({"model": "helfrich"})
