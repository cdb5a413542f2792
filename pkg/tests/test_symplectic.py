import numpy as np
import pytest
from hypothesis import given, strategies as st

from closedchar import settings
from closedchar import symplectic as sp
from closedchar.errors import NotSymplecticError, RangeError

from generators import n2_block, random_form, seeds


def test_standard_j_shape_and_square():
    J = sp.standard_j(2)
    assert J.shape == (4, 4)
    np.testing.assert_array_equal(J @ J, -np.eye(4))
    with pytest.raises(ValueError):
        J[0, 0] = 1.0


def test_half_dim_rejects_odd():
    with pytest.raises(ValueError):
        sp.half_dim(np.eye(3))


def test_check_symplectic_rejects_scaling():
    with pytest.raises(NotSymplecticError):
        sp.check_symplectic(2.0 * np.eye(2))


def test_diamond_layout():
    A = sp.rotation(0.3)
    B = np.diag([2.0, 0.5])
    M = sp.diamond(A, B)
    np.testing.assert_allclose(M[np.ix_([0, 2], [0, 2])], A)
    np.testing.assert_allclose(M[np.ix_([1, 3], [1, 3])], B)
    assert sp.is_symplectic(M)


@pytest.mark.parametrize("form, expected", [
    (sp.D(2.0), [[2.0, 0.0], [0.0, 0.5]]),
    (sp.N1(1.0, 1.0), [[1.0, 1.0], [0.0, 1.0]]),
    (sp.N1(-1.0, 0.0), [[-1.0, 0.0], [0.0, -1.0]]),
])
def test_realize_small_forms(form, expected):
    np.testing.assert_allclose(sp.realize(form), expected)


def test_r_form_is_rotation():
    M = sp.realize(sp.R(1.0))
    assert sp.is_symplectic(M)
    ev = np.linalg.eigvals(M)
    np.testing.assert_allclose(sorted(np.angle(ev)), [-1.0, 1.0], atol=1e-12)


@pytest.mark.parametrize("bad", [lambda: sp.D(3.0), lambda: sp.N1(1.0, 2.0), lambda: sp.R(np.pi),
                                 lambda: sp.R(0.0), lambda: sp.N2(1.0, [0.0, 1.0, 1.0, 0.0])])
def test_normal_form_ranges(bad):
    with pytest.raises(RangeError):
        bad()


def test_normal_form_roundtrip():
    f = sp.N2(1.2, n2_block(1.2, 0.1, 0.4))
    assert sp.BasicNormalForm.from_dict(f.to_dict()) == f
    assert sp.is_symplectic(sp.realize(f))


def test_nu_omega_jordan_block():
    M = sp.realize(sp.N1(1.0, 1.0))
    assert sp.nu_omega(M, 1.0) == 1
    assert sp.nu_omega(M, np.exp(1e-4j)) == 0
    assert sp.nu_omega(np.eye(4), 1.0) == 4


def test_nu_omega_off_circle_raises():
    with pytest.raises(RangeError):
        sp.nu_omega(np.eye(2), 2.0)


def test_d_omega_sign_on_rotation():
    M = sp.rotation(1.0)
    # D_omega vanishes exactly at the eigenvalues and is real on the circle
    assert abs(sp.d_omega(M, np.exp(1j))) < 1e-12
    assert sp.d_omega(M, 1.0) != 0.0


def test_eigen_clusters_merge_jordan_pairs():
    M = sp.realize_all([sp.N1(1.0, 1.0), sp.N1(1.0, -1.0)])
    cl = sp.eigen_clusters(M)
    assert len(cl) == 1
    assert cl[0].alg == 4 and cl[0].geom == 2 and cl[0].on_circle


def test_circle_spectrum_skips_hyperbolic():
    M = sp.realize_all([sp.D(2.0), sp.R(1.0)])
    spec = sp.circle_spectrum(M)
    assert len(spec) == 2
    assert all(abs(abs(e.value) - 1) < 1e-12 for e in spec)


def test_project_symplectic_repairs_drift():
    rng = np.random.default_rng(0)
    M = sp.random_symplectic(2, rng)
    noisy = M + 1e-7 * rng.normal(size=M.shape)
    P = sp.project_symplectic(noisy)
    assert sp.symplectic_defect(P) < 1e-12
    assert np.abs(P - M).max() < 1e-5


def test_matrix_json_roundtrip():
    M = sp.random_symplectic(2, 5)
    back = sp.matrix_from_json(sp.matrix_to_json(M))
    np.testing.assert_array_equal(back, M)


def test_hamiltonian_exp_is_symplectic():
    S = np.array([[2.0, 0.3], [0.3, 1.0]])
    assert sp.is_symplectic(sp.hamiltonian_exp(S, 0.7))


# -- properties

@given(seeds, st.integers(1, 3))
def test_products_and_inverses_stay_symplectic(seed, n):
    rng = np.random.default_rng(seed)
    A = sp.random_symplectic(n, rng)
    B = sp.random_symplectic(n, rng)
    assert sp.is_symplectic(A @ B, tol=1e-9)
    inv = sp.symplectic_inverse(A)
    np.testing.assert_allclose(inv @ A, np.eye(2 * n), atol=1e-9 * max(1, np.abs(A).max() ** 2))


@given(seeds)
def test_diamond_of_symplectic_is_symplectic(seed):
    rng = np.random.default_rng(seed)
    A = sp.random_symplectic(int(rng.integers(1, 3)), rng)
    B = sp.random_symplectic(int(rng.integers(1, 3)), rng)
    assert sp.is_symplectic(sp.diamond(A, B), tol=1e-9)


@given(seeds, st.floats(0.0, 2 * np.pi))
def test_nullity_is_additive_under_diamond(seed, angle):
    rng = np.random.default_rng(seed)
    f1, f2 = random_form(rng, allow_n2=True), random_form(rng, allow_n2=True)
    M1, M2 = sp.realize(f1), sp.realize(f2)
    eigs = list(np.linalg.eigvals(M1)) + list(np.linalg.eigvals(M2))
    candidates = [e / abs(e) for e in eigs if abs(abs(e) - 1) < 1e-9] + [np.exp(1j * angle)]
    for w in candidates:
        assert sp.nu_omega(sp.diamond(M1, M2), w) == sp.nu_omega(M1, w) + sp.nu_omega(M2, w)


@given(seeds)
def test_nullity_is_conjugation_invariant(seed):
    rng = np.random.default_rng(seed)
    f = random_form(rng)
    M = sp.realize_all([f, random_form(rng)])
    P = sp.random_symplectic(2, rng, scale=0.3)
    C = np.linalg.inv(P) @ M @ P
    for e in sp.circle_spectrum(M):
        assert sp.nu_omega(C, e.value) == sp.nu_omega(M, e.value)


@given(seeds)
def test_random_symplectic_has_unit_determinant(seed):
    M = sp.random_symplectic(3, seed)
    assert abs(np.linalg.det(M) - 1.0) < 1e-8 * max(1.0, np.abs(M).max() ** 6)
    settings.reset()
