import numpy as np
import pytest

from closedchar import floquet as f
from closedchar import geometry as g
from closedchar import index as ix
from closedchar import symplectic as sp
from closedchar.errors import PreconditionError
from closedchar.orbits import ClosedCharacteristic, ellipsoid_orbits

R = [1.0, 1.29, 1.61]


@pytest.fixture(scope="module")
def body():
    return g.Ellipsoid(R)


@pytest.fixture(scope="module")
def monodromies(body):
    Hm = g.HomogeneousHamiltonian(body, 1.5)
    return [f.linearize(Hm, orb, 96) for orb in ellipsoid_orbits(body, samples=64)]


def ellipsoid_index(j, m, r):
    n = len(r)
    return 2 * m - 1 + (n - 1) + 2 * sum(int(np.floor(m * r[j] ** 2 / r[k] ** 2)) for k in range(n) if k != j)


def test_monodromy_is_symplectic_with_double_one(monodromies):
    for md in monodromies:
        assert sp.symplectic_defect(md.matrix) < 1e-10
        ones = [e for e in md.circle if abs(e.value - 1) < 1e-9]
        assert ones and ones[0].alg >= 2


def test_path_period_is_tau_over_alpha(monodromies):
    for md in monodromies:
        assert md.path.tau == pytest.approx(md.orbit.tau / 1.5)


def test_multipliers_match_rotation_ratios(monodromies):
    # the multipliers of the j-th orbit turn by 2 pi r_j^2 / r_k^2
    for j, md in enumerate(monodromies):
        turns = sorted(np.angle(e.value) % (2 * np.pi) for e in md.circle if abs(e.value - 1) > 1e-6)
        expected = sorted(ang for k in range(3) if k != j
                          for ang in ((2 * np.pi * R[j] ** 2 / R[k] ** 2) % (2 * np.pi),
                                      (-2 * np.pi * R[j] ** 2 / R[k] ** 2) % (2 * np.pi)))
        assert turns == pytest.approx(expected, abs=1e-8)


def test_tangent_checks(monodromies):
    for md in monodromies:
        rep = f.tangent_checks(md)
        assert f.tangent_checks_pass(rep)
        assert rep["gamma"] < 0
        assert rep["gamma"] == pytest.approx(md.path.tau * (1.5 - 2) , rel=1e-6)


def test_classification(monodromies):
    for md in monodromies:
        c = f.classify(md)
        assert c.label == "non-degenerate/irrationally-elliptic"
        assert c.irrationally_elliptic


def test_classify_matrices():
    M = sp.realize_all([sp.N1(1.0, 1.0), sp.D(2.0)])
    c = f.classify(M)
    assert c.kind == "hyperbolic" and not c.degenerate
    M = sp.realize_all([sp.N1(1.0, 1.0), sp.R(2 * np.pi / 3)])
    assert f.classify(M).kind == "elliptic"
    M = sp.realize_all([sp.N1(1.0, 1.0), sp.R(1.0), sp.D(-2.0)])
    assert f.classify(M).kind == "mixed"
    assert f.classify(np.eye(4)).degenerate


def test_profiles_match_closed_form(monodromies):
    for j, md in enumerate(monodromies):
        prof = ix.iteration_profile(md.path, 5, direct_max=3)
        assert [i for _, i, _ in prof.table] == [ellipsoid_index(j, m, R) for m in range(1, 6)]
        assert all(nu == 1 for _, _, nu in prof.table)
        mean = 2 * sum(R[j] ** 2 / R[k] ** 2 for k in range(3))
        assert prof.mean_index == pytest.approx(mean, abs=1e-9)


def test_scaled_model_agrees_with_homogeneous():
    E = g.Ellipsoid([1.0, 1.3])
    orb = ellipsoid_orbits(E, samples=64)[1]
    Hs = g.ScaledHamiltonian(E, 3 * orb.tau, g.build_phi(0.05, 1.5))
    md = f.linearize(Hs, orb, 96)
    rep = f.tangent_checks(md)
    assert f.tangent_checks_pass(rep)
    prof = ix.iteration_profile(md.path, 4, direct_max=2)
    assert [i for _, i, _ in prof.table] == [4, 10, 16, 20]


def test_linearize_rejects_bad_orbit(body):
    orb = ellipsoid_orbits(body, samples=64)[0]
    bad = ClosedCharacteristic(orb.tau, orb.states, "analytic", orb.end_state, residual=1e-3)
    with pytest.raises(PreconditionError):
        f.linearize(g.HomogeneousHamiltonian(body, 1.5), bad, 64)


def test_monodromy_json(monodromies):
    d = monodromies[0].to_json()
    assert d["classification"].startswith("non-degenerate")
    assert len(d["matrix"]) == 6
