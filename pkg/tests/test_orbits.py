import numpy as np
import pytest
from hypothesis import given

from closedchar import geometry as g
from closedchar import orbits as o
from closedchar.errors import AmbiguityError, FamilyDegeneracyError

from generators import seeds


@pytest.fixture(scope="module")
def ellipsoid():
    return g.Ellipsoid([1.0, 1.37])


@pytest.fixture(scope="module")
def analytic(ellipsoid):
    return o.ellipsoid_orbits(ellipsoid, samples=128)


def test_ellipsoid_orbit_periods(ellipsoid, analytic):
    assert [orb.tau for orb in analytic] == pytest.approx([2 * np.pi * r ** 2 for r in ellipsoid.r])
    for orb in analytic:
        assert orb.residual < 1e-10
        assert orb.closure_error() < 1e-12


def test_rational_ratio_rejected():
    with pytest.raises(FamilyDegeneracyError):
        o.ellipsoid_orbits(g.Ellipsoid([1.0, np.sqrt(2.0)]))


def test_orbit_json_roundtrip(analytic):
    orb = analytic[1]
    back = o.ClosedCharacteristic.from_json(orb.to_json())
    assert back.tau == orb.tau
    np.testing.assert_array_equal(back.states, orb.states)
    assert back.source == "analytic"


def test_state_interpolation_is_spectral(ellipsoid, analytic):
    orb = analytic[0]
    t = np.array([0.123, 1.7, 5.0])
    exact = np.array([np.cos(2 * np.pi * s / orb.tau) for s in t])
    # the first orbit rotates in the (q1, p1) plane starting on the q1 axis
    assert np.allclose(np.abs(orb.state_at(t)[:, 0]), np.abs(exact) * ellipsoid.r[0], atol=1e-10)


def test_spectral_derivative_of_sine():
    t = np.linspace(0, 2.0, 64, endpoint=False)
    s = np.sin(np.pi * t)[:, None]
    d = o.spectral_derivative(s, 2.0)
    np.testing.assert_allclose(d[:, 0], np.pi * np.cos(np.pi * t), atol=1e-10)


def test_shooting_recovers_ellipsoid_orbit(ellipsoid, analytic):
    target = analytic[1]
    found = o.shoot(ellipsoid, target.y0 + 1e-7, 3 * target.tau, samples=128)
    assert found is not None
    assert found.tau == pytest.approx(target.tau, rel=1e-9)


def test_shooting_off_orbit_gives_none(ellipsoid):
    assert o.shoot(ellipsoid, np.array([1.0, 0.3, 0.2, 1.0]), 20.0, samples=64) is None


def test_shooting_on_perturbed_body():
    body = g.perturbed_ellipsoid([1.0, 1.37], 1e-3)
    orb = o.shoot(body, np.array([1.0, 0.0, 0.0, 0.0]), 30.0, samples=128)
    assert orb is not None
    assert orb.residual < 1e-7
    assert orb.tau == pytest.approx(2 * np.pi, rel=1e-2)


def test_shooting_seeds_lie_on_sigma(ellipsoid):
    pts = o.shooting_seeds(ellipsoid, k_random=5, seed=3)
    assert len(pts) == 4 + 5
    assert all(ellipsoid.gauge(p) == pytest.approx(1.0) for p in pts)


@given(seeds)
def test_fourier_loop_vector_roundtrip(seed):
    rng = np.random.default_rng(seed)
    loop = o.FourierLoop.zeros(5, 2)
    loop.coeffs[:] = rng.normal(size=loop.coeffs.shape) + 1j * rng.normal(size=loop.coeffs.shape)
    back = o.FourierLoop.from_vector(loop.vector(), 5, 2)
    np.testing.assert_allclose(back.coeffs, loop.coeffs)
    assert back.resized(8).resized(5).coeffs == pytest.approx(loop.coeffs)


def test_fourier_loop_has_mean_zero():
    rng = np.random.default_rng(1)
    loop = o.FourierLoop.zeros(4, 1)
    loop.coeffs[:] = rng.normal(size=loop.coeffs.shape)
    t = np.linspace(0, 1, 64, endpoint=False)
    assert np.abs(loop.evaluate(t).mean(axis=0)).max() < 1e-12


def test_dual_action_finds_both_orbits(ellipsoid, analytic):
    taus = [orb.tau for orb in analytic]
    a = 3 * max(taus)
    vt = 0.9 * min(min(taus), min(ellipsoid.r) ** 2) / a
    Hm, res = o.dual_action_orbits(ellipsoid, a, vartheta=vt, n_modes=16, samples=128)
    got = sorted(r.orbit.tau for r in res)
    assert got == pytest.approx(sorted(taus), rel=1e-8)
    assert all(r.psi < 0 for r in res)
    audit = o.monotonicity_audit(Hm, got)
    assert audit["violations"] == []


def test_dual_gradient_by_differences(ellipsoid):
    Hm = g.ScaledHamiltonian(ellipsoid, 30.0, g.build_phi(0.02, 1.5))
    da = o.DualAction(g.fenchel(Hm), 3)
    rng = np.random.default_rng(0)
    loop = o.seed_loop(ellipsoid, Hm, np.array([1.0, 0.0, 0.0, 0.0]), 3)
    c = loop.vector() + 0.05 * rng.normal(size=loop.vector().size)
    grad = da.gradient(c)[1]
    h = 1e-6
    e = np.zeros_like(c)
    for k in (0, 3, 7):
        e[:] = 0
        e[k] = h
        fd = (da.value(c + e) - da.value(c - e)) / (2 * h)
        assert grad[k] == pytest.approx(fd, rel=1e-5, abs=1e-7)


def test_deduplicate_records_iterates(ellipsoid, analytic):
    orb = analytic[0]
    twice = o.ClosedCharacteristic(2 * orb.tau, np.concatenate([orb.states[::2], orb.states[::2]]),
                                   "shooting", orb.states[0].copy(), 0.0)
    shifted = o.ClosedCharacteristic(orb.tau, np.roll(orb.states, 17, axis=0), "shooting",
                                     np.roll(orb.states, 17, axis=0)[0].copy(), 0.0)
    primes = o.deduplicate([twice, shifted, orb, analytic[1]])
    assert len(primes) == 2
    rep = [p for p in primes if p.tau == orb.tau][0]
    assert rep.source == "analytic"
    assert sorted(d["multiplicity"] for d in rep.iterates) == [1, 2]


def test_deduplicate_half_integer_ratio(analytic):
    orb = analytic[0]
    # same trajectory followed for one and a half turns
    t = np.linspace(0.0, 1.5 * orb.tau, 96, endpoint=False)
    fake = o.ClosedCharacteristic(1.5 * orb.tau, orb.state_at(t), "shooting", orb.states[0].copy(), 0.0)
    with pytest.raises(AmbiguityError):
        o.deduplicate([orb, fake])
