"""Closed characteristics on convex bodies, found analytically or numerically.

Orbits are stored as uniform samples of ``y(t)`` on ``[0, tau]`` solving
``y' = J N(y)`` on ``Sigma``.  Because the samples are periodic and uniform,
spectral interpolation and differentiation are exact up to truncation, which
is what the residual and the deduplication use.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.stats import qmc

from . import settings
from .errors import (AmbiguityError, FamilyDegeneracyError, IntegratorError, RangeError,
                     TrivialSolutionError)
from .geometry import ConvexBody, Ellipsoid, FenchelDual, ScaledHamiltonian, build_phi, fenchel

log = logging.getLogger(__name__)

SOURCE_RANK = {"analytic": 0, "shooting": 1, "dual-action": 2}


def _to_complex(x):
    n = x.shape[-1] // 2
    return x[..., :n] + 1j * x[..., n:]


def _to_real(z):
    return np.concatenate([z.real, z.imag], axis=-1)


def spectral_derivative(samples, period):
    """Derivative of uniformly sampled periodic data (samples along axis 0)."""
    K = samples.shape[0]
    k = np.fft.fftfreq(K, d=1.0 / K)
    if K % 2 == 0:
        k[K // 2] = 0.0
    c = np.fft.fft(samples, axis=0)
    return np.fft.ifft(c * (2j * np.pi * k / period)[:, None], axis=0).real


@dataclass
class ClosedCharacteristic:
    """A periodic solution ``(tau, y)`` of ``y' = J N(y)`` on ``Sigma``.

    ``states`` holds ``K`` uniform samples on ``[0, tau)``; the endpoint
    ``y(tau)`` is stored separately to keep the closure check honest.
    """
    tau: float
    states: np.ndarray
    source: str
    end_state: Optional[np.ndarray] = None
    residual: float = 0.0
    multiplicity: int = 1
    iterates: list = field(default_factory=list)

    @property
    def n(self):
        return self.states.shape[1] // 2

    @property
    def times(self):
        return np.arange(self.states.shape[0]) * (self.tau / self.states.shape[0])

    @property
    def y0(self):
        return self.states[0]

    def state_at(self, t):
        """Trigonometric interpolation of the trajectory at times ``t``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        K = self.states.shape[0]
        c = np.fft.fft(self.states, axis=0) / K
        k = np.fft.fftfreq(K, d=1.0 / K)
        E = np.exp(2j * np.pi * np.outer(t / self.tau, k))
        if K % 2 == 0:
            E[:, K // 2] = np.cos(np.pi * K * t / self.tau)
        return (E @ c).real

    def closure_error(self):
        end = self.end_state if self.end_state is not None else self.state_at(self.tau)[0]
        return float(np.linalg.norm(end - self.states[0]) / max(1.0, np.linalg.norm(self.states[0])))

    def compute_residual(self, body: ConvexBody):
        dy = spectral_derivative(self.states, self.tau)
        f = np.array([body.vector_field(y) for y in self.states])
        return float(np.abs(dy - f).max())

    def validate(self, body: ConvexBody, tol=None):
        tol = settings.current() if tol is None else tol
        jv = np.array([body.gauge(y) for y in self.states])
        if np.abs(jv - 1).max() > 1e-8:
            raise IntegratorError(f"trajectory leaves Sigma by {np.abs(jv - 1).max():.3e}")
        if self.closure_error() > tol.close_tol:
            raise IntegratorError(f"orbit does not close: {self.closure_error():.3e}")
        self.residual = self.compute_residual(body)
        if self.residual > 1e-7:
            raise IntegratorError(f"orbit residual {self.residual:.3e} exceeds 1e-7")
        return self

    def to_json(self):
        samples = [[float(t)] + y.tolist() for t, y in zip(self.times, self.states)]
        end = self.end_state if self.end_state is not None else self.states[0]
        samples.append([float(self.tau)] + np.asarray(end).tolist())
        return {"tau": float(self.tau), "samples": samples, "source": self.source,
                "residual": float(self.residual), "multiplicity": int(self.multiplicity),
                "iterates": [dict(d) for d in self.iterates]}

    @classmethod
    def from_json(cls, d):
        s = np.asarray(d["samples"], dtype=float)
        return cls(float(d["tau"]), s[:-1, 1:], d["source"], s[-1, 1:], float(d.get("residual", 0.0)),
                   int(d.get("multiplicity", 1)), list(d.get("iterates", [])))


# ---------------------------------------------------------------------------
# ellipsoids

def _check_irrational(r):
    s = settings.current()
    r2 = np.asarray(r, dtype=float) ** 2
    for j in range(len(r2)):
        for k in range(len(r2)):
            if j == k:
                continue
            ratio = r2[j] / r2[k]
            f = Fraction(ratio).limit_denominator(s.q_max)
            if abs(float(f) - ratio) <= s.rational_tol:
                raise FamilyDegeneracyError(
                    f"r_{j + 1}^2/r_{k + 1}^2 = {ratio:.12g} is close to {f}; orbits come in families")


def ellipsoid_orbits(body: Ellipsoid, samples=256):
    """The planar circular orbits of an ellipsoid, one per coordinate plane.

    Orbit ``j`` is ``r_j (cos(t/r_j^2) e_j + sin(t/r_j^2) e_{j+n})`` with
    period ``2 pi r_j^2``.
    """
    _check_irrational(body.r)
    n = body.n
    out = []
    for j, rj in enumerate(body.r):
        tau = 2 * np.pi * rj ** 2
        t = np.arange(samples) * (tau / samples)
        Y = np.zeros((samples, 2 * n))
        Y[:, j] = rj * np.cos(t / rj ** 2)
        Y[:, j + n] = rj * np.sin(t / rj ** 2)
        orb = ClosedCharacteristic(tau, Y, "analytic", Y[0].copy())
        orb.residual = orb.compute_residual(body)
        out.append(orb)
    return out


# ---------------------------------------------------------------------------
# shooting

def _flow_rhs(body):
    n = body.n

    def rhs(t, s):
        y = s[:2 * n]
        g = body.grad(y)
        return np.concatenate([-g[n:], g[:n]])
    return rhs


def _variational_rhs(body):
    n = body.n
    dim = 2 * n

    def rhs(t, s):
        y = s[:dim]
        Phi = s[dim:].reshape(dim, dim)
        g = body.grad(y)
        H = body.hess(y)
        JH = np.vstack([-H[n:], H[:n]])
        return np.concatenate([-g[n:], g[:n], (JH @ Phi).ravel()])
    return rhs


def _flow_with_stm(body, y0, T):
    dim = y0.size
    s0 = np.concatenate([y0, np.eye(dim).ravel()])
    sol = solve_ivp(_variational_rhs(body), (0.0, T), s0, method="DOP853", rtol=1e-12, atol=1e-12)
    if not sol.success:
        raise IntegratorError(sol.message)
    s = sol.y[:, -1]
    return s[:dim], s[dim:].reshape(dim, dim)


def _sample_orbit(body, y0, tau, samples):
    t = np.arange(samples + 1) * (tau / samples)
    sol = solve_ivp(_flow_rhs(body), (0.0, tau), y0, method="DOP853", rtol=1e-12, atol=1e-12,
                    t_eval=t)
    if not sol.success:
        raise IntegratorError(sol.message)
    Y = sol.y.T
    return Y[:-1], Y[-1]


def _newton_closure(body, x0, T, normal, anchor, maxiter=50, tol=1e-11):
    """Gauss-Newton on ``(phi_T(x) - x, n.(x - anchor), j(x) - 1)``."""
    dim = x0.size
    for it in range(maxiter):
        xT, Phi = _flow_with_stm(body, x0, T)
        r = np.concatenate([xT - x0, [normal @ (x0 - anchor), body.gauge(x0) - 1.0]])
        if np.linalg.norm(r) <= tol * max(1.0, np.linalg.norm(x0)):
            return x0, T, it
        A = np.zeros((dim + 2, dim + 1))
        A[:dim, :dim] = Phi - np.eye(dim)
        A[:dim, dim] = body.vector_field(xT)
        A[dim, :dim] = normal
        A[dim + 1, :dim] = body.grad(x0)
        step = np.linalg.lstsq(A, -r, rcond=1e-12)[0]
        cap = 0.1 * np.linalg.norm(x0)
        if np.linalg.norm(step[:dim]) > cap:
            step *= cap / np.linalg.norm(step[:dim])
        x0 = x0 + step[:dim]
        T = T + step[dim]
        if T <= 0:
            return None
    return None


def shoot(body: ConvexBody, seed, t_max: float, samples=256, capture=1e-2):
    """Search for a closed characteristic through (or near) ``seed``.

    Integrates the characteristic flow, records returns to the hyperplane
    through the seed transverse to the flow, and polishes the first return
    that comes back within ``capture * |seed|`` by Newton iteration on the
    return map.

    Returns
    -------
    ClosedCharacteristic or None
        ``None`` when no return closes within ``t_max`` or Newton stagnates.
    """
    y0 = body.project(np.asarray(seed, dtype=float))
    f0 = body.vector_field(y0)
    normal = f0 / np.linalg.norm(f0)
    scale = np.linalg.norm(y0)

    def section(t, s):
        return normal @ (s[:y0.size] - y0)
    section.direction = 1.0

    t_min = 1e-3 * scale / np.linalg.norm(f0)
    sol = solve_ivp(_flow_rhs(body), (0.0, t_max), y0, method="DOP853", rtol=1e-12, atol=1e-12,
                    events=section)
    if sol.status == -1:
        raise IntegratorError(sol.message)
    hits = [(t, y) for t, y in zip(sol.t_events[0], sol.y_events[0]) if t > t_min]
    for t_hit, y_hit in hits:
        if np.linalg.norm(y_hit - y0) > capture * scale:
            continue
        polished = _newton_closure(body, y0.copy(), float(t_hit), normal, y0)
        if polished is None:
            log.info("shooting from %s: Newton stagnated near t=%.6g", y0, t_hit)
            continue
        x, T, _ = polished
        if np.linalg.norm(x - y0) > 5 * capture * scale:
            continue
        Y, end = _sample_orbit(body, body.project(x), T, samples)
        orb = ClosedCharacteristic(float(T), Y, "shooting", end)
        try:
            return orb.validate(body)
        except IntegratorError as exc:
            log.info("shooting candidate rejected: %s", exc)
    log.info("shooting from %s: no closing return before t=%.6g (%d section hits)", y0, t_max, len(hits))
    return None


def shooting_seeds(body: ConvexBody, k_random=None, extra=(), seed=0):
    """Coordinate axes plus user and quasi-random seeds, all projected to ``Sigma``."""
    k_random = settings.current().k_random if k_random is None else k_random
    dim = 2 * body.n
    pts = [np.eye(dim)[i] for i in range(dim)]
    pts += [np.asarray(p, dtype=float) for p in extra]
    if k_random:
        u = qmc.Halton(d=dim, seed=seed).random(k_random)
        pts += list(2.0 * u - 1.0)
    return [body.project(p) for p in pts if np.linalg.norm(p) > 0]


def find_orbits_by_shooting(body, t_max, seeds=None, workers=1, samples=256):
    seeds = shooting_seeds(body) if seeds is None else seeds
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            found = list(ex.map(lambda s: shoot(body, s, t_max, samples), seeds))
    else:
        found = [shoot(body, s, t_max, samples) for s in seeds]
    return [o for o in found if o is not None]


# ---------------------------------------------------------------------------
# dual action

@dataclass
class FourierLoop:
    """Mean-zero loop ``u(t) = sum_{0<|k|<=N} exp(2 pi k J t) x_k``.

    With ``z = q + i p`` the rotation ``exp(s J)`` is multiplication by
    ``exp(i s)``, so coefficients are stored as complex ``(2N, n)`` arrays for
    ``k = -N..-1, 1..N``.
    """
    coeffs: np.ndarray

    @property
    def n_modes(self):
        return self.coeffs.shape[0] // 2

    @property
    def n(self):
        return self.coeffs.shape[1]

    @property
    def ks(self):
        N = self.n_modes
        return np.concatenate([np.arange(-N, 0), np.arange(1, N + 1)])

    @classmethod
    def zeros(cls, n_modes, n):
        return cls(np.zeros((2 * n_modes, n), dtype=complex))

    def vector(self):
        return np.concatenate([self.coeffs.real.ravel(), self.coeffs.imag.ravel()])

    @classmethod
    def from_vector(cls, v, n_modes, n):
        h = v.size // 2
        return cls((v[:h] + 1j * v[h:]).reshape(2 * n_modes, n))

    def coefficient(self, k):
        """Real coefficient ``x_k`` in ``R^{2n}``."""
        N = self.n_modes
        idx = k + N if k < 0 else k + N - 1
        return _to_real(self.coeffs[idx])

    def evaluate(self, t):
        t = np.atleast_1d(t)
        E = np.exp(2j * np.pi * np.outer(t, self.ks))
        return _to_real(E @ self.coeffs)

    def integrate(self, t):
        """``M u``: the mean-zero antiderivative."""
        t = np.atleast_1d(t)
        E = np.exp(2j * np.pi * np.outer(t, self.ks))
        return _to_real(E @ (self.coeffs / (2j * np.pi * self.ks)[:, None]))

    def resized(self, n_modes):
        out = FourierLoop.zeros(n_modes, self.n)
        for k in self.ks:
            if abs(k) <= n_modes:
                src = k + self.n_modes if k < 0 else k + self.n_modes - 1
                dst = k + n_modes if k < 0 else k + n_modes - 1
                out.coeffs[dst] = self.coeffs[src]
        return out


class DualAction:
    """Discretized ``Psi(u) = int 1/2 Ju.Mu + G(-Ju)`` on a FourierLoop space.

    The quadrature uses ``L = 4N`` uniform nodes.  Parameters are the real
    vector of ``FourierLoop.vector``; the map to samples of ``v = -Ju`` is the
    dense real matrix ``A``.
    """

    def __init__(self, dual: FenchelDual, n_modes, nodes=None):
        self.dual = dual
        self.n = dual.body.n
        self.N = n_modes
        self.L = 4 * n_modes if nodes is None else nodes
        n, N, L = self.n, self.N, self.L
        ks = np.concatenate([np.arange(-N, 0), np.arange(1, N + 1)])
        t = np.arange(L) / L
        E = np.exp(2j * np.pi * np.outer(t, ks))          # (L, 2N)
        # v = -J u corresponds to -i U in complex form
        P = 2 * N * n
        A = np.zeros((L, 2 * n, 2 * P))
        for m in range(2 * N):
            for c in range(n):
                col = m * n + c
                # real part coefficient: dU = E ; imaginary: dU = i E
                for part, factor in ((0, 1.0), (1, 1j)):
                    dV = -1j * factor * E[:, m]
                    A[:, c, col + part * P] = dV.real
                    A[:, c + n, col + part * P] = dV.imag
        self.A = A.reshape(L * 2 * n, 2 * P)
        w = np.repeat(-1.0 / (2 * np.pi * ks), n)
        self.Q = np.diag(np.concatenate([w, w]))
        self.ks = ks

    def samples(self, c):
        return (self.A @ c).reshape(self.L, 2 * self.n)

    def value(self, c):
        V = self.samples(c)
        return 0.5 * c @ self.Q @ c + np.mean([self.dual.value(v) for v in V])

    def gradient(self, c, order=1):
        V = self.samples(c)
        vals, grads, hess = [], [], []
        for v in V:
            g0, g1, g2 = self.dual.evaluate(v, order)
            vals.append(g0)
            grads.append(g1)
            hess.append(g2)
        val = 0.5 * c @ self.Q @ c + np.mean(vals)
        grad = self.Q @ c + self.A.T @ np.concatenate(grads) / self.L
        if order < 2:
            return val, grad, None
        B = np.asarray(hess)                                     # (L, 2n, 2n)
        A3 = self.A.reshape(self.L, 2 * self.n, -1)
        BA = np.einsum("lij,ljp->lip", B, A3).reshape(self.A.shape)
        return val, grad, self.Q + self.A.T @ BA / self.L


@dataclass
class DualActionResult:
    loop: FourierLoop
    orbit: ClosedCharacteristic
    psi: float
    rho: float
    iterations: int
    gradient_norm: float


def dual_action(Hm: ScaledHamiltonian, loop0: FourierLoop, maxiter=100, descent_steps=0,
                tol=1e-10, samples=256):
    """Critical point of the dual action near ``loop0``.

    An optional Armijo descent phase is followed by Newton iteration on the
    gradient with a backtracking search on ``|grad|^2``; least squares
    handles the time-shift degeneracy.  The loop is turned into a closed
    characteristic through ``x = G'(-Ju)``, ``rho = j(x)`` and
    ``tau = a phi'(rho) / rho``.

    Returns
    -------
    DualActionResult or None
        ``None`` if the iteration fails to reach ``tol``.

    Raises
    ------
    TrivialSolutionError
        If the iteration collapses to the zero loop.
    """
    if loop0.n_modes < 8:
        raise RangeError("need at least 8 Fourier modes")
    dual = fenchel(Hm)
    F = DualAction(dual, loop0.n_modes)
    c = loop0.vector()
    val, grad, H = F.gradient(c, 2)
    for _ in range(descent_steps):
        step = 1.0
        while step > 1e-12:
            trial = c - step * grad
            tv = F.value(trial)
            if tv <= val - 1e-4 * step * grad @ grad:
                c = trial
                break
            step *= 0.5
        val, grad, H = F.gradient(c, 2)
    it = 0
    for it in range(maxiter):
        gn = np.linalg.norm(grad)
        if gn <= tol:
            break
        if np.linalg.norm(c) < 1e-8:
            raise TrivialSolutionError("dual action iteration collapsed to the zero loop")
        d = np.linalg.lstsq(H, -grad, rcond=1e-12)[0]
        step = 1.0
        while step > 1e-10:
            trial = c + step * d
            tv, tg, tH = F.gradient(trial, 2)
            if np.linalg.norm(tg) < (1 - 1e-4 * step) * gn:
                break
            step *= 0.5
        else:
            log.info("dual action line search failed at |grad|=%.3e", gn)
            return None
        c, val, grad, H = trial, tv, tg, tH
    gn = np.linalg.norm(grad)
    if gn > tol:
        return None
    if np.linalg.norm(c) < 1e-8:
        raise TrivialSolutionError("dual action converged to the zero loop")
    loop = FourierLoop.from_vector(c, loop0.n_modes, loop0.n)
    orbit, rho = _reconstruct(Hm, dual, loop, samples)
    return DualActionResult(loop, orbit, float(val), rho, it, float(gn))


def _reconstruct(Hm, dual, loop, samples):
    body = Hm.body
    t = np.arange(samples) / samples
    U = loop.evaluate(t)
    n = loop.n
    V = np.concatenate([U[:, n:], -U[:, :n]], axis=1)           # -J u
    X = np.array([dual.grad(v) for v in V])
    rhos = np.array([body.gauge(x) for x in X])
    rho = float(np.mean(rhos))
    if rho < 1e-8:
        raise TrivialSolutionError("reconstructed loop is the origin")
    if np.abs(rhos - rho).max() > 1e-7 * rho:
        log.info("dual action loop: gauge varies by %.3e", np.abs(rhos - rho).max())
    tau = Hm.a * Hm.phi.d1(rho) / rho
    Y = X / rhos[:, None]
    orb = ClosedCharacteristic(float(tau), Y, "dual-action", Y[0].copy())
    orb.residual = orb.compute_residual(body)
    return orb, rho


def action_value(Hm: ScaledHamiltonian, rho):
    """Critical value ``1/2 a phi'(rho) rho - a phi(rho)`` of a loop on level ``rho``."""
    return 0.5 * Hm.a * Hm.phi.d1(rho) * rho - Hm.a * Hm.phi(rho)


def rho_for_period(Hm: ScaledHamiltonian, tau):
    """Level ``rho`` with ``a phi'(rho)/rho = tau`` (``phi'(t)/t`` decreases)."""
    from scipy.optimize import brentq
    target = tau / Hm.a
    phi = Hm.phi
    if not phi.slope_limit() < target < 1.0:
        raise RangeError(f"period {tau} is not realizable for a={Hm.a}")
    lo, hi = 1e-9, 1.0
    while phi.d1(hi) / hi > target:
        hi *= 2
    return brentq(lambda r: phi.d1(r) / r - target, lo, hi, xtol=1e-15, rtol=1e-15)


def seed_loop(body: ConvexBody, Hm: ScaledHamiltonian, point, n_modes):
    """Single-mode loop through ``point`` guessed from the local rotation rate.

    The period is estimated as that of the circle with the local speed of
    the characteristic flow, then the level is chosen to match it.
    """
    y = body.project(np.asarray(point, dtype=float))
    f = body.vector_field(y)
    tau_guess = 2 * np.pi * np.linalg.norm(y) / np.linalg.norm(f)
    rho = rho_for_period(Hm, tau_guess)
    # x(t) = rho y_c(t) on a circle through y in the plane of (y, f): x = rho(y cos + f' sin)
    e2 = f / np.linalg.norm(f) * np.linalg.norm(y)
    loop = FourierLoop.zeros(n_modes, body.n)
    zy, ze = _to_complex(y), _to_complex(e2)
    # y cos(2 pi t) + e2 sin(2 pi t), differentiated: u = 2 pi (-y sin + e2 cos)
    a_pos = rho * 2 * np.pi * 0.5 * (ze + 1j * zy)             # coefficient of exp(+2 pi i t)
    a_neg = rho * 2 * np.pi * 0.5 * (ze - 1j * zy)             # coefficient of exp(-2 pi i t)
    N = n_modes
    loop.coeffs[N] = a_pos
    loop.coeffs[N - 1] = a_neg
    return loop


def dual_action_orbits(body: ConvexBody, a, phi=None, points=None, n_modes=None, certify=True,
                       workers=1, alpha=1.5, vartheta=None, samples=256):
    """Run the dual action solver from coordinate-plane seeds.

    Parameters
    ----------
    a : float
        Must exceed every target period.
    phi : PhiFunction, optional
        Built from ``vartheta`` and ``alpha`` when omitted.
    """
    n_modes = settings.current().n_modes if n_modes is None else n_modes
    if phi is None:
        if vartheta is None:
            raise ValueError("either phi or vartheta is required")
        phi = build_phi(vartheta, alpha)
    Hm = ScaledHamiltonian(body, a, phi)
    dim = 2 * body.n
    points = [np.eye(dim)[i] for i in range(body.n)] if points is None else points

    def run(p):
        try:
            res = dual_action(Hm, seed_loop(body, Hm, p, n_modes), samples=samples)
        except (TrivialSolutionError, RangeError) as exc:
            log.info("dual action from %s: %s", p, exc)
            return None
        if res is None:
            return None
        if certify:
            res2 = dual_action(Hm, res.loop.resized(2 * n_modes), samples=samples)
            if res2 is None or abs(res2.orbit.tau - res.orbit.tau) > 1e-8 * res.orbit.tau:
                log.info("dual action orbit not certified under mode doubling")
                return None
        return res

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(run, points))
    else:
        results = [run(p) for p in points]
    return Hm, [r for r in results if r is not None]


def monotonicity_audit(Hm: ScaledHamiltonian, taus, factors=(1.0, 1.5, 2.0)):
    """Check that critical values increase with the period and decrease with ``a``.

    Returns a dict with the value table and a list of violations.
    """
    taus = sorted(float(t) for t in taus)
    table = {}
    violations = []
    for f in factors:
        H2 = ScaledHamiltonian(Hm.body, Hm.a * f, Hm.phi)
        row = []
        for t in taus:
            rho = rho_for_period(H2, t)
            row.append(action_value(H2, rho))
        table[f] = row
        if any(b <= a for a, b in zip(row, row[1:])):
            violations.append(f"not increasing in tau at a*{f}")
        if any(v >= 0 for v in row):
            violations.append(f"non-negative critical value at a*{f}")
    for i in range(len(taus)):
        col = [table[f][i] for f in factors]
        if any(b >= a for a, b in zip(col, col[1:])):
            violations.append(f"not decreasing in a at tau={taus[i]:.6g}")
    return {"taus": taus, "values": {str(k): v for k, v in table.items()}, "violations": violations}


# ---------------------------------------------------------------------------
# deduplication

def _align_distance(a: ClosedCharacteristic, b: ClosedCharacteristic):
    """Max distance between ``b(t)`` and ``a(s + t)`` after choosing the best shift ``s``."""
    p = b.states[0]
    fine = np.linspace(0.0, a.tau, 8 * a.states.shape[0], endpoint=False)
    pts = a.state_at(fine)
    k = int(np.argmin(np.linalg.norm(pts - p, axis=1)))
    s = fine[k]
    h = fine[1] - fine[0]
    # refine the shift by golden-section search on the distance
    from scipy.optimize import minimize_scalar
    res = minimize_scalar(lambda x: np.linalg.norm(a.state_at(x)[0] - p), bounds=(s - h, s + h),
                          method="bounded", options={"xatol": 1e-14 * max(1.0, a.tau)})
    s = res.x
    tb = b.times
    diff = a.state_at(s + tb) - b.states
    return float(np.abs(diff).max())


def deduplicate(orbits):
    """Merge orbits with the same point set.

    The representative of each group has the smallest period, analytic
    sources preferred among equal periods; the others are recorded on it as
    iterates with their multiplicity.
    """
    tol = settings.current()
    order = sorted(orbits, key=lambda o: (o.tau, SOURCE_RANK.get(o.source, 9)))
    groups = []
    for orb in order:
        diam = 2 * np.abs(orb.states).max()
        for grp in groups:
            base = grp[0][0]
            if _align_distance(base, orb) > tol.dedup * max(1.0, diam):
                continue
            ratio = orb.tau / base.tau
            k = round(ratio)
            if abs(ratio - (np.floor(ratio) + 0.5)) <= 1e-6:
                raise AmbiguityError(f"period ratio {ratio!r} is a half-integer")
            if abs(ratio - k) > 1e-6 * max(1.0, ratio):
                raise AmbiguityError(f"period ratio {ratio!r} is not an integer")
            grp.append((orb, int(k)))
            break
        else:
            groups.append([(orb, 1)])
    primes = []
    for grp in groups:
        rep = min((o for o, k in grp if k == 1), key=lambda o: (SOURCE_RANK.get(o.source, 9), o.tau))
        rep.multiplicity = 1
        rep.iterates = [{"source": o.source, "multiplicity": k, "tau": float(o.tau)}
                        for o, k in grp if o is not rep]
        primes.append(rep)
    return primes
