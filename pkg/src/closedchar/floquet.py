"""Linearized flow along an orbit: monodromy, Floquet multipliers, stability.

The state and the fundamental matrix are integrated together, so the
Hessian is always evaluated on the integrated trajectory rather than on an
interpolant of stored samples.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from . import settings
from .errors import BasisError, IntegratorError, PreconditionError
from .geometry import HomogeneousHamiltonian, ScaledHamiltonian
from .index import rational_turn
from .orbits import ClosedCharacteristic
from .paths import SymplecticPath
from .symplectic import circle_spectrum, eigen_clusters, project_symplectic, symplectic_defect

PROJECT_EVERY = 32


def _time_scale(Hm, orbit):
    """``(c, P, rho)``: the path solves ``Xi' = c J H''(rho y(s)) Xi`` in Sigma-time
    ``s`` and has period ``P`` in its own time ``t = c s``."""
    if isinstance(Hm, HomogeneousHamiltonian):
        return 1.0 / Hm.alpha, orbit.tau / Hm.alpha, 1.0
    if isinstance(Hm, ScaledHamiltonian):
        from .orbits import rho_for_period
        rho = rho_for_period(Hm, orbit.tau)
        return 1.0 / orbit.tau, 1.0, rho
    raise TypeError("unsupported Hamiltonian model")


@dataclass
class MonodromyData:
    orbit: ClosedCharacteristic
    path: SymplecticPath
    model: object = field(repr=False)
    rho: float = 1.0
    warnings: list = field(default_factory=list)
    checks: Optional[dict] = None

    @property
    def matrix(self):
        return self.path.endpoint

    @property
    def multipliers(self):
        return eigen_clusters(self.matrix)

    @property
    def circle(self):
        return circle_spectrum(self.matrix)

    def to_json(self):
        out = {"matrix": self.matrix.tolist(),
               "multipliers": [[float(e.value.real), float(e.value.imag), int(e.alg), int(e.geom)]
                               for e in self.multipliers],
               "classification": classify(self).label,
               "warnings": list(self.warnings)}
        if self.checks is not None:
            out["tangent_checks"] = {k: float(v) for k, v in self.checks.items()}
        return out


def linearize(Hm, orbit: ClosedCharacteristic, samples=256) -> MonodromyData:
    """Fundamental solution of the linearized Hamiltonian flow along ``orbit``.

    For ``H = j^alpha`` the path lives on ``[0, tau/alpha]`` (the period of the
    ``H``-flow); for ``H = a phi(j)`` on ``[0, 1]`` along ``x(t) = rho y(tau t)``.
    Samples are projected back to Sp(2n) every ``PROJECT_EVERY`` samples, at
    the endpoint and whenever the defect exceeds ``tol_symp / 10``.
    """
    tol = settings.current()
    body = Hm.body
    n = body.n
    dim = 2 * n
    if orbit.residual > 1e-7:
        raise PreconditionError(f"orbit residual {orbit.residual:.3e} exceeds 1e-7")
    c, P, rho = _time_scale(Hm, orbit)

    def rhs(s, state):
        y = state[:dim]
        X = state[dim:].reshape(dim, dim)
        g = body.grad(y)
        H = Hm.evaluate(rho * y)[2]
        JH = np.vstack([-H[n:], H[:n]])
        return np.concatenate([-g[n:], g[:n], c * (JH @ X).ravel()])

    s_grid = np.linspace(0.0, orbit.tau, samples)
    sol = solve_ivp(rhs, (0.0, orbit.tau), np.concatenate([orbit.y0, np.eye(dim).ravel()]),
                    method="DOP853", rtol=1e-12, atol=1e-12, t_eval=s_grid)
    if not sol.success:
        raise IntegratorError(sol.message)
    mats = sol.y[dim:].T.reshape(samples, dim, dim).copy()
    mats[0] = np.eye(dim)
    for k in range(1, samples):
        if k % PROJECT_EVERY == 0 or k == samples - 1 or symplectic_defect(mats[k]) > tol.symp / 10:
            mats[k] = project_symplectic(mats[k])
        if symplectic_defect(mats[k]) > tol.symp:
            raise IntegratorError(f"symplectic drift {symplectic_defect(mats[k]):.3e} after projection")
    warnings = []
    y = sol.y[:dim, -1]
    drift = np.linalg.norm(y - orbit.y0) / max(1.0, np.linalg.norm(orbit.y0))
    if drift > 1e-7:
        warnings.append(f"trajectory closure drift {drift:.3e}")
    path = SymplecticPath(s_grid * (P / orbit.tau), mats)
    md = MonodromyData(orbit, path, Hm, rho, warnings)
    _check_forced_eigenvalue(md)
    return md


def _check_forced_eigenvalue(md):
    ones = [e for e in md.circle if abs(e.value - 1) < 1e-12]
    if not ones or ones[0].alg < 2:
        raise IntegratorError("monodromy lacks the double eigenvalue 1 of the orbit and energy directions")


def tangent_checks(md: MonodromyData, Hm=None, tol=1e-7):
    """Residuals of the orbit-direction and tangent-space identities of the monodromy.

    Checks ``R x' = x'``, that ``R`` maps the tangent space of ``Sigma`` at
    ``y(0)`` into itself, and that ``R x(0) = x(0) + gamma x'(0)`` with
    ``gamma < 0``.  The expected ``gamma`` is ``P (h'' rho - h') / h'`` for
    ``H = h(j)`` on the level ``rho`` with path period ``P``.

    Returns a dict of residuals and ``gamma``; raises ``BasisError`` if the
    basis ``(x, x', tangent complement)`` is ill-conditioned.
    """
    Hm = md.model if Hm is None else Hm
    body = Hm.body
    M = md.matrix
    rho = md.rho
    y0 = md.orbit.y0
    x0 = rho * y0
    grad = Hm.evaluate(x0, 1)[1]
    n = body.n
    xdot = np.concatenate([-grad[n:], grad[:n]])
    fixed = np.linalg.norm(M @ xdot - xdot) / np.linalg.norm(xdot)
    normal = body.grad(y0)
    dim = 2 * n
    Q, _ = np.linalg.qr(np.column_stack([normal, np.eye(dim)]))
    T = Q[:, 1:dim]
    inv = np.abs(normal @ M @ T).max() / (np.linalg.norm(normal) * max(1.0, np.abs(M @ T).max()))
    basis = np.column_stack([x0, xdot, _complement(np.column_stack([x0, xdot]))])
    if np.linalg.cond(basis) > 1e8:
        raise BasisError("orbit basis is ill-conditioned")
    w = M @ x0 - x0
    gamma = float(w @ xdot / (xdot @ xdot))
    shear_res = np.linalg.norm(w - gamma * xdot) / np.linalg.norm(x0)
    h1, h2 = _radial_derivatives(Hm, rho)
    period = md.path.tau
    expected = period * (h2 * rho - h1) / h1
    report = {"fixed_vector": fixed, "tangent_invariance": inv, "shear_residual": shear_res,
              "gamma": gamma, "gamma_expected": expected}
    md.checks = report
    return report


def tangent_checks_pass(report, tol=1e-7):
    rel = abs(report["gamma"] - report["gamma_expected"]) / max(1.0, abs(report["gamma_expected"]))
    return (report["fixed_vector"] <= tol and report["tangent_invariance"] <= tol
            and report["shear_residual"] <= tol and report["gamma"] < 0 and rel <= 1e-6)


def _complement(B):
    Q, _ = np.linalg.qr(np.column_stack([B, np.eye(B.shape[0])]))
    return Q[:, B.shape[1]:B.shape[0]]


def _radial_derivatives(Hm, rho):
    if isinstance(Hm, HomogeneousHamiltonian):
        a = Hm.alpha
        return a * rho ** (a - 1), a * (a - 1) * rho ** (a - 2)
    return Hm.a * Hm.phi.d1(rho), Hm.a * Hm.phi.d2(rho)


@dataclass(frozen=True)
class Classification:
    degenerate: bool
    kind: str                  # hyperbolic, elliptic, irrationally-elliptic, mixed
    marginal: tuple = ()

    @property
    def label(self):
        return ("degenerate" if self.degenerate else "non-degenerate") + "/" + self.kind

    @property
    def irrationally_elliptic(self):
        return self.kind == "irrationally-elliptic"


def classify(md) -> Classification:
    """Stability type of a monodromy matrix (or ``MonodromyData``)."""
    tol = settings.current()
    M = md.matrix if isinstance(md, MonodromyData) else np.asarray(md)
    clusters = eigen_clusters(M, tol)
    marginal = tuple(f"multiplier {e.value:.12g} within 100 tol_eig of the circle"
                     for e in clusters if tol.eig < abs(abs(e.value) - 1) <= 100 * tol.eig)
    one = [e for e in clusters if e.on_circle and abs(e.value - 1) < 1e-12]
    alg1 = one[0].alg if one else 0
    degenerate = alg1 != 2
    others = [e for e in clusters if not (e.on_circle and abs(e.value - 1) < 1e-12)]
    on = [e for e in others if e.on_circle]
    if len(on) == len(others):
        rational = any(rational_turn(np.angle(e.value) / (2 * np.pi) % 1.0) is not None for e in on)
        kind = "irrationally-elliptic" if not degenerate and not rational else "elliptic"
    elif not on:
        kind = "hyperbolic"
    else:
        kind = "mixed"
    return Classification(degenerate, kind, marginal)
