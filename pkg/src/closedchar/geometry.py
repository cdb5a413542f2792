"""Convex bodies given by gauge functions, and the Hamiltonians built on them.

A body is described by its gauge ``j``: positively 1-homogeneous with
``Sigma = j^{-1}(1)``.  On ``Sigma`` the gradient ``j'(y)`` is the outward
normal scaled so that ``j'(y) . y = 1``.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .errors import (DualDomainError, InfeasibleParametersError, InvariantViolationError,
                     RangeError, SingularPointError)


class ConvexBody:
    """Base class; subclasses provide the gauge with its first two derivatives."""

    n: int

    def gauge(self, x):
        raise NotImplementedError

    def grad(self, x):
        raise NotImplementedError

    def hess(self, x):
        raise NotImplementedError

    def normal(self, y):
        """``N_Sigma(y) = j'(y)``; equal to the normalized normal on ``Sigma``."""
        return self.grad(y)

    def project(self, x):
        """Radial projection ``x / j(x)`` onto ``Sigma``."""
        x = np.asarray(x, dtype=float)
        return x / self.gauge(x)

    def vector_field(self, y):
        """Right-hand side ``J N_Sigma(y)`` of the characteristic flow."""
        g = self.grad(y)
        n = self.n
        return np.concatenate([-g[n:], g[:n]])

    def to_json(self):
        raise NotImplementedError


class Ellipsoid(ConvexBody):
    """``j(x) = sqrt(sum_k (q_k^2 + p_k^2) / r_k^2)`` with semi-axes ``r``."""

    def __init__(self, r):
        r = np.asarray(r, dtype=float).ravel()
        if r.size == 0 or np.any(~np.isfinite(r)) or np.any(r <= 0):
            raise RangeError("semi-axes must be positive")
        self.r = r
        self.n = r.size
        self.d = np.concatenate([1.0 / r ** 2, 1.0 / r ** 2])

    def __repr__(self):
        return f"Ellipsoid(r={self.r.tolist()})"

    def gauge(self, x):
        x = np.asarray(x, dtype=float)
        return np.sqrt(np.sum(self.d * x * x, axis=-1))

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        j = self.gauge(x)
        if np.any(j == 0):
            raise SingularPointError("gauge gradient undefined at the origin")
        return self.d * x / np.expand_dims(j, -1)

    def hess(self, x):
        x = np.asarray(x, dtype=float)
        j = self.gauge(x)
        if j == 0:
            raise SingularPointError("gauge Hessian undefined at the origin")
        dx = self.d * x
        return (np.diag(self.d) - np.outer(dx, dx) / j ** 2) / j

    def support_point(self, y):
        """``(xi, lam)`` with ``xi`` on ``Sigma`` and ``y = lam j'(xi)``."""
        y = np.asarray(y, dtype=float)
        lam = np.sqrt(np.sum(y * y / self.d))
        if lam == 0:
            raise DualDomainError("y = 0 has no supporting point")
        return y / self.d / lam, lam

    def to_json(self):
        return {"type": "ellipsoid", "r": self.r.tolist()}


class GenericBody(ConvexBody):
    """Body ``Sigma = F^{-1}(1)`` for a smooth strictly convex ``F`` with ``F(0) < 1``.

    The gauge solves ``F(x / j) = 1`` by Newton iteration; ``j'`` and ``j''``
    follow by implicit differentiation.
    """

    def __init__(self, n, F: Callable, dF: Callable, d2F: Callable, spec=None):
        self.n = int(n)
        self.F, self.dF, self.d2F = F, dF, d2F
        self._spec = spec
        if not self.F(np.zeros(2 * self.n)) < 1.0:
            raise RangeError("the origin must lie inside the body (F(0) < 1)")

    def __repr__(self):
        return f"GenericBody(n={self.n})"

    def gauge(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim > 1:
            return np.array([self.gauge(v) for v in x])
        nx = np.linalg.norm(x)
        if nx == 0:
            return 0.0
        u = x / nx
        # s = 1/j along the ray; F(s u) - 1 is increasing in s beyond the origin
        lo, hi = 0.0, 1.0
        while self.F(hi * u) < 1.0:
            lo, hi = hi, 2 * hi
            if hi > 1e12:
                raise DualDomainError("ray does not leave the body")
        s = 0.5 * (lo + hi)
        for _ in range(100):
            f = self.F(s * u) - 1.0
            df = self.dF(s * u) @ u
            step = f / df if df > 0 else np.inf
            s_new = s - step
            if not lo < s_new < hi:
                if f > 0:
                    hi = s
                else:
                    lo = s
                s_new = 0.5 * (lo + hi)
            elif f > 0:
                hi = s
            else:
                lo = s
            if abs(s_new - s) <= 1e-14 * s:
                s = s_new
                break
            s = s_new
        return nx / s

    def _surface(self, x):
        j = self.gauge(x)
        if j == 0:
            raise SingularPointError("gauge derivatives undefined at the origin")
        y = x / j
        g = self.dF(y)
        return j, y, g, float(g @ y)

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim > 1:
            return np.array([self.grad(v) for v in x])
        _, _, g, gy = self._surface(x)
        return g / gy

    def hess(self, x):
        x = np.asarray(x, dtype=float)
        j, y, g, gy = self._surface(x)
        G = self.d2F(y)
        N = g / gy
        dN = (G * gy - np.outer(g, G @ y + g)) / gy ** 2
        P = np.eye(2 * self.n) - np.outer(y, N)
        return dN @ P / j

    def support_point(self, y, tol=1e-12, maxiter=60):
        """Solve ``lam j'(xi) = y``, ``j(xi) = 1`` by bordered Newton iteration."""
        y = np.asarray(y, dtype=float)
        if not np.linalg.norm(y) > 0:
            raise DualDomainError("y = 0 has no supporting point")
        xi = self.project(y)
        lam = float(xi @ y)
        dim = 2 * self.n
        for _ in range(maxiter):
            g = self.grad(xi)
            r = np.concatenate([lam * g - y, [self.gauge(xi) - 1.0]])
            if np.linalg.norm(r) <= tol * max(1.0, np.linalg.norm(y)):
                return xi, lam
            A = np.zeros((dim + 1, dim + 1))
            A[:dim, :dim] = lam * self.hess(xi)
            A[:dim, dim] = g
            A[dim, :dim] = g
            step = np.linalg.solve(A, -r)
            t = 1.0
            while lam + t * step[dim] <= 0 and t > 1e-8:
                t *= 0.5
            xi = self.project(xi + t * step[:dim])
            lam = lam + t * step[dim]
        raise DualDomainError("support point iteration did not converge")

    def to_json(self):
        if self._spec is None:
            raise ValueError("body has no serializable specification")
        return self._spec


def polynomial_body(n, terms):
    """Generic body from a polynomial defining function.

    Parameters
    ----------
    terms : list of ``[coef, [e_1, ..., e_2n]]``
        Monomials ``coef * prod x_i^{e_i}`` of total degree at most 4.
    """
    dim = 2 * n
    coefs = np.array([float(t[0]) for t in terms])
    exps = np.array([list(map(int, t[1])) for t in terms], dtype=int).reshape(len(terms), -1)
    if exps.shape[1] != dim:
        raise RangeError(f"exponent vectors must have length {dim}")
    if np.any(exps < 0) or np.any(exps.sum(axis=1) > 4):
        raise RangeError("monomials must have nonnegative exponents and degree <= 4")

    def mono(x, e):
        return np.prod(np.where(e > 0, x ** np.maximum(e, 0), 1.0), axis=-1)

    def F(x):
        return float(coefs @ mono(x[None, :], exps))

    def dF(x):
        out = np.zeros(dim)
        for i in range(dim):
            e = exps.copy()
            c = coefs * e[:, i]
            e[:, i] = np.maximum(e[:, i] - 1, 0)
            out[i] = c @ mono(x[None, :], e)
        return out

    def d2F(x):
        out = np.zeros((dim, dim))
        for i in range(dim):
            for k in range(i, dim):
                e = exps.copy()
                c = coefs * e[:, i]
                e[:, i] = np.maximum(e[:, i] - 1, 0)
                c = c * e[:, k]
                e[:, k] = np.maximum(e[:, k] - 1, 0)
                out[i, k] = out[k, i] = c @ mono(x[None, :], e)
        return out

    spec = {"type": "generic", "n": n, "coeffs": [[float(c), list(map(int, e))] for c, e in zip(coefs, exps)]}
    return GenericBody(n, F, dF, d2F, spec)


def perturbed_ellipsoid(r, eps, quartic=None):
    """``F = sum (q^2 + p^2)/r^2 + eps * quartic`` with ``quartic = |x|^4`` by default."""
    r = np.asarray(r, dtype=float)
    n = r.size
    dim = 2 * n
    terms = []
    for k in range(n):
        for i in (k, k + n):
            e = [0] * dim
            e[i] = 2
            terms.append([1.0 / r[k] ** 2, e])
    if quartic is None:
        for i in range(dim):
            for k in range(i, dim):
                e = [0] * dim
                e[i] += 2
                e[k] += 2
                terms.append([eps * (1.0 if i == k else 2.0), e])
    else:
        terms += [[eps * c, list(e)] for c, e in quartic]
    return polynomial_body(n, terms)


def body_from_json(spec):
    """Build a body from ``{"type": "ellipsoid", "r": [...]}`` or a generic polynomial description."""
    if not isinstance(spec, dict) or "type" not in spec:
        raise KeyError("type")
    kind = spec["type"]
    if kind == "ellipsoid":
        if "r" not in spec:
            raise KeyError("r")
        return Ellipsoid(spec["r"])
    if kind == "generic":
        for key in ("n", "coeffs"):
            if key not in spec:
                raise KeyError(key)
        return polynomial_body(int(spec["n"]), spec["coeffs"])
    raise ValueError(f"unknown body type {kind!r}")


def check_body(body: ConvexBody, rng=None, directions=200, radii=(0.5, 1.0, 2.0), tol=1e-9):
    """Sampled checks of homogeneity and strict convexity, Euler identity included.

    Returns the smallest restricted Hessian eigenvalue seen on ``Sigma``.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    dim = 2 * body.n
    U = rng.standard_normal((directions, dim))
    worst = np.inf
    for u in U:
        y = body.project(u)
        g = body.grad(y)
        if abs(g @ y - 1.0) > tol * 10:
            raise InvariantViolationError("Euler identity fails on Sigma")
        for s in radii:
            if abs(body.gauge(s * y) - s) > tol * s:
                raise InvariantViolationError("gauge is not positively homogeneous")
        H = body.hess(y)
        if np.abs(H @ y).max() > 1e-7 * max(1.0, np.abs(H).max()):
            raise InvariantViolationError("j''(y) y does not vanish")
        # restrict to the tangent space g^perp
        Q, _ = np.linalg.qr(np.column_stack([g, rng.standard_normal((dim, dim - 1))]))
        T = Q[:, 1:]
        ev = np.linalg.eigvalsh(T.T @ (0.5 * (H + H.T)) @ T)
        worst = min(worst, ev.min())
    if worst <= 0:
        raise InvariantViolationError("restricted Hessian is not positive definite")
    return worst


# ---------------------------------------------------------------------------
# the auxiliary function phi

def _smoothstep5(s):
    return s ** 3 * (10 - 15 * s + 6 * s * s)


def _smoothstep5_d(s):
    return 30 * s ** 2 * (1 - s) ** 2


def _smoothstep5_dd(s):
    return 60 * s * (1 - s) * (1 - 2 * s)


@dataclass(frozen=True)
class PhiFunction:
    """Convex profile ``phi`` with ``phi(t) ~ t^2/2`` at 0, ``c t^alpha`` in the middle
    and a quadratic beyond ``T``.

    Pieces meet with matching second derivatives at 1 and ``T``; a quintic
    blend of radius ``blend`` removes the remaining third-order kink.
    """
    vartheta: float
    alpha: float
    c: float
    T: float
    blend: float = 1e-3
    homogeneous_core: bool = False
    sigma: float = field(default=0.0, compare=False)

    # raw pieces ----------------------------------------------------------
    def _head(self, t, k):
        a = self.alpha
        A = (a * a - 7 * a + 12) / 2
        B = -a * a + 6 * a - 8
        C = (a * a - 5 * a + 6) / 2
        if k == 0:
            v = A * t ** 2 + B * t ** 3 + C * t ** 4
        elif k == 1:
            v = 2 * A * t + 3 * B * t ** 2 + 4 * C * t ** 3
        else:
            v = 2 * A + 6 * B * t + 12 * C * t ** 2
        return self.c * v

    def _core(self, t, k):
        a, c = self.alpha, self.c
        t = np.maximum(t, 1e-300)
        if k == 0:
            return c * t ** a
        if k == 1:
            return c * a * t ** (a - 1)
        return c * a * (a - 1) * t ** (a - 2)

    def _tail(self, t, k):
        a, c, T = self.alpha, self.c, self.T
        d = t - T
        v0, v1, v2 = c * T ** a, c * a * T ** (a - 1), c * a * (a - 1) * T ** (a - 2)
        if k == 0:
            return v0 + v1 * d + 0.5 * v2 * d * d
        if k == 1:
            return v1 + v2 * d
        return v2 + 0.0 * d

    def _blend(self, t, k, left, right, s0):
        h = self.blend * s0
        u = np.clip((t - (s0 - h)) / (2 * h), 0.0, 1.0)
        w = [_smoothstep5(u), _smoothstep5_d(u) / (2 * h), _smoothstep5_dd(u) / (2 * h) ** 2]
        L = [left(t, i) for i in range(k + 1)]
        R = [right(t, i) for i in range(k + 1)]
        if k == 0:
            return L[0] + w[0] * (R[0] - L[0])
        if k == 1:
            return L[1] + w[0] * (R[1] - L[1]) + w[1] * (R[0] - L[0])
        return (L[2] + w[0] * (R[2] - L[2]) + 2 * w[1] * (R[1] - L[1])
                + w[2] * (R[0] - L[0]))

    def _eval(self, t, k):
        t = np.asarray(t, dtype=float)
        # the blend radius scales with the splice point: near a large T the
        # pieces are big numbers and a fixed radius amplifies their rounding
        h, hT = self.blend, self.blend * self.T
        out = np.empty_like(t)
        m0 = t <= 1 - h
        m1 = (t > 1 - h) & (t < 1 + h)
        m2 = (t >= 1 + h) & (t <= self.T - hT)
        m3 = (t > self.T - hT) & (t < self.T + hT)
        m4 = t >= self.T + hT
        out[m0] = self._head(t[m0], k)
        out[m1] = self._blend(t[m1], k, self._head, self._core, 1.0)
        out[m2] = self._core(t[m2], k)
        out[m3] = self._blend(t[m3], k, self._core, self._tail, self.T)
        out[m4] = self._tail(t[m4], k)
        return out

    def __call__(self, t):
        return self._eval_scalar(t, 0)

    def d1(self, t):
        return self._eval_scalar(t, 1)

    def d2(self, t):
        return self._eval_scalar(t, 2)

    def _eval_scalar(self, t, k):
        arr = np.asarray(t, dtype=float)
        out = self._eval(np.atleast_1d(arr), k)
        return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)

    def inverse_d1(self, s):
        """Solve ``phi'(r) = s`` for ``r >= 0`` (``phi'`` is strictly increasing)."""
        if s < 0:
            raise ValueError("phi' takes only nonnegative values on [0, inf)")
        if s == 0:
            return 0.0
        hi = 1.0
        while self.d1(hi) < s:
            hi *= 2
        return brentq(lambda r: self.d1(r) - s, 0.0, hi, xtol=1e-14, rtol=1e-14)

    def slope_limit(self):
        """``lim phi'(t)/t`` as ``t -> inf`` (the tail's second derivative)."""
        return float(self._tail(self.T + 1.0, 2))

    def to_json(self):
        return {"vartheta": self.vartheta, "alpha": self.alpha, "c": self.c, "T": self.T,
                "blend": self.blend, "homogeneous_core": self.homogeneous_core}


HEAD_ALPHA_MIN = 3.0 - np.sqrt(3.0)
# phi is evaluated up to 2T, where it grows like T^alpha
T_MAX = 1e100


def build_phi(vartheta, alpha, homogeneous_core=False, blend=1e-3, check=True):
    """Construct the profile ``phi`` for the given ``vartheta`` and ``alpha``.

    Parameters
    ----------
    vartheta : float in (0, 1)
        Upper bound for the asymptotic slope ``phi'(t)/t``.
    alpha : float in (1, 2)
        Exponent of the homogeneous middle piece.
    homogeneous_core : bool
        Require ``phi'(t)/t > 1 - vartheta`` on [0, 1] so that ``phi`` equals
        ``c t^alpha`` wherever ``phi'(t)/t`` lies in ``[vartheta, 1 - vartheta]``.

    Raises
    ------
    InfeasibleParametersError
        If ``alpha <= 3 - sqrt(3)`` (the quartic head then has a concave
        stretch) or the homogeneous-core condition cannot hold.
    """
    if not 0 < vartheta < 1:
        raise RangeError("vartheta must lie in (0, 1)")
    if not 1 < alpha < 2:
        raise RangeError("alpha must lie in (1, 2)")
    if alpha <= HEAD_ALPHA_MIN:
        # min of the quartic head's second derivative is
        # -(a - 4)(a^2 - 6a + 6) / (2 (a - 3)), which vanishes at 3 - sqrt(3)
        raise InfeasibleParametersError(
            f"alpha = {alpha:.6g} <= 3 - sqrt(3): the quartic head is not convex")
    c = 1.0 / (alpha * alpha - 7 * alpha + 12)
    if homogeneous_core and c * alpha <= 1 - vartheta:
        raise InfeasibleParametersError(
            f"phi'(1) = {c * alpha:.6g} does not exceed 1 - vartheta = {1 - vartheta:.6g}; "
            "increase alpha or vartheta")
    # phi'(t)/t = c alpha t^(alpha-2) drops below vartheta/(2 alpha - 1) beyond T
    # in logs, since the exponent 1/(alpha - 2) is large near alpha = 2
    log_t = np.log(vartheta / ((2 * alpha - 1) * c * alpha)) / (alpha - 2)
    if log_t > np.log(T_MAX):
        raise InfeasibleParametersError(
            f"splice point T = exp({log_t:.4g}) is out of floating point range; alpha is too "
            f"close to 2 for vartheta = {vartheta}")
    T = max(float(np.exp(log_t)), 2.0)
    phi = PhiFunction(vartheta, alpha, c, T, blend, homogeneous_core)
    if check:
        object.__setattr__(phi, "sigma", check_phi(phi))
    return phi


def check_phi(phi: PhiFunction, num=4000):
    """Verify the profile properties on a grid of (0, 2T]; return ``sigma``."""
    if abs(phi(0.0)) > 0 or abs(phi.d1(0.0)) > 0 or abs(phi.d2(0.0) - 1.0) > 1e-12:
        raise InvariantViolationError("phi must satisfy phi(0) = phi'(0) = 0, phi''(0) = 1")
    t = np.concatenate([np.geomspace(1e-6, 2 * phi.T, num),
                        np.linspace(1 - 2 * phi.blend, 1 + 2 * phi.blend, 64),
                        np.linspace(phi.T * (1 - 2 * phi.blend), phi.T * (1 + 2 * phi.blend), 64)])
    t = np.unique(t)
    ratio = phi.d1(t) / t
    if np.any(np.diff(ratio) >= 0):
        raise InvariantViolationError("phi'(t)/t is not strictly decreasing")
    if not phi.slope_limit() < phi.vartheta:
        raise InvariantViolationError("asymptotic slope is not below vartheta")
    sigma = float(min(ratio.min(), phi.d2(t).min()))
    if sigma <= 0:
        raise InvariantViolationError("phi is not uniformly convex")
    return sigma


# ---------------------------------------------------------------------------
# Hamiltonians

class ScaledHamiltonian:
    """``H_a(x) = a phi(j(x))``."""

    def __init__(self, body: ConvexBody, a: float, phi: PhiFunction):
        if a <= 0:
            raise RangeError("a must be positive")
        self.body, self.a, self.phi = body, float(a), phi

    def evaluate(self, x, order=2):
        x = np.asarray(x, dtype=float)
        lam = float(self.body.gauge(x))
        val = self.a * self.phi(lam)
        if order == 0:
            return val, None, None
        if lam == 0:
            if order >= 2:
                raise SingularPointError("Hessian requested at the origin")
            return val, np.zeros_like(x), None
        g = self.body.grad(x)
        d1 = self.phi.d1(lam)
        grad = self.a * d1 * g
        if order == 1:
            return val, grad, None
        # j''(x) = j''(y) / lam is already inside body.hess(x)
        hess = self.a * self.phi.d2(lam) * np.outer(g, g) + self.a * d1 * self.body.hess(x)
        return val, grad, hess


class HomogeneousHamiltonian:
    """``H(x) = j(x)^alpha``."""

    def __init__(self, body: ConvexBody, alpha: float):
        if not alpha > 1:
            raise RangeError("alpha must exceed 1")
        self.body, self.alpha = body, float(alpha)

    def evaluate(self, x, order=2):
        x = np.asarray(x, dtype=float)
        a = self.alpha
        lam = float(self.body.gauge(x))
        val = lam ** a
        if order == 0:
            return val, None, None
        if lam == 0:
            if order >= 2:
                raise SingularPointError("Hessian requested at the origin")
            return val, np.zeros_like(x), None
        g = self.body.grad(x)
        grad = a * lam ** (a - 1) * g
        if order == 1:
            return val, grad, None
        hess = a * (a - 1) * lam ** (a - 2) * np.outer(g, g) + a * lam ** (a - 1) * self.body.hess(x)
        return val, grad, hess


def hamiltonian_eval(Hm, x, order=2):
    """``(value, gradient, hessian)`` of a Hamiltonian model at ``x``."""
    return Hm.evaluate(x, order)


def hessian_bounds(Hm, rng=None, directions=200, radii=(0.5, 1.0, 2.0)):
    """Sampled ``(r, R)`` with ``r |xi|^2 <= H''(x) xi . xi <= R |xi|^2``."""
    rng = np.random.default_rng(1) if rng is None else rng
    dim = 2 * Hm.body.n
    lo, hi = np.inf, 0.0
    for u in rng.standard_normal((directions, dim)):
        y = Hm.body.project(u)
        for s in radii:
            ev = np.linalg.eigvalsh(Hm.evaluate(s * y)[2])
            lo, hi = min(lo, ev[0]), max(hi, ev[-1])
    return lo, hi


# ---------------------------------------------------------------------------
# Fenchel duals

class FenchelDual:
    """``G(y) = sup_x (x . y - H(x))`` for a scaled or homogeneous Hamiltonian.

    For ``y = lam j'(xi)`` with ``xi`` on ``Sigma`` the supremum is attained at
    ``x = r xi`` where ``r`` solves the one-dimensional problem along the ray.
    """

    def __init__(self, Hm):
        self.source = Hm
        self.body = Hm.body
        if isinstance(Hm, HomogeneousHamiltonian):
            a = Hm.alpha
            self.beta = a / (a - 1)
            self.c1 = (a - 1) * a ** (-self.beta)
        else:
            self.beta = None
            self.c1 = None

    def _radius(self, lam):
        Hm = self.source
        if self.beta is not None:
            return (lam / Hm.alpha) ** (1.0 / (Hm.alpha - 1))
        return self.source.phi.inverse_d1(lam / Hm.a)

    def evaluate(self, y, order=2):
        y = np.asarray(y, dtype=float)
        if not np.any(y):
            if order >= 2:
                raise SingularPointError("dual Hessian requested at the origin")
            return 0.0, np.zeros_like(y), None
        xi, lam = self.body.support_point(y)
        r = self._radius(lam)
        if self.beta is not None:
            val = self.c1 * lam ** self.beta
        else:
            val = r * lam - self.source.a * self.source.phi(r)
        grad = r * xi
        if order < 2:
            return val, grad, None
        hess = np.linalg.inv(self.source.evaluate(grad)[2])
        return val, grad, 0.5 * (hess + hess.T)

    def value(self, y):
        return self.evaluate(y, 0)[0]

    def grad(self, y):
        return self.evaluate(y, 1)[1]

    def hess(self, y):
        return self.evaluate(y, 2)[2]


def fenchel(Hm) -> FenchelDual:
    return FenchelDual(Hm)
