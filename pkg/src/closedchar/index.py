"""Index theory for sampled symplectic paths.

The omega-index counts signed crossings of ``{M : det(M - omega I) = 0}``.
We obtain it as a spectral flow: the graph of ``gamma(t)`` and the graph of
``omega I`` are Lagrangian in ``C^{2n} + C^{2n}`` with form ``(-J) + J``, and
each Lagrangian is the graph of a unitary map between the +-1 eigenspaces of
``i(-J + J)``.  With ``U(t)`` the unitary of ``gr gamma(t)`` and ``U_omega`` the
one of ``gr(omega I)``, the multiplicity of the eigenvalue 1 of
``W = U_omega^* U(t)`` equals ``nu_omega(gamma(t))``, and eigenvalues of ``W``
crossing 1 counter-clockwise are positive crossings.  Eigenvalues of a
unitary matrix never leave the circle, so the count is exact integer
arithmetic once consecutive samples are close:

    i_omega = (Theta - P(W_end) + P(W_start)) / 2 pi

where ``Theta`` is the continuous phase of ``det W`` and ``P`` the sum of
eigen-angles in ``[0, 2 pi)``.  Since ``U_omega`` is a constant unitary, both
the refinement and ``Theta`` are independent of omega; only the endpoint
terms are recomputed per omega.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from math import floor, ceil, gcd
from typing import Optional

import numpy as np

from . import settings
from .errors import (ConsistencyError, InvariantViolationError, ResolutionError,
                     StabilityError, UnsupportedNormalFormError)
from .paths import SymplecticPath, cayley_midpoints, canonical_path, iterate_path, scaling_path
from .symplectic import (BasicNormalForm, circle_spectrum, eigen_clusters, half_dim, nu_omega,
                         realize_all, standard_j)

STEP_MAX = 0.25   # Frobenius bound on unitary increments between samples


def graph_unitary(mats):
    """Unitary representatives of ``gr M`` for a stack of symplectic matrices.

    In the basis of ``J``-eigenvectors ``M`` has blocks ``[[P, Q], [conj Q, conj P]]``
    and the unitary is ``[[-conj(P)^{-1} conj(Q), conj(P)^{-1}],
    [P - Q conj(P)^{-1} conj(Q), Q conj(P)^{-1}]]``.
    """
    mats = np.asarray(mats)
    n = mats.shape[-1] // 2
    a, b = mats[..., :n, :n], mats[..., :n, n:]
    c, d = mats[..., n:, :n], mats[..., n:, n:]
    P = 0.5 * ((a + d) + 1j * (c - b))
    Q = 0.5 * ((a - d) + 1j * (b + c))
    Pbi = np.linalg.inv(P.conj())
    U = np.empty(mats.shape[:-2] + (2 * n, 2 * n), dtype=complex)
    U[..., :n, :n] = -Pbi @ Q.conj()
    U[..., :n, n:] = Pbi
    U[..., n:, :n] = P - Q @ Pbi @ Q.conj()
    U[..., n:, n:] = Q @ Pbi
    return U


def _omega_twist(U, omega):
    """``W = U_omega^* U`` where ``U_omega = [[0, conj(w) I], [w I, 0]]``."""
    n = U.shape[-1] // 2
    W = np.empty_like(U)
    W[..., :n, :] = np.conj(omega) * U[..., n:, :]
    W[..., n:, :] = omega * U[..., :n, :]
    return W


def _angle_sum(W):
    ev = np.linalg.eigvals(W)
    return float(np.sum(np.mod(np.angle(ev), 2 * np.pi)))


def _det_phase(U):
    dets = np.linalg.det(U)
    dets = dets / np.abs(dets)
    return float(np.sum(np.angle(dets[1:] * dets[:-1].conj())))


def _refine_unitary(times, mats, tol):
    """Insert Cayley points until unitary increments are below ``STEP_MAX``."""
    span = times[-1] - times[0]
    U = graph_unitary(mats)
    for _ in range(tol.max_refine):
        mid = cayley_midpoints(mats)
        Um = graph_unitary(mid)
        d = np.maximum.reduce([
            np.linalg.norm(U[1:] - U[:-1], axis=(1, 2)),
            np.linalg.norm(Um - U[:-1], axis=(1, 2)),
            np.linalg.norm(U[1:] - Um, axis=(1, 2)),
        ])
        bad = d > STEP_MAX
        if not bad.any():
            return times, mats, U
        widths = np.diff(times)
        if np.any(widths[bad] < tol.bracket * span):
            raise ResolutionError("path refinement reached the minimal bracket width")
        if len(times) + bad.sum() > 2_000_000:
            raise ResolutionError("path refinement exceeded the sample budget")
        k = np.flatnonzero(bad)
        times = np.insert(times, k + 1, 0.5 * (times[k] + times[k + 1]))
        mats = np.insert(mats, k + 1, mid[k], axis=0)
        U = np.insert(U, k + 1, Um[k], axis=0)
    raise ResolutionError(f"no resolution after {tol.max_refine} refinement rounds")


def _endpoint_delta(M, omega, tol):
    """Rotation size for a degenerate endpoint.

    Jordan blocks split like ``sqrt(delta)`` under the rotation, so delta is
    capped by the squared distance to the nearest eigenvalue away from omega.
    """
    ev = np.linalg.eigvals(M)
    d = np.abs(ev - omega)
    others = d[d > tol.cluster]
    if not others.size:
        return tol.perturb_delta
    return min(tol.perturb_delta, (others.min() / 4) ** 2)


def _rotation_arc(M, delta, num=9):
    """Samples of ``M exp(-s delta J)`` for s in (0, 1]."""
    n = half_dim(M)
    J = standard_j(n)
    s = np.linspace(0.0, 1.0, num)[1:]
    E = np.cos(delta * s)[:, None, None] * np.eye(2 * n) - np.sin(delta * s)[:, None, None] * J
    return M @ E


@dataclass
class _Resolved:
    U: np.ndarray
    phase: float


class IndexEngine:
    """Evaluate ``(i_omega, nu_omega)`` of one path for many omega.

    The path is refined once; each evaluation only touches the endpoints.
    """

    def __init__(self, path: SymplecticPath, tol=None):
        self.tol = settings.current() if tol is None else tol
        self.path = path
        self.n = path.n
        times, mats, U = _refine_unitary(path.times, path.mats, self.tol)
        self.main = _Resolved(U, _det_phase(U))
        self.samples = len(times)
        xi = scaling_path(self.n)
        xt = np.linspace(-1.0, 0.0, len(xi))
        _, _, Ux = _refine_unitary(xt, xi, self.tol)
        self.prefix = _Resolved(Ux, _det_phase(Ux))
        self._arcs = {}

    def _arc(self, delta):
        if delta not in self._arcs:
            M = self.path.endpoint
            arc = np.concatenate([M[None], _rotation_arc(M, delta)])
            Ua = graph_unitary(arc)
            self._arcs[delta] = _Resolved(Ua, _det_phase(Ua))
        return self._arcs[delta]

    def _count(self, omega, delta):
        phase = self.main.phase
        start = self.main.U[0]
        end = self.main.U[-1]
        if abs(omega - 1.0) <= self.tol.eig:
            phase += self.prefix.phase
            start = self.prefix.U[0]
        if delta:
            arc = self._arc(delta)
            phase += arc.phase
            end = arc.U[-1]
        val = (phase - _angle_sum(_omega_twist(end[None], omega)[0])
               + _angle_sum(_omega_twist(start[None], omega)[0])) / (2 * np.pi)
        k = round(val)
        if abs(val - k) > 1e-6:
            raise ResolutionError(f"non-integral crossing count {val!r}")
        return int(k)

    def index(self, omega, delta=None):
        """Return ``(i_omega, nu_omega)``; degenerate endpoints use a rotation arc."""
        omega = complex(omega) / abs(omega)
        nullity = nu_omega(self.path.endpoint, omega, self.tol)
        if nullity == 0:
            return self._count(omega, 0.0), 0
        delta = _endpoint_delta(self.path.endpoint, omega, self.tol) if delta is None else delta
        a = self._count(omega, delta)
        b = self._count(omega, delta / 2)
        if a != b:
            raise StabilityError(f"omega-index unstable under halving: {a} vs {b}")
        return a, nullity


def engine_for(path: SymplecticPath) -> IndexEngine:
    """Cached engine attached to ``path``."""
    eng = getattr(path, "_engine", None)
    tol = settings.current()
    if eng is None or eng.tol is not tol:
        eng = IndexEngine(path, tol)
        object.__setattr__(path, "_engine", eng)
    return eng


def omega_index(path: SymplecticPath, omega):
    """Index and nullity of ``path`` at ``omega`` on the unit circle.

    Returns
    -------
    (int, int)
        ``(i_omega(path), nu_omega(path(tau)))``.
    """
    tol = settings.current()
    if abs(abs(omega) - 1.0) > tol.eig:
        raise ValueError("omega must lie on the unit circle")
    idx, nul = engine_for(path).index(omega)
    _parity_check(path.endpoint, omega, idx, nul, tol)
    return idx, nul


def _parity_check(M, omega, idx, nul, tol):
    """Sign of ``D_omega`` at the (perturbed) endpoint must equal ``-(-1)^i``.

    Both the scaling path start and the identity lie where ``D_omega < 0``,
    and every crossing flips the sign of ``D_omega`` by ``(-1)^dim ker``.
    """
    omega = complex(omega) / abs(omega)
    if nul:
        M = _rotation_arc(M, _endpoint_delta(M, omega, tol), 2)[-1]
    n = half_dim(M)
    val = (-1) ** (n - 1) * np.conj(omega) ** n * np.linalg.det(M - omega * np.eye(2 * n))
    if abs(val.real) < 1e-300:
        return
    if np.sign(val.real) != -(-1) ** (idx % 2):
        raise ConsistencyError(f"crossing parity disagrees with sign of D_omega at {omega}", idx)


def _check_splitting_delta(M, omega, tol):
    """Perturbation size that cannot jump over a neighbouring eigenvalue."""
    delta = tol.perturb_delta
    others = [e.value for e in circle_spectrum(M, tol) if abs(e.value - omega) > tol.cluster]
    if others:
        gap = min(abs(np.angle(w / omega)) for w in others)
        delta = min(delta, gap / 4)
    return delta


def _splitting_on(path, omega, tol):
    eng = engine_for(path)
    omega = complex(omega) / abs(omega)
    delta = _check_splitting_delta(path.endpoint, omega, tol)
    base, _ = eng.index(omega)
    out = []
    for d in (delta, delta / 2):
        plus = eng.index(omega * np.exp(1j * d))[0] - base
        minus = eng.index(omega * np.exp(-1j * d))[0] - base
        out.append((plus, minus))
    if out[0] != out[1]:
        raise StabilityError(f"splitting numbers unstable under halving at {omega}: {out}")
    return out[0]


def splitting_numbers(M, omega, generator: Optional[SymplecticPath] = None):
    """Splitting numbers ``(S+, S-)`` of ``M`` at ``omega``.

    Parameters
    ----------
    M : (2n, 2n) array
    omega : complex, unit modulus
    generator : SymplecticPath, optional
        Any path ending at ``M``.  When ``M`` has a real logarithm the result
        is re-checked on ``exp(t log M)``; the two must agree.
    """
    tol = settings.current()
    M = np.asarray(M, dtype=float)
    canon = canonical_path(M)
    if generator is None and canon is None:
        raise ValueError("no generator given and M has no real logarithm")
    if generator is not None:
        scale = max(1.0, np.abs(M).max())
        if np.abs(generator.endpoint - M).max() > tol.symp * 1e2 * scale:
            raise ValueError("generator does not end at M")
    primary = generator if generator is not None else canon
    result = _splitting_on(primary, omega, tol)
    if generator is not None and canon is not None:
        check = _splitting_on(canon, omega, tol)
        if check != result:
            raise ConsistencyError("splitting numbers depend on the generating path", result, check)
    return result


# ---------------------------------------------------------------------------
# rational rotation angles

def rational_turn(turn, q_max=None, tol=None):
    """Fraction ``p/q`` with ``q <= q_max`` within ``tol`` of ``turn``, else None."""
    s = settings.current()
    q_max = s.q_max if q_max is None else q_max
    tol = s.rational_tol if tol is None else tol
    f = Fraction(float(turn)).limit_denominator(q_max)
    if abs(float(f) - turn) <= tol:
        return f % 1
    return None


def _turn_of(omega):
    return float(np.mod(np.angle(omega), 2 * np.pi) / (2 * np.pi)) % 1.0


def minimal_period(M, cap=10 ** 6):
    """Twice the lcm of denominators of rational eigen-turns on the circle.

    Returns ``None`` (unbounded denominator) if the lcm exceeds ``cap``.
    """
    lcm = 1
    for e in circle_spectrum(M):
        f = rational_turn(_turn_of(e.value))
        if f is not None:
            q = f.denominator
            lcm = lcm * q // gcd(lcm, q)
    if lcm > cap:
        return None
    return 2 * lcm


# ---------------------------------------------------------------------------
# index as a function on the circle

@dataclass
class CircleIndexFunction:
    """Piecewise constant ``omega -> i_omega(gamma)`` for one path.

    ``turns`` are eigenvalue positions as fractions of a full turn (0 always
    included), ``exact`` holds the rational value when detected, ``at`` the
    index and nullity at each eigenvalue and ``arc`` the index on the open
    arc that follows it counter-clockwise.
    """
    turns: list
    exact: list
    at: list
    arc: list

    def mean(self):
        ends = self.turns[1:] + [1.0]
        return float(sum((b - a) * v for a, b, v in zip(self.turns, ends, self.arc)))

    def _lattice_in_open(self, a, a_exact, b, b_exact, m):
        # number of j in [0, m) with a < j/m < b
        lo = (a_exact * m) if a_exact is not None else None
        hi = (b_exact * m) if b_exact is not None else None
        if lo is not None and lo.denominator == 1:
            first = int(lo) + 1
        else:
            first = floor(a * m) + 1
        if hi is not None and hi.denominator == 1:
            last = int(hi) - 1
        else:
            last = ceil(b * m) - 1
        last = min(last, m - 1)
        return max(0, last - first + 1)

    def bott(self, m):
        """``(i(gamma, m), nu(gamma, m))`` from the Bott-type sum over m-th roots of 1."""
        total_i = total_nu = 0
        K = len(self.turns)
        for k in range(K):
            a, ae = self.turns[k], self.exact[k]
            if k + 1 < K:
                b, be = self.turns[k + 1], self.exact[k + 1]
            else:
                b, be = 1.0, Fraction(1)
            on_lattice = (ae is not None and (ae * m).denominator == 1)
            if on_lattice:
                total_i += self.at[k][0]
                total_nu += self.at[k][1]
            total_i += self.arc[k] * self._lattice_in_open(a, ae, b, be, m)
        return total_i, total_nu

    def value(self, omega):
        t = _turn_of(omega)
        for k, a in enumerate(self.turns):
            if abs(t - a) < 1e-12:
                return self.at[k][0]
        k = max(j for j, a in enumerate(self.turns) if a < t)
        return self.arc[k]

    def to_json(self):
        return {"turns": self.turns,
                "exact": [None if f is None else [f.numerator, f.denominator] for f in self.exact],
                "at": [list(x) for x in self.at], "arc": self.arc}

    @classmethod
    def from_json(cls, d):
        exact = [None if f is None else Fraction(f[0], f[1]) for f in d["exact"]]
        return cls(list(d["turns"]), exact, [tuple(x) for x in d["at"]], list(d["arc"]))


def circle_index_function(path: SymplecticPath) -> CircleIndexFunction:
    eng = engine_for(path)
    M = path.endpoint
    turns, exact = [0.0], [Fraction(0)]
    for e in circle_spectrum(M):
        t = _turn_of(e.value)
        if min(abs(t - 0.0), abs(t - 1.0)) < 1e-12:
            continue
        turns.append(t)
        exact.append(rational_turn(t))
    order = np.argsort(turns, kind="stable")
    turns = [turns[k] for k in order]
    exact = [exact[k] for k in order]
    at, arc = [], []
    ends = turns[1:] + [1.0]
    for a, b in zip(turns, ends):
        at.append(eng.index(np.exp(2j * np.pi * a)))
        arc.append(eng.index(np.exp(2j * np.pi * 0.5 * (a + b)))[0])
    return CircleIndexFunction(turns, exact, at, arc)


# ---------------------------------------------------------------------------
# normal forms

def _chain_signs(M, lam, tol):
    """Signs of the length-two Jordan chains of ``M`` at ``lam = +-1``.

    For a chain ``(M - lam) w = v`` the sign of ``v^T J w`` is a symplectic
    invariant; it is ``-1/b`` on ``N1(lam, b)``.  Returns the number of chains
    with ``b = 1`` and with ``b = -1``.
    """
    n = half_dim(M)
    N = M - lam * np.eye(2 * n)
    _, s, vh = np.linalg.svd(N @ N)
    scale = max(1.0, np.linalg.norm(M, 2)) ** 2
    dim = int(np.sum(s <= tol.cluster * scale))
    B = vh[2 * n - dim:].T.conj().real if dim else np.zeros((2 * n, 0))
    B, _ = np.linalg.qr(B)
    NE = B.T @ N @ B
    u, sv, vt = np.linalg.svd(NE)
    r = int(np.sum(sv > np.sqrt(tol.rank) * max(1.0, sv.max(initial=0.0))))
    if r == 0:
        return 0, 0
    V = B @ u[:, :r]                       # chain heads (eigenvectors)
    Wv = B @ (vt[:r].T / sv[:r])           # preimages: N W = V
    J = standard_j(n)
    q = V.T @ J @ Wv
    q = 0.5 * (q + q.T)
    ev = np.linalg.eigvalsh(q)
    return int(np.sum(ev < 0)), int(np.sum(ev > 0))


def normal_form_decomposition(M):
    """Basic normal forms whose diamond product matches ``M`` on the circle.

    Krein signatures pick between ``R(theta)`` and ``R(2 pi - theta)``; Jordan
    chain signs pick ``b`` in ``N1(+-1, b)``.  Hyperbolic pairs become
    ``D(+-2)`` (a complex quadruple becomes two copies of ``D(2)``).

    Raises
    ------
    UnsupportedNormalFormError
        For non-semisimple circle eigenvalues off +-1 or Jordan blocks of
        size above two at +-1.
    """
    tol = settings.current()
    M = np.asarray(M, dtype=float)
    n = half_dim(M)
    J = standard_j(n)
    forms = []
    for e in eigen_clusters(M, tol):
        lam = e.value
        if not e.on_circle:
            if abs(lam) <= 1.0:
                continue
            if lam.imag == 0.0:
                forms += [BasicNormalForm("D", (2.0 if lam.real > 0 else -2.0,))] * e.alg
            elif lam.imag > 0:
                forms += [BasicNormalForm("D", (2.0,))] * (2 * e.alg)
            continue
        if lam.imag == 0.0:
            sign = lam.real
            a, g = e.alg, e.geom
            n_id = g - a // 2
            n_chain = a - g
            if a % 2 or n_id < 0:
                raise UnsupportedNormalFormError(
                    f"Jordan structure at {sign:+g} (alg {a}, geom {g}) exceeds size-two blocks")
            plus, minus = _chain_signs(M, sign, tol)
            if plus + minus != n_chain:
                raise UnsupportedNormalFormError(f"could not resolve Jordan chains at {sign:+g}")
            forms += [BasicNormalForm("N1", (sign, 0.0))] * n_id
            forms += [BasicNormalForm("N1", (sign, 1.0))] * plus
            forms += [BasicNormalForm("N1", (sign, -1.0))] * minus
            continue
        if lam.imag < 0:
            continue
        if e.geom != e.alg:
            raise UnsupportedNormalFormError(
                f"non-semisimple eigenvalue {lam:.6g} (alg {e.alg}, geom {e.geom})")
        theta = float(np.angle(lam))
        _, s, vh = np.linalg.svd(M - lam * np.eye(2 * n))
        V = vh[2 * n - e.alg:].conj().T
        krein = -1j * (V.conj().T @ J @ V)
        ev = np.linalg.eigvalsh(0.5 * (krein + krein.conj().T))
        pos, neg = int(np.sum(ev > 0)), int(np.sum(ev < 0))
        forms += [BasicNormalForm("R", (theta,))] * pos
        forms += [BasicNormalForm("R", (2 * np.pi - theta,))] * neg
    forms = sorted(forms, key=_form_key)
    _verify_decomposition(M, forms, tol)
    return forms


def _form_key(f):
    order = {"N1": 0, "R": 1, "N2": 2, "D": 3}
    return (order[f.kind], tuple(-p for p in f.params))


def _verify_decomposition(M, forms, tol):
    if sum(f.dim for f in forms) != M.shape[0]:
        raise UnsupportedNormalFormError("decomposition does not fill the dimension")
    N = realize_all(forms)
    a = circle_spectrum(M, tol)
    b = circle_spectrum(N, tol)
    if len(a) != len(b):
        raise ConsistencyError("decomposition changed the circle spectrum", a, b)
    for x, y in zip(a, b):
        if abs(x.value - y.value) > np.sqrt(tol.cluster) or x.geom != y.geom or x.alg != y.alg:
            raise ConsistencyError("decomposition changed the circle spectrum", a, b)


def splitting_plus_one(forms):
    """``S+(1)`` read off a normal form list (one per ``N1(1, b)`` with ``b >= 0``)."""
    return sum(1 for f in forms if f.kind == "N1" and f.params[0] > 0 and f.params[1] >= 0)


def mean_index_from_forms(i1, forms):
    """Mean index from ``i(gamma, 1)`` and a normal form list.

    Going once around the circle the index jumps by ``S+ - S-`` at every
    eigenvalue, so the circle average is
    ``i_1 + S+(1) + sum_R (theta / pi - 1)``; ``N1(-1, b)`` and ``D`` blocks
    contribute nothing.
    """
    total = float(i1 + splitting_plus_one(forms))
    for f in forms:
        if f.kind == "R":
            total += f.params[0] / np.pi - 1.0
        elif f.kind == "N2":
            raise UnsupportedNormalFormError("N2 blocks have no closed-form mean contribution")
    return total


# ---------------------------------------------------------------------------
# iteration

@dataclass
class IndexProfile:
    """Iteration data of one symplectic path.

    ``table`` rows are ``(m, i(gamma, m), nu(gamma, m))``.  When ``circle``
    is present the table can be extended to any depth by the Bott-type sum.
    """
    n: int
    i1: int
    nu1: int
    table: list
    mean_index: float
    splitting: list
    K: Optional[int]
    single_source: bool = False
    mean_index_alt: Optional[float] = None
    circle: Optional[CircleIndexFunction] = field(default=None, repr=False)

    def __post_init__(self):
        self.validate()

    def validate(self):
        for m, i, nu in self.table:
            if not 0 <= nu <= 2 * self.n:
                raise InvariantViolationError(f"nullity {nu} out of range at m={m}")
            if abs(i - m * self.mean_index) > 2 * self.n + 1e-9:
                raise InvariantViolationError(
                    f"|i(gamma,{m}) - m*mean| = {abs(i - m * self.mean_index):.6g} exceeds 2n")
        if self.K is not None and self.K % 2:
            raise InvariantViolationError("K must be even")

    @property
    def m_max(self):
        return self.table[-1][0] if self.table else 0

    def row(self, m):
        if 1 <= m <= len(self.table) and self.table[m - 1][0] == m:
            return self.table[m - 1]
        raise KeyError(m)

    def index(self, m):
        return self.row(m)[1]

    def nullity(self, m):
        return self.row(m)[2]

    def extended(self, m_max):
        """Copy tabulated to ``m_max`` with the Bott-type sum."""
        if m_max <= self.m_max:
            return self
        if self.circle is None:
            raise ValueError("profile carries no circle data to extend with")
        rows = list(self.table)
        for m in range(self.m_max + 1, m_max + 1):
            i, nu = self.circle.bott(m)
            rows.append((m, i, nu))
        return IndexProfile(self.n, self.i1, self.nu1, rows, self.mean_index, self.splitting,
                            self.K, self.single_source, self.mean_index_alt, self.circle)

    def to_json(self):
        d = {"n": self.n, "i1": self.i1, "nu1": self.nu1,
             "table": [[int(m), int(i), int(nu)] for m, i, nu in self.table],
             "mean_index": float(self.mean_index),
             "splitting": [[float(np.real(w)), float(np.imag(w)), int(sp), int(sm)]
                           for w, sp, sm in self.splitting],
             "K": "unbounded-denominator" if self.K is None else int(self.K),
             "single_source": bool(self.single_source)}
        if self.circle is not None:
            d["circle"] = self.circle.to_json()
        return d

    @classmethod
    def from_json(cls, d):
        K = d["K"]
        circle = CircleIndexFunction.from_json(d["circle"]) if d.get("circle") else None
        return cls(int(d["n"]), int(d["i1"]), int(d["nu1"]),
                   [tuple(int(v) for v in r) for r in d["table"]], float(d["mean_index"]),
                   [(complex(r[0], r[1]), int(r[2]), int(r[3])) for r in d["splitting"]],
                   None if K == "unbounded-denominator" else int(K),
                   bool(d.get("single_source", False)), None, circle)


def iteration_profile(path: SymplecticPath, m_max: int, direct_max: int = 12) -> IndexProfile:
    """Index iteration table, mean index, splitting numbers and K of ``path``.

    Rows with ``m <= direct_max`` come from the iterated path itself and are
    cross-checked against the Bott-type sum over m-th roots of unity; deeper
    rows use the sum alone.  The mean index is the circle average of the
    index function and is cross-checked against the normal-form formula.
    """
    if m_max < 2:
        raise ValueError("m_max must be at least 2")
    tol = settings.current()
    circle = circle_index_function(path)
    rows = []
    for m in range(1, m_max + 1):
        bott = circle.bott(m)
        if m <= direct_max:
            direct = omega_index(iterate_path(path, m), 1.0)
            if direct != bott:
                raise ConsistencyError(f"iterated index {direct} differs from Bott sum {bott} at m={m}",
                                       direct, bott)
        rows.append((m,) + tuple(bott))
    mean_a = circle.mean()
    single = False
    mean_b = None
    try:
        forms = normal_form_decomposition(path.endpoint)
        mean_b = mean_index_from_forms(rows[0][1], forms)
    except UnsupportedNormalFormError:
        single = True
    if mean_b is not None and abs(mean_a - mean_b) > tol.mean_tol:
        raise ConsistencyError(f"mean index routes disagree: {mean_a!r} vs {mean_b!r}", mean_a, mean_b)
    M = path.endpoint
    splitting = []
    for e in circle_spectrum(M, tol):
        sp, sm = _splitting_on(path, e.value, tol)
        splitting.append((e.value, sp, sm))
    return IndexProfile(path.n, rows[0][1], rows[0][2], rows, mean_a, splitting,
                        minimal_period(M), single, mean_b, circle)


def ekeland_index(profile: IndexProfile, n: Optional[int] = None):
    """Rows ``(m, i(y^m), nu(y^m))`` with the index shifted by ``-n``."""
    n = profile.n if n is None else n
    return [(m, i - n, nu) for m, i, nu in profile.table]
