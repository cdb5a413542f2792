"""Linear symplectic algebra in the (q, p) convention.

Coordinates on R^{2n} are ordered ``(q_1..q_n, p_1..p_n)`` and the standard
structure is ``J = [[0, -I], [I, 0]]``, so ``exp(theta J)`` is a rotation by
``theta`` in every (q_k, p_k) plane.

Symplectic matrices are plain ``numpy`` arrays; ``check_symplectic`` is the
gatekeeper that validates and freezes them.
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from . import settings
from .errors import NotSymplecticError, RangeError


@lru_cache(maxsize=None)
def _standard_j(n):
    j = np.zeros((2 * n, 2 * n))
    j[:n, n:] = -np.eye(n)
    j[n:, :n] = np.eye(n)
    j.flags.writeable = False
    return j


def standard_j(n: int) -> np.ndarray:
    """Return the read-only standard structure ``J`` of size 2n."""
    return _standard_j(int(n))


def half_dim(M) -> int:
    size = np.shape(M)[-1]
    if size % 2 or np.shape(M)[-2] != size:
        raise ValueError(f"expected a square matrix of even size, got {np.shape(M)}")
    return size // 2


def symplectic_defect(M) -> float:
    """Scaled defect ``|M^T J M - J|_inf / max(1, |M|_inf^2)``.

    The scaling keeps the check meaningful for large iterates of hyperbolic
    matrices, whose entries grow geometrically.
    """
    M = np.asarray(M, dtype=float)
    J = standard_j(half_dim(M))
    scale = max(1.0, np.linalg.norm(M, np.inf) ** 2)
    return np.linalg.norm(M.T @ J @ M - J, np.inf) / scale


def is_symplectic(M, tol=None) -> bool:
    tol = settings.current().symp if tol is None else tol
    return symplectic_defect(M) <= tol


def check_symplectic(M, tol=None) -> np.ndarray:
    """Validate ``M`` and return it as a read-only float array."""
    tol = settings.current().symp if tol is None else tol
    M = np.array(M, dtype=float)
    defect = symplectic_defect(M)
    if defect > tol:
        raise NotSymplecticError(f"matrix is not symplectic (defect {defect:.3e} > {tol:.1e})")
    det = np.linalg.det(M)
    if abs(det - 1.0) > max(tol, tol * abs(det)) * 10:
        raise NotSymplecticError(f"determinant {det!r} differs from 1")
    M.flags.writeable = False
    return M


def split_blocks(M):
    n = half_dim(M)
    return M[:n, :n], M[:n, n:], M[n:, :n], M[n:, n:]


def diamond(M1, M2) -> np.ndarray:
    """Interleaved direct sum of two symplectic matrices.

    With ``Mi = [[Ai, Bi], [Ci, Di]]`` the result is::

        [[A1, 0, B1, 0],
         [0, A2, 0, B2],
         [C1, 0, D1, 0],
         [0, C2, 0, D2]]
    """
    M1 = np.asarray(M1)
    M2 = np.asarray(M2)
    n1, n2 = half_dim(M1), half_dim(M2)
    A1, B1, C1, D1 = split_blocks(M1)
    A2, B2, C2, D2 = split_blocks(M2)
    n = n1 + n2
    dtype = np.result_type(M1, M2)
    out = np.zeros((2 * n, 2 * n), dtype=dtype)
    out[:n1, :n1] = A1
    out[n1:n, n1:n] = A2
    out[:n1, n:n + n1] = B1
    out[n1:n, n + n1:] = B2
    out[n:n + n1, :n1] = C1
    out[n + n1:, n1:n] = C2
    out[n:n + n1, n:n + n1] = D1
    out[n + n1:, n + n1:] = D2
    return out


def diamond_all(mats):
    mats = list(mats)
    if not mats:
        raise ValueError("empty diamond product")
    out = np.asarray(mats[0])
    for M in mats[1:]:
        out = diamond(out, M)
    return out


def rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


# ---------------------------------------------------------------------------
# basic normal forms

@dataclass(frozen=True)
class BasicNormalForm:
    """One of the 2x2 or 4x4 model matrices ``D``, ``N1``, ``R`` or ``N2``.

    ``params`` holds ``(lam,)`` for D, ``(lam, b)`` for N1, ``(theta,)`` for R
    and ``(theta, b1, b2, b3, b4)`` for N2.
    """
    kind: str
    params: tuple

    def __post_init__(self):
        _validate_normal_form(self.kind, self.params)

    @property
    def dim(self):
        return 4 if self.kind == "N2" else 2

    def matrix(self):
        return realize(self)

    def __str__(self):
        if self.kind == "R":
            return f"R({self.params[0]:.12g})"
        if self.kind == "N1":
            lam, b = self.params
            return f"N1({lam:g},{b:g})"
        if self.kind == "D":
            return f"D({self.params[0]:g})"
        return "N2(" + ",".join(f"{p:.6g}" for p in self.params) + ")"

    def to_dict(self):
        return {"kind": self.kind, "params": [float(p) for p in self.params]}

    @classmethod
    def from_dict(cls, d):
        return cls(d["kind"], tuple(d["params"]))


def D(lam):
    return BasicNormalForm("D", (float(lam),))


def N1(lam, b):
    return BasicNormalForm("N1", (float(lam), float(b)))


def R(theta):
    return BasicNormalForm("R", (float(theta),))


def N2(theta, b):
    b = np.asarray(b, dtype=float).ravel()
    return BasicNormalForm("N2", (float(theta),) + tuple(b))


def _validate_normal_form(kind, params):
    if kind == "D":
        if len(params) != 1 or params[0] not in (2.0, -2.0):
            raise RangeError(f"D(lambda) needs lambda = +-2, got {params}")
    elif kind == "N1":
        if len(params) != 2 or params[0] not in (1.0, -1.0) or params[1] not in (-1.0, 0.0, 1.0):
            raise RangeError(f"N1(lambda, b) needs lambda = +-1 and b in {{-1, 0, 1}}, got {params}")
    elif kind in ("R", "N2"):
        theta = params[0] if params else np.nan
        if not (0 < theta < 2 * np.pi) or theta == np.pi:
            raise RangeError(f"{kind} angle must lie in (0, pi) or (pi, 2 pi), got {theta}")
        if kind == "N2":
            if len(params) != 5:
                raise RangeError("N2 needs theta and four block entries")
            if params[2] == params[3]:
                raise RangeError("N2 block needs b2 != b3")
    else:
        raise RangeError(f"unknown normal form kind {kind!r}")


def realize(nf: BasicNormalForm) -> np.ndarray:
    """Literal matrix of a basic normal form."""
    k, p = nf.kind, nf.params
    if k == "D":
        M = np.diag([p[0], 1.0 / p[0]])
    elif k == "N1":
        M = np.array([[p[0], p[1]], [0.0, p[0]]])
    elif k == "R":
        M = rotation(p[0])
    else:
        M = np.zeros((4, 4))
        M[:2, :2] = rotation(p[0])
        M[2:, 2:] = rotation(p[0])
        M[:2, 2:] = np.reshape(p[1:], (2, 2))
        if not is_symplectic(M):
            raise RangeError("N2 block b does not give a symplectic matrix")
    return check_symplectic(M)


def realize_all(forms) -> np.ndarray:
    return diamond_all(realize(f) for f in forms)


# ---------------------------------------------------------------------------
# eigenvalue data

def _check_unit(omega, tol):
    if abs(abs(omega) - 1.0) > tol:
        raise RangeError(f"omega={omega} is not on the unit circle")
    return complex(omega) / abs(omega)


def nu_omega(M, omega, tol=None) -> int:
    """Complex dimension of ``ker(M - omega I)`` by singular value thresholding."""
    tol = settings.current() if tol is None else tol
    omega = _check_unit(omega, tol.eig)
    M = np.asarray(M)
    scale = max(1.0, np.linalg.norm(M, 2))
    # near a Jordan block sigma_min(M - omega) ~ dist^2, so gate on eigenvalues first
    if np.min(np.abs(np.linalg.eigvals(M) - omega)) > tol.cluster * scale:
        return 0
    sv = np.linalg.svd(M - omega * np.eye(M.shape[0]), compute_uv=False)
    return int(np.sum(sv <= tol.rank * scale))


def d_omega(M, omega, tol=None) -> float:
    """Real function ``(-1)^(n-1) conj(omega)^n det(M - omega I)``."""
    tol = settings.current() if tol is None else tol
    omega = _check_unit(omega, tol.eig)
    M = np.asarray(M)
    n = half_dim(M)
    val = (-1) ** (n - 1) * np.conj(omega) ** n * np.linalg.det(M - omega * np.eye(2 * n))
    if abs(val.imag) > tol.symp * max(1.0, abs(val)) * 1e2:
        raise ValueError(f"imaginary residue {val.imag:.3e} in D_omega")
    return float(val.real)


class EigenCluster(NamedTuple):
    value: complex     # cluster centre, snapped to the circle when on it
    alg: int           # algebraic multiplicity (cluster size)
    geom: int          # geometric multiplicity (0 if not computed)
    on_circle: bool


def eigen_clusters(M, tol=None):
    """Group eigenvalues of ``M`` into clusters.

    Jordan blocks split under rounding by roughly the square root of machine
    precision, so eigenvalues closer than ``tol.cluster`` are merged and
    represented by their mean, which is accurate to rounding level.
    """
    tol = settings.current() if tol is None else tol
    M = np.asarray(M)
    ev = np.linalg.eigvals(M)
    scale = max(1.0, np.max(np.abs(ev)))
    parent = list(range(len(ev)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(ev)):
        for j in range(i + 1, len(ev)):
            if abs(ev[i] - ev[j]) <= tol.cluster * scale:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(len(ev)):
        groups.setdefault(find(i), []).append(ev[i])
    out = []
    for vals in groups.values():
        c = complex(np.mean(vals))
        on = abs(abs(c) - 1.0) <= tol.eig
        if on:
            c = c / abs(c)
            if abs(c.imag) <= tol.cluster:
                c = complex(np.sign(c.real), 0.0)
            geom = nu_omega(M, c, tol)
        else:
            if abs(c.imag) <= tol.cluster * scale:
                c = complex(c.real, 0.0)
            geom = 0
        out.append(EigenCluster(c, len(vals), geom, on))
    out.sort(key=lambda e: (not e.on_circle, np.angle(e.value) % (2 * np.pi), abs(e.value)))
    return out


def circle_spectrum(M, tol=None):
    """Eigenvalues on the unit circle as ``EigenCluster`` records."""
    return [e for e in eigen_clusters(M, tol) if e.on_circle]


# ---------------------------------------------------------------------------
# constructions

def random_symplectic(n, rng=None, scale=0.5) -> np.ndarray:
    """Random symplectic matrix as a product of shears and a block-diagonal factor."""
    rng = np.random.default_rng(rng)
    S1 = rng.normal(scale=scale, size=(n, n))
    S2 = rng.normal(scale=scale, size=(n, n))
    A = np.eye(n) + rng.normal(scale=scale, size=(n, n))
    while abs(np.linalg.det(A)) < 0.2:
        A = np.eye(n) + rng.normal(scale=scale, size=(n, n))
    up = np.block([[np.eye(n), S1 + S1.T], [np.zeros((n, n)), np.eye(n)]])
    low = np.block([[np.eye(n), np.zeros((n, n))], [S2 + S2.T, np.eye(n)]])
    mid = np.block([[A, np.zeros((n, n))], [np.zeros((n, n)), np.linalg.inv(A).T]])
    return up @ mid @ low


def hamiltonian_exp(S, t=1.0) -> np.ndarray:
    """``exp(t J S)`` for a symmetric ``S``."""
    S = np.asarray(S, dtype=float)
    return sla.expm(t * standard_j(half_dim(S)) @ S)


def project_symplectic(M, tol=None, maxiter=50) -> np.ndarray:
    """Pull a nearly symplectic matrix back onto Sp(2n).

    Uses the Newton-type iteration ``M <- (M + J M^{-T} J^T) / 2``, the
    symplectic analogue of the polar iteration; its fixed points are
    exactly the symplectic matrices and convergence is quadratic nearby.
    """
    tol = settings.current().symp if tol is None else tol
    M = np.array(M, dtype=float)
    J = standard_j(half_dim(M))
    for _ in range(maxiter):
        if symplectic_defect(M) <= tol * 1e-3:
            break
        M = 0.5 * (M + J @ np.linalg.inv(M).T @ J.T)
    return M


def symplectic_inverse(M) -> np.ndarray:
    """``M^{-1} = -J M^T J`` for symplectic ``M``."""
    J = standard_j(half_dim(M))
    return -J @ np.asarray(M).T @ J


def matrix_to_json(M):
    M = np.asarray(M, dtype=float)
    return {"n": half_dim(M), "entries": [[float(x) for x in row] for row in M]}


def matrix_from_json(d, validate=True):
    M = np.array(d["entries"], dtype=float)
    if half_dim(M) != int(d["n"]):
        raise ValueError("matrix size does not match n")
    return check_symplectic(M) if validate else M
