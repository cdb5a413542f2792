"""Sampled symplectic paths starting at the identity.

A path is stored as sample times and matrices.  Between samples it is
continued by the Cayley curve ``s -> (I - sX)^{-1} (I + sX) M_k`` with
``X = (D - I)(D + I)^{-1}`` and ``D = M_{k+1} M_k^{-1}``; every point of that
curve is symplectic, so refinement never leaves the group.  The increment is
taken on the right-hand side of ``M_k`` so that a path multiplied from the
right by a fixed matrix (an iterated path) keeps well-conditioned increments.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import settings
from .errors import NotSymplecticError, ResolutionError
from .symplectic import (BasicNormalForm, check_symplectic, diamond_all, half_dim,
                         realize, rotation, standard_j, symplectic_defect)


def _cayley_generators(mats):
    """Cayley generators of consecutive increments, batched."""
    D = mats[1:] @ np.linalg.inv(mats[:-1])
    I = np.eye(mats.shape[-1])
    plus = D + I
    if np.any(np.linalg.cond(plus) > 1e8):
        raise ResolutionError("consecutive samples too far apart for Cayley interpolation")
    # X = (D - I)(D + I)^{-1}; solve on the right via transposes
    X = np.linalg.solve(np.swapaxes(plus, -1, -2), np.swapaxes(D - I, -1, -2))
    return np.swapaxes(X, -1, -2)


def cayley_midpoints(mats, s=0.5):
    """Points at fraction ``s`` of every Cayley segment between samples."""
    X = _cayley_generators(mats)
    I = np.eye(mats.shape[-1])
    step = np.linalg.solve(I - s * X, I + s * X)
    return step @ mats[:-1]


@dataclass(frozen=True)
class SymplecticPath:
    """Time-sampled path in Sp(2n) with ``mats[0] = I``.

    Parameters
    ----------
    times : (K,) array
        Strictly increasing sample times, ``times[0] = 0``.
    mats : (K, 2n, 2n) array
        Symplectic samples.
    """
    times: np.ndarray
    mats: np.ndarray
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        m = np.array(self.mats, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "mats", m)
        t.flags.writeable = False
        m.flags.writeable = False
        if m.ndim != 3 or m.shape[0] != t.shape[0] or t.shape[0] < 2:
            raise ValueError("need at least two samples with matching times")
        half_dim(m[0])
        if not self.validate:
            return
        tol = settings.current()
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ValueError("sample times must start at 0 and increase strictly")
        if np.abs(m[0] - np.eye(m.shape[1])).max() > tol.symp * 10:
            raise ValueError("path must start at the identity")
        bad = [k for k in range(len(t)) if symplectic_defect(m[k]) > tol.symp]
        if bad:
            raise NotSymplecticError(f"path sample {bad[0]} is not symplectic")

    @property
    def n(self):
        return self.mats.shape[1] // 2

    @property
    def tau(self):
        return float(self.times[-1])

    @property
    def endpoint(self):
        return self.mats[-1]

    def __len__(self):
        return len(self.times)

    def at(self, t):
        """Evaluate the Cayley-interpolated path at time ``t``."""
        k = int(np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.times) - 2))
        t0, t1 = self.times[k], self.times[k + 1]
        s = (t - t0) / (t1 - t0)
        return cayley_midpoints(self.mats[k:k + 2], s)[0]

    def refined(self, factor=2):
        """Insert ``factor - 1`` Cayley points inside every interval."""
        times = [self.times[:-1]]
        mats = [self.mats[:-1]]
        for j in range(1, factor):
            s = j / factor
            times.append(self.times[:-1] + s * np.diff(self.times))
            mats.append(cayley_midpoints(self.mats, s))
        t = np.stack(times, axis=1).reshape(-1)
        m = np.stack(mats, axis=1).reshape(-1, *self.mats.shape[1:])
        return SymplecticPath(np.append(t, self.times[-1]), np.concatenate([m, self.mats[-1:]]),
                              validate=False)

    def conjugated(self, P):
        """Path ``t -> P^{-1} gamma(t) P`` (still starting at the identity)."""
        P = np.asarray(P, dtype=float)
        return SymplecticPath(self.times, np.linalg.inv(P) @ self.mats @ P, validate=False)

    def to_json(self):
        return {"n": self.n, "times": self.times.tolist(),
                "mats": [[row.tolist() for row in M] for M in self.mats]}


def path_from_function(func, tau, num=200):
    """Sample ``func`` on a uniform grid of ``num`` points in [0, tau]."""
    t = np.linspace(0.0, tau, num)
    return SymplecticPath(t, np.array([func(s) for s in t]))


def scaling_path(n, num=64):
    """Path from ``diag(2, 1/2)`` to the identity in every (q_k, p_k) plane."""
    s = np.linspace(0.0, 1.0, num)
    lam = 2.0 - s
    mats = np.zeros((num, 2 * n, 2 * n))
    idx = np.arange(n)
    mats[:, idx, idx] = lam[:, None]
    mats[:, idx + n, idx + n] = 1.0 / lam[:, None]
    return mats


def iterate_path(path: SymplecticPath, m: int) -> SymplecticPath:
    """The m-th iteration ``gamma(t - j tau) gamma(tau)^j`` on [0, m tau]."""
    if m < 1:
        raise ValueError("iteration count must be positive")
    if m == 1:
        return path
    M = path.endpoint
    times = [path.times]
    mats = [path.mats]
    power = np.eye(M.shape[0])
    for j in range(1, m):
        power = power @ M
        times.append(path.times[1:] + j * path.tau)
        mats.append(path.mats[1:] @ power)
    return SymplecticPath(np.concatenate(times), np.concatenate(mats), validate=False)


def real_logarithm(M, tol=1e-9):
    """Real Hamiltonian logarithm of ``M`` or ``None`` when none is found."""
    M = np.asarray(M, dtype=float)
    if np.any(np.isclose(np.linalg.eigvals(M), -1.0, atol=1e-6)):
        return None
    with np.errstate(all="ignore"):
        try:
            L = sla.logm(M)
        except Exception:
            return None
    if not np.all(np.isfinite(L)):
        return None
    L = np.asarray(L)
    if np.iscomplexobj(L):
        if np.abs(L.imag).max() > tol * max(1.0, np.abs(L).max()):
            return None
        L = L.real
    J = standard_j(half_dim(M))
    S = -J @ L
    if np.abs(S - S.T).max() > 1e-6 * max(1.0, np.abs(S).max()):
        return None
    return J @ (0.5 * (S + S.T))


def canonical_path(M, num=256):
    """Path ``t -> exp(t log M)`` on [0, 1], or ``None`` without a real log."""
    L = real_logarithm(M)
    if L is None:
        return None
    t = np.linspace(0.0, 1.0, num)
    mats = np.array([sla.expm(s * L) for s in t])
    mats[-1] = M
    return SymplecticPath(t, mats, validate=False)


# ---------------------------------------------------------------------------
# model paths ending at diamond products of basic normal forms

def _block_path(nf: BasicNormalForm, winding: int, t):
    """Samples of a path in Sp(2) from I to ``nf`` with ``winding`` extra turns."""
    k, p = nf.kind, nf.params
    rot = np.array([rotation(2 * np.pi * winding * s) for s in t])
    if k == "R":
        base = np.array([rotation(p[0] * s) for s in t])
    elif k == "D":
        hyp = np.array([np.diag([2.0 ** s, 2.0 ** -s]) for s in t])
        base = hyp if p[0] > 0 else np.array([rotation(np.pi * s) for s in t]) @ hyp
    elif k == "N1":
        lam, b = p
        shear = np.array([[[1.0, lam * b * s], [0.0, 1.0]] for s in t])
        base = shear if lam > 0 else np.array([rotation(np.pi * s) for s in t]) @ shear
    else:
        raise ValueError("N2 blocks use canonical paths")
    out = rot @ base
    out[-1] = realize(nf)
    return out


def normal_form_path(forms, windings=None, P=None, num=256):
    """Path on [0, 1] ending at the diamond product of ``forms``.

    Parameters
    ----------
    forms : sequence of BasicNormalForm
    windings : sequence of int, optional
        Extra full turns prepended (as rotations) to every block.
    P : array, optional
        Symplectic matrix; the path is conjugated to ``P^{-1} gamma P``.
    """
    forms = list(forms)
    windings = [0] * len(forms) if windings is None else list(windings)
    t = np.linspace(0.0, 1.0, num)
    blocks = []
    for nf, w in zip(forms, windings):
        if nf.kind == "N2":
            cp = canonical_path(realize(nf), num)
            if cp is None:
                raise ValueError("no real logarithm for N2 block")
            # full turns of exp(s J) in both (q, p) planes of the 4x4 block
            rot4 = np.zeros((num, 4, 4))
            for j, s in enumerate(t):
                c, sn = np.cos(2 * np.pi * w * s), np.sin(2 * np.pi * w * s)
                rot4[j] = np.block([[c * np.eye(2), -sn * np.eye(2)], [sn * np.eye(2), c * np.eye(2)]])
            blocks.append(rot4 @ cp.mats)
        else:
            blocks.append(_block_path(nf, w, t))
    mats = np.array([diamond_all(b[j] for b in blocks) for j in range(num)])
    path = SymplecticPath(t, mats, validate=False)
    if P is not None:
        path = path.conjugated(check_symplectic(P, tol=1e-8))
    return path
