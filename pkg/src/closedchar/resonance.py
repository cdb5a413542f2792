"""Average Euler characteristics and the resonance sum, with Morse-count bookkeeping.

Everything that is an integer or a ratio of integers is kept exact with
``fractions.Fraction``; only the division by the mean index is floating.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil

import numpy as np

from .errors import CriticalTypeError, DepthError, InvariantViolationError, PreconditionError

RULES = {
    "range": "k_l(y^m) vanishes for l outside [0, nu(y^m) - 1]",
    "binary": "k_0 and k_{nu-1} take only the values 0 and 1",
    "i": "k_0 = 1 forces k_l = 0 for 1 <= l <= nu - 1",
    "ii": "k_{nu-1} = 1 forces k_l = 0 for 0 <= l <= nu - 2",
    "iii": "k_l >= 1 for some 1 <= l <= nu - 2 forces k_0 = k_{nu-1} = 0",
    "iv": "for nu <= 3 at most one k_l is non-zero",
}


def validate_critical_types(k, nu, n):
    """Check one vector ``k_0..k_{2n-2}`` of critical type numbers.

    Raises
    ------
    CriticalTypeError
        Naming the violated rule (``range``, ``binary``, ``i``..``iv``).
    """
    k = [int(v) for v in k]
    if len(k) != 2 * n - 1:
        raise CriticalTypeError(f"expected {2 * n - 1} entries, got {len(k)}", "range")
    if any(v < 0 for v in k):
        raise CriticalTypeError("critical type numbers are nonnegative", "range")
    if nu < 1:
        if any(k):
            raise CriticalTypeError(RULES["range"], "range")
        return k
    top = nu - 1
    if any(v for l, v in enumerate(k) if l > top):
        raise CriticalTypeError(RULES["range"], "range")
    if k[0] > 1 or k[top] > 1:
        raise CriticalTypeError(RULES["binary"], "binary")
    # (iii) first: given the binary rule it is implied by (i) and (ii), and the
    # more specific name is the useful one in an error message
    if any(k[1:top]) and (k[0] or k[top]):
        raise CriticalTypeError(RULES["iii"], "iii")
    if k[0] == 1 and any(k[1:top + 1]):
        raise CriticalTypeError(RULES["i"], "i")
    if k[top] == 1 and any(k[:top]):
        raise CriticalTypeError(RULES["ii"], "ii")
    if nu <= 3 and sum(1 for v in k[:nu] if v) > 1:
        raise CriticalTypeError(RULES["iv"], "iv")
    return k


@dataclass
class CriticalTypeNumbers:
    """``k_l(y^m)`` for ``m = 1..K``; ``values[m]`` is the list over ``l``."""
    values: dict
    n: int

    def validate(self, ekeland_rows):
        nus = {m: nu for m, _, nu in ekeland_rows}
        for m, k in self.values.items():
            if m not in nus:
                raise DepthError(f"no index data for iterate {m}", m)
            self.values[m] = validate_critical_types(k, nus[m], self.n)
        return self

    def __getitem__(self, m):
        return self.values[m]

    def to_json(self):
        return {str(m): list(v) for m, v in sorted(self.values.items())}

    @classmethod
    def from_json(cls, d, n):
        return cls({int(m): [int(x) for x in v] for m, v in d.items()}, n)


def nondegenerate_critical_types(ekeland_rows, n, K=2):
    """The pattern for non-degenerate iterates: ``k_0(y^m) = 1`` iff ``i(y^m) - i(y)`` is even."""
    i1 = ekeland_rows[0][1]
    vals = {}
    for m, i, nu in ekeland_rows[:K]:
        if nu != 1:
            raise PreconditionError(f"iterate {m} is degenerate (nu = {nu})")
        k = [0] * (2 * n - 1)
        k[0] = 1 if (i - i1) % 2 == 0 else 0
        vals[m] = k
    return CriticalTypeNumbers(vals, n)


def euler_characteristic(ekeland_rows, K, k: CriticalTypeNumbers):
    """Per-iterate ``chi(y^m)`` for ``m <= K`` and the average ``chi_hat`` as a Fraction.

    Parameters
    ----------
    ekeland_rows : list of ``(m, i(y^m), nu(y^m))``
    K : int or None
        ``None`` marks an unbounded denominator; then the average is undefined.
    """
    if K is None:
        raise PreconditionError("average Euler characteristic unsupported for unbounded K")
    if len(ekeland_rows) < K:
        raise DepthError(f"need index data up to m = {K}", K)
    chis = []
    for m, i, nu in ekeland_rows[:K]:
        if m not in k.values:
            raise PreconditionError(f"missing critical type numbers for iterate {m}")
        chis.append(sum((-1) ** ((i + l) % 2) * v for l, v in enumerate(k[m])))
    return chis, Fraction(sum(chis), K)


def nondegenerate_chi(ekeland_rows):
    """``chi_hat`` of an orbit all of whose iterates are non-degenerate."""
    if any(nu != 1 for _, _, nu in ekeland_rows):
        raise PreconditionError("some tabulated iterate is degenerate")
    if len(ekeland_rows) < 2:
        raise DepthError("need i(y) and i(y^2)", 2)
    i1, i2 = ekeland_rows[0][1], ekeland_rows[1][1]
    sign = -1 if i1 % 2 else 1
    return Fraction(sign) if (i2 - i1) % 2 == 0 else Fraction(sign, 2)


@dataclass
class ResonanceEntry:
    orbit: str
    mean_index: float
    chi_hat: Fraction

    @property
    def contribution(self):
        return float(self.chi_hat) / self.mean_index


@dataclass
class ResonanceReport:
    entries: list
    excluded: list = field(default_factory=list)

    @property
    def total(self):
        # sequential fold in orbit order keeps the output reproducible
        s = 0.0
        for e in self.entries:
            s += e.contribution
        return s

    @property
    def residual(self):
        return abs(self.total - 0.5)

    def to_json(self):
        return {"entries": [{"orbit": e.orbit, "mean_index": e.mean_index,
                             "chi_hat": {"num": e.chi_hat.numerator, "den": e.chi_hat.denominator},
                             "contribution": e.contribution} for e in self.entries],
                "excluded": list(self.excluded), "total": self.total, "residual": self.residual}

    def csv_rows(self):
        yield ["orbit", "mean_index", "chi_hat", "contribution"]
        for e in self.entries:
            yield [e.orbit, repr(e.mean_index), str(e.chi_hat), repr(e.contribution)]


def resonance_sum(items, n, tol=1e-6):
    """Sum ``chi_hat / i_hat`` over orbits given as ``(name, i_hat, chi_hat)``.

    The mean index of a closed characteristic exceeds 2 except on the round
    circle in the plane, where it equals 2; below that an upstream defect is
    assumed.
    """
    entries = []
    for name, ihat, chi in items:
        floor_ok = ihat >= 2 - tol if n == 1 else ihat > 2
        if not floor_ok:
            raise InvariantViolationError(f"mean index {ihat!r} of orbit {name} does not exceed 2")
        entries.append(ResonanceEntry(str(name), float(ihat), Fraction(chi)))
    return ResonanceReport(entries)


# ---------------------------------------------------------------------------
# Morse counts

@dataclass
class MorseOrbit:
    """Data of one orbit for the Morse-count bookkeeping (Ekeland indices)."""
    rows: list                  # (m, i(y^m), nu(y^m))
    K: int
    k: CriticalTypeNumbers
    mean_index: float
    n: int

    def index(self, m):
        if m > len(self.rows):
            raise DepthError(f"index table ends at m = {len(self.rows)}", m)
        return self.rows[m - 1][1]


def required_depth(orbit: MorseOrbit, top):
    """Iterates needed so that every ``i(y^m) <= top`` is tabulated."""
    return int(ceil((top + 2 * orbit.n) / orbit.mean_index)) + 1


def morse_counts(orbits, I):
    """``w_h`` for ``h <= I + 1`` and ``M^I(-1)``.

    ``w_h`` counts, with weights ``k_l(y^m)``, the ``s >= 0`` for which
    ``i(y^{sK+m}) + l = h``.
    """
    w = np.zeros(I + 2, dtype=np.int64)
    for orb in orbits:
        need = required_depth(orb, I + 1)
        if len(orb.rows) < need:
            raise DepthError(f"Morse counts up to h = {I + 1} need m_max >= {need}", need)
        for m in range(1, orb.K + 1):
            for l, kl in enumerate(orb.k[m]):
                if not kl:
                    continue
                s = 0
                while s * orb.K + m <= len(orb.rows):
                    h = orb.index(s * orb.K + m) + l
                    if h > I + 1 and (s * orb.K + m) * orb.mean_index - 2 * orb.n > I + 1:
                        break
                    if 0 <= h <= I + 1:
                        w[h] += kl
                    s += 1
    signs = np.where(np.arange(I + 1) % 2 == 0, 1, -1)
    return w, int(signs @ w[:I + 1])


def morse_bound(orbits):
    """Upper bound ``sum_j sum_{l,m} k_l(y_j^m) (4n/(K_j i_hat_j) + 2)`` for every ``w_h``."""
    total = 0.0
    for orb in orbits:
        weight = sum(sum(orb.k[m]) for m in range(1, orb.K + 1))
        total += weight * (4 * orb.n / (orb.K * orb.mean_index) + 2)
    return total


def morse_slope(orbits, cutoffs=(250, 500, 1000, 2000)):
    """Least-squares slope of ``M^I(-1)`` against ``I`` over the cutoffs."""
    vals = np.array([morse_counts(orbits, I)[1] for I in cutoffs], dtype=float)
    x = np.asarray(cutoffs, dtype=float)
    slope, intercept = np.polyfit(x, vals, 1)
    return float(slope), vals.astype(int).tolist()


# ---------------------------------------------------------------------------
# audits

def lower_bound_term(i1, splus, nu1, n):
    """``floor((i(y,1) + 2 S+ - nu(y,1) + n) / 2)`` for one orbit."""
    return (i1 + 2 * splus - nu1 + n) // 2


def stability_audit(orbits, n, complete=False):
    """Consistency report for the orbit-count and stability statements.

    Parameters
    ----------
    orbits : list of dicts with keys ``classification`` (label string or
        object with ``irrationally_elliptic``), ``i1``, ``nu1``, ``splus``.
    complete : bool
        Whether the orbit list is known to be complete (analytic ellipsoids).
    """
    report = {"n": n, "count": len(orbits), "checks": {}, "violations": []}
    bounds = [lower_bound_term(o["i1"], o["splus"], o["nu1"], n) for o in orbits]
    report["lower_bound_terms"] = bounds
    report["lower_bound_min"] = min(bounds) if bounds else None
    if n == 2 and len(orbits) == 2:
        ok = all(_irr(o["classification"]) for o in orbits)
        report["checks"]["two_orbits_irrationally_elliptic"] = "PASS" if ok else "FAIL"
        if not ok:
            report["violations"].append("two-orbit system with an orbit that is not irrationally elliptic")
    if n == 3 and complete:
        ok = len(orbits) >= 3
        report["checks"]["at_least_three_orbits"] = "PASS" if ok else "FAIL"
        if not ok:
            report["violations"].append(f"only {len(orbits)} orbits found")
    return report


def _irr(c):
    if isinstance(c, str):
        return c.endswith("irrationally-elliptic") and c.startswith("non-degenerate")
    return bool(c.irrationally_elliptic) and not c.degenerate
