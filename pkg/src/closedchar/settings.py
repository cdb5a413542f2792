"""Numerical tolerances shared by all modules.

The defaults live in a frozen dataclass.  ``configure`` swaps the process-wide
instance, which is how the command line applies overrides from a run config.
"""
from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    symp: float = 1e-10          # |M^T J M - J|, relative to max(1, |M|^2)
    eig: float = 1e-8            # distance of an eigenvalue from the unit circle
    rank: float = 1e-8           # relative singular value threshold
    cluster: float = 1e-5        # eigenvalue clustering radius (Jordan blocks split ~sqrt(eps))
    perturb_delta: float = 1e-4  # one-sided perturbation for degenerate endpoints
    max_refine: int = 60
    bracket: float = 1e-10       # minimal relative interval width during refinement
    path_resolution: float = 0.05
    mean_tol: float = 1e-6
    q_max: int = 64
    rational_tol: float = 1e-9
    close_tol: float = 1e-8
    dedup: float = 1e-6
    n_modes: int = 64
    k_random: int = 32

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) <= 0:
                raise ValueError(f"tolerance {f.name} must be positive")


_current = Tolerances()


def current():
    """Return the active tolerance set."""
    return _current


def configure(**overrides):
    """Replace the active tolerances; unknown names raise ``TypeError``."""
    global _current
    _current = replace(_current, **overrides)
    return _current


def reset():
    global _current
    _current = Tolerances()
    return _current
