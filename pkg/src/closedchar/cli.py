"""Command line front-end: ``closedchar orbits|indices|resonance``.

Each subcommand reads a JSON run config and writes its products into the
output directory.  Exit codes: 0 on success, 1 for input problems (config,
missing files, invalid critical type numbers), 2 for solver or invariant
failures.
"""
import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import settings
from .errors import ClosedCharError, CriticalTypeError
from .floquet import classify, linearize, tangent_checks, tangent_checks_pass
from .geometry import (Ellipsoid, HomogeneousHamiltonian, body_from_json,
                       check_body)
from .index import IndexProfile, ekeland_index, iteration_profile
from .orbits import (ClosedCharacteristic, deduplicate, dual_action_orbits, ellipsoid_orbits,
                     find_orbits_by_shooting, monotonicity_audit, shooting_seeds)
from .resonance import (CriticalTypeNumbers, MorseOrbit, euler_characteristic, morse_bound,
                        morse_counts, morse_slope, nondegenerate_chi,
                        nondegenerate_critical_types, required_depth, resonance_sum,
                        stability_audit)

log = logging.getLogger("closedchar")

SOLVERS = ("analytic", "shooting", "dual-action")
DEFAULTS = {"solvers": ["analytic"], "tolerances": {}, "m_max": 12, "direct_max": 4,
            "morse_cutoffs": [250, 500, 1000, 2000], "seed": 0, "samples": 128,
            "alpha": 1.5, "klist": None}


class ConfigError(Exception):
    """Malformed run config; ``field`` names the offending key."""

    def __init__(self, field, message):
        super().__init__(f"config field '{field}': {message}")
        self.field = field


# ---------------------------------------------------------------------------
# io

def write_json(path, obj):
    text = json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def read_json(path, what):
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"{what} not found: {p}")
    return json.loads(p.read_text(encoding="utf-8"))


def write_csv(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)


# ---------------------------------------------------------------------------
# config

def load_config(path, args):
    try:
        raw = read_json(path, "config")
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigError("<file>", "top level must be an object")
    cfg = dict(DEFAULTS)
    cfg.update(raw)
    for key, val in (("seed", args.seed), ("m_max", args.m_max), ("n_modes", args.modes)):
        if val is not None:
            cfg[key] = val
    cfg["workers"] = args.workers if args.workers is not None else (os.cpu_count() or 1)

    body = cfg.get("body")
    if not body:
        raise ConfigError("body", "missing or empty")
    try:
        cfg["_body"] = body_from_json(body)
    except KeyError as exc:
        raise ConfigError(f"body.{exc.args[0]}", "missing") from None
    except (ValueError, TypeError) as exc:
        raise ConfigError("body", str(exc)) from None

    solvers = cfg["solvers"]
    if not isinstance(solvers, list) or not solvers or any(s not in SOLVERS for s in solvers):
        raise ConfigError("solvers", f"expected a non-empty list from {list(SOLVERS)}")
    if "analytic" in solvers and not isinstance(cfg["_body"], Ellipsoid):
        raise ConfigError("solvers", "analytic orbits need an ellipsoid body")
    for key, low in (("m_max", 2), ("direct_max", 1), ("samples", 16), ("seed", 0), ("workers", 1)):
        if not isinstance(cfg[key], int) or isinstance(cfg[key], bool) or cfg[key] < low:
            raise ConfigError(key, f"expected an integer >= {low}")
    cuts = cfg["morse_cutoffs"]
    if not isinstance(cuts, list) or not cuts or any(not isinstance(c, int) or c < 1 for c in cuts):
        raise ConfigError("morse_cutoffs", "expected a non-empty list of positive integers")
    if not isinstance(cfg["alpha"], (int, float)) or not 1 < cfg["alpha"] < 2:
        raise ConfigError("alpha", "expected a number in (1, 2)")
    tols = cfg["tolerances"]
    if not isinstance(tols, dict):
        raise ConfigError("tolerances", "expected an object")
    known = set(settings.Tolerances.__dataclass_fields__)
    if "n_modes" in cfg:
        tols = dict(tols, n_modes=cfg["n_modes"])
    for name, val in tols.items():
        if name not in known:
            raise ConfigError(f"tolerances.{name}", "unknown tolerance")
        if not isinstance(val, (int, float)) or isinstance(val, bool) or val <= 0:
            raise ConfigError(f"tolerances.{name}", "must be positive")
    settings.reset()
    settings.configure(**tols)
    return cfg


# ---------------------------------------------------------------------------
# orbits

def _axis_radii(body):
    dim = 2 * body.n
    return np.array([1.0 / body.gauge(np.eye(dim)[i]) for i in range(dim)])


def cmd_orbits(cfg, out):
    body = cfg["_body"]
    check_body(body, rng=np.random.default_rng(cfg["seed"]))
    radii = _axis_radii(body)
    t_max = float(cfg.get("t_max", 1.5 * np.pi * radii.max() ** 2 * 2))
    found = []
    if "analytic" in cfg["solvers"]:
        found += ellipsoid_orbits(body, samples=cfg["samples"])
    if "shooting" in cfg["solvers"]:
        seeds = shooting_seeds(body, k_random=cfg.get("k_random"), seed=cfg["seed"])
        found += find_orbits_by_shooting(body, t_max, seeds, workers=cfg["workers"],
                                         samples=cfg["samples"])
    audit = None
    if "dual-action" in cfg["solvers"]:
        a = 3 * t_max
        vartheta = 0.9 * min(t_max, radii.min() ** 2) / a
        Hm, results = dual_action_orbits(body, a, vartheta=vartheta, workers=cfg["workers"],
                                         samples=cfg["samples"])
        for res in results:
            res.orbit.validate(body)
            found.append(res.orbit)
        if results:
            audit = monotonicity_audit(Hm, [r.orbit.tau for r in results])
    if not found:
        raise ClosedCharError("no closed characteristic found")
    primes = sorted(deduplicate(found), key=lambda o: o.tau)
    doc = {"n": body.n, "orbits": [dict(o.to_json(), id=f"y{k + 1}") for k, o in enumerate(primes)]}
    if audit is not None:
        doc["monotonicity_audit"] = audit
    write_json(out / "body.json", body.to_json())
    write_json(out / "orbits.json", doc)
    print(f"{len(primes)} closed characteristic(s) on a {body.n}-degree-of-freedom body")
    for o, d in zip(primes, doc["orbits"]):
        print(f"  {d['id']}: tau = {o.tau:.12g}  source = {o.source}  residual = {o.residual:.2e}")
    return 0


# ---------------------------------------------------------------------------
# indices

def cmd_indices(cfg, out):
    body = cfg["_body"]
    doc = read_json(out / "orbits.json", "orbits file")
    Hm = HomogeneousHamiltonian(body, cfg["alpha"])
    entries = []
    for d in doc["orbits"]:
        orb = ClosedCharacteristic.from_json(d)
        md = linearize(Hm, orb, cfg["samples"])
        checks = tangent_checks(md)
        prof = iteration_profile(md.path, cfg["m_max"], min(cfg["direct_max"], cfg["m_max"]))
        cls = classify(md)
        splus = next((sp for w, sp, _ in prof.splitting if abs(w - 1) < 1e-9), 0)
        entries.append({"id": d["id"], "tau": orb.tau, "source": orb.source,
                        "monodromy": md.to_json(), "classification": cls.label,
                        "tangent_checks_pass": bool(tangent_checks_pass(checks)),
                        "profile": prof.to_json(),
                        "ekeland": [list(r) for r in ekeland_index(prof)],
                        "splus_one": int(splus)})
    write_json(out / "indices.json", {"n": body.n, "alpha": cfg["alpha"], "orbits": entries})
    for e in entries:
        print(f"  {e['id']}: mean index {e['profile']['mean_index']:.12g}  {e['classification']}")
    return 0


# ---------------------------------------------------------------------------
# resonance

def _load_klist(cfg, out):
    path = cfg["klist"]
    if path is None:
        path = out / "klist.json"
        if not path.is_file():
            return {}
    return read_json(path, "critical type sidecar")


def _orbit_k(entry, rows, K, n, klist):
    """Critical type numbers and chi_hat, or a reason for excluding the orbit."""
    head = rows[:max(K, 2)]
    degenerate = any(nu != 1 for _, _, nu in head)
    if entry["id"] in klist:
        k = CriticalTypeNumbers.from_json(klist[entry["id"]], n)
        try:
            k.validate(rows)
        except CriticalTypeError as exc:
            raise CriticalTypeError(f"orbit {entry['id']}: rule {exc.rule}: {exc}", exc.rule) from None
        return k, euler_characteristic(rows, K, k)[1]
    if degenerate:
        return None, "degenerate iterate without critical type numbers"
    return nondegenerate_critical_types(rows, n, K), nondegenerate_chi(head)


def cmd_resonance(cfg, out):
    doc = read_json(out / "indices.json", "indices file")
    n = int(doc["n"])
    klist = _load_klist(cfg, out)
    items, excluded, morse_orbits, audit_in = [], [], [], []
    top = max(cfg["morse_cutoffs"]) + 1
    for e in doc["orbits"]:
        prof = IndexProfile.from_json(e["profile"])
        audit_in.append({"classification": e["classification"], "i1": prof.i1 - n,
                         "nu1": prof.nu1, "splus": e["splus_one"]})
        if prof.K is None:
            excluded.append({"orbit": e["id"], "reason": "unbounded-denominator"})
            continue
        probe = MorseOrbit([], prof.K, None, prof.mean_index, n)
        prof = prof.extended(max(prof.K, 2, required_depth(probe, top)))
        rows = ekeland_index(prof)
        k, chi = _orbit_k(e, rows, prof.K, n, klist)
        if k is None:
            excluded.append({"orbit": e["id"], "reason": chi})
            continue
        items.append((e["id"], prof.mean_index, chi))
        morse_orbits.append(MorseOrbit(rows, prof.K, k, prof.mean_index, n))
    report = resonance_sum(items, n)
    report.excluded = excluded
    complete = not excluded and isinstance(cfg["_body"], Ellipsoid)
    result = {"resonance": report.to_json(),
              "audit": stability_audit(audit_in, n, complete=complete)}
    cutoffs = sorted(cfg["morse_cutoffs"])
    if morse_orbits:
        w, _ = morse_counts(morse_orbits, cutoffs[-1])
        bound = morse_bound(morse_orbits)
        values = [morse_counts(morse_orbits, I)[1] for I in cutoffs]
        slope = morse_slope(morse_orbits, cutoffs)[0] if len(cutoffs) > 1 else None
        result["morse"] = {"cutoffs": cutoffs, "values": values, "slope": slope,
                           "bound": bound, "bound_ok": bool(w.max() <= bound)}
        write_csv(out / "morse.csv", [["h", "w_h"]] + [[h, int(v)] for h, v in enumerate(w)])
        write_csv(out / "series.csv", [["I", "M_over_I"]] +
                  [[I, repr(v / I)] for I, v in zip(cutoffs, values)])
    write_json(out / "resonance.json", result)
    write_csv(out / "resonance.csv", list(report.csv_rows()))
    print(f"resonance sum {report.total:.15g}  residual {report.residual:.3e}")
    for name, status in result["audit"]["checks"].items():
        print(f"  audit {name}: {status}")
    for x in excluded:
        print(f"  excluded {x['orbit']}: {x['reason']}")
    return 0


# ---------------------------------------------------------------------------

COMMANDS = {"orbits": cmd_orbits, "indices": cmd_indices, "resonance": cmd_resonance}


HELP = {"orbits": "find closed characteristics and write orbits.json",
        "indices": "linearize each orbit and tabulate iterated indices",
        "resonance": "resonance sum with Morse counts"}


def build_parser():
    p = argparse.ArgumentParser(prog="closedchar", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name, help=HELP[name])
        s.add_argument("--config", required=True, type=Path, help="JSON run configuration")
        s.add_argument("--out", type=Path, default=Path("."), help="output directory (default: .)")
        s.add_argument("--seed", type=int, help="override the config seed")
        s.add_argument("--workers", type=int, help="thread count for the orbit solvers")
        s.add_argument("--m-max", dest="m_max", type=int, help="deepest iterate in index tables")
        s.add_argument("--modes", type=int, help="Fourier modes for the dual action solver")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args)
        args.out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args.out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except CriticalTypeError as exc:
        print(f"error: invalid critical type numbers ({exc})", file=sys.stderr)
        return 1
    except (ClosedCharError, np.linalg.LinAlgError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    finally:
        settings.reset()


if __name__ == "__main__":
    sys.exit(main())
