"""Experiment runner: one subcommand per probe, declarative JSON configs,
deterministic CSV/JSON outputs plus a run manifest.

Exit codes: 0 success, 2 config validation error, 3 budget / bracket /
retry failures.  CSV bodies are bit-identical across reruns of the same
config and version; wall-clock and digests live only in the manifest.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

from . import __version__
from .graphs import BudgetExceededError, ball
from .canonical import CanonicalizationError
from .convergence import ball_distribution, locality_experiment, tv_distance
from .estimators import BracketError, pc_bisect, pt_diagnostic, pta_diagnostic
from .percolation import four_point_crossing
from .phi import expected_phi, ptilde_a_bisect, witness_search
from .reports import canonical_json, descriptor_hash, fmt, reports_to_csv, sha256_hex
from .rng import fold
from .sources import source_from_descriptor
from .sources.operators import RetryCapError
from .unimodularity import mtp_battery, mtp_test, standard_battery

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3


class ConfigError(ValueError):
    pass


def _parse_source(text):
    if isinstance(text, dict):
        desc = text
    else:
        try:
            desc = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"source is not valid JSON: {e}")
    try:
        src = source_from_descriptor(desc)
    except (ValueError, KeyError, TypeError) as e:
        raise ConfigError(str(e))
    return src


def _parse_grid(text) -> list:
    if isinstance(text, (int, float)):
        return [float(text)]
    return [float(t) for t in str(text).split(",") if t != ""]


def _parse_int_list(text) -> list:
    if isinstance(text, int):
        return [text]
    if isinstance(text, list):
        return [int(t) for t in text]
    return [int(t) for t in str(text).split(",") if t != ""]


_SCHEMAS = {
    "generate": {"source": (True, None), "radius": (False, 2), "seed": (False, 0)},
    "phi": {"source": (True, None), "radius": (False, 2), "p": (True, None),
            "method": (False, "auto"), "replicas": (False, 10000),
            "seed": (False, 0)},
    "witness": {"source": (True, None), "p": (True, None), "r_max": (False, 8),
                "trim": (False, False), "replicas": (False, 20000),
                "seed": (False, 0)},
    "estimate-pc": {"source": (True, None), "quantity": (False, "pc"),
                    "radii": (False, "25,50,100"), "p_lo": (True, None),
                    "p_hi": (True, None), "tol": (False, 0.02),
                    "replicas": (False, 2000), "theta_min": (False, 0.02),
                    "r_max": (False, 8), "seed": (False, 0)},
    "pt-diag": {"source": (True, None), "p_grid": (True, None),
                "radii": (False, "10,20,30,40,50,60"), "replicas": (False, 400),
                "seed": (False, 0)},
    "pta-diag": {"source": (True, None), "p_grid": (True, None),
                 "radii": (False, "10,20,30,40,50,60"), "replicas": (False, 2000),
                 "seed": (False, 0)},
    "mtp-test": {"source": (True, None), "battery": (False, "standard"),
                 "function": (False, None), "replicas": (False, 100000),
                 "alpha": (False, 0.01), "seed": (False, 0)},
    "converge": {"sources": (True, None), "target": (True, None),
                 "radii": (False, "1,2,3"), "replicas": (False, 20000),
                 "with_pc": (False, False), "p_lo": (False, None),
                 "p_hi": (False, None), "tol": (False, 0.02),
                 "pc_replicas": (False, 2000), "pc_radii": (False, "25,50,100"),
                 "seed": (False, 0)},
    "crossing": {"n": (True, None), "p": (True, None),
                 "replicas": (False, 2000), "seed": (False, 0)},
}


def validate_config(experiment: str, cfg: dict) -> dict:
    if experiment not in _SCHEMAS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    schema = _SCHEMAS[experiment]
    unknown = set(cfg) - set(schema) - {"experiment"}
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    if "experiment" in cfg and cfg["experiment"] != experiment:
        raise ConfigError(
            f"config is for experiment {cfg['experiment']!r}, not {experiment!r}")
    out = {}
    for key, (required, default) in schema.items():
        if key in cfg and cfg[key] is not None:
            out[key] = cfg[key]
        elif required:
            raise ConfigError(f"missing required field {key!r}")
        else:
            out[key] = default
    return out


def run_experiment(experiment: str, cfg: dict) -> dict:
    """Dispatch a validated config; returns {'csv': ..., 'json': ...}."""
    cfg = validate_config(experiment, cfg)
    seed = int(cfg.get("seed", 0))

    if experiment == "generate":
        src = _parse_source(cfg["source"])
        g = src.sample(seed)
        b = ball(g, g.root, int(cfg["radius"]))
        payload = b.to_json_dict()
        payload["source"] = src.descriptor
        return {"json": payload, "csv": None}

    if experiment == "phi":
        src = _parse_source(cfg["source"])
        reports = [expected_phi(src, int(cfg["radius"]), p,
                                method=cfg["method"],
                                replicas=int(cfg["replicas"]),
                                seed=fold(seed, int(p * 1e9)))
                   for p in _parse_grid(cfg["p"])]
        return {"csv": reports_to_csv(reports),
                "json": [r.to_json_dict() for r in reports]}

    if experiment == "witness":
        src = _parse_source(cfg["source"])
        g = src.sample(seed)
        found = witness_search(g, float(cfg["p"]), int(cfg["r_max"]),
                               trim=bool(cfg["trim"]),
                               mc_replicas=int(cfg["replicas"]), seed=seed)
        if found is None:
            payload = {"found": False, "r_max": int(cfg["r_max"]),
                       "p": float(cfg["p"]), "source": src.descriptor,
                       "note": "no witness among searched sets; not a proof"}
        else:
            b, res = found
            payload = {"found": True, "radius": b.radius, "phi": res.value,
                       "set_size": res.set_size, "method": res.method,
                       "p": float(cfg["p"]), "source": src.descriptor}
        return {"json": payload, "csv": None}

    if experiment == "estimate-pc":
        src = _parse_source(cfg["source"])
        if cfg["quantity"] == "ptilde-a":
            rep = ptilde_a_bisect(src, int(cfg["r_max"]), float(cfg["p_lo"]),
                                  float(cfg["p_hi"]), tol=float(cfg["tol"]),
                                  replicas=int(cfg["replicas"]), seed=seed)
            return {"json": rep.to_json_dict(), "csv": reports_to_csv([rep])}
        est = pc_bisect(src, _parse_int_list(cfg["radii"]), float(cfg["p_lo"]),
                        float(cfg["p_hi"]), tol=float(cfg["tol"]),
                        replicas=int(cfg["replicas"]),
                        theta_min=float(cfg["theta_min"]), seed=seed)
        return {"json": est.to_json_dict(), "csv": reports_to_csv(est.evidence)}

    if experiment in ("pt-diag", "pta-diag"):
        src = _parse_source(cfg["source"])
        fn = pt_diagnostic if experiment == "pt-diag" else pta_diagnostic
        est = fn(src, _parse_grid(cfg["p_grid"]), _parse_int_list(cfg["radii"]),
                 replicas=int(cfg["replicas"]), seed=seed)
        csv = reports_to_csv(est.evidence) if est.evidence else None
        return {"json": est.to_json_dict(), "csv": csv}

    if experiment == "mtp-test":
        src = _parse_source(cfg["source"])
        if cfg["function"]:
            probe = src.sample(fold(seed, 0x3B))
            fns = {f.name: f for f in standard_battery(src, probe)}
            if cfg["function"] not in fns:
                raise ConfigError(f"unknown transport function {cfg['function']!r}; "
                                  f"have {sorted(fns)}")
            reports = [mtp_test(src, fns[cfg["function"]], int(cfg["replicas"]),
                                seed, alpha=float(cfg["alpha"]))]
        else:
            if cfg["battery"] != "standard":
                raise ConfigError("only the standard battery is built in")
            reports = mtp_battery(src, int(cfg["replicas"]), seed,
                                  alpha=float(cfg["alpha"]))
        return {"json": [r.to_json_dict() for r in reports], "csv": None}

    if experiment == "converge":
        sources = [_parse_source(s) for s in cfg["sources"]]
        target = _parse_source(cfg["target"])
        pc_settings = None
        if cfg["with_pc"]:
            if cfg["p_lo"] is None or cfg["p_hi"] is None:
                raise ConfigError("with_pc requires p_lo and p_hi")
            pc_settings = {"radius_schedule": _parse_int_list(cfg["pc_radii"]),
                           "p_lo": float(cfg["p_lo"]), "p_hi": float(cfg["p_hi"]),
                           "tol": float(cfg["tol"]),
                           "replicas": int(cfg["pc_replicas"])}
        table = locality_experiment(sources, target, _parse_int_list(cfg["radii"]),
                                    pc_settings=pc_settings,
                                    replicas=int(cfg["replicas"]), seed=seed)
        return {"json": table, "csv": None}

    if experiment == "crossing":
        rep = four_point_crossing(int(cfg["n"]), float(cfg["p"]),
                                  int(cfg["replicas"]), seed)
        return {"csv": reports_to_csv([rep]), "json": rep.to_json_dict()}

    raise ConfigError(f"unhandled experiment {experiment!r}")


def _write_outputs(result: dict, out: str, fmt_choice: str, experiment: str,
                   cfg: dict, t0: float) -> None:
    if fmt_choice == "csv" and result.get("csv") is None:
        fmt_choice = "json"
    body = result["csv"] if fmt_choice == "csv" else \
        json.dumps(result["json"], indent=2, sort_keys=True) + "\n"
    if out:
        path = Path(out)
        path.write_text(body)
        manifest = {
            "experiment": experiment,
            "config_hash": sha256_hex(canonical_json(cfg))[:16],
            "version": __version__,
            "wall_clock_s": time.time() - t0,
            "seed": cfg.get("seed", 0),
            "outputs": {str(path): hashlib.sha256(body.encode()).hexdigest()},
        }
        Path(str(path) + ".manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(body)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="percolab",
        description="Percolation probes on unimodular random rooted graphs")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fields):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file for this experiment")
        p.add_argument("--out", default=None)
        p.add_argument("--format", default="csv", choices=("csv", "json"))
        p.add_argument("--threads", type=int, default=1,
                       help="reserved; probes run deterministically")
        for f in fields:
            flag = "--" + f.replace("_", "-")
            p.add_argument(flag, dest=f, default=None)
        return p

    for name, schema in _SCHEMAS.items():
        add(name, schema.keys())

    s = sub.add_parser("suite")
    s.add_argument("--out-dir", default="suite_out")
    s.add_argument("--scale", type=float, default=1.0,
                   help="replica scale factor (CI uses < 1)")
    s.add_argument("--seed", type=int, default=0)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.time()
    if args.command == "suite":
        from .suite import run_suite
        ok = run_suite(Path(args.out_dir), scale=args.scale, seed=args.seed)
        return EXIT_OK if ok else EXIT_BUDGET
    cfg = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            print(f"config error: {e}", file=sys.stderr)
            return EXIT_CONFIG
    for key in _SCHEMAS[args.command]:
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    try:
        result = run_experiment(args.command, cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (BudgetExceededError, BracketError, RetryCapError,
            CanonicalizationError) as e:
        print(f"run aborted: {e}", file=sys.stderr)
        return EXIT_BUDGET
    _write_outputs(result, args.out, args.format, args.command,
                   validate_config(args.command, cfg), t0)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
