"""Command-line driver.

Exit codes: 0 all verdicts pass, 1 some verdict fails, 2 configuration
error, 3 node budget exceeded. Errors are reported on stderr as one JSON
object ``{code, message, context}``.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from . import experiments as ex
from .errors import BRWError, BudgetExceeded, ConfigError
from .laws import law_from_json, normalize_for_mandelbrot
from .report import ExperimentReport
from .schedules import ParameterSchedule, Segment, schedule_for_target

STOCHASTIC = {"free-energy", "ldp", "martingale", "inhomogeneous", "subtree", "mu-lq"}
COMMANDS = [
    "free-energy",
    "spectrum",
    "ldp",
    "classify",
    "martingale",
    "inhomogeneous",
    "subtree",
    "dimension",
    "mu-lq",
    "conjugate",
    "selftest",
]
MAX_SEED = 2**64 - 1
VALUE_FLAGS = {"--qs", "--alphas", "--eps"}


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def parse_grid(spec) -> list:
    """Grid from ``"a:b:s"`` (inclusive of ``b`` when ``(b-a)/s`` is integral
    within 1e-9), a comma-separated list, a JSON list or ``{min, max, step}``."""
    if spec is None:
        return []
    if isinstance(spec, dict):
        try:
            return parse_grid(f"{spec['min']}:{spec['max']}:{spec['step']}")
        except KeyError as exc:
            raise ConfigError(f"grid object needs min, max and step: {spec}") from exc
    if isinstance(spec, (list, tuple)):
        return [v if isinstance(v, list) else float(v) for v in spec]
    if isinstance(spec, (int, float)):
        return [float(spec)]
    text = str(spec).strip()
    try:
        if ":" in text:
            a, b, s = (float(t) for t in text.split(":"))
            if s <= 0 or b < a:
                raise ConfigError(f"grid {text!r} needs a <= b and a positive step")
            steps = (b - a) / s
            count = round(steps) + 1 if abs(steps - round(steps)) <= 1e-9 else math.floor(steps) + 1
            return [round(a + i * s, 12) + 0.0 for i in range(count)]
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse grid {text!r}") from exc


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from exc
    if not 0 <= v <= MAX_SEED:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from exc
    if v < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return v


def default_workers() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="brwspectra", description="Thermodynamic formalism of branching random walks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="JSON config; flags override its keys")
        p.add_argument("--law", type=Path, help="JSON law description")
        p.add_argument("--seed", type=_seed)
        p.add_argument("--depth", type=int)
        p.add_argument("--trials", type=_positive_int)
        p.add_argument("--budget", type=_positive_int)
        p.add_argument("--qs", help="grid a:b:s or comma list")
        p.add_argument("--alphas", help="grid a:b:s or comma list")
        p.add_argument("--eps", type=float)
        p.add_argument("--horizon", type=_positive_int)
        p.add_argument("--out", type=Path, help="CSV path; the JSON summary goes next to it")
        p.add_argument("--workers", type=_positive_int, help="worker processes (default: available CPUs)")
    return parser


def _read_json(path: Path, what: str):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {what} {str(path)!r}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} {str(path)!r} is not valid JSON: {exc}") from exc


def effective_config(args) -> dict:
    """Defaults, then the config file, then command-line flags."""
    defaults = ex.load_defaults()
    file_cfg = _read_json(args.config, "config") if args.config else {}
    if not isinstance(file_cfg, dict):
        raise ConfigError("config must be a JSON object")
    cmd = args.command
    cfg = dict(defaults.get(cmd, {}))
    cfg.update({k: v for k, v in file_cfg.items() if k in cfg})
    cfg.update(file_cfg.get(cmd, {}))
    cfg["budget"] = file_cfg.get("budget", defaults["budget"])
    cfg["legendre"] = {**defaults["legendre"], **file_cfg.get("legendre", {})}
    if "seed" in file_cfg:
        cfg["seed"] = file_cfg["seed"]
    law = file_cfg.get("law")
    if args.law is not None:
        law = _read_json(args.law, "law file")
    elif isinstance(law, str):
        base = args.config.parent if args.config else Path(".")
        law = _read_json(base / law, "law file")
    if law is not None:
        cfg["law"] = law
    for flag in ("seed", "depth", "trials", "budget", "eps"):
        v = getattr(args, flag)
        if v is not None:
            cfg[flag] = v
    if args.qs is not None:
        cfg["qs"] = args.qs
    if args.alphas is not None:
        if cmd == "dimension":
            cfg["points"] = args.alphas
        else:
            cfg["alphas"] = args.alphas
    if args.horizon is not None:
        cfg["horizons"] = sorted({h for h in cfg.get("horizons", []) if h < args.horizon} | {args.horizon})
    cfg["experiment"] = cmd
    return cfg


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _law(cfg):
    if "law" not in cfg:
        raise ConfigError("no law given (use --law or a 'law' key in the config)")
    law = law_from_json(cfg["law"])
    cfg["law"] = law.to_json()
    return law


def _need_seed(cfg) -> int:
    if cfg.get("seed") is None:
        raise ConfigError("a seed is required for stochastic runs (--seed)")
    seed = int(cfg["seed"])
    if not 0 <= seed <= MAX_SEED:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    return seed


def _grid_for(cfg, key, dim):
    pts = parse_grid(cfg.get(key))
    if dim > 1 and pts and not isinstance(pts[0], list):
        raise ConfigError(f"{key} must list points with {dim} coordinates")
    return pts


def _depth(cfg) -> int:
    d = int(cfg["depth"])
    if d < 1:
        raise ConfigError("depth must be >= 1")
    return d


def _inhomogeneous_schedule(law, cfg, depth) -> ParameterSchedule:
    if cfg.get("schedule"):
        return ParameterSchedule.from_json(cfg["schedule"])
    if cfg.get("points"):
        return schedule_for_target(
            law,
            parse_grid(cfg["points"]),
            cfg.get("dwell_rule", "geometric"),
            int(cfg.get("dwell_base", 4)),
            float(cfg.get("dwell_ratio", 1.5)),
            int(cfg.get("cycles", 1)),
        )
    qs = _grid_for(cfg, "qs", law.dim)
    if not qs:
        raise ConfigError("inhomogeneous needs a schedule, target points or a q grid")
    dwell = math.ceil(depth / len(qs))
    return ParameterSchedule(tuple(Segment(q, math.inf, dwell) for q in qs))


def execute(cfg: dict, workers: int) -> ExperimentReport:
    cmd = cfg["experiment"]
    if cmd == "selftest":
        for k in ("law", "seed", "budget", "legendre"):
            cfg.pop(k, None)
        return ex.selftest()
    law = _law(cfg)
    leg = cfg["legendre"]
    budget = int(cfg["budget"])
    common = {"budget": budget, "workers": workers}
    if cmd in STOCHASTIC:
        seed = _need_seed(cfg)
    if cmd == "conjugate":
        return ex.conjugate_report(law, _grid_for(cfg, "alphas", law.dim), leg)
    if cmd == "spectrum":
        return ex.spectrum_report(law, _grid_for(cfg, "alphas", law.dim), leg)
    if cmd == "classify":
        return ex.classify_report(law, cfg.get("direction", [1.0] * law.dim))
    if cmd == "free-energy":
        return ex.free_energy_curve(
            law, _grid_for(cfg, "qs", law.dim), _depth(cfg), int(cfg["trials"]), seed,
            tol=float(cfg["tol"]), tol_transition=float(cfg["tol_transition"]), **common,
        )
    if cmd == "ldp":
        return ex.ldp_spectrum(
            law, _grid_for(cfg, "alphas", law.dim), float(cfg["eps"]), _depth(cfg), int(cfg["trials"]), seed,
            tol=float(cfg["tol"]), empty_frequency=float(cfg["empty_frequency"]), legendre=leg, **common,
        )
    if cmd == "martingale":
        return ex.martingale_report(
            law, _grid_for(cfg, "qs", law.dim), _depth(cfg), int(cfg["trials"]), seed,
            se_band=float(cfg["se_band"]), **common,
        )
    if cmd == "inhomogeneous":
        depth = _depth(cfg)
        sched = _inhomogeneous_schedule(law, cfg, depth)
        cfg["schedule"] = sched.to_json()
        return ex.inhomogeneous_report(
            law, sched, depth, int(cfg["trials"]), seed, se_band=float(cfg["se_band"]), **common
        )
    if cmd == "subtree":
        qs = [float(q) for q in parse_grid(cfg.get("qs"))]
        alphas = parse_grid(cfg.get("alphas"))
        if not alphas:
            if not qs:
                raise ConfigError("subtree needs --alphas or --qs")
            alphas = [float(law.grad(qs[0])[0])]
            cfg["alphas"] = alphas
        rows, first = [], None
        for a in alphas:
            r = ex.subtree_report(
                law, a, qs, _depth(cfg), int(cfg["trials"]), seed,
                eps0=float(cfg["eps"]), eps_rule=cfg.get("eps_rule", "constant"), tol=float(cfg["tol"]),
                legendre=leg, **common,
            )
            first = first or r
            rows.extend(r.rows)
        first.rows = rows
        return first
    if cmd == "dimension":
        pts = _grid_for(cfg, "points", law.dim)
        if not pts:
            raise ConfigError("dimension needs the chain K (--alphas or 'points')")
        depth = int(cfg.get("depth") or 0)
        seed = _need_seed(cfg) if depth > 0 else cfg.get("seed")
        return ex.dimension_report(
            law, pts, unbounded=bool(cfg.get("unbounded")), depth=depth, trials=int(cfg["trials"]),
            eps=float(cfg["eps"]), seed=seed, legendre=leg, **common,
        )
    if cmd == "mu-lq":
        norm = normalize_for_mandelbrot(law)
        rep = ex.mandelbrot_lq_spectrum(
            norm.law, parse_grid(cfg.get("qs")), _depth(cfg), int(cfg["trials"]), seed,
            horizons=cfg["horizons"], tol=float(cfg["tol"]), tol_other=float(cfg["tol_other"]), **common,
        )
        rep.extra = {"normalizing_shift": norm.shift, "nondegenerate": norm.nondegenerate}
        return rep
    raise ConfigError(f"unknown command {cmd!r}")


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------


def _summary_line(rep: ExperimentReport) -> str:
    if rep.experiment == "classify":
        kind = rep.extra["kind"]
        qc = rep.rows[0].theory
        return f"classify: {kind}" + ("" if math.isnan(qc) else f" q_c={qc:.12g}")
    return f"{rep.experiment}: {rep.pass_count} pass, {rep.fail_count} fail, {len(rep.rows)} rows"


def _emit_error(err: BaseException, code: str, context: dict | None = None) -> None:
    payload = {"code": code, "message": str(err), "context": context or {}}
    sys.stderr.write(json.dumps(payload, sort_keys=True, default=str) + "\n")


def _fuse_values(argv: list[str]) -> list[str]:
    """Turn ``--qs -1:1:0.5`` into ``--qs=-1:1:0.5`` so argparse does not
    mistake a negative grid for an option."""
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(_fuse_values(argv))
        cfg = effective_config(args)
        rep = execute(cfg, args.workers or default_workers())
        cfg.pop("experiment", None)
        rep.config = cfg
        if args.out is not None:
            args.out.parent.mkdir(parents=True, exist_ok=True)
            args.out.write_text(rep.to_csv(), encoding="utf-8")
            args.out.with_suffix(".json").write_text(rep.summary_json(), encoding="utf-8")
        else:
            sys.stdout.write(rep.to_csv())
        print(_summary_line(rep))
        return 0 if rep.ok else 1
    except BudgetExceeded as err:
        _emit_error(err, err.code, err.context)
        return 3
    except BRWError as err:
        _emit_error(err, err.code, err.context)
        return 2
    except (ValueError, TypeError, KeyError) as err:
        _emit_error(err, "config_error")
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
