"""Command-line front end.

Configuration is a flat ``key = value`` file (``#`` comments). Unknown keys
are rejected. Every ``summary.json`` embeds the fully resolved configuration.

Exit codes: 0 success, 1 configuration/usage error, 2 numerical failure,
3 failed acceptance check (``check``).
"""
from __future__ import annotations

import argparse
import configparser
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import _backend
from .analysis import (
    audit_bounds, comparison_slack, conservation_defect, convergence_study, entropy_residual,
    k_lattice, tol,
)
from .data import Box, Bump, MultiBox, Samples, realize, write_field_csv
from .errors import MesaLabError, NumericalError, StudyError
from .grid import Grid1D, l1_distance, linf, total_mass
from .limits import (
    iterated_limits_gap, mesa_project, mesa_residual, predicted_m_limit, predicted_p_limit,
    truncate_at_one,
)
from .model import ModelParams
from .solver import RunConfig, SchemeChoice, run
from .viscous import run_viscous

log = logging.getLogger("mesalab")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECK = 0, 1, 2, 3

DEFAULTS: dict[str, str] = {
    "grid.xmin": "-1",
    "grid.xmax": "6",
    "grid.n": "1400",
    "model.m": "2",
    "model.p": "2",
    "model.absorption": "true",
    "initial.variant": "box",
    "initial.height": "2",
    "initial.a": "0",
    "initial.b": "1",
    "initial.boxes": "",
    "initial.center": "0",
    "initial.width": "1",
    "initial.path": "",
    "time.t_end": "1",
    "time.snapshots": "",
    "scheme.name": "godunov_upwind",
    "scheme.cfl": "0.45",
    "viscous.epsilon": "",
    "study.values": "",
    "norms.window": "",
}


class CliError(MesaLabError):
    pass


def _floats(text: str, key: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise CliError(f"{key}: expected a comma-separated list of numbers, got {text!r}") from None


def _float(cfg: dict, key: str) -> float:
    try:
        val = float(cfg[key])
    except ValueError:
        raise CliError(f"{key}: expected a number, got {cfg[key]!r}") from None
    if not math.isfinite(val):
        raise CliError(f"{key}: must be finite")
    return val


def _bool(cfg: dict, key: str) -> bool:
    val = cfg[key].strip().lower()
    if val in ("1", "true", "yes", "on"):
        return True
    if val in ("0", "false", "no", "off"):
        return False
    raise CliError(f"{key}: expected true/false, got {cfg[key]!r}")


def load_config(path: str | Path) -> dict[str, str]:
    """Parse a flat config file and merge it over :data:`DEFAULTS`."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc}") from None
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__",
                                       inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string("[config]\n" + text, source=str(path))
    except configparser.Error as exc:
        raise CliError(f"malformed config {path}: {exc}") from None
    raw = dict(parser["config"])
    unknown = sorted(set(raw) - set(DEFAULTS))
    if unknown:
        raise CliError(f"unknown config key(s): {', '.join(unknown)}")
    cfg = dict(DEFAULTS)
    cfg.update({k: v.strip() for k, v in raw.items()})
    return cfg


def initial_spec(cfg: dict):
    variant = cfg["initial.variant"]
    if variant == "box":
        return Box(_float(cfg, "initial.height"), _float(cfg, "initial.a"), _float(cfg, "initial.b"))
    if variant == "multibox":
        boxes = []
        for chunk in cfg["initial.boxes"].split(";"):
            if not chunk.strip():
                continue
            vals = _floats(chunk.replace(" ", ","), "initial.boxes")
            if len(vals) != 3:
                raise CliError(f"initial.boxes: each box is 'height a b', got {chunk!r}")
            boxes.append(Box(*vals))
        return MultiBox(tuple(boxes))
    if variant == "bump":
        return Bump(_float(cfg, "initial.height"), _float(cfg, "initial.center"),
                    _float(cfg, "initial.width"))
    if variant == "samples":
        if not cfg["initial.path"]:
            raise CliError("initial.path is required for variant 'samples'")
        return Samples(cfg["initial.path"])
    raise CliError(f"initial.variant must be box, multibox, bump or samples, got {variant!r}")


def grid_of(cfg: dict) -> Grid1D:
    try:
        n = int(cfg["grid.n"])
    except ValueError:
        raise CliError(f"grid.n: expected an integer, got {cfg['grid.n']!r}") from None
    return Grid1D(_float(cfg, "grid.xmin"), _float(cfg, "grid.xmax"), n)


def run_config(cfg: dict, m: float | None = None, p: float | None = None,
               absorption: bool | None = None, epsilon: float | None = None) -> RunConfig:
    t_end = _float(cfg, "time.t_end")
    eps = epsilon
    if eps is None and cfg["viscous.epsilon"]:
        eps = _float(cfg, "viscous.epsilon")
    return RunConfig(
        grid=grid_of(cfg),
        params=ModelParams(
            _float(cfg, "model.m") if m is None else m,
            _float(cfg, "model.p") if p is None else p,
            _bool(cfg, "model.absorption") if absorption is None else absorption,
        ),
        initial=initial_spec(cfg),
        t_end=t_end,
        snapshot_times=tuple(_floats(cfg["time.snapshots"], "time.snapshots")),
        scheme=SchemeChoice(cfg["scheme.name"], _float(cfg, "scheme.cfl")),
        epsilon=eps,
    )


def _window(cfg: dict):
    if not cfg["norms.window"]:
        return None
    w = _floats(cfg["norms.window"], "norms.window")
    if len(w) != 2:
        raise CliError("norms.window: expected 'a, b'")
    return (w[0], w[1])


def _study_values(cfg: dict, default: list[float]) -> list[float]:
    vals = _floats(cfg["study.values"], "study.values")
    return vals or default


def _eval_times(cfg: dict) -> list[float]:
    times = [t for t in _floats(cfg["time.snapshots"], "time.snapshots") if t > 0]
    return times or [_float(cfg, "time.t_end")]


def _tname(t: float) -> str:
    return format(t, "g")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        val = float(obj)
        return val if math.isfinite(val) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --------------------------------------------------------------------------- commands


def cmd_run(cfg, args) -> int:
    config = run_config(cfg)
    res = run(config)
    out = _outdir(args)
    for t in res.times:
        write_field_csv(res.snapshots[t], out / f"u_t{_tname(t)}.csv")
        write_field_csv(res.psi_at[t], out / f"psi_t{_tname(t)}.csv")
    _write_json(out / "summary.json", {
        "command": "run",
        "config": cfg,
        "backend": res.backend,
        "step_count": res.step_count,
        "mass0": total_mass(res.initial),
        "mass": {_tname(t): total_mass(res.snapshots[t]) for t in res.times},
        "absorbed": {_tname(t): res.absorbed_at[t] for t in res.times},
        "outflow": {_tname(t): res.outflow_at[t] for t in res.times},
        "linf": {_tname(t): linf(res.snapshots[t]) for t in res.times},
        "audit": audit_bounds(res).to_dict(),
        "warnings": res.warnings,
    })
    return EXIT_OK


def cmd_mesa(cfg, args) -> int:
    grid = grid_of(cfg)
    u0 = realize(initial_spec(cfg), grid)
    res = mesa_project(u0)
    out = _outdir(args)
    write_field_csv(res.v, out / "v.csv")
    write_field_csv(res.psi, out / "psi.csv")
    plateau = grid.centers[res.v.values >= 1.0 - 1e-6]
    _write_json(out / "summary.json", {
        "command": "mesa",
        "config": cfg,
        "mass_in": total_mass(u0),
        "mass_v": total_mass(res.v),
        "max_psi": linf(res.psi),
        "identity_residual": mesa_residual(u0, res),
        "plateau": [float(plateau.min()), float(plateau.max())] if plateau.size else None,
    })
    return EXIT_OK


def _table_out(args, cfg, table, command, extra=None) -> None:
    out = _outdir(args)
    (out / "table.csv").write_text(table.to_csv_text())
    payload = {"command": command, "config": cfg, "table": table.to_dict(),
               "strictly_decreasing": table.strictly_decreasing()}
    payload.update(extra or {})
    _write_json(out / "summary.json", payload)


def cmd_limit_m(cfg, args) -> int:
    base = run_config(cfg, absorption=True)
    u0 = base.initial_field()
    times = _eval_times(cfg)
    p = base.params.p
    t_end = max(times)
    reference = {t: predicted_m_limit(u0, p, t) for t in times}

    def runner(m):
        c = RunConfig(base.grid, ModelParams(m, p, True), base.initial, t_end, tuple(times),
                      base.scheme)
        return run(c)

    table = convergence_study(_study_values(cfg, [4, 8, 16, 32]), reference, runner,
                              times, _window(cfg), metadata={"study": "m", "p": p})
    _table_out(args, cfg, table, "limit-m")
    return EXIT_OK


def cmd_limit_p(cfg, args) -> int:
    base = run_config(cfg, absorption=True)
    u0 = base.initial_field()
    times = _eval_times(cfg)
    m = base.params.m
    t_end = max(times)
    ref = predicted_p_limit(u0, m, times, base.scheme)

    def runner(p):
        c = RunConfig(base.grid, ModelParams(m, p, True), base.initial, t_end, tuple(times),
                      base.scheme)
        return run(c)

    table = convergence_study(_study_values(cfg, [4, 8, 16, 32, 64]), ref.snapshots, runner,
                              times, _window(cfg), metadata={"study": "p", "m": m})
    _table_out(args, cfg, table, "limit-p")
    return EXIT_OK


def cmd_noncommute(cfg, args) -> int:
    grid = grid_of(cfg)
    u0 = realize(initial_spec(cfg), grid)
    gap = iterated_limits_gap(u0)
    out = _outdir(args)
    write_field_csv(mesa_project(u0).v, out / "lim_p_lim_m.csv")
    write_field_csv(mesa_project(truncate_at_one(u0)).v, out / "lim_m_lim_p.csv")
    _write_json(out / "summary.json", {"command": "noncommute", "config": cfg, "gap": gap,
                                       "dx": grid.dx})
    return EXIT_OK


def cmd_viscous(cfg, args) -> int:
    base = run_config(cfg)
    hyp = run(base)
    eps_list = _floats(cfg["study.values"], "study.values")
    if not eps_list:
        eps_list = [_float(cfg, "viscous.epsilon")] if cfg["viscous.epsilon"] else [1e-1, 1e-2, 1e-3]
    window = _window(cfg)
    distances = {}
    for eps in sorted(eps_list):
        try:
            res = run_viscous(replace(base, epsilon=eps))
        except NumericalError as exc:
            raise StudyError(eps, exc) from exc
        distances[eps] = l1_distance(res.final, hyp.final, window)
    errs = [distances[e] for e in sorted(distances)]
    out = _outdir(args)
    lines = ["param,error,ratio"]
    prev = None
    for e in sorted(distances):
        ratio = float("nan") if prev is None else prev / distances[e]
        lines.append(f"{e:.17g},{distances[e]:.17g},{ratio:.17g}")
        prev = distances[e]
    (out / "table.csv").write_text("\n".join(lines) + "\n")
    _write_json(out / "summary.json", {
        "command": "viscous", "config": cfg, "t": base.t_end,
        "distances": {format(e, "g"): d for e, d in distances.items()},
        "decreasing_as_eps_shrinks": all(b > a for a, b in zip(errs, errs[1:])),
    })
    return EXIT_OK


def cmd_check(cfg, args) -> int:
    config = run_config(cfg)
    res = run(config, trace=True)
    checks = audit_bounds(res).to_dict()
    dx = config.grid.dx
    worst = min(entropy_residual(res, k) for k in k_lattice(res))
    checks["entropy"] = {"slack": worst, "tolerance": tol("entropy_per_dx") * dx,
                         "passed": worst >= -tol("entropy_per_dx") * dx, "detail": "k lattice"}
    defect = conservation_defect(res)
    checks["conservation_defect"] = {"slack": -defect, "tolerance": tol("conservation"),
                                     "passed": defect <= tol("conservation"), "detail": "k = 0"}
    if config.params.absorption_enabled:
        free = replace(config, params=replace(config.params, absorption_enabled=False))
        v = run(free)
        u = run(config, dt_schedule=v.dt_history)
        slack = comparison_slack(u, v)
        checks["comparison"] = {"slack": slack, "tolerance": tol("comparison"),
                                "passed": slack >= -tol("comparison"), "detail": "u_{m,p} <= v_m"}
    try:
        mres = mesa_project(res.initial)
        r = mesa_residual(res.initial, mres)
        checks["mesa_identity"] = {"slack": -r, "tolerance": 1e-10, "passed": r <= 1e-10,
                                   "detail": "v + psi_x = u0"}
    except MesaLabError as exc:
        checks["mesa_identity"] = {"slack": None, "tolerance": 1e-10, "passed": False,
                                   "detail": str(exc)}
    passed = all(c["passed"] for c in checks.values())
    for name, c in sorted(checks.items()):
        print(f"{'PASS' if c['passed'] else 'FAIL'} {name} slack={c['slack']}")
    if args.out:
        _write_json(_outdir(args) / "summary.json",
                    {"command": "check", "config": cfg, "checks": checks, "passed": passed})
    return EXIT_OK if passed else EXIT_CHECK


COMMANDS = {
    "run": (cmd_run, "one solve; writes snapshot CSVs and summary.json"),
    "mesa": (cmd_mesa, "mesa projection of the initial data"),
    "limit-m": (cmd_limit_m, "m -> infinity convergence table"),
    "limit-p": (cmd_limit_p, "p -> infinity convergence table"),
    "noncommute": (cmd_noncommute, "gap between the two iterated limits"),
    "check": (cmd_check, "full invariant and bound audit of one run"),
    "viscous": (cmd_viscous, "vanishing-viscosity continuation study"),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mesalab", description=__doc__.splitlines()[0])
    parser.add_argument("--backend", choices=["auto", "cython", "python"], default="auto")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="flat key = value config file")
        p.add_argument("--out", default=None if name == "check" else ".",
                       help="output directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    previous = _backend.current()
    try:
        if args.backend != "auto":
            _backend.set_backend(args.backend)
        cfg = load_config(args.config)
        return COMMANDS[args.command][0](cfg, args)
    except StudyError as exc:
        kind = EXIT_NUMERIC if isinstance(exc.cause, NumericalError) else EXIT_CONFIG
        print(f"mesalab: {exc}", file=sys.stderr)
        return kind
    except NumericalError as exc:
        print(f"mesalab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (MesaLabError, ImportError) as exc:
        print(f"mesalab: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    finally:
        _backend.set_backend(previous)


if __name__ == "__main__":
    sys.exit(main())
