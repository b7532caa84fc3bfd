"""Command-line entry point: ``rop solve | sweep | verify``.

Configuration files are flat TOML documents. Recognised keys::

    problem        "P1" .. "P6"                      (default "P1")
    x_axis         "p_pk" | "p_av" | "eps_out"       (default depends on problem)
    x_values       list of numbers, strictly increasing
    n              number of fading blocks           (default 10000)
    seed           unsigned 64-bit integer           (required by ``sweep``)
    alpha_points   alpha grid size                   (default 1001)
    out            CSV path
    oracle_check   bool, run oracle checks after ``solve``
    timing         bool, fill the wall_time_ms column
    sigma_pr_sq, sigma_sr_sq, eta_st, eps_st, eps_b, u, gamma, p_pk, p_av, eps_out

Anything else is rejected with an error naming the key.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Optional, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import RopError
from .experiments import (PROBLEMS, FadingSpec, SweepSpec, run_sweep, sample_blocks, solve_point,
                          write_csv)
from .model import SystemParams
from .numerics import AlphaSearchConfig

__all__ = ["ConfigError", "RunConfig", "parse_config", "dump_config", "load_config", "main"]

_PARAM_KEYS = tuple(f.name for f in dataclasses.fields(SystemParams))
_DEFAULT_AXIS = {"P1": "p_pk", "P2": "p_pk", "P3": "p_av", "P4": "p_av", "P5": "eps_out",
                 "P6": "p_av"}
_DEFAULT_X = {
    "p_pk": tuple(float(x) for x in range(1, 21)),
    "p_av": tuple(float(x) for x in range(1, 21)),
    "eps_out": tuple(round(0.05 * k, 2) for k in range(21)),
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    sweep: SweepSpec
    fading: FadingSpec
    seed_given: bool = False
    out: Optional[str] = None
    oracle_check: bool = False
    timing: bool = False
    params: SystemParams = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "params", self.sweep.params)

    @property
    def problem(self) -> str:
        return self.sweep.problem


def _number(key, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {v!r}")
    return float(v)


def _integer(key, v):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{key}: expected an integer, got {v!r}")
    return v


def _flag(key, v):
    if not isinstance(v, bool):
        raise ConfigError(f"{key}: expected true or false, got {v!r}")
    return v


def config_from_mapping(doc: dict) -> RunConfig:
    known = set(_PARAM_KEYS) | {"problem", "x_axis", "x_values", "n", "seed", "alpha_points",
                                "out", "oracle_check", "timing"}
    for key in doc:
        if key not in known:
            raise ConfigError(f"{key}: unknown configuration key")
    problem = str(doc.get("problem", "P1")).upper()
    if problem not in PROBLEMS:
        raise ConfigError(f"problem: expected one of {', '.join(PROBLEMS)}, got {problem!r}")
    param_values = {}
    for key in _PARAM_KEYS:
        if key in doc:
            param_values[key] = _number(key, doc[key])
    try:
        params = SystemParams(**param_values)
    except ValueError as exc:
        bad = next((k for k in param_values if k in str(exc)), "params")
        raise ConfigError(f"{bad}: {exc}") from None
    axis = doc.get("x_axis", _DEFAULT_AXIS[problem])
    xs = doc.get("x_values", _DEFAULT_X.get(axis, ()))
    if not isinstance(xs, (list, tuple)):
        raise ConfigError("x_values: expected a list of numbers")
    xs = tuple(_number("x_values", x) for x in xs)
    try:
        sweep = SweepSpec(problem, axis, xs, params,
                          _integer("alpha_points", doc.get("alpha_points", 1001)))
    except ValueError as exc:
        key = "x_axis" if "swept" in str(exc) else ("alpha_points" if "grid" in str(exc)
                                                     else "x_values")
        raise ConfigError(f"{key}: {exc}") from None
    seed = doc.get("seed")
    try:
        fading = FadingSpec(_integer("n", doc.get("n", 10000)),
                            0 if seed is None else _integer("seed", seed))
    except ValueError as exc:
        raise ConfigError(f"{'seed' if 'seed' in str(exc) else 'n'}: {exc}") from None
    out = doc.get("out")
    if out is not None and not isinstance(out, str):
        raise ConfigError(f"out: expected a path string, got {out!r}")
    return RunConfig(sweep, fading, seed is not None, out,
                     _flag("oracle_check", doc.get("oracle_check", False)),
                     _flag("timing", doc.get("timing", False)))


def parse_config(text: str) -> RunConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    return config_from_mapping(doc)


def load_config(path) -> RunConfig:
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: malformed configuration: {exc}") from None
    return config_from_mapping(doc)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise TypeError(f"cannot serialise {v!r}")


def dump_config(cfg: RunConfig) -> str:
    """Serialise a config so that ``parse_config(dump_config(cfg)) == cfg``."""
    items = [("problem", cfg.sweep.problem), ("x_axis", cfg.sweep.x_axis),
             ("x_values", list(cfg.sweep.x_values)), ("n", cfg.fading.n_realizations)]
    if cfg.seed_given:
        items.append(("seed", cfg.fading.seed))
    items.append(("alpha_points", cfg.sweep.alpha_points))
    if cfg.out is not None:
        items.append(("out", cfg.out))
    items += [("oracle_check", cfg.oracle_check), ("timing", cfg.timing)]
    items += [(k, float(getattr(cfg.params, k))) for k in _PARAM_KEYS]
    return "".join(f"{k} = {_toml_value(v)}\n" for k, v in items)


# ---------------------------------------------------------------------------


def _threads(arg: Optional[int]) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("ROP_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"ROP_THREADS: expected an integer, got {env!r}") from None
        if n < 1:
            raise ConfigError("ROP_THREADS must be >= 1")
        return n
    return 1


def _resolve(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else config_from_mapping({})
    changes = {}
    if getattr(args, "problem", None):
        problem = args.problem.upper()
        axis, xs = cfg.sweep.x_axis, cfg.sweep.x_values
        if problem != cfg.sweep.problem:
            try:
                SweepSpec(problem, axis, xs, cfg.params)
            except ValueError:
                axis = _DEFAULT_AXIS[problem]
                xs = _DEFAULT_X[axis]
        try:
            changes["sweep"] = SweepSpec(problem, axis, xs, cfg.params, cfg.sweep.alpha_points)
        except ValueError as exc:
            raise ConfigError(f"--problem: {exc}") from None
    fading = cfg.fading
    seed_given = cfg.seed_given
    if args.seed is not None:
        fading = dataclasses.replace(fading, seed=args.seed)
        seed_given = True
    if args.n is not None:
        fading = dataclasses.replace(fading, n_realizations=args.n)
    changes.update(fading=fading, seed_given=seed_given)
    if getattr(args, "out", None):
        changes["out"] = args.out
    return dataclasses.replace(cfg, **changes)


def _cmd_sweep(args) -> int:
    cfg = _resolve(args)
    if not cfg.seed_given:
        raise ConfigError("seed: sweeps need an explicit seed (config key or --seed)")
    if cfg.out is None:
        raise ConfigError("out: no output path (config key or --out)")
    result = run_sweep(cfg.sweep, cfg.fading, threads=_threads(args.threads), timing=cfg.timing)
    write_csv(result, cfg.out)
    print(f"wrote {len(result.rows)} rows to {cfg.out}")
    return 0


def _cmd_solve(args) -> int:
    cfg = _resolve(args)
    sample = sample_blocks(cfg.fading)
    row = solve_point(cfg.problem, sample, cfg.params, AlphaSearchConfig(cfg.sweep.alpha_points))
    print(f"problem={cfg.problem} n={len(sample)} seed={cfg.fading.seed}")
    print(f"capacity_bits={row.capacity_bits!r} outage={row.outage!r} alpha_star={row.alpha_star!r}")
    if row.lam is not None or row.mu is not None:
        print(f"lambda={row.lam!r} mu={row.mu!r}")
    if math.isnan(row.capacity_bits):
        print("infeasible: no reflection coefficient meets the constraints", file=sys.stderr)
        return 1
    if cfg.oracle_check:
        return _verify(cfg.problem, cfg.fading.n_realizations, cfg.fading.seed, cfg.params)
    return 0


def _verify(problem: str, n: int, seed: int, sp: SystemParams) -> int:
    from . import verify

    ok, lines = verify.run(problem, n, seed, sp)
    for line in lines:
        print(line)
    return 0 if ok else 1


def _cmd_verify(args) -> int:
    cfg = _resolve(args)
    return _verify(cfg.problem, cfg.fading.n_realizations, cfg.fading.seed, cfg.params)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rop", description="Backscatter spectrum-sharing solvers.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--config", help="flat TOML configuration file")
        p.add_argument("--seed", type=int, help="seed of the channel sample")
        p.add_argument("--n", type=int, help="number of fading blocks")
        p.add_argument("--problem", choices=[x.lower() for x in PROBLEMS] + list(PROBLEMS))
        p.add_argument("--threads", type=int, help="worker threads (default $ROP_THREADS or 1)")
        if out:
            p.add_argument("--out", help="CSV output path")

    common(sub.add_parser("solve", help="solve one instance and print a summary"), out=False)
    common(sub.add_parser("sweep", help="run a sweep and write its CSV"))
    common(sub.add_parser("verify", help="compare solvers against brute-force oracles"),
           out=False)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.threads is not None and args.threads < 1:
        print("rop: error: --threads must be >= 1", file=sys.stderr)
        return 2
    handler = {"solve": _cmd_solve, "sweep": _cmd_sweep, "verify": _cmd_verify}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"rop: configuration error: {exc}", file=sys.stderr)
        return 2
    except (RopError, OSError, ValueError) as exc:
        print(f"rop: error: {exc}", file=sys.stderr)
        return 1
