"""``mgmodes`` command line.

    mgmodes <price|mc|converge|residual|hedge|modes> --config <path>
            [--n INT] [--m INT] [--seed U64] [--paths INT] [--levels INT]
            [--rebalances LIST] [--out DIR]

Configs are JSON.  Precedence is flags > file > built-in defaults.  Every
command writes ``manifest_<command>.json`` into the output directory; passing
that manifest back as ``--config`` replays the run.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__, _accel, hedge, kkmodes, pde, sde
from .model import (
    ModeIndex, ModelParams, NumericalError, PayoffSpec, ValidationError, to_risk_neutral, validate_params,
)
from .closedform import ground_state_price
from .operator import GridSpec, build_generator, residual

COMMANDS = ("price", "mc", "converge", "residual", "hedge", "modes")

DEFAULTS = {
    "phi": 0.0,
    "mu": 0.0,
    "v0": 0.04,
    "xi": 0.0,
    "rho": 0.0,
    "r": 0.05,
    "lambda2": None,
    "mu_bar": None,
    "n": 1,
    "m": 1,
    "s0": 100.0,
    "payoff": {"kind": "call", "strike": 100.0, "maturity": 1.0, "values": None},
    "grid": {"s_min": 0.0, "s_max": None, "v_min": 0.0, "v_max": None, "n_s": 201, "n_v": 51, "n_t": 200},
    "solver": {"theta": 0.5, "rannacher_steps": 2},
    "mc": {"paths": 100000, "steps": 100, "seed": 0, "scheme": "log-euler"},
    "hedge": {"rebalances": [52, 208], "paths": 10000},
    "kk": {"l": 1.0, "mass": 0.0, "c": 1.0, "gamma": 1.0, "signature": "spacelike", "n_max": 10, "samples": 64},
    "levels": 4,
    "out": "mgmodes_out",
}


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


def fmt(x) -> str:
    return f"{x:.10g}"


# ---------------------------------------------------------------------------
# configuration


def _nest(flat: dict) -> dict:
    """Expand dotted keys (``"payoff.kind"``) into nested dicts."""
    out = {}
    for key, value in flat.items():
        if isinstance(value, dict):
            value = _nest(value)
        parts = key.split(".")
        node = out
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        if isinstance(value, dict) and isinstance(node.get(parts[-1]), dict):
            node[parts[-1]].update(value)
        else:
            node[parts[-1]] = value
    return out


def _merge(base: dict, over: dict, prefix="") -> dict:
    out = copy.deepcopy(base)
    for key, value in over.items():
        name = f"{prefix}{key}"
        if key not in base:
            raise ConfigError(name, "unknown key")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(name, "expected an object")
            out[key] = _merge(base[key], value, prefix=name + ".")
        else:
            out[key] = value
    return out


def load_config_file(path) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be an object")
    if raw.get("tool") == "mgmodes" and "config" in raw:
        raw = raw["config"]
    return _nest(raw)


@dataclass
class RunConfig:
    params: ModelParams
    mode: ModeIndex
    payoff: PayoffSpec
    s0: float
    grid: GridSpec
    solver: pde.SolverConfig
    mc_paths: int
    mc_steps: int
    seed: int
    scheme: sde.Scheme
    hedge_rebalances: list
    hedge_paths: int
    kk: kkmodes.KKParams
    kk_n_max: int
    kk_samples: int
    levels: int
    out: str
    raw: dict = field(repr=False)


def _num(d, key, prefix="", kind=float, allow_none=False):
    value = d[key]
    name = prefix + key
    if value is None and allow_none:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(name, f"expected a number, got {value!r}")
    if kind is int:
        if int(value) != value:
            raise ConfigError(name, f"expected an integer, got {value!r}")
        return int(value)
    if not math.isfinite(value):
        raise ConfigError(name, f"must be finite, got {value!r}")
    return float(value)


def build_run_config(cfg: dict) -> RunConfig:
    params = ModelParams(
        phi=_num(cfg, "phi"), mu=_num(cfg, "mu"), v0=_num(cfg, "v0"), xi=_num(cfg, "xi"),
        rho=_num(cfg, "rho"), r=_num(cfg, "r"),
        lambda2=_num(cfg, "lambda2", allow_none=True), mu_bar=_num(cfg, "mu_bar", allow_none=True),
    )
    problems = validate_params(params)
    if problems:
        raise ValidationError(problems)
    mode = ModeIndex(_num(cfg, "n", kind=int), _num(cfg, "m", kind=int))

    p = cfg["payoff"]
    try:
        payoff = PayoffSpec(
            p["kind"], _num(p, "strike", "payoff."), _num(p, "maturity", "payoff."),
            values=None if p.get("values") is None else np.asarray(p["values"], dtype=float),
        )
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ConfigError("payoff.kind", f"unknown payoff kind {p['kind']!r}") from None

    s0 = _num(cfg, "s0")
    if not s0 > 0:
        raise ConfigError("s0", f"must be > 0, got {s0}")
    g = cfg["grid"]
    default = GridSpec.default_for(payoff.strike, s0, params.v0)
    s_max = _num(g, "s_max", "grid.", allow_none=True)
    v_max = _num(g, "v_max", "grid.", allow_none=True)
    grid = GridSpec(
        s_min=_num(g, "s_min", "grid."), s_max=default.s_max if s_max is None else s_max,
        v_min=_num(g, "v_min", "grid."), v_max=default.v_max if v_max is None else v_max,
        n_s=_num(g, "n_s", "grid.", int), n_v=_num(g, "n_v", "grid.", int), n_t=_num(g, "n_t", "grid.", int),
    )
    solver = pde.SolverConfig(
        theta=_num(cfg["solver"], "theta", "solver."),
        rannacher_steps=_num(cfg["solver"], "rannacher_steps", "solver.", int),
    )

    mc = cfg["mc"]
    paths = _num(mc, "paths", "mc.", int)
    steps = _num(mc, "steps", "mc.", int)
    seed = _num(mc, "seed", "mc.", int)
    if paths < 1:
        raise ConfigError("mc.paths", f"must be >= 1, got {paths}")
    if steps < 1:
        raise ConfigError("mc.steps", f"must be >= 1, got {steps}")
    if not 0 <= seed < 2**64:
        raise ConfigError("mc.seed", f"must be an unsigned 64-bit integer, got {seed}")
    try:
        scheme = sde.Scheme(mc["scheme"])
    except ValueError:
        raise ConfigError("mc.scheme", f"must be euler or log-euler, got {mc['scheme']!r}") from None

    h = cfg["hedge"]
    rebalances = h["rebalances"]
    if isinstance(rebalances, (int, float)):
        rebalances = [rebalances]
    if not isinstance(rebalances, list) or not rebalances or any(
        isinstance(x, bool) or not isinstance(x, int) or x < 1 for x in rebalances
    ):
        raise ConfigError("hedge.rebalances", f"expected a list of positive integers, got {rebalances!r}")
    hedge_paths = _num(h, "paths", "hedge.", int)
    if hedge_paths < 2:
        raise ConfigError("hedge.paths", f"must be >= 2, got {hedge_paths}")

    k = cfg["kk"]
    try:
        kk = kkmodes.KKParams(
            l=_num(k, "l", "kk."), mass=_num(k, "mass", "kk."), c=_num(k, "c", "kk."),
            gamma=_num(k, "gamma", "kk."), signature=k["signature"],
        )
    except (ValueError, KeyError) as exc:
        raise ConfigError("kk", str(exc)) from None
    samples = _num(k, "samples", "kk.", int)
    if samples < 2 or samples & (samples - 1):
        raise ConfigError("kk.samples", f"must be a power of two >= 2, got {samples}")

    levels = _num(cfg, "levels", kind=int)
    if levels < 2:
        raise ConfigError("levels", f"must be >= 2, got {levels}")
    out = cfg["out"]
    if not isinstance(out, str) or not out:
        raise ConfigError("out", "must be a directory path")

    resolved = copy.deepcopy(cfg)
    resolved["grid"]["s_max"] = grid.s_max
    resolved["grid"]["v_max"] = grid.v_max
    return RunConfig(
        params=params, mode=mode, payoff=payoff, s0=s0, grid=grid, solver=solver, mc_paths=paths,
        mc_steps=steps, seed=seed, scheme=scheme, hedge_rebalances=list(rebalances), hedge_paths=hedge_paths,
        kk=kk, kk_n_max=_num(k, "n_max", "kk.", int), kk_samples=samples, levels=levels, out=out, raw=resolved,
    )


def resolve(args) -> RunConfig:
    cfg = DEFAULTS
    if args.config:
        cfg = _merge(cfg, load_config_file(args.config))
    flags = {}
    if args.n is not None:
        flags["n"] = args.n
    if args.m is not None:
        flags["m"] = args.m
    if args.levels is not None:
        flags["levels"] = args.levels
    if args.out is not None:
        flags["out"] = args.out
    if args.seed is not None:
        flags["mc"] = {"seed": args.seed}
    if args.paths is not None:
        key = "hedge" if args.command == "hedge" else "mc"
        flags.setdefault(key, {})["paths"] = args.paths
    if args.rebalances is not None:
        try:
            flags["hedge"] = {**flags.get("hedge", {}), "rebalances": [int(x) for x in args.rebalances.split(",")]}
        except ValueError:
            raise ConfigError("hedge.rebalances", f"expected comma-separated integers, got {args.rebalances!r}") from None
    cfg = _merge(cfg, flags)
    return build_run_config(cfg)


def _prepare_out(path) -> str:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise ConfigError("out", f"cannot create {path}: {exc}") from None
    if not os.access(path, os.W_OK):
        raise ConfigError("out", f"directory not writable: {path}")
    return path


def _risk_neutral(rc: RunConfig):
    return to_risk_neutral(rc.params, rc.mode)


# ---------------------------------------------------------------------------
# commands.  Each returns (stdout lines, result summary).


def cmd_price(rc: RunConfig):
    rn = _risk_neutral(rc)
    surface = pde.solve(rn, rc.payoff, rc.grid, rc.solver)
    price = pde.price_at(surface, rc.s0, rc.params.v0)
    pde.write_surface_csv(surface, os.path.join(rc.out, "surface.csv"))
    return [f"price {fmt(price)}"], {"price": price}


def mc_price(rc: RunConfig):
    rn = _risk_neutral(rc)
    T = rc.payoff.maturity
    term = sde.simulate_terminal(rn, rc.mode, rc.s0, rc.mc_paths, rc.mc_steps, T / rc.mc_steps, rc.scheme, rc.seed)
    if rc.payoff.kind.value == "custom-tabulated":
        raise ConfigError("payoff.kind", "Monte Carlo needs a call or put payoff")
    vals = rc.payoff(term.s)
    disc = math.exp(-rn.r * T)
    if np.ptp(vals) == 0:
        mean, se = float(vals[0]), 0.0
    else:
        mean = float(vals.mean())
        se = float(vals.std(ddof=1)) / math.sqrt(vals.size)
    return disc * mean, disc * se, term.clamp_count


def cmd_mc(rc: RunConfig):
    price, se, clamps = mc_price(rc)
    lines = [f"price {fmt(price)}", f"stderr {fmt(se)}", f"clamps {clamps}"]
    return lines, {"price": price, "stderr": se, "clamps": clamps}


def cmd_converge(rc: RunConfig):
    rn = _risk_neutral(rc)
    rows = pde.convergence_study(rn, rc.payoff, rc.grid, rc.levels, rc.solver, rc.s0, rc.params.v0)
    pde.write_convergence_csv(rows, os.path.join(rc.out, "convergence.csv"))
    lines = ["h dt price error order"]
    lines += [" ".join(fmt(x) for x in (r.h, r.dt, r.price, r.error, r.order)) for r in rows]
    summary = {"rows": [{"h": r.h, "dt": r.dt, "price": r.price, "error": r.error, "order": r.order} for r in rows]}
    return lines, summary


def cmd_residual(rc: RunConfig):
    rn = _risk_neutral(rc)
    slices = pde.solve_slices(rn, rc.payoff, rc.grid, rc.solver)
    gen = build_generator(rn, rc.grid)
    dt = rc.payoff.maturity / rc.grid.n_t
    res = residual(slices[0], slices[1], gen, dt)
    max_abs = float(np.max(np.abs(res)))
    rms = float(np.sqrt(np.mean(res**2)))
    return [f"residual_max {fmt(max_abs)}", f"residual_rms {fmt(rms)}"], {"max_abs": max_abs, "rms": rms}


def cmd_hedge(rc: RunConfig):
    rn = _risk_neutral(rc)
    rows = []
    for count in rc.hedge_rebalances:
        summary = hedge.simulate_hedged_pnl(rn, rc.payoff, rc.s0, count, rc.hedge_paths, rc.seed, cfg=rc.solver)
        hedge.write_histogram_csv(summary, os.path.join(rc.out, f"hedge_hist_{count}.csv"))
        rows.append({"rebalances": count, "mean": summary.mean, "std": summary.std, "stderr": summary.stderr})
    with open(os.path.join(rc.out, "hedge_pnl.csv"), "w") as fh:
        fh.write("rebalances,mean,std,stderr\n")
        for r in rows:
            fh.write(f"{r['rebalances']},{r['mean']!r},{r['std']!r},{r['stderr']!r}\n")
    lines = ["rebalances mean std stderr"]
    lines += [f"{r['rebalances']} {fmt(r['mean'])} {fmt(r['std'])} {fmt(r['stderr'])}" for r in rows]
    return lines, {"rows": rows}


def cmd_modes(rc: RunConfig):
    kk = rc.kk
    radius = kk.l
    table = [(n, kkmodes.effective_mass(kk, n), kkmodes.quantized_momentum(n, radius)) for n in range(rc.kk_n_max + 1)]
    with open(os.path.join(rc.out, "modes_mass.csv"), "w") as fh:
        fh.write("n,effective_mass,momentum\n")
        for n, mass, p in table:
            fh.write(f"{n},{mass!r},{p!r}\n")
    rng = np.random.default_rng(rc.seed)
    samples = rng.standard_normal(rc.kk_samples) + 1j * rng.standard_normal(rc.kk_samples)
    fld = kkmodes.ModeField(samples, 2 * math.pi * radius)
    coeffs = kkmodes.mode_decompose(fld)
    back = kkmodes.mode_reconstruct(coeffs, fld.period, fld.samples.size)
    roundtrip = float(np.max(np.abs(back.samples - samples)) / np.max(np.abs(samples)))
    parseval = float(abs(np.sum(np.abs(samples) ** 2) / samples.size - np.sum(np.abs(coeffs) ** 2)))
    lines = ["n effective_mass momentum"]
    lines += [f"{n} {fmt(mass)} {fmt(p)}" for n, mass, p in table]
    lines += [f"roundtrip_rel_error {fmt(roundtrip)}", f"parseval_abs_error {fmt(parseval)}"]
    summary = {"effective_mass": [m for _, m, _ in table], "roundtrip_rel_error": roundtrip, "parseval_abs_error": parseval}
    return lines, summary


HANDLERS = {
    "price": cmd_price,
    "mc": cmd_mc,
    "converge": cmd_converge,
    "residual": cmd_residual,
    "hedge": cmd_hedge,
    "modes": cmd_modes,
}


def write_manifest(rc: RunConfig, command: str, duration: float, result: dict) -> str:
    manifest = {
        "tool": "mgmodes",
        "version": __version__,
        "command": command,
        "config": rc.raw,
        "seed": rc.seed,
        "backend": _accel.backend_name(),
        "threads": _accel.thread_count(),
        "duration_s": duration,
        "result": result,
    }
    path = os.path.join(rc.out, f"manifest_{command}.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file or a manifest from an earlier run")
    common.add_argument("--n", type=int, help="security mode index")
    common.add_argument("--m", type=int, help="variance mode index")
    common.add_argument("--seed", type=int, help="Monte Carlo seed (unsigned 64-bit)")
    common.add_argument("--paths", type=int, help="Monte Carlo paths")
    common.add_argument("--levels", type=int, help="refinement levels for converge")
    common.add_argument("--rebalances", help="comma-separated rebalance counts for hedge")
    common.add_argument("--out", help="output directory")
    parser = argparse.ArgumentParser(prog="mgmodes", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"mgmodes {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _fail(code: int, kind: str, message: str) -> int:
    text = " ".join(str(message).split())
    print(f"mgmodes: error: {kind}: {text}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        rc = resolve(args)
        _prepare_out(rc.out)
        start = time.perf_counter()
        lines, result = HANDLERS[args.command](rc)
        duration = time.perf_counter() - start
        write_manifest(rc, args.command, duration, result)
    except (ConfigError, ValidationError, pde.OutOfGridError) as exc:
        return _fail(2, "config", exc)
    except NumericalError as exc:
        return _fail(3, "numerical", exc)
    sys.stdout.write("".join(line + "\n" for line in lines))
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
