"""Command-line entry point: ``rsma {solve,sweep,cdf,region,verify}``.

Configuration
-------------
An INI file (``--config``) with the sections and keys listed in
:data:`SCHEMA`; every key is optional.  Lists are comma separated.  Values
are layered, later layers winning:

1. built-in defaults (the standard simulation setup),
2. the config file,
3. environment variables ``RSMA_<SECTION>_<KEY>``, upper case, for example
   ``RSMA_INSTANCE_P_MAX_DBM=25`` or ``RSMA_EXPERIMENT_TRIALS=500``,
4. command-line flags (``--seed``, ``--trials``, ``--xi``).

Exit codes: 0 success, 1 verification failure, 2 usage or configuration
error, 3 infeasible instance, 4 empty common-power range.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import re
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Mapping, Optional, Sequence

import numpy as np

from . import experiments as ex
from .baselines import solve_broadcast, solve_noma, solve_ofdma
from .channel import ChannelParams, dbm_to_watt, random_instance
from .model import EmptyP0Range, Infeasible, NetworkInstance, SolverParams
from .oracle import OracleConfig
from .search import solve_rsma, solve_rsma_auto

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_EMPTY_RANGE = 0, 1, 2, 3, 4
ENV_PREFIX = "RSMA_"


def _floats(text: str):
    return tuple(float(x) for x in text.split(",") if x.strip())


def _strs(text: str):
    return tuple(x.strip() for x in text.split(",") if x.strip())


def _opt_float(text: str):
    return None if text.strip().lower() in ("", "none") else float(text)


# section -> key -> (parser, default)
SCHEMA: Dict[str, Dict[str, tuple]] = {
    "instance": {
        "num_users": (int, 3),
        "p_max_dbm": (float, 30.0),
        "sigma2_dbm": (float, -104.0),
        "theta_dbm": (float, -94.0),
        "bandwidth_hz": (float, 1e6),
        "r_min_bps": (_floats, (1e6,)),
        # explicit ascending linear gains; when empty the users are dropped
        "gains": (_floats, ()),
    },
    "channel": {
        "cell_side_m": (float, 300.0),
        "pathloss_a": (float, 128.1),
        "pathloss_b": (float, 37.6),
        "shadow_sigma_db": (float, 4.0),
    },
    "solver": {
        "xi_rel": (_opt_float, None),
        "eps_rate": (float, 1e-6),
        "eps_power": (float, 1e-12),
        "root_tol": (float, 1e-10),
        "method": (str, "auto"),
    },
    "experiment": {
        "schemes": (_strs, ("RSMA", "NOMA", "OFDMA")),
        "sweep_var": (str, "none"),
        "sweep_values": (_floats, ()),
        "sweep_user": (int, 0),
        "trials": (int, 100),
        "seed": (int, 0),
        "workers": (int, 1),
    },
    "region": {"sweep_points": (int, 25)},
    "verify": {"count": (int, 100)},
}

METHODS = ("auto", "enumerate", "equal")


class ConfigError(Exception):
    pass


def _line_of(text: str, section: str, key: str) -> Optional[int]:
    current = None
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            current = m.group(1).strip().lower()
        elif current == section and re.match(rf"{re.escape(key)}\s*[=:]", s, re.IGNORECASE):
            return n
    return None


@dataclass
class Config:
    values: Dict[str, Dict[str, object]]

    def __getitem__(self, section: str) -> Dict[str, object]:
        return self.values[section]


def load_config(
    path: Optional[str] = None, env: Optional[Mapping[str, str]] = None
) -> Config:
    """Defaults, then the file at ``path``, then ``RSMA_*`` variables in ``env``."""
    env = os.environ if env is None else env
    values = {sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read_string(text, source=str(path))
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from None
        for sec in parser.sections():
            if sec not in SCHEMA:
                line = _section_line(text, sec)
                raise ConfigError(f"{path}:{line}: unknown section [{sec}]")
            for key, raw in parser.items(sec):
                line = _line_of(text, sec, key)
                if key not in SCHEMA[sec]:
                    raise ConfigError(f"{path}:{line}: unknown key '{key}' in [{sec}]")
                values[sec][key] = _parse(SCHEMA[sec][key][0], raw, f"{path}:{line}: [{sec}] {key}")
    for sec, keys in SCHEMA.items():
        for key, (conv, _) in keys.items():
            name = f"{ENV_PREFIX}{sec}_{key}".upper()
            if name in env:
                values[sec][key] = _parse(conv, env[name], f"environment {name}")
    return Config(values)


def _section_line(text: str, section: str):
    for n, line in enumerate(text.splitlines(), 1):
        if line.strip() == f"[{section}]":
            return n
    return "?"


def _parse(conv, raw: str, where: str):
    try:
        return conv(raw)
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r}") from None


def _apply_flags(cfg: Config, args) -> None:
    if getattr(args, "seed", None) is not None:
        cfg["experiment"]["seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        cfg["experiment"]["trials"] = args.trials
    if getattr(args, "xi", None) is not None:
        cfg["solver"]["xi_rel"] = args.xi


def channel_params(cfg: Config) -> ChannelParams:
    c = cfg["channel"]
    return ChannelParams(
        c["cell_side_m"], c["pathloss_a"], c["pathloss_b"], c["shadow_sigma_db"],
        cfg["experiment"]["seed"],
    )


def build_instance(cfg: Config, num_users: Optional[int] = None) -> NetworkInstance:
    """Explicit gains when given, otherwise a drop seeded by ``experiment.seed``."""
    inst, gains = cfg["instance"], cfg["instance"]["gains"]
    k = len(gains) if gains else (num_users or inst["num_users"])
    r = inst["r_min_bps"]
    r_min = r[0] if len(r) == 1 else np.asarray(r)
    if gains:
        return NetworkInstance(
            h=np.asarray(gains), sigma2=float(dbm_to_watt(inst["sigma2_dbm"])),
            bandwidth=inst["bandwidth_hz"], p_max=float(dbm_to_watt(inst["p_max_dbm"])),
            theta=float(dbm_to_watt(inst["theta_dbm"])), r_min=r_min,
        )
    return random_instance(
        k, cfg["experiment"]["seed"], channel_params(cfg),
        bandwidth=inst["bandwidth_hz"], sigma2_dbm=inst["sigma2_dbm"],
        p_max_dbm=inst["p_max_dbm"], theta_dbm=inst["theta_dbm"], r_min=r_min,
    )


def solver_params(cfg: Config, p_max: float) -> SolverParams:
    s = cfg["solver"]
    xi = None if s["xi_rel"] is None else s["xi_rel"] * p_max
    return SolverParams(xi=xi, eps_rate=s["eps_rate"], eps_power=s["eps_power"], root_tol=s["root_tol"])


def experiment_spec(cfg: Config) -> ex.ExperimentSpec:
    e, i = cfg["experiment"], cfg["instance"]
    return ex.ExperimentSpec(
        schemes=tuple(e["schemes"]), sweep_var=e["sweep_var"], sweep_values=tuple(e["sweep_values"]),
        sweep_user=e["sweep_user"], trials=e["trials"], seed=e["seed"], num_users=i["num_users"],
        channel=channel_params(cfg), bandwidth=i["bandwidth_hz"], sigma2_dbm=i["sigma2_dbm"],
        p_max_dbm=i["p_max_dbm"], theta_dbm=i["theta_dbm"], r_min=tuple(i["r_min_bps"]),
        xi_rel=cfg["solver"]["xi_rel"], eps_rate=cfg["solver"]["eps_rate"],
        eps_power=cfg["solver"]["eps_power"], workers=e["workers"],
    )


def _run_rsma(inst, params, method):
    if method == "auto":
        return solve_rsma_auto(inst, params)
    return solve_rsma(inst, params, method=method)


def solve_record(cfg: Config) -> dict:
    """Machine-readable result of ``solve``; contains no timing, so it is
    identical across runs with the same configuration."""
    inst = build_instance(cfg)
    params = solver_params(cfg, inst.p_max)
    method = cfg["solver"]["method"]
    if method not in METHODS:
        raise ConfigError(f"[solver] method must be one of {METHODS}")
    sol, trace = _run_rsma(inst, params, method)
    baselines = {}
    for name, fn in (("NOMA", solve_noma), ("OFDMA", solve_ofdma), ("Broadcast", solve_broadcast)):
        try:
            baselines[name] = fn(inst).sum_rate
        except Infeasible:
            baselines[name] = None
    return {
        "instance": {
            "h": inst.h.tolist(), "sigma2_w": inst.sigma2, "bandwidth_hz": inst.bandwidth,
            "p_max_w": inst.p_max, "theta_w": inst.theta, "r_min_bps": inst.r_min.tolist(),
        },
        "solution": sol.as_record(),
        "trace": trace.summary(),
        "baselines_sum_rate_bps": baselines,
    }


def _report(rec: dict) -> str:
    s = rec["solution"]
    lines = [
        f"sum-rate         {s['sum_rate_bps'] / 1e6:.6f} Mbit/s   (path: {s['path']})",
        f"common power p0  {s['p0_w']:.9g} W",
        f"common rate c1   {s['common_rate_bps'] / 1e6:.6f} Mbit/s",
        f"k_star           {s['k_star']}",
        "user  a_k [Mbit/s]   p_k [W]         total [Mbit/s]",
    ]
    for k, (a, p, r) in enumerate(zip(s["rates_bps"], s["p_priv_w"], s["user_total_rates_bps"])):
        lines.append(f"{k:>4}  {a / 1e6:<12.6f} {p:<15.9g} {r / 1e6:.6f}")
    t = rec["trace"]
    lines.append(
        f"search: {t['grid_points']} grid points ({t['feasible_points']} feasible), "
        f"p0 in [{t['p0_range_w'][0]:.6g}, {t['p0_range_w'][1]:.6g}] W"
    )
    for name, v in rec["baselines_sum_rate_bps"].items():
        lines.append(f"{name:<16} " + ("infeasible" if v is None else f"{v / 1e6:.6f} Mbit/s"))
    return "\n".join(lines)


def cmd_solve(cfg: Config, args) -> int:
    rec = solve_record(cfg)
    print(_report(rec))
    if args.out:
        Path(args.out).write_text(json.dumps(rec, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def _summary_path(out: str) -> Path:
    p = Path(out)
    return p.with_name(p.stem + "_summary" + (p.suffix or ".csv"))


def cmd_sweep(cfg: Config, args) -> int:
    spec = experiment_spec(cfg)
    rows = ex.run_sweep(spec)
    summary = ex.summarize(rows, spec)
    out = args.out or "sweep.csv"
    ex.write_csv(out, ex.SWEEP_COLUMNS, (r.cells() for r in rows))
    ex.write_csv(_summary_path(out), ex.SUMMARY_COLUMNS, summary)
    for row in summary:
        var, val, scheme, n, nf, mean = row[:6]
        print(f"{var}={val:g} {scheme:<9} feasible {nf}/{n} mean {mean / 1e6:.4f} Mbit/s")
    return EXIT_OK


def cmd_cdf(cfg: Config, args) -> int:
    spec = experiment_spec(cfg)
    rows = ex.cdf_rows(spec)
    ex.write_csv(args.out or "cdf.csv", ex.CDF_COLUMNS, rows)
    print(f"{len(rows)} CDF points written")
    return EXIT_OK


def cmd_region(cfg: Config, args) -> int:
    inst = build_instance(cfg, num_users=2)
    if inst.num_users != 2:
        raise ConfigError("region needs exactly two users")
    rows = ex.region_rows(inst, cfg["region"]["sweep_points"], OracleConfig())
    ex.write_csv(args.out or "region.csv", ex.REGION_COLUMNS, rows)
    print(f"{len(rows)} boundary points written")
    return EXIT_OK


def cmd_verify(cfg: Config, args) -> int:
    k = args.num_users or cfg["instance"]["num_users"]
    if k > 3:
        raise ConfigError("verify supports at most three users")
    count = args.count or cfg["verify"]["count"]
    i = cfg["instance"]
    r = i["r_min_bps"]

    def make(num_users, seed):
        return random_instance(
            num_users, seed, channel_params(cfg), bandwidth=i["bandwidth_hz"],
            sigma2_dbm=i["sigma2_dbm"], p_max_dbm=i["p_max_dbm"], theta_dbm=i["theta_dbm"],
            r_min=r[0] if len(r) == 1 else np.asarray(r),
        )

    probe = make(k, cfg["experiment"]["seed"])
    report = ex.run_verify(
        count, cfg["experiment"]["seed"], k, make, solve_rsma, solver_params(cfg, probe.p_max)
    )
    print("\n".join(report.lines()))
    return EXIT_OK if report.passed else EXIT_VERIFY


COMMANDS = {
    "solve": cmd_solve, "sweep": cmd_sweep, "cdf": cmd_cdf,
    "region": cmd_region, "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rsma", description="RSMA sum-rate solver and experiments")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "solve": "solve one instance and report the allocation",
        "sweep": "Monte-Carlo sweep, one CSV row per (value, trial, scheme)",
        "cdf": "empirical sum-rate CDF per scheme over paired trials",
        "region": "two-user rate-region boundaries for RSMA and NOMA",
        "verify": "certify the solver against the brute-force oracle",
    }
    for name, text in helps.items():
        s = sub.add_parser(name, help=text)
        s.add_argument("--config", metavar="PATH")
        s.add_argument("--out", metavar="PATH")
        s.add_argument("--seed", type=int, metavar="N")
        s.add_argument("--trials", type=int, metavar="N")
        s.add_argument("--xi", type=float, metavar="REL", help="common-power step as a fraction of P")
        if name == "verify":
            s.add_argument("--count", type=int, metavar="N")
            s.add_argument("--num-users", type=int, metavar="K")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        _apply_flags(cfg, args)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EmptyP0Range as exc:
        print(f"empty common-power range ({exc.constraint}): {exc}", file=sys.stderr)
        return EXIT_EMPTY_RANGE
    except Infeasible as exc:
        print(f"infeasible ({exc.constraint}): {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
