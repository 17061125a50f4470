"""Command-line experiment runner.

Every subcommand writes CSV with a ``#`` metadata header (version, command,
full config, seed, gamma, budget) and, for detection runs, a trailing verdict
line. Identical config and seed give byte-identical output.

Exit codes: 0 success, 1 runtime failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__, detect, oracle, posmaps, states
from .circuitsim import HypersphericalAnsatz, ShotPolicy, ansatz_fig2, ansatz_layered
from .errors import NonMonotone, VarentError
from .optimize import OptimizerConfig

THREADS_ENV = "VARENT_THREADS"
STATE_CHOICES = ("bell", "mes", "isotropic", "breuer", "product", "file")


class ConfigError(Exception):
    """Bad flags, config file or state file; maps to exit code 2."""


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def parse_grid(text: str) -> list[float]:
    """``start:stop:step`` with both ends included, e.g. ``0:1:0.1`` gives 11 points."""
    try:
        start, stop, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise ConfigError(f"grid must look like start:stop:step, got {text!r}") from None
    if step <= 0 or stop < start:
        raise ConfigError(f"grid needs step > 0 and stop >= start, got {text!r}")
    count = int(round((stop - start) / step))
    if abs(start + count * step - stop) > 1e-9 * max(1.0, abs(stop)):
        raise ConfigError(f"step {step} does not divide [{start}, {stop}]")
    return [round(start + i * step, 12) for i in range(count + 1)]


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be at least 1, got {n}")
    return n


def point_seed(seed: int, index: int) -> int:
    """Independent seed for grid point ``index``; the same whatever the thread count."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


# ---------------------------------------------------------------------------
# output


class Output:
    """CSV writer with a metadata header, flushed row by row, plus an optional JSON mirror."""

    def __init__(self, path: str | None, json_path: str | None, command: str, config: dict, extra: dict):
        self._fh = open(path, "w", newline="") if path else sys.stdout
        self._owns = bool(path)
        self._json_path = json_path
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self.meta = {"version": __version__, "command": command, "config": config, **extra}
        self.rows: list[list] = []
        self.trailer: dict = {}
        self._comment(f"varent {__version__}")
        self._comment(f"command: {command}")
        self._comment("config: " + json.dumps(config, sort_keys=True))
        for key, value in extra.items():
            self._comment(f"{key}: {_fmt(value)}")

    def _comment(self, text: str) -> None:
        self._fh.write(f"# {text}\n")

    def header(self, columns: Sequence[str]) -> None:
        self.columns = list(columns)
        self._writer.writerow(columns)
        self._fh.flush()

    def row(self, values: Iterable) -> None:
        values = list(values)
        self.rows.append(values)
        self._writer.writerow([_fmt(v) for v in values])
        self._fh.flush()

    def footer(self, key: str, value) -> None:
        self.trailer[key] = value
        self._comment(f"{key}: {_fmt(value)}")
        self._fh.flush()

    def close(self) -> None:
        if self._owns:
            self._fh.close()
        else:
            self._fh.flush()
        if self._json_path:
            doc = {**self.meta, "columns": getattr(self, "columns", []), "rows": self.rows, "summary": self.trailer}
            Path(self._json_path).write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


# ---------------------------------------------------------------------------
# building blocks from flags


def build_state(args, p: float | None = None) -> states.DensityMatrix:
    kind = args.state
    p = args.p if p is None else p
    if kind == "bell":
        return states.bell()
    if kind == "mes":
        return states.mes(args.n)
    if kind == "isotropic":
        return states.isotropic(args.n, p)
    if kind == "breuer":
        return states.breuer_literal(p)
    if kind == "product":
        d = 2**args.n
        return states.random_product(d, d, seed=args.seed)
    if kind == "file":
        if not args.state_file:
            raise ConfigError("--state file needs --state-file PATH")
        try:
            return states.load_state(args.state_file)
        except OSError as exc:
            raise ConfigError(f"cannot read state file: {exc}") from exc
    raise ConfigError(f"unknown state {kind!r}")


def _qubits(dim: int) -> int | None:
    w = dim.bit_length() - 1
    return w if 2**w == dim else None


def build_ansatz(args, dim: int):
    width = _qubits(dim)
    if args.ansatz == "hyperspherical" or width is None:
        return HypersphericalAnsatz(dim)
    if args.ansatz == "fig2":
        if width != 2:
            raise ConfigError("the fig2 ansatz is for two-qubit states")
        return ansatz_fig2()
    depth = args.ansatz_depth if args.ansatz_depth is not None else max(2, width)
    return ansatz_layered(width, depth)


def build_optimizer(args) -> OptimizerConfig:
    return OptimizerConfig(method=args.optimizer, learning_rate=args.lr, max_iters=args.max_iters)


def map_qubits(rho: states.DensityMatrix, map_name: str) -> int:
    if map_name == "choi":
        return 1
    n = _qubits(rho.dim_b)
    if n is None:
        raise ConfigError(f"map {map_name} needs qubits on B, state has dim_b={rho.dim_b}")
    return n


# ---------------------------------------------------------------------------
# subcommands


def cmd_detect(args) -> int:
    rho = build_state(args)
    ansatz = build_ansatz(args, rho.dim)
    cfg = build_optimizer(args)
    policy = ShotPolicy(args.shots, args.seed)
    extra: dict = {"seed": args.seed}
    if args.mode == "direct":
        decomp = None
        extra["gamma"] = "n/a"
    else:
        decomp = posmaps.decomposition_by_name(args.map, map_qubits(rho, args.map))
        extra["gamma"] = decomp.total_weight
        if args.mode == "probabilistic":
            extra["M"] = detect.sample_budget(posmaps.gamma(decomp), args.delta, args.epsilon)
    out = Output(args.out, args.json, "detect", vars_config(args), extra)
    try:
        out.header(["iteration", "loss"])
        common = dict(ansatz=ansatz, optimizer=cfg, delta=args.delta, policy=policy, seed=args.seed,
                      early_stop=not args.no_early_stop, callback=lambda k, v: out.row([k, v]))
        if args.mode == "deterministic":
            report = detect.ved_deterministic(rho, decomp, **common)
        elif args.mode == "probabilistic":
            report = detect.ved_probabilistic(rho, decomp, epsilon=args.epsilon, **common)
        else:
            report = detect.ved_reduction_direct(rho, **common)
        out.footer("initial_loss", report.initial_loss)
        out.footer("final_loss", report.final_loss)
        out.footer("iterations", report.iterations)
        if report.confidence_floor is not None:
            out.footer("confidence_floor", report.confidence_floor)
        out.footer("verdict", report.verdict)
    finally:
        out.close()
    return 0


def _map_points(fn, items: list) -> Iterable:
    threads = thread_count()
    if threads == 1:
        return map(fn, items)
    pool = ThreadPoolExecutor(max_workers=threads)
    # map() yields in submission order, so rows stay sorted by parameter
    return pool.map(fn, items)


def cmd_quantify(args) -> int:
    grid = parse_grid(args.p_grid) if args.p_grid else [args.p]
    if args.state not in ("isotropic", "breuer") and len(grid) > 1:
        raise ConfigError("--p-grid needs a parameterised state (isotropic or breuer)")
    cfg = build_optimizer(args)
    first = build_state(args, grid[0])
    if _qubits(first.dim_b) is None or first.dim_b > 4:
        raise ConfigError("quantify supports one or two qubits per side")
    depth = args.ansatz_depth if args.ansatz_depth is not None else 4
    ansatz = ansatz_layered(_qubits(first.dim) + 1, depth)
    out = Output(args.out, args.json, "quantify", vars_config(args), {"seed": args.seed})

    def run(item):
        i, p = item
        rho = build_state(args, p)
        s = point_seed(args.seed, i)
        rep = detect.vlne(rho, ansatz, cfg, ShotPolicy(args.shots, s), seed=s, restarts=args.restarts)
        return p, rep, oracle.log_negativity_exact(rho)

    try:
        out.header(["p", "E_N_estimated", "E_N_exact", "L1", "beta"])
        for p, rep, exact in _map_points(run, list(enumerate(grid))):
            out.row([p, rep.E_N, exact, rep.L1, rep.beta])
    finally:
        out.close()
    return 0


def cmd_oracle(args) -> int:
    maps = _map_list(args.map)
    n = 1 if args.family == "breuer" else args.n
    if args.grid < 2:
        raise ConfigError("--grid needs at least 2 points")
    ts = np.linspace(0.0, 1.0, args.grid)
    out = Output(args.out, args.json, "oracle", vars_config(args), {"seed": "n/a"})
    try:
        out.header(["p"] + [f"lambda_min_{m}" for m in maps] + ["E_N_exact"])
        for t in ts:
            rho = oracle.family_state(args.family, float(t), n)
            out.row([float(t)] + [oracle.min_eig_exact(m, rho) for m in maps] + [oracle.log_negativity_exact(rho)])
    finally:
        out.close()
    return 0


def cmd_scan(args) -> int:
    maps = _map_list(args.map)
    n = 1 if args.family == "breuer" else args.n
    out = Output(args.out, args.json, "scan", vars_config(args), {"seed": "n/a"})
    try:
        out.header(["map", "threshold"])
        for m in maps:
            out.row([m, oracle.threshold_scan(args.family, m, n=n, grid=args.grid)])
    finally:
        out.close()
    return 0


def cmd_budget(args) -> int:
    decomp = posmaps.decomposition_by_name(args.map, args.n)
    g = posmaps.gamma(decomp)
    m = detect.sample_budget(g, args.delta, args.epsilon)
    out = Output(args.out, args.json, "budget", vars_config(args), {"seed": "n/a", "gamma": g, "M": m})
    try:
        out.header(["map", "n", "gamma", "delta", "epsilon", "M"])
        out.row([args.map, args.n, g, args.delta, args.epsilon, m])
    finally:
        out.close()
    return 0


def _map_list(text: str) -> list[str]:
    maps = [m.strip() for m in text.split(",") if m.strip()]
    for m in maps:
        oracle.direct_map(m)
    return maps


# ---------------------------------------------------------------------------
# parser


_RUNTIME_ONLY = {"command", "config", "out", "json", "handler"}


def vars_config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _RUNTIME_ONLY}


def _common(p: argparse.ArgumentParser, seed=True, io_only=False) -> None:
    p.add_argument("--config", help="JSON file of option values; explicit flags take precedence")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--json", help="also write the results as JSON to this path")
    if seed:
        p.add_argument("--seed", type=int, default=0)


def _state_args(p: argparse.ArgumentParser, default_state: str) -> None:
    p.add_argument("--state", choices=STATE_CHOICES, default=default_state)
    p.add_argument("--state-file", help="state in the JSON format {dims, entries}")
    p.add_argument("--n", type=int, default=1, help="qubits per side")
    p.add_argument("--p", type=float, default=1.0, help="family parameter (isotropic p, Breuer lambda)")


def _run_args(p: argparse.ArgumentParser, default_shots: int = 0) -> None:
    p.add_argument("--shots", type=int, default=default_shots, help="shots per circuit, 0 for exact values")
    p.add_argument("--optimizer", choices=("gd", "adam"), default="gd")
    p.add_argument("--lr", type=float, default=None, help="learning rate (default 0.5 for gd, 0.1 for adam)")
    p.add_argument("--max-iters", type=int, default=detect.DEFAULT_MAX_ITERS)
    p.add_argument("--ansatz-depth", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="varent", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"varent {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="run variational entanglement detection")
    _common(p)
    _state_args(p, "bell")
    _run_args(p)
    p.add_argument("--map", default="reduction", choices=posmaps.MAP_NAMES + ("transpose",))
    p.add_argument("--mode", choices=("deterministic", "probabilistic", "direct"), default="deterministic")
    p.add_argument("--ansatz", choices=("layered", "fig2", "hyperspherical"), default="layered")
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--no-early-stop", action="store_true", help="run all iterations")
    p.set_defaults(handler=cmd_detect)

    p = sub.add_parser("quantify", help="estimate logarithmic negativity with the variational circuit")
    _common(p)
    _state_args(p, "isotropic")
    _run_args(p)
    p.add_argument("--p-grid", help="inclusive start:stop:step sweep of the family parameter")
    p.add_argument("--restarts", type=int, default=1)
    p.set_defaults(handler=cmd_quantify, optimizer="adam", max_iters=300)

    p = sub.add_parser("oracle", help="exact lambda_min curves over a state family")
    _common(p, seed=False)
    p.add_argument("--family", choices=("isotropic", "breuer"), default="isotropic")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--map", default="ppt", help="comma-separated map names")
    p.add_argument("--grid", type=int, default=101)
    p.set_defaults(handler=cmd_oracle)

    p = sub.add_parser("scan", help="exact separability threshold of a state family")
    _common(p, seed=False)
    p.add_argument("--family", choices=("isotropic", "breuer"), default="isotropic")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--map", default="ppt", help="comma-separated map names")
    p.add_argument("--grid", type=int, default=101)
    p.set_defaults(handler=cmd_scan)

    p = sub.add_parser("budget", help="sampling cost gamma and Hoeffding sample count M")
    _common(p, seed=False)
    p.add_argument("--map", default="reduction", choices=posmaps.MAP_NAMES + ("transpose",))
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--epsilon", type=float, default=0.05)
    p.set_defaults(handler=cmd_budget)
    return parser


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in parser._subparsers._group_actions:  # noqa: SLF001 - argparse has no public accessor
        if name in action.choices:
            return action.choices[name]
    raise ConfigError(f"unknown command {name!r}")


def parse_args(argv: Sequence[str] | None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        sub = _subparser(parser, args.command)
        known = {a.dest for a in sub._actions}  # noqa: SLF001
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        unknown = sorted(set(cfg) - known - {"help"})
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    _validate(args)
    return args


def _validate(args) -> None:
    if getattr(args, "shots", 0) < 0:
        raise ConfigError("--shots must be non-negative")
    if getattr(args, "max_iters", 1) < 1:
        raise ConfigError("--max-iters must be at least 1")
    if getattr(args, "n", 1) < 1:
        raise ConfigError("--n must be at least 1")
    if args.command == "detect" and args.delta is None:
        args.delta = detect.DEFAULT_DELTA_SHOTS if (args.shots or args.mode == "probabilistic") else detect.DEFAULT_DELTA_EXACT
    if args.command == "detect" and args.mode == "direct" and args.map != "reduction":
        raise ConfigError("direct mode evaluates the reduction criterion only")
    if args.command == "quantify" and args.n > 2:
        raise ConfigError("quantify is capped at two qubits per side")


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:  # argparse reports its own errors with code 2
        return int(exc.code or 0)
    except ConfigError as exc:
        print(f"varent: config error: {exc}", file=sys.stderr)
        return 2
    try:
        return args.handler(args)
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0
    except (ConfigError, VarentError, ValueError) as exc:
        code = 1 if isinstance(exc, (ArithmeticError, NonMonotone)) else 2
        print(f"varent: {'error' if code == 1 else 'config error'}: {exc}", file=sys.stderr)
        return code
    except Exception as exc:  # noqa: BLE001 - any failure during a run is a runtime error
        print(f"varent: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
