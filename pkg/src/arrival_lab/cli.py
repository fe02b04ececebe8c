"""Command-line front end: ``arrival-lab run|table|sweep|validate``.

Settings merge as flags > config file > defaults. The config file is a flat
YAML mapping whose keys mirror :class:`RunConfig` (plus inline scenario
parameters when ``scenario: inline``).
"""

from __future__ import annotations

import argparse
import io
import logging
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import yaml

from . import protocol
from .comparison import TimeSeries, scan
from .quadrature import BracketError, NumericalFailure, QuadratureSpec
from .scattering import ScatteringModel
from .units import GaussianPacket, SuperpositionState

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_PARTIAL = 4
EXIT_IO = 5

COMMANDS = ("run", "table", "sweep", "validate")
TIMESERIES_HEADER = ("t", "t_n", "j", "j_plus", "p_x", "delta", "delta_abs")
TABLE_HEADER = ("d", "x0", "t_i", "t_f", "X", "transmittance", "epsilon_used")
INLINE_KEYS = ("p0", "dp", "x0", "X", "d", "p_barrier", "beta", "p1", "p2", "t_start", "t_end")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str | None = None
    scenario: str | None = None
    grid: int = 1024
    out: str | None = None
    quad_tol: float | None = None
    epsilon: float | None = None
    digits: int = 12
    inline: tuple = ()

    def validate(self) -> RunConfig:
        if self.command not in COMMANDS:
            raise ConfigError(f"command: expected one of {', '.join(COMMANDS)}, got {self.command!r}")
        if self.command != "validate" and not self.scenario:
            raise ConfigError("scenario: missing (give --scenario ID or set it in the config file)")
        if self.grid < 16:
            raise ConfigError(f"grid: must be >= 16, got {self.grid}")
        if self.digits < 1 or self.digits > 17:
            raise ConfigError(f"digits: must lie in 1..17, got {self.digits}")
        if self.epsilon is not None and not 0 < self.epsilon < 1:
            raise ConfigError(f"epsilon: must lie in (0, 1), got {self.epsilon}")
        if self.quad_tol is not None and not self.quad_tol > 0:
            raise ConfigError(f"quad_tol: must be positive, got {self.quad_tol}")
        if self.scenario == "inline":
            missing = {"p0", "dp", "X", "t_start", "t_end"} - dict(self.inline).keys()
            if missing:
                raise ConfigError(f"scenario: inline scenario lacks {', '.join(sorted(missing))}")
        elif self.scenario and self.scenario not in protocol.PRESET_IDS:
            raise ConfigError(f"scenario: unknown preset {self.scenario!r}")
        return self

    @property
    def quad(self) -> QuadratureSpec:
        if self.quad_tol is None:
            return QuadratureSpec()
        # the absolute floor follows the relative target at the default ratio
        base = QuadratureSpec()
        return QuadratureSpec(rel_tol=self.quad_tol, abs_tol=self.quad_tol * base.abs_tol / base.rel_tol)


_FIELD_TYPES = {"command": str, "scenario": str, "grid": int, "out": str, "quad_tol": float,
                "epsilon": float, "digits": int}


def _coerce(key, value, where):
    kind = _FIELD_TYPES.get(key, float)
    try:
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: key {key!r} expects {kind.__name__}, got {value!r}") from None


def read_config_text(text: str, source: str = "<config>") -> dict:
    """Parse a flat key-value document; errors name the key and line."""
    try:
        node = yaml.compose(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = f"line {mark.line + 1}" if mark else "unknown line"
        raise ConfigError(f"{source}, {line}: malformed config ({getattr(exc, 'problem', exc)})") from None
    if node is None:
        return {}
    if not isinstance(node, yaml.MappingNode):
        raise ConfigError(f"{source}, line {node.start_mark.line + 1}: expected key-value pairs")
    out = {}
    allowed = set(_FIELD_TYPES) | set(INLINE_KEYS)
    for key_node, value_node in node.value:
        key = str(key_node.value).replace("-", "_")
        where = f"{source}, line {key_node.start_mark.line + 1}"
        if key not in allowed:
            raise ConfigError(f"{where}: unknown key {key!r}")
        if not isinstance(value_node, yaml.ScalarNode):
            raise ConfigError(f"{where}: key {key!r} must have a scalar value")
        raw = value_node.value
        out[key] = None if raw in ("", "null", "~") else _coerce(key, raw, where)
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="arrival-lab", description=__doc__.splitlines()[0])
    parser.add_argument("command", nargs="?", choices=COMMANDS)
    parser.add_argument("--scenario", "--id", dest="scenario", help="preset id or 'inline'")
    parser.add_argument("--grid", type=int, help="number of time samples (default 1024)")
    parser.add_argument("--out", help="output file (run, table) or directory (sweep)")
    parser.add_argument("--epsilon", type=float, help="protocol threshold (default 1e-4)")
    parser.add_argument("--quad-tol", dest="quad_tol", type=float, help="quadrature relative tolerance (absolute floor scales with it)")
    parser.add_argument("--digits", type=int, help="significant digits in CSV output")
    parser.add_argument("--config", help="flat key-value config file")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def parse_config(argv=None, text: str | None = None) -> RunConfig:
    """Merge flags over the config file (``--config`` or ``text``) over defaults."""
    args = build_parser().parse_args(argv)
    merged: dict = {}
    if args.config:
        path = Path(args.config)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
        merged.update(read_config_text(text, str(path)))
    elif text is not None:
        merged.update(read_config_text(text))
    for f in ("command", "scenario", "grid", "out", "epsilon", "quad_tol", "digits"):
        value = getattr(args, f)
        if value is not None:
            merged[f] = value
    inline = tuple(sorted((k, merged.pop(k)) for k in list(merged) if k in INLINE_KEYS))
    known = {f.name for f in fields(RunConfig)}
    cfg = RunConfig(**{k: v for k, v in merged.items() if k in known}, inline=inline)
    return cfg.validate()


# --- CSV emission --------------------------------------------------------------


def _fmt(value: float, digits: int) -> str:
    if value is None or not math.isfinite(value):
        return "nan"
    return format(float(value), f".{digits}g")


def emit_timeseries(series: TimeSeries, digits: int = 12) -> str:
    buf = io.StringIO()
    buf.write(",".join(TIMESERIES_HEADER) + "\n")
    cols = (series.t, series.t_n, series.j, series.j_plus, series.p_x, series.delta, series.delta_abs)
    for row in zip(*cols):
        buf.write(",".join(_fmt(v, digits) for v in row) + "\n")
    return buf.getvalue()


def emit_table(table: protocol.ProtocolTable, digits: int = 12) -> str:
    buf = io.StringIO()
    buf.write(",".join(TABLE_HEADER) + "\n")
    for d, r in table.rows.items():
        vals = (d, r.x0, r.t_i, r.t_f, r.X, r.transmittance, r.epsilon)
        buf.write(",".join(_fmt(v, digits) for v in vals) + "\n")
    return buf.getvalue()


def _write(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


# --- commands -----------------------------------------------------------------


def _inline_scenario(cfg: RunConfig) -> protocol.Scenario:
    p = dict(cfg.inline)
    x0 = p.get("x0", 0.0)
    if "beta" in p:
        state = SuperpositionState.from_momenta(p["beta"], p["p1"], p["p2"], p["dp"], x0)
    else:
        state = GaussianPacket(p["p0"], p["dp"], x0)
    model = ScatteringModel.barrier(p["d"], p.get("p_barrier", protocol.P_BARRIER)) if p.get("d") else ScatteringModel.free()
    return protocol.Scenario(state, model, p["X"], (p["t_start"], p["t_end"]), cfg.grid, cfg.quad, "inline")


def _scenarios(cfg: RunConfig, family: bool):
    if cfg.scenario == "inline":
        return [_inline_scenario(cfg)]
    kwargs = {"grid": cfg.grid, "quad": cfg.quad}
    if cfg.epsilon is not None:
        kwargs["epsilon"] = cfg.epsilon
    if cfg.scenario in ("table1", "table2"):
        raise ConfigError(f"scenario: {cfg.scenario} is a table; use the 'table' command")
    if family:
        return protocol.preset_family(cfg.scenario, **kwargs)
    return [protocol.preset(cfg.scenario, **kwargs)]


def _member_name(s: protocol.Scenario) -> str:
    if "d" in s.meta:
        return f"{s.preset_id}_d{s.meta['d']:g}"
    if "dp" in s.meta:
        return f"{s.preset_id}_dp{s.meta['dp']:g}"
    return s.preset_id or "custom"


def cmd_run(cfg: RunConfig) -> int:
    (scenario,) = _scenarios(cfg, family=False)
    series = scan(scenario)
    _write(emit_timeseries(series, cfg.digits), cfg.out)
    return EXIT_OK if series.valid.all() else EXIT_NUMERICAL


def cmd_sweep(cfg: RunConfig) -> int:
    outdir = Path(cfg.out or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    status = EXIT_OK
    for scenario in _scenarios(cfg, family=True):
        series = scan(scenario)
        path = outdir / f"{_member_name(scenario)}.csv"
        _write(emit_timeseries(series, cfg.digits), str(path))
        print(path)
        if not series.valid.all():
            status = EXIT_NUMERICAL
    return status


def cmd_table(cfg: RunConfig) -> int:
    if cfg.scenario not in ("table1", "table2"):
        raise ConfigError(f"scenario: table command needs table1 or table2, got {cfg.scenario!r}")
    eps = protocol.TABLE_EPSILON if cfg.epsilon is None else cfg.epsilon
    table = protocol.solve_table(cfg.scenario, eps, cfg.quad)
    _write(emit_table(table, cfg.digits), cfg.out)
    return EXIT_OK if table.complete else EXIT_PARTIAL


def cmd_validate(cfg: RunConfig) -> int:
    from .validation import run_oracles

    results = run_oracles(cfg.quad)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
    passed = sum(ok for _, ok, _ in results)
    print(f"{passed}/{len(results)} oracle checks passed")
    return EXIT_OK if passed == len(results) else EXIT_NUMERICAL


HANDLERS = {"run": cmd_run, "table": cmd_table, "sweep": cmd_sweep, "validate": cmd_validate}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    logging.basicConfig(level=logging.INFO if ("-v" in argv or "--verbose" in argv) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = parse_config(argv)
        return HANDLERS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"arrival-lab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, BracketError) as exc:
        print(f"arrival-lab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"arrival-lab: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
