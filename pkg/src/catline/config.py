"""Scenario configuration: TOML parsing, validation and rendering.

A config file has top-level ``scenario`` plus the sections ``[system]``,
``[drive]``, ``[collision]`` (collision scenarios only) and ``[run]``.
Every omitted field is filled with its default so that the parsed value
is complete; ``render_config`` writes it back out and
``parse_config(render_config(c)) == c``.
"""

from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass, field
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .collision import MIXING_MODES, RESERVOIR_MODELS, CollisionParams, ReservoirSpec
from .dynamics import DEFAULT_OMEGA, DriveSchedule, SystemParams
from .errors import ConfigError

SCENARIOS = ("stabilize", "ramp", "homogenize", "classify")
COLLISION_SCENARIOS = ("homogenize", "classify")
INITIAL_STATES = ("c_plus", "c_minus", "plus", "vacuum")

DEFAULT_INITIAL = {"stabilize": "c_plus", "ramp": "vacuum", "homogenize": "plus", "classify": "plus"}
DEFAULT_TOL = {"homogenize": 1e-3, "classify": 0.05}

SYSTEM_KEYS = ("kerr", "eps2", "delta_ar", "delta_ir", "kappa1", "kappa2", "omega_scale")
DRIVE_KEYS = ("kind", "tau_ramp")
COLLISION_KEYS = (
    "eps_x", "tau", "n_collisions", "theta", "phi", "weights",
    "mixing", "reservoir_model", "probe_dissipation",
)
RUN_KEYS = ("dim", "t_final", "dt", "record_every", "window", "tol", "out_dir", "seed", "initial")
SECTIONS = {"system": SYSTEM_KEYS, "drive": DRIVE_KEYS, "collision": COLLISION_KEYS, "run": RUN_KEYS}


@dataclass(frozen=True)
class RunSettings:
    dim: int | str = "auto"
    t_final: float = 0.0
    dt: float | str = "auto"
    record_every: int = 1
    window: int = 200
    tol: float = 1e-3
    out_dir: str = ""
    seed: int = 0
    initial: str = "c_plus"


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    system: SystemParams
    drive: DriveSchedule
    run: RunSettings
    collision: CollisionParams | None = field(default=None)


# --- parsing helpers -------------------------------------------------------

def _locate(text: str, section: str | None, key: str) -> int | None:
    """Line number of ``key = ...`` inside ``[section]`` (None: top level)."""
    current = None
    for n, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        m = re.match(r"\[\s*([A-Za-z0-9_.-]+)\s*\]", s)
        if m:
            current = m.group(1)
            continue
        if current == section and re.match(rf"{re.escape(key)}\s*=", s):
            return n
    return None


class _Reader:
    """Typed access to one section, raising ``ConfigError`` naming the field."""

    def __init__(self, text: str, name: str, data: dict):
        self.text = text
        self.name = name
        self.data = data

    def fail(self, key: str, msg: str):
        raise ConfigError(msg, field=f"{self.name}.{key}")

    def number(self, key: str, default: Any = None, *, minimum: float | None = None,
               positive: bool = False) -> float:
        if key not in self.data:
            if default is None:
                self.fail(key, "required value is missing")
            return default
        v = self.data[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(key, f"expected a number, got {v!r}")
        v = float(v)
        if not math.isfinite(v):
            self.fail(key, "must be finite")
        if minimum is not None and v < minimum:
            self.fail(key, f"must be >= {minimum}, got {v!r}")
        if positive and v <= 0:
            self.fail(key, f"must be > 0, got {v!r}")
        return v

    def integer(self, key: str, default: int, *, minimum: int = 0) -> int:
        v = self.data.get(key, default)
        if isinstance(v, bool) or not isinstance(v, int):
            self.fail(key, f"expected an integer, got {v!r}")
        if v < minimum:
            self.fail(key, f"must be >= {minimum}, got {v}")
        return v

    def choice(self, key: str, default: str, options) -> str:
        v = self.data.get(key, default)
        if v not in options:
            self.fail(key, f"must be one of {', '.join(map(str, options))}; got {v!r}")
        return v

    def string(self, key: str, default: str) -> str:
        v = self.data.get(key, default)
        if not isinstance(v, str):
            self.fail(key, f"expected a quoted string, got {v!r}")
        return v

    def boolean(self, key: str, default: bool) -> bool:
        v = self.data.get(key, default)
        if not isinstance(v, bool):
            self.fail(key, f"expected true or false, got {v!r}")
        return v

    def numbers(self, key: str, default: list | None) -> list[float]:
        v = self.data.get(key, default)
        if v is None:
            self.fail(key, "required value is missing")
        if not isinstance(v, list):
            v = [v]
        out = []
        for x in v:
            if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
                self.fail(key, f"expected finite numbers, got {x!r}")
            out.append(float(x))
        return out


def _check_keys(text: str, name: str | None, data: dict, allowed) -> None:
    for key in data:
        if key not in allowed:
            where = f"[{name}]" if name else "the top level"
            raise ConfigError(
                f"unknown key {key!r} in {where}", line=_locate(text, name, key)
            )


def _parse_system(r: _Reader) -> SystemParams:
    values = dict(
        K=r.number("kerr", positive=True),
        eps2=r.number("eps2", positive=True),
        delta_ar=r.number("delta_ar", 0.0),
        kappa1=r.number("kappa1", 0.0, minimum=0.0),
        kappa2=r.number("kappa2", 0.0, minimum=0.0),
        omega_scale=r.number("omega_scale", DEFAULT_OMEGA, positive=True),
    )
    # the unit detuning defaults to the probe detuning
    values["delta_ir"] = r.number("delta_ir", values["delta_ar"])
    return SystemParams(**values)


def _parse_drive(r: _Reader, system: SystemParams) -> DriveSchedule:
    kind = r.choice("kind", "constant", ("constant", "ramp"))
    if kind == "constant":
        if "tau_ramp" in r.data:
            r.fail("tau_ramp", "only valid for a ramp drive")
        return DriveSchedule("constant", system.eps2)
    return DriveSchedule("ramp", system.eps2, r.number("tau_ramp", positive=True))


def _parse_run(r: _Reader, scenario: str) -> RunSettings:
    dim = r.data.get("dim", "auto")
    if dim != "auto" and (isinstance(dim, bool) or not isinstance(dim, int) or dim < 2):
        r.fail("dim", f"must be \"auto\" or an integer >= 2, got {dim!r}")
    dt = r.data.get("dt", "auto")
    if dt != "auto":
        dt = r.number("dt", positive=True)
    if scenario in COLLISION_SCENARIOS:
        t_final = r.number("t_final", 0.0, minimum=0.0)
    else:
        t_final = r.number("t_final", positive=True)
    return RunSettings(
        dim=dim,
        t_final=t_final,
        dt=dt,
        record_every=r.integer("record_every", 1, minimum=1),
        window=r.integer("window", 200, minimum=2),
        tol=r.number("tol", DEFAULT_TOL.get(scenario, 1e-3), positive=True),
        out_dir=r.string("out_dir", ""),
        seed=r.integer("seed", 0),
        initial=r.choice("initial", DEFAULT_INITIAL[scenario], INITIAL_STATES),
    )


def _parse_collision(r: _Reader, run: RunSettings) -> CollisionParams:
    theta = r.numbers("theta", None)
    n = len(theta)
    phi = r.numbers("phi", [0.0] * n)
    weights = r.numbers("weights", [1.0 / n] * n if n > 1 else [1.0])
    if len(phi) != n:
        r.fail("phi", f"needs {n} entries to match theta, got {len(phi)}")
    if len(weights) != n:
        r.fail("weights", f"needs {n} entries to match theta, got {len(weights)}")
    if any(not 0.0 <= w <= 1.0 for w in weights):
        r.fail("weights", "each weight must lie in [0, 1]")
    if abs(sum(weights) - 1.0) > 1e-12:
        r.fail("weights", f"weights must sum to 1 (got {sum(weights)!r})")
    n_coll = r.integer("n_collisions", 5000, minimum=1)
    return CollisionParams(
        eps_x=r.number("eps_x", 1e-3, minimum=0.0),
        tau=r.number("tau", 113.01, positive=True),
        n_collisions=n_coll,
        reservoirs=tuple(ReservoirSpec(t, p, w) for t, p, w in zip(theta, phi, weights)),
        mixing=r.choice("mixing", "deterministic-roundrobin", MIXING_MODES),
        seed=run.seed,
        reservoir_model=r.choice("reservoir_model", "logical-2level", RESERVOIR_MODELS),
        probe_dissipation=r.boolean("probe_dissipation", True),
        max_dt=None if run.dt == "auto" else run.dt,
    )


def parse_config(text: str, scenario: str | None = None) -> ScenarioConfig:
    """Parse and validate a config; ``scenario`` fills in a missing top-level key."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        line = getattr(err, "lineno", None)
        if line is None:
            m = re.search(r"line (\d+)", str(err))
            line = int(m.group(1)) if m else 0
        raise ConfigError(str(err), line=line) from err

    _check_keys(text, None, raw, ("scenario",) + tuple(SECTIONS))
    name = raw.get("scenario", scenario)
    if name is None:
        raise ConfigError("no scenario given in the file or on the command line", field="scenario")
    if scenario is not None and name != scenario:
        raise ConfigError(f"file declares {name!r} but {scenario!r} was requested", field="scenario")
    if name not in SCENARIOS:
        raise ConfigError(f"must be one of {', '.join(SCENARIOS)}; got {name!r}", field="scenario")

    sections = {}
    for sec, keys in SECTIONS.items():
        data = raw.get(sec, {})
        if not isinstance(data, dict):
            raise ConfigError("must be a [section]", line=_locate(text, None, sec), field=sec)
        _check_keys(text, sec, data, keys)
        sections[sec] = _Reader(text, sec, data)
    if "system" not in raw:
        raise ConfigError("missing [system] section", field="system")
    if name in COLLISION_SCENARIOS and "collision" not in raw:
        raise ConfigError("missing [collision] section", field="collision")
    if name not in COLLISION_SCENARIOS and "collision" in raw:
        raise ConfigError(f"[collision] is not used by scenario {name!r}", field="collision")

    try:
        system = _parse_system(sections["system"])
        drive = _parse_drive(sections["drive"], system)
        if name == "ramp" and drive.kind != "ramp":
            raise ConfigError("the ramp scenario needs kind = \"ramp\"", field="drive.kind")
        run = _parse_run(sections["run"], name)
        collision = _parse_collision(sections["collision"], run) if name in COLLISION_SCENARIOS else None
    except ConfigError:
        raise
    except ValueError as err:
        raise ConfigError(str(err)) from err
    return ScenarioConfig(name, system, drive, run, collision)


# --- rendering -------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    raise TypeError(f"cannot render {v!r}")


def render_config(cfg: ScenarioConfig) -> str:
    """Complete TOML text for ``cfg`` with every field explicit."""
    s = cfg.system
    lines = [f"scenario = {_fmt(cfg.scenario)}", "", "[system]"]
    for key, v in zip(SYSTEM_KEYS, (s.K, s.eps2, s.delta_ar, s.delta_ir, s.kappa1, s.kappa2, s.omega_scale)):
        lines.append(f"{key} = {_fmt(float(v))}")
    lines += ["", "[drive]", f"kind = {_fmt(cfg.drive.kind)}"]
    if cfg.drive.kind == "ramp":
        lines.append(f"tau_ramp = {_fmt(float(cfg.drive.tau_ramp))}")
    c = cfg.collision
    if c is not None:
        lines += [
            "",
            "[collision]",
            f"eps_x = {_fmt(float(c.eps_x))}",
            f"tau = {_fmt(float(c.tau))}",
            f"n_collisions = {c.n_collisions}",
            f"theta = {_fmt([float(r.theta) for r in c.reservoirs])}",
            f"phi = {_fmt([float(r.phi) for r in c.reservoirs])}",
            f"weights = {_fmt([float(r.weight) for r in c.reservoirs])}",
            f"mixing = {_fmt(c.mixing)}",
            f"reservoir_model = {_fmt(c.reservoir_model)}",
            f"probe_dissipation = {_fmt(c.probe_dissipation)}",
        ]
    r = cfg.run
    lines += ["", "[run]"]
    for key in RUN_KEYS:
        v = getattr(r, key)
        if key in ("t_final", "tol") or (key == "dt" and v != "auto"):
            v = float(v)
        lines.append(f"{key} = {_fmt(v)}")
    return "\n".join(lines) + "\n"


def load_config(path, scenario: str | None = None) -> ScenarioConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err.strerror}") from err
    except UnicodeDecodeError as err:
        raise ConfigError(f"config {path} is not UTF-8 text") from err
    return parse_config(text, scenario)
