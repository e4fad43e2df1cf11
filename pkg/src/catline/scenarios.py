"""Execute a parsed scenario and write its CSV artifacts."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .classifier import classify_reservoirs
from .collision import CollisionTrace, detect_steady_state, run_collisions
from .config import ScenarioConfig, parse_config, render_config
from .dynamics import Trajectory, auto_dt, evolve
from .errors import ConfigError, NumericalFailure
from .states import CatBasis, auto_dim, cat_basis, fidelity, fock, plus_state

log = logging.getLogger(__name__)

TRACE_COLUMNS = ("t", "p_e", "p_g", "z", "trace_err", "min_eig")
COLLISION_COLUMNS = ("k", "reservoir_index", "p_e", "p_g", "z")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_NOT_CONVERGED = 4


@dataclass
class RunResult:
    exit_code: int
    csv_path: Path
    summary: dict = field(default_factory=dict)
    summary_path: Path | None = None


def resolve_dim(cfg: ScenarioConfig) -> int:
    return auto_dim(cfg.system.alpha) if cfg.run.dim == "auto" else int(cfg.run.dim)


def _initial_state(name: str, basis: CatBasis):
    if name == "c_plus":
        return basis.c_plus.dm()
    if name == "c_minus":
        return basis.c_minus.dm()
    if name == "plus":
        return plus_state(basis).dm()
    return fock(0, basis.dim).dm()


def _num(v: float) -> str:
    s = f"{v:.12f}"
    return s[1:] if s.startswith("-") and float(s) == 0.0 else s


def header_lines(cfg: ScenarioConfig, resolved: dict) -> list[str]:
    lines = [f"# catline {__version__}", f"# scenario: {cfg.scenario}", f"# seed: {cfg.run.seed}"]
    lines += [f"# resolved {k}: {v}" for k, v in resolved.items()]
    lines.append("# config:")
    lines += ["# " + ln if ln else "#" for ln in render_config(cfg).splitlines()]
    return lines


def read_header_config(path) -> ScenarioConfig:
    """Recover the config embedded in an artifact's header block."""
    body, inside = [], False
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            if line.startswith("# config:"):
                inside = True
            elif inside:
                body.append(line[2:] if line.startswith("# ") else line[1:])
    return parse_config("".join(body))


def _write(path: Path, header: list[str], columns, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ln in header:
            fh.write(ln + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _trajectory_rows(tr: Trajectory):
    for vals in zip(tr.times, tr.p_e, tr.p_g, tr.z, tr.trace_err, tr.min_eig):
        yield [_num(v) for v in vals]


def _collision_rows(tr: CollisionTrace):
    for k, i, pe, pg, z in zip(tr.k, tr.reservoir_index, tr.p_e, tr.p_g, tr.z):
        yield [str(int(k)), str(int(i)), _num(pe), _num(pg), _num(z)]


def _write_summary(path: Path, header, summary: dict) -> None:
    rows = ([k, v if isinstance(v, str) else _num(v) if isinstance(v, float) else str(v)]
            for k, v in summary.items())
    _write(path, header, ("key", "value"), rows)


def run_scenario(cfg: ScenarioConfig, out_dir) -> RunResult:
    """Run ``cfg`` and write ``<scenario>.csv`` (plus a summary) into ``out_dir``.

    Returns the process exit code with the artifact paths.  Configuration
    problems raise ``ConfigError``; a numerical failure is reported through
    the exit code after the partial trace is written.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dim = resolve_dim(cfg)
    try:
        basis = cat_basis(cfg.system.alpha, dim)
    except ValueError as err:
        raise ConfigError(str(err), field="run.dim") from err
    csv_path = out / f"{cfg.scenario}.csv"
    summary_path = out / f"{cfg.scenario}_summary.csv"
    resolved = {"dim": dim, "alpha": repr(cfg.system.alpha)}

    if cfg.scenario in ("stabilize", "ramp"):
        dissipation = True
        dt = cfg.run.dt
        if dt == "auto":
            dt = auto_dt(cfg.system, dim, cfg.drive, dissipation)
        n_steps = max(1, int(np.ceil(cfg.run.t_final / dt - 1e-9)))
        resolved["dt"] = repr(cfg.run.t_final / n_steps)
        header = header_lines(cfg, resolved)
        rho0 = _initial_state(cfg.run.initial, basis)
        try:
            tr = evolve(rho0, cfg.system, cfg.drive, cfg.run.t_final, dt, cfg.run.record_every,
                        basis=basis, dissipation=dissipation)
        except NumericalFailure as exc:
            _write(csv_path, header, TRACE_COLUMNS, _trajectory_rows(exc.trajectory))
            log.error("%s", exc)
            return RunResult(EXIT_NUMERICAL, csv_path)
        except ValueError as err:
            raise ConfigError(str(err), field="run.dt") from err
        _write(csv_path, header, TRACE_COLUMNS, _trajectory_rows(tr))
        summary = {"final_z": float(tr.z[-1])}
        if cfg.scenario == "ramp":
            summary["final_fidelity_c_plus"] = (
                fidelity(tr.final_state, basis.c_plus) if tr.final_state is not None else float("nan")
            )
        _write_summary(summary_path, header, summary)
        return RunResult(EXIT_OK, csv_path, summary, summary_path)

    header = header_lines(cfg, resolved)
    try:
        if cfg.scenario == "homogenize":
            probe0 = _initial_state(cfg.run.initial, basis)
            tr = run_collisions(probe0, cfg.system, cfg.collision, basis)
            hit = detect_steady_state(tr, cfg.run.window, cfg.run.tol)
            summary = {
                "final_z": float(tr.z[-1]),
                "converged": hit is not None,
                "steady_state_index": hit[0] if hit else "",
                "z_ss": hit[1] if hit else "",
            }
            code = EXIT_OK
        else:
            dec = classify_reservoirs(cfg.system, cfg.collision, basis, cfg.run.window, cfg.run.tol)
            tr = dec.trace
            summary = {
                "label": dec.label,
                "z_ss": float(dec.z_ss),
                "converged": dec.converged,
                "n_used": dec.n_used,
            }
            code = EXIT_OK if dec.converged else EXIT_NOT_CONVERGED
    except NumericalFailure as exc:
        _write(csv_path, header, COLLISION_COLUMNS, _collision_rows(exc.trace))
        log.error("%s", exc)
        return RunResult(EXIT_NUMERICAL, csv_path)
    except ValueError as err:
        raise ConfigError(str(err)) from err
    summary = {k: (str(v).lower() if isinstance(v, bool) else v) for k, v in summary.items()}
    _write(csv_path, header, COLLISION_COLUMNS, _collision_rows(tr))
    _write_summary(summary_path, header, summary)
    return RunResult(code, csv_path, summary, summary_path)


def with_overrides(cfg: ScenarioConfig, *, dim=None, seed=None, collisions=None) -> ScenarioConfig:
    """Apply command-line overrides, revalidating through the parser."""
    run = cfg.run
    collision = cfg.collision
    if dim is not None:
        run = replace(run, dim=dim)
    if seed is not None:
        run = replace(run, seed=seed)
    if collisions is not None:
        if collision is None:
            raise ConfigError(f"--collisions does not apply to scenario {cfg.scenario!r}",
                              field="collision.n_collisions")
        try:
            collision = replace(collision, n_collisions=collisions)
        except ValueError as err:
            raise ConfigError(str(err), field="collision.n_collisions") from err
    if collision is not None:
        collision = replace(collision, seed=run.seed)
    draft = replace(cfg, run=run, collision=collision)
    return parse_config(render_config(draft))
