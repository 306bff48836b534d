"""Command line entry point and run manifests.

Every run produces one JSON manifest holding the resolved config, seed,
shard plan, results and input/output digests.  The ``results`` section
depends only on (version, config, seed), never on ``--threads``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from . import io as bio
from .bell import PAIR_LABELS, CHSHSettings, chsh, scan_max
from .correlation import (
    ALIASES,
    CorrelationModel,
    correlation_analytic,
    correlation_mc,
    shard_sizes,
)
from .errors import BellSimError, ConfigError, DomainError, InputError, InvariantError
from .gw_background import BackgroundConfig, sample_background, validate_mode
from .oscillator import (
    IntegratorConfig,
    OscillatorState,
    default_dt,
    freefall_state,
    integrate_in_background,
    phase_correlation,
)

COMMANDS = ("correlate", "chsh", "scan", "background", "oscillate", "phase-corr")
MODEL_NAMES = ("cosine", "sign")
SEED_ENV = "BELLSIM_SEED"

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_DOMAIN, EXIT_INTERNAL = 0, 2, 3, 4, 5

_DEFAULT_FORMAT = {"background": "csv", "oscillate": "csv"}


@dataclass(frozen=True)
class RunConfig:
    command: str
    model: str = "cosine"
    theta: tuple[float, ...] = ()
    settings: tuple[float, ...] = (0.0, math.pi / 2, math.pi / 4, -math.pi / 4)
    analytic: bool = False
    n_samples: int = 100_000
    seed: int = 0
    shards: int = 1
    threads: int = 1
    grid: int = 16
    refine: int = 40
    modes: int = 64
    freq_min: float = 1.0
    freq_max: float = 10.0
    amplitude: float = 1e-9
    background: str | None = None
    position: tuple[float, ...] = (0.0, 0.0, 0.0)
    dt: float | None = None
    steps: int = 10_000
    record_every: int = 1
    ell0: float = 1.0
    initial: str = "freefall"
    trajectories: tuple[str, ...] = ()
    out: str | None = None
    manifest: str | None = None
    format: str | None = None

    @property
    def output_format(self) -> str:
        return self.format or _DEFAULT_FORMAT.get(self.command, "json")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["theta"] = [fmt_rad(v) for v in self.theta]
        d["settings"] = [fmt_rad(v) for v in self.settings]
        d["position"] = list(self.position)
        d["trajectories"] = list(self.trajectories)
        d["angles_deg"] = {
            "theta": [math.degrees(v) for v in self.theta],
            "settings": [math.degrees(v) for v in self.settings],
        }
        return d


# ---------------------------------------------------------------------------
# parsing

def fmt_rad(x: float) -> str:
    return repr(float(x)) + "rad"


def parse_number(token, kind=float, what="value"):
    if isinstance(token, bool):
        raise ConfigError(f"cannot parse {what} {token!r} as a number")
    if isinstance(token, (int, float)) and kind is float:
        return float(token)
    if isinstance(token, int) and kind is int:
        return token
    try:
        value = kind(str(token).strip())
    except (TypeError, ValueError):
        raise ConfigError(f"cannot parse {what} {token!r} as {kind.__name__}") from None
    if kind is float and not math.isfinite(value):
        raise ConfigError(f"{what} {token!r} must be finite")
    return value


def parse_angle(token) -> float:
    """Angle in radians from ``45``, ``45deg`` or ``0.785rad`` (bare numbers are degrees)."""
    if isinstance(token, (int, float)) and not isinstance(token, bool):
        return math.radians(float(token))
    s = str(token).strip()
    if s.endswith("rad"):
        return parse_number(s[:-3], what="angle")
    if s.endswith("deg"):
        s = s[:-3]
    return math.radians(parse_number(s, what="angle"))


def parse_list(token, item, what):
    if isinstance(token, (list, tuple)):
        # config files may carry an empty list for unused angles
        return tuple(item(p) for p in token)
    parts = [p for p in str(token).split(",") if p.strip() != ""]
    if not parts:
        raise ConfigError(f"{what} needs at least one value")
    return tuple(item(p) for p in parts)


def _model(token) -> str:
    name = str(token)
    if name not in ALIASES:
        raise ConfigError(
            f"unknown model {name!r}; valid models: {', '.join(MODEL_NAMES)}")
    return "cosine" if ALIASES[name] == ALIASES["cosine"] else "sign"


def _positive_int(what):
    def conv(token):
        v = parse_number(token, int, what)
        if v < 1:
            raise ConfigError(f"{what} must be >= 1, got {token!r}")
        return v
    return conv


def _choice(what, options):
    def conv(token):
        if token not in options:
            raise ConfigError(f"invalid {what} {token!r}; choose from {', '.join(options)}")
        return token
    return conv


def _optional_str(token):
    return None if token is None else str(token)


def _bool(token):
    if isinstance(token, bool):
        return token
    raise ConfigError(f"expected true/false, got {token!r}")


def _position(token):
    pos = parse_list(token, lambda p: parse_number(p, what="position"), "position")
    if len(pos) != 3:
        raise ConfigError(f"position needs 3 components x,y,z, got {token!r}")
    return pos


def _theta(token):
    return parse_list(token, parse_angle, "theta")


def _settings(token):
    angles = parse_list(token, parse_angle, "settings")
    if len(angles) != 4:
        raise ConfigError(f"settings needs 4 angles a,a',b,b', got {token!r}")
    return angles


def _optional_float(what):
    def conv(token):
        return None if token is None else parse_number(token, what=what)
    return conv


_CONVERTERS: dict[str, Any] = {
    "command": _choice("command", COMMANDS),
    "model": _model,
    "theta": _theta,
    "settings": _settings,
    "analytic": _bool,
    "n_samples": _positive_int("samples"),
    "seed": lambda t: parse_number(t, int, "seed"),
    "shards": _positive_int("shards"),
    "threads": _positive_int("threads"),
    "grid": lambda t: parse_number(t, int, "grid"),
    "refine": lambda t: parse_number(t, int, "refine"),
    "modes": lambda t: parse_number(t, int, "modes"),
    "freq_min": lambda t: parse_number(t, what="freq-min"),
    "freq_max": lambda t: parse_number(t, what="freq-max"),
    "amplitude": lambda t: parse_number(t, what="amplitude"),
    "background": _optional_str,
    "position": _position,
    "dt": _optional_float("dt"),
    "steps": _positive_int("steps"),
    "record_every": _positive_int("record-every"),
    "ell0": lambda t: parse_number(t, what="ell0"),
    "initial": _choice("initial condition", ("freefall", "rest")),
    "trajectories": lambda t: tuple(str(p) for p in t),
    "out": _optional_str,
    "manifest": _optional_str,
    "format": lambda t: None if t is None else _choice("format", ("csv", "json"))(t),
}

# Keys tolerated in config files but derived from the others.
_ECHO_KEYS = {"angles_deg"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    S = argparse.SUPPRESS
    common = _Parser(add_help=False, argument_default=S)
    common.add_argument("--config", help="JSON config file or previous run manifest")
    common.add_argument("--model", help="cosine | sign")
    common.add_argument("--seed", help=f"RNG seed (fallback: ${SEED_ENV}, then 0)")
    common.add_argument("--samples", dest="n_samples", help="Monte Carlo samples per correlation")
    common.add_argument("--shards", help="independent RNG streams per correlation")
    common.add_argument("--threads", help="worker threads; never changes results")
    common.add_argument("--out", help="output path")
    common.add_argument("--manifest", help="manifest path when --format csv")
    common.add_argument("--format", help="csv | json")

    parser = _Parser(prog="bellsim", description="Bell correlations in a random gravitational-wave background")
    parser.add_argument("--version", action="version", version=f"bellsim {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("correlate", parents=[common], argument_default=S,
                       help="E(theta) for one or more angle differences")
    p.add_argument("--theta", help="comma list of angles (deg default; suffix deg/rad)")
    p.add_argument("--analytic", action="store_true")

    p = sub.add_parser("chsh", parents=[common], argument_default=S, help="Bell observable S")
    p.add_argument("--settings", help="a,a',b,b' (deg default; suffix deg/rad)")
    p.add_argument("--analytic", action="store_true")

    p = sub.add_parser("scan", parents=[common], argument_default=S, help="maximize |S|")
    p.add_argument("--grid")
    p.add_argument("--refine")

    p = sub.add_parser("background", parents=[common], argument_default=S,
                       help="sample an isotropic wave background")
    p.add_argument("--modes")
    p.add_argument("--freq-min", dest="freq_min", help="rad/s")
    p.add_argument("--freq-max", dest="freq_max", help="rad/s")
    p.add_argument("--amplitude", help="overall strain scale")

    p = sub.add_parser("oscillate", parents=[common], argument_default=S,
                       help="integrate the deviation oscillator in a background")
    p.add_argument("--background", help="mode-list CSV from 'background'")
    p.add_argument("--position", help="x,y,z in meters")
    p.add_argument("--dt", help="step in seconds (default shortest period / 200)")
    p.add_argument("--steps")
    p.add_argument("--record-every", dest="record_every")
    p.add_argument("--ell0")
    p.add_argument("--initial", help="freefall | rest")

    p = sub.add_parser("phase-corr", parents=[common], argument_default=S,
                       help="Pearson correlation of two trajectories")
    p.add_argument("trajectories", nargs="*", metavar="TRAJECTORY")
    return parser


def _load_config_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except OSError as exc:
        raise InputError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    if "config" in data and "version" in data:
        data = data["config"]
    unknown = sorted(set(data) - set(_CONVERTERS) - _ECHO_KEYS)
    if unknown:
        raise ConfigError(f"unknown config key(s) in {path}: {', '.join(unknown)}")
    return {k: v for k, v in data.items() if k not in _ECHO_KEYS}


def parse_config(argv, config_file=None, environ=None) -> RunConfig:
    """Build a RunConfig; flags override the config file, which overrides defaults."""
    environ = os.environ if environ is None else environ
    argv = list(argv)
    ns = vars(_build_parser().parse_args(argv))
    if ns.get("command") is None:
        ns.pop("command", None)
    if not ns.get("trajectories", True):
        ns.pop("trajectories")
    config_file = ns.pop("config", config_file)

    values: dict[str, Any] = {}
    if config_file is not None:
        values.update(_load_config_file(config_file))
    values.update(ns)

    if "command" not in values:
        raise ConfigError(f"missing command; choose from {', '.join(COMMANDS)}")
    if "seed" not in values and environ.get(SEED_ENV):
        values["seed"] = environ[SEED_ENV]

    resolved = {k: _CONVERTERS[k](v) for k, v in values.items()}
    cfg = RunConfig(**resolved)
    _check_required(cfg)
    return cfg


def _check_required(cfg: RunConfig):
    if cfg.command == "correlate" and not cfg.theta:
        raise ConfigError("correlate requires --theta")
    if cfg.command == "oscillate" and cfg.background is None:
        raise ConfigError("oscillate requires --background")
    if cfg.command == "phase-corr" and len(cfg.trajectories) != 2:
        raise ConfigError("phase-corr requires two trajectory files")
    if cfg.output_format == "csv":
        if cfg.command in ("scan", "phase-corr"):
            raise ConfigError(f"--format csv is not defined for {cfg.command}; use json")
        if cfg.out is None:
            raise ConfigError("--format csv requires --out")


# ---------------------------------------------------------------------------
# execution

@dataclass
class RunManifest:
    version: str
    config: dict
    seed: int
    shards: dict
    results: dict | None = None
    duration_s: float = 0.0
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    error: dict | None = None

    def to_dict(self) -> dict:
        d = {
            "version": self.version,
            "config": self.config,
            "seed": self.seed,
            "shards": self.shards,
        }
        if self.results is not None:
            d["results"] = self.results
        if self.error is not None:
            d["error"] = self.error
        d["inputs"] = self.inputs
        d["outputs"] = self.outputs
        d["duration_s"] = self.duration_s
        return d

    def to_json(self) -> str:
        return json.dumps(_plain(self.to_dict()), indent=2) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _shard_plan(cfg: RunConfig) -> dict:
    if cfg.command in ("correlate", "chsh") and not cfg.analytic:
        streams = len(cfg.theta) if cfg.command == "correlate" else 4
        sizes = shard_sizes(cfg.n_samples, cfg.shards)
        return {
            "count": cfg.shards,
            "sizes": sizes,
            "streams": [[cfg.seed, j, i] for j in range(streams) for i in range(cfg.shards)],
        }
    return {"count": 1, "sizes": [], "streams": []}


def _estimate_dict(est, theta=None, label=None):
    d = {}
    if label is not None:
        d["pair"] = label
    if theta is not None:
        d["theta_rad"] = theta
        d["theta_deg"] = math.degrees(theta)
    d.update(value=est.value, stderr=est.stderr, n=est.n_samples)
    return d


def _settings_dict(s: CHSHSettings) -> dict:
    names = ("a", "a_prime", "b", "b_prime")
    return {
        "rad": dict(zip(names, s.as_tuple())),
        "deg": dict(zip(names, (math.degrees(v) for v in s.as_tuple()))),
    }


def _run_correlate(cfg, manifest):
    model = CorrelationModel(cfg.model)
    rows = []
    for j, theta in enumerate(cfg.theta):
        if cfg.analytic:
            est = correlation_analytic(model, theta)
        else:
            est = correlation_mc(model, theta, cfg.n_samples, [cfg.seed, j],
                                 shards=cfg.shards, threads=cfg.threads)
        rows.append(_estimate_dict(est, theta))
    results = {"model": model.variant, "mode": "analytic" if cfg.analytic else "mc", "rows": rows}
    if cfg.output_format == "csv":
        _write(cfg.out, bio.sweep_to_csv(
            (r["theta_deg"], r["value"], r["stderr"], r["n"]) for r in rows), manifest)
    return results


def _run_chsh(cfg, manifest):
    model = CorrelationModel(cfg.model)
    settings = CHSHSettings(*cfg.settings)
    res = chsh(model, settings, None if cfg.analytic else cfg.n_samples,
               seed=cfg.seed, shards=cfg.shards, threads=cfg.threads)
    if abs(res.recombined() - res.S) > 1e-12:
        raise InvariantError("stored S does not match its correlations")
    corr = [_estimate_dict(c, d, lab)
            for c, d, lab in zip(res.correlations, settings.differences(), PAIR_LABELS)]
    results = {
        "model": model.variant,
        "mode": "analytic" if cfg.analytic else "mc",
        "settings": _settings_dict(settings),
        "correlations": corr,
        "S": res.S,
        "S_stderr": res.S_stderr,
        "abs_S": res.abs_S,
        "chsh_2S": 2.0 * res.S,
    }
    if cfg.output_format == "csv":
        _write(cfg.out, bio.sweep_to_csv(
            (c["theta_deg"], c["value"], c["stderr"], c["n"]) for c in corr), manifest)
    return results


def _run_scan(cfg, manifest):
    model = CorrelationModel(cfg.model)
    settings, s_max = scan_max(model, cfg.grid, cfg.refine, threads=cfg.threads)
    return {
        "model": model.variant,
        "grid": cfg.grid,
        "refine": cfg.refine,
        "settings": _settings_dict(settings),
        "S_max": s_max,
        "chsh_2S_max": 2.0 * s_max,
    }


def _run_background(cfg, manifest):
    bc = BackgroundConfig(cfg.modes, cfg.amplitude, cfg.freq_min, cfg.freq_max, cfg.seed)
    bg = sample_background(bc)
    bad = [i for i, m in enumerate(bg.modes) if not validate_mode(m, n_modes=len(bg)).ok]
    if bad:
        raise InvariantError(f"sampled modes {bad[:5]} fail gauge validation")
    peak = max((float(np.max(np.abs(m.e))) for m in bg.modes), default=0.0)
    results = {
        "n_modes": len(bg),
        "amplitude_per_mode": cfg.amplitude / len(bg) if len(bg) else 0.0,
        "max_strain_bound": 2.0 * peak * len(bg),
        "shortest_period_s": bg.shortest_period if len(bg) else None,
    }
    text = "# seed=%d\n" % cfg.seed + bio.modes_to_csv(bg)
    if cfg.output_format == "csv":
        _write(cfg.out, text, manifest)
    else:
        results["modes_csv"] = text
    return results


def _run_oscillate(cfg, manifest):
    path = cfg.background
    bg = bio.read_modes(path)
    manifest.inputs["background"] = {"path": path, "sha256": bio.sha256_file(path)}
    for i, m in enumerate(bg.modes):
        if not validate_mode(m).ok:
            raise DomainError(f"{path}: mode {i} fails gauge validation")
    dt = cfg.dt if cfg.dt is not None else default_dt(bg)
    steps = cfg.steps
    icfg = IntegratorConfig(dt, steps, "rk4", cfg.record_every)
    if cfg.initial == "freefall":
        s0 = freefall_state(bg, cfg.position, cfg.ell0)
    else:
        s0 = OscillatorState(cfg.ell0, 0.0)
    traj = integrate_in_background(s0, bg, cfg.position, icfg)
    results = {
        "dt_step": dt,
        "n_steps": steps,
        "record_every": cfg.record_every,
        "n_samples": len(traj),
        "initial": {"ell": s0.ell, "ell_dot": s0.ell_dot},
        "final": {"ell": float(traj.ell[-1]), "ell_dot": float(traj.ell_dot[-1])},
        "ell_min": float(np.min(traj.ell)),
        "ell_max": float(np.max(traj.ell)),
    }
    meta = {
        "seed": cfg.seed,
        "position": ",".join(bio.fmt(v) for v in cfg.position),
        "background": path,
        "background_sha256": manifest.inputs["background"]["sha256"],
        "dt_step": bio.fmt(dt),
        "record_every": cfg.record_every,
        "initial": cfg.initial,
    }
    text = bio.trajectory_to_csv(traj, meta)
    if cfg.output_format == "csv":
        _write(cfg.out, text, manifest)
    else:
        results["trajectory_csv"] = text
    return results


def _run_phase_corr(cfg, manifest):
    trajs = []
    for k, path in enumerate(cfg.trajectories):
        traj, _ = bio.read_trajectory(path)
        manifest.inputs[f"trajectory_{k}"] = {"path": path, "sha256": bio.sha256_file(path)}
        trajs.append(traj)
    try:
        r = phase_correlation(*trajs)
    except DomainError:
        raise
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    return {"r": r, "n": len(trajs[0]), "bound_4_over_sqrt_n": 4.0 / math.sqrt(len(trajs[0]))}


_RUNNERS = {
    "correlate": _run_correlate,
    "chsh": _run_chsh,
    "scan": _run_scan,
    "background": _run_background,
    "oscillate": _run_oscillate,
    "phase-corr": _run_phase_corr,
}


def _write(path, text, manifest):
    try:
        bio.ensure_parent(path)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}") from exc
    manifest.outputs["data"] = {"path": str(path), "sha256": bio.sha256_file(path)}


def execute(cfg: RunConfig) -> RunManifest:
    """Run ``cfg``, writing any data file; errors propagate to the caller."""
    manifest = RunManifest(__version__, cfg.to_dict(), cfg.seed, _shard_plan(cfg))
    start = time.perf_counter()
    try:
        manifest.results = _RUNNERS[cfg.command](cfg, manifest)
    finally:
        manifest.duration_s = time.perf_counter() - start
    return manifest


def manifest_path(cfg: RunConfig) -> str | None:
    if cfg.output_format == "json":
        return cfg.out
    return cfg.manifest or f"{cfg.out}.manifest.json"


def emit(manifest: RunManifest, fmt: str, path) -> None:
    """Write the manifest as JSON to ``path`` (stdout when None)."""
    if fmt not in ("json", "csv"):
        raise ConfigError(f"unknown format {fmt!r}")
    text = manifest.to_json()
    if path is None:
        sys.stdout.write(text)
        return
    try:
        bio.ensure_parent(path)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
    except OSError as exc:
        raise InputError(f"cannot write manifest {path}: {exc}") from exc


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, (InputError, OSError)):
        return EXIT_IO
    if isinstance(exc, DomainError):
        return EXIT_DOMAIN
    return EXIT_INTERNAL


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
    except BellSimError as exc:
        print(f"bellsim: error: {exc}", file=sys.stderr)
        return exit_code_for(exc)

    try:
        manifest = execute(cfg)
        code = EXIT_OK
    except Exception as exc:  # noqa: BLE001 - every failure still gets a manifest
        manifest = RunManifest(__version__, cfg.to_dict(), cfg.seed, _shard_plan(cfg))
        manifest.error = {"type": type(exc).__name__, "message": str(exc)}
        code = exit_code_for(exc)
        print(f"bellsim: error: {exc}", file=sys.stderr)
    try:
        emit(manifest, cfg.output_format, manifest_path(cfg))
    except BellSimError as exc:
        print(f"bellsim: error: {exc}", file=sys.stderr)
        return code or exit_code_for(exc)
    return code


if __name__ == "__main__":
    sys.exit(main())
