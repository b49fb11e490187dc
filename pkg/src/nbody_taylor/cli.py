"""Command-line front end: ``nbody simulate|coeffs|verify|radius|parity``.

Configs are flat text files with one ``key = value`` per line::

    kind = softened
    G = 1
    masses = 1, 1
    positions = [-1, 0, 0], [1, 0, 0]
    velocities = [0, 0, 0], [0, 0, 0]
    softening = 0.5
    t_end = 10

Exit codes: 0 success, 1 bad config or arguments, 2 collision, 3 a
symmetry check ran and failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import re
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import series as ps
from .errors import CollisionError
from .forces import ForceModel, State, total_energy
from .symmetry import coefficient_defect, lemma5_check, measure_symmetry, parity_probe
from .taylor import (
    DEFAULT_TOL,
    default_radius_parameter,
    force_bound,
    integrate,
    radius_estimate,
    taylor_coefficients,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_COLLISION = 2
EXIT_FAILED = 3

DEFAULT_ROWS = 64
FLOAT_FMT = "%.17g"


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------

def _parse_list(text: str) -> list:
    """``"1, 2"`` -> ``[1.0, 2.0]``; ``"[1,2], [3,4]"`` -> ``[[1.0, 2.0], [3.0, 4.0]]``."""
    text = text.strip()
    try:
        if "[" in text:
            groups = re.findall(r"\[([^\[\]]*)\]", text)
            leftover = re.sub(r"\[[^\[\]]*\]", "", text).replace(",", "").strip()
            if leftover:
                raise ConfigError(f"unexpected text outside brackets: {leftover!r}")
            return [[float(x) for x in g.split(",") if x.strip()] for g in groups]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad number in {text!r}") from None


@dataclass
class RunConfig:
    kind: str = "softened"
    G: float = 1.0
    masses: list = field(default_factory=list)
    positions: list = field(default_factory=list)
    velocities: list | None = None
    softening: object = None
    order: int = ps.DEFAULT_ORDER
    tol: float = DEFAULT_TOL
    t_end: float = 1.0
    b: float | None = None
    out: str | None = None
    samples: int = 200
    cadence: float | None = None
    box: float = 1.0
    monomial: list | None = None
    verify_tol: float = 1e-9

    @classmethod
    def from_text(cls, text: str) -> RunConfig:
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            if key in raw:
                raise ConfigError(f"line {lineno}: duplicate key {key!r}")
            raw[key] = value
        cfg = cls()
        scalars = {"G": float, "order": int, "tol": float, "t_end": float, "b": float,
                   "samples": int, "cadence": float, "box": float, "verify_tol": float}
        for key, value in raw.items():
            try:
                if key == "kind":
                    cfg.kind = value
                elif key in scalars:
                    setattr(cfg, key, scalars[key](value))
                elif key in ("masses", "monomial"):
                    vals = _parse_list(value.replace("[", "").replace("]", ""))
                    setattr(cfg, key, vals)
                elif key in ("positions", "velocities"):
                    vals = _parse_list(value)
                    setattr(cfg, key, [x if isinstance(x, list) else [x] for x in vals])
                elif key == "softening":
                    vals = _parse_list(value)
                    cfg.softening = vals[0] if len(vals) == 1 and not isinstance(vals[0], list) else vals
                elif key == "out":
                    cfg.out = value
                else:
                    raise ConfigError(f"unknown key {key!r}")
            except ValueError as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(f"bad value for {key!r}: {value!r}") from None
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str) -> RunConfig:
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.from_text(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None

    def validate(self):
        if self.kind not in ("newtonian", "softened", "pendulum"):
            raise ConfigError(f"unknown kind {self.kind!r}")
        if self.tol <= 0 or self.verify_tol <= 0:
            raise ConfigError("tolerances must be positive")
        if not ps.MIN_ORDER <= self.order <= ps.MAX_ORDER:
            raise ConfigError(f"order must lie in [{ps.MIN_ORDER}, {ps.MAX_ORDER}]")
        if self.cadence is not None and self.cadence <= 0:
            raise ConfigError("cadence must be positive")
        if not math.isfinite(self.t_end):
            raise ConfigError("t_end must be finite")
        width = 1 if self.kind == "pendulum" else 3
        n = 1 if self.kind == "pendulum" else len(self.masses)
        if n == 0:
            raise ConfigError("masses are required for gravitational kinds")
        if len(self.positions) != n or any(len(p) != width for p in self.positions):
            raise ConfigError(f"positions must be {n} entries of length {width}")
        if self.velocities is None:
            self.velocities = [[0.0] * width for _ in range(n)]
        if len(self.velocities) != n or any(len(v) != width for v in self.velocities):
            raise ConfigError(f"velocities must be {n} entries of length {width}")
        if (self.softening is not None) != (self.kind == "softened"):
            raise ConfigError("softening is required for, and only for, kind = softened")

    @property
    def y0(self) -> np.ndarray:
        return np.array(self.positions, dtype=float).reshape(-1)

    @property
    def v0(self) -> np.ndarray:
        return np.array(self.velocities, dtype=float).reshape(-1)

    def model(self) -> ForceModel:
        try:
            if self.kind == "pendulum":
                return ForceModel.pendulum()
            if self.kind == "newtonian":
                return ForceModel.newtonian(self.masses, self.G)
            return ForceModel.softened(self.masses, self.softening, self.G)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# files
# ---------------------------------------------------------------------------

def format_float(x: float) -> str:
    return FLOAT_FMT % x


def render_csv(header: list[str], rows, footer: str | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_float(x) for x in row])
    if footer is not None:
        buf.write(footer + "\n")
    return buf.getvalue()


def read_csv(path: str) -> tuple[list[str], np.ndarray, list[str]]:
    """Header, numeric rows and any trailing ``#`` lines of a CSV written here."""
    with open(path, encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    footer = [ln for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if not ln.startswith("#")]
    rows = list(csv.reader(body))
    data = np.array([[float(x) for x in r] for r in rows[1:]], dtype=float)
    return rows[0], data, footer


def write_atomic(path: str, text: str) -> None:
    """Write ``text`` to a temporary sibling and rename it over ``path``."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".nbody-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        write_atomic(path, text)


def _coord_names(model: ForceModel) -> tuple[list[str], list[str]]:
    if model.kind == "pendulum":
        return ["x1"], ["vx1"]
    n = model.n_bodies
    pos = [f"{a}{i}" for i in range(1, n + 1) for a in "xyz"]
    return pos, ["v" + p for p in pos]


def output_times(t_end: float, cadence: float | None) -> np.ndarray:
    """Output grid from 0 to ``t_end``: ``DEFAULT_ROWS`` rows, or spaced by ``cadence``."""
    if t_end == 0:
        return np.zeros(1)
    if cadence is None:
        return np.linspace(0.0, t_end, DEFAULT_ROWS)
    count = int(math.floor(abs(t_end) / cadence + 1e-9))
    times = math.copysign(cadence, t_end) * np.arange(count + 1)
    if abs(t_end) - abs(times[-1]) > 1e-9 * cadence:
        times = np.append(times, t_end)
    else:
        times[-1] = t_end
    return times


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _collision_message(exc: CollisionError, at_rest: bool) -> str:
    i, j = exc.pair
    msg = f"collision t={exc.t!r} pair={i + 1},{j + 1} distance={exc.distance:.3e}"
    if exc.mirror_t is not None:
        msg += f" mirror_t={exc.mirror_t!r}"
    elif at_rest and exc.t is not None:
        msg += f" mirror_t={-exc.t!r}"
    return msg


def cmd_simulate(cfg: RunConfig, out: str | None) -> int:
    model = cfg.model()
    state = State(0.0, cfg.y0, cfg.v0)
    try:
        traj = integrate(model, state, cfg.t_end, tol=cfg.tol, K=cfg.order, b=cfg.b)
    except CollisionError as exc:
        print(_collision_message(exc, not np.any(cfg.v0)), file=sys.stderr)
        return EXIT_COLLISION
    pos, vel = _coord_names(model)
    rows = []
    for t in output_times(cfg.t_end, cfg.cadence):
        s = traj(float(t))
        rows.append([t, *s.positions, *s.velocities, total_energy(model, s)])
    _emit(render_csv(["t", *pos, *vel, "energy"], rows), out)
    return EXIT_OK


def cmd_coeffs(cfg: RunConfig, out: str | None) -> int:
    model = cfg.model()
    try:
        series = taylor_coefficients(model, cfg.y0, cfg.v0, cfg.order)
    except CollisionError as exc:
        print(_collision_message(exc, False), file=sys.stderr)
        return EXIT_COLLISION
    pos, _ = _coord_names(model)
    rows = [[m, *series.coeffs[:, m]] for m in range(series.order + 1)]
    footer = (
        f"# odd-defect={format_float(coefficient_defect(series.coeffs, 'even'))}"
        f" even-defect={format_float(coefficient_defect(series.coeffs, 'odd'))}"
    )
    _emit(render_csv(["order", *pos], rows, footer), out)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, kind: str, out: str | None) -> int:
    model = cfg.model()
    if kind == "odd" and model.kind == "newtonian":
        print("error: odd-solution check is undefined for the newtonian model "
              "(all bodies start in collision)", file=sys.stderr)
        return EXIT_CONFIG
    if cfg.t_end == 0:
        raise ConfigError("verify needs a nonzero t_end")
    state = State(0.0, cfg.y0, cfg.v0)
    try:
        report = measure_symmetry(
            model, state, abs(cfg.t_end), kind, tol=cfg.verify_tol, K=cfg.order, step_tol=cfg.tol
        )
    except CollisionError as exc:
        print(_collision_message(exc, kind == "even" and not np.any(cfg.v0)), file=sys.stderr)
        return EXIT_COLLISION
    lines = []
    for key, value in report.as_dict().items():
        if isinstance(value, bool):
            value = str(value).lower()
        elif isinstance(value, float):
            value = format_float(value)
        lines.append(f"{key}={value}")
    _emit("\n".join(lines) + "\n", out)
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_radius(cfg: RunConfig) -> int:
    model = cfg.model()
    y0 = cfg.y0
    b = cfg.b if cfg.b is not None else default_radius_parameter(model, y0)
    M = force_bound(model, y0, b)
    r = radius_estimate(model, y0, b)
    print(f"b={format_float(b)} M={format_float(M)} radius={format_float(r)}")
    return EXIT_OK


def _monomial(exponents):
    e = np.asarray(exponents, dtype=int)

    def H(y):
        return float(np.prod(np.asarray(y, dtype=float) ** e))

    return H


def cmd_parity(cfg: RunConfig, out: str | None, seed: int) -> int:
    """Parity probe of ``monomial`` if given, else Jacobian parity of the model."""
    if cfg.monomial is not None:
        exps = [int(round(x)) for x in cfg.monomial]
        if any(x < 0 for x in exps) or any(x != y for x, y in zip(exps, cfg.monomial)):
            raise ConfigError("monomial exponents must be non-negative integers")
        v = parity_probe(_monomial(exps), len(exps), cfg.samples, cfg.box, seed)
        text = (
            f"vector_sense={v.vector_sense}\nstrict_sense={v.strict_sense}\n"
            f"threshold={format_float(v.threshold)}\n"
        )
    else:
        defect = lemma5_check(cfg.model(), cfg.samples, cfg.box, seed)
        text = f"lemma5_defect={format_float(defect)}\n"
    _emit(text, out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nbody", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=["simulate", "coeffs", "verify", "radius", "parity"])
    p.add_argument("--config", required=True, help="path to a key = value config file")
    p.add_argument("--out", help="output path (overrides 'out' in the config)")
    p.add_argument("--kind", choices=["even", "odd"], default="even",
                   help="symmetry to verify (default: even)")
    return p


def _seed() -> int:
    raw = os.environ.get("NBODY_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"NBODY_SEED must be an integer, got {raw!r}") from None


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = RunConfig.load(args.config)
        out = args.out or cfg.out
        if args.command == "simulate":
            return cmd_simulate(cfg, out)
        if args.command == "coeffs":
            return cmd_coeffs(cfg, out)
        if args.command == "verify":
            return cmd_verify(cfg, args.kind, out)
        if args.command == "radius":
            return cmd_radius(cfg)
        return cmd_parity(cfg, out, _seed())
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
