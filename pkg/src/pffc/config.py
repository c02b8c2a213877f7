"""Experiment configuration: presets and a flat ``key = value`` file format.

Files contain one assignment per line; ``#`` starts a comment. Unknown keys
are rejected and every parse error names the offending line. Values given
in a file override the chosen preset, and command-line flags override both.
"""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass, field, fields
from pathlib import Path


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is set for file parse errors."""

    def __init__(self, msg, line: int | None = None, path=None):
        where = f"{path}:{line}: " if line is not None and path else (f"line {line}: " if line else "")
        super().__init__(where + msg)
        self.line = line


@dataclass
class ExperimentConfig:
    # discretization
    n: int = 64
    M: int = 40
    T: float = 1.0
    # material and phase-field model
    E: float = 1.0e6
    nu: float = 0.2
    G_c: float = 1.0
    eps: float | None = None  # None: eps_factor * h
    eps_factor: float = 4.0
    kappa: float = 1.0e-10
    gamma: float = 1.0e5
    eta: float = 1.0e3
    eta0: float = 1.0
    # geometry of the notch and of the desired crack (x-intervals on y = 0.5)
    notch_start: float = 0.5
    notch_end: float = 1.0
    target_start: float = 0.25
    target_end: float = 0.5
    target_halfwidth: float = 1.0  # in units of h
    phi_d_include_notch: bool = False
    # cost and control
    alpha: float = 4.75e-10
    q_d: float = 1.0e3
    q0: float = 1.0
    time_weighting: str = "sum"
    # outer optimizer
    newton_tol: float = 2e-12
    max_newton: int = 20
    cg_forcing: float = 1e-2
    cg_max: int = 100
    damping: float = 1.0
    max_step_halvings: int = 8
    newton_residual: str = "min"
    # forward Newton solver
    forward_abs_tol: float = 1e-12
    forward_rel_tol: float = 1e-9
    forward_max_iter: int = 50
    # verification
    probe_control: float = 3.0e3
    fd_directions: int = 3
    seed: int = 0
    # output
    out: str | None = None
    snapshots: tuple = ()  # empty: 20, 30, 40 scaled to M
    name: str = "custom"

    def __post_init__(self):
        self.validate()

    # ------------------------------------------------------------------
    def validate(self):
        if self.n < 2 or self.n % 2:
            raise ConfigError(f"n must be an even integer >= 2, got {self.n}")
        if self.M < 1:
            raise ConfigError(f"M must be at least 1, got {self.M}")
        if not self.T > 0:
            raise ConfigError("T must be positive")
        if self.time_weighting not in ("sum", "dt"):
            raise ConfigError(f"time_weighting must be 'sum' or 'dt', got {self.time_weighting!r}")
        for key in ("notch_start", "notch_end", "target_start", "target_end"):
            v = getattr(self, key)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{key} must lie in [0, 1], got {v}")
        if self.target_halfwidth < 0:
            raise ConfigError("target_halfwidth must be non-negative")
        if not 0 < self.damping <= 1:
            raise ConfigError("damping must lie in (0, 1]")
        if self.newton_residual not in ("min", "relative"):
            raise ConfigError(f"newton_residual must be 'min' or 'relative', got {self.newton_residual!r}")
        for s in self.snapshots:
            if not 0 <= s <= self.M:
                raise ConfigError(f"snapshot index {s} outside 0..{self.M}")

    @property
    def h(self) -> float:
        return math.sqrt(2.0) / self.n

    @property
    def epsilon(self) -> float:
        return self.eps if self.eps is not None else self.eps_factor * self.h

    def snapshot_indices(self) -> list[int]:
        if self.snapshots:
            return sorted(set(int(s) for s in self.snapshots))
        return sorted(set(int(round(k * self.M / 40)) for k in (20, 30, 40)))

    def output_dir(self) -> Path:
        if self.out:
            return Path(self.out)
        return Path(os.environ.get("PFFC_OUT", "runs")) / self.name

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


PRESETS = {
    "example1": dict(name="example1", n=64, M=40, notch_start=0.5, notch_end=1.0,
                     target_start=0.25, target_end=0.5, target_halfwidth=1.0,
                     alpha=4.75e-10, q_d=1.0e3, newton_tol=2e-12),
    "example2": dict(name="example2", n=128, M=40, notch_start=0.25, notch_end=0.75,
                     target_start=0.0, target_end=0.25, target_halfwidth=2.0,
                     alpha=1.0e-10, q_d=3.0e3, newton_tol=1e-11),
    # small configuration used by ``pffc verify`` and ``pffc gradcheck``
    "desk": dict(name="desk", n=8, M=5, gamma=1.0e3, notch_start=0.5, notch_end=1.0,
                 target_start=0.25, target_end=0.5, alpha=4.75e-10, q_d=1.0e3),
}


def preset(name: str) -> ExperimentConfig:
    try:
        return ExperimentConfig(**PRESETS[name])
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}") from None


# ----------------------------------------------------------------------
# parsing
# ----------------------------------------------------------------------
_FIELDS = {f.name: f for f in fields(ExperimentConfig)}
_INT_KEYS = {"n", "M", "max_newton", "cg_max", "max_step_halvings", "forward_max_iter", "fd_directions", "seed"}
_BOOL_KEYS = {"phi_d_include_notch"}
_STR_KEYS = {"time_weighting", "newton_residual", "out", "name"}


def _parse_bool(text: str) -> bool:
    t = text.lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_value(key: str, text: str):
    """Convert the text of ``key`` to its typed value."""
    if key not in _FIELDS:
        raise KeyError(key)
    text = text.strip()
    if key in _INT_KEYS:
        return int(text)
    if key in _BOOL_KEYS:
        return _parse_bool(text)
    if key in _STR_KEYS:
        return text
    if key == "snapshots":
        return tuple(int(t) for t in text.replace(",", " ").split())
    if key == "eps" and text.lower() in ("auto", "none"):
        return None
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"non-finite value {text!r}")
    return value


def parse_text(text: str, path=None) -> dict:
    """Parse ``key = value`` lines into a dict of typed overrides."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno, path)
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError("missing key", lineno, path)
        if key not in _FIELDS:
            raise ConfigError(f"unknown key {key!r}", lineno, path)
        if key in out:
            raise ConfigError(f"duplicate key {key!r}", lineno, path)
        if value == "":
            raise ConfigError(f"missing value for {key!r}", lineno, path)
        try:
            out[key] = parse_value(key, value)
        except ValueError as err:
            raise ConfigError(f"bad value for {key!r}: {err}", lineno, path) from None
    return out


def load_config(path=None, base: str | ExperimentConfig = "example1", **overrides) -> ExperimentConfig:
    """Preset ``base``, then the file at ``path`` (if any), then keyword overrides."""
    cfg = preset(base) if isinstance(base, str) else base
    values = dataclasses.asdict(cfg)
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {p}")
        values.update(parse_text(p.read_text(), p))
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def dump_config(cfg: ExperimentConfig) -> str:
    """Render ``cfg`` in the file format (round-trips through :func:`parse_text`)."""
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if v is None:
            if f.name == "eps":
                lines.append("eps = auto")
            continue
        if isinstance(v, tuple):
            if v:
                lines.append(f"{f.name} = {','.join(str(int(s)) for s in v)}")
            continue
        if isinstance(v, float):
            v = format(v, ".17g")
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
