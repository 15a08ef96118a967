"""Experiment configuration: flat ``key = value`` files, overridable by flags."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path

from .fock import OscillatorParams

ENGINES = ("mc", "exact-rho", "markov")
HEADER_PREFIX = "#:"


class ConfigError(ValueError):
    pass


def parse_sigma_list(text: str) -> tuple:
    out = []
    for tok in str(text).replace(" ", "").split(","):
        if not tok:
            continue
        try:
            s = math.inf if tok.lower() in ("inf", "infinity") else float(tok)
        except ValueError as exc:
            raise ConfigError(f"bad noise level {tok!r}") from exc
        if not s >= 0:
            raise ConfigError(f"noise levels must be nonnegative, got {tok}")
        out.append(s)
    if not out:
        raise ConfigError("empty sigma list")
    return tuple(out)


def format_sigma(s: float) -> str:
    return "inf" if math.isinf(s) else f"{s:g}"


@dataclass(frozen=True)
class ExperimentConfig:
    omega0: float = 1.0
    hbar: float = 1.0
    g0: float = 2.0
    basis: int = 2048
    pad: int | None = None
    sigma: tuple = (0.0,)
    t_max: int = 20
    realizations: int = 1000
    seed: int = 0
    engine: str | None = None
    out: str = "."
    workers: int = 1
    leak_tol: float = 1e-6
    tail_tol: float = 1e-8
    exact_cap: int = 1024

    def __post_init__(self):
        if self.engine is not None and self.engine not in ENGINES:
            raise ConfigError(f"engine must be one of {ENGINES}, got {self.engine!r}")
        if self.t_max < 0:
            raise ConfigError("t_max must be >= 0")
        if self.realizations < 1:
            raise ConfigError("realizations must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def params(self) -> OscillatorParams:
        try:
            return OscillatorParams(self.omega0, self.hbar, self.g0, self.basis, self.pad)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def header_lines(self) -> list:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "sigma":
                v = ",".join(format_sigma(s) for s in v)
            elif v is None:
                v = "none"
            lines.append(f"{HEADER_PREFIX} {f.name} = {v}")
        return lines


FULL_SCALE = {"basis": 6144, "t_max": 80, "realizations": 1000}

_CONVERTERS = {
    "omega0": float, "hbar": float, "g0": float, "basis": int, "t_max": int,
    "realizations": int, "seed": int, "workers": int, "leak_tol": float,
    "tail_tol": float, "exact_cap": int, "out": str,
    "pad": lambda v: None if v.lower() == "none" else int(v),
    "engine": lambda v: None if v.lower() == "none" else v,
    "sigma": parse_sigma_list,
}
_ALIASES = {"t-max": "t_max", "k": "realizations", "n": "basis", "basis_size": "basis",
            "base_seed": "seed", "sigmas": "sigma"}


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines.

    Plain ``#`` lines are comments; lines starting with ``#:`` are read as
    settings, so the provenance header of an output CSV is itself a config.
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        header = line.startswith(HEADER_PREFIX)
        if header:
            line = line[len(HEADER_PREFIX):].strip()
        elif not line or line.startswith("#"):
            continue
        if "=" not in line:
            if header:
                continue
            break  # column row of a CSV: the header block is over
        key, _, value = line.partition("=")
        key = key.strip().lower()
        key = _ALIASES.get(key, key)
        if key in ("version", "command"):
            continue
        if key not in _CONVERTERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            values[key] = _CONVERTERS[key](value.strip())
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {value.strip()!r}") from exc
    return values


def load_config(path=None, overrides: dict | None = None, full_scale: bool = False) -> ExperimentConfig:
    """Defaults, then the file at ``path``, then the full-scale profile, then ``overrides``."""
    values = {}
    if path is not None:
        try:
            values.update(parse_config_text(Path(path).read_text()))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if full_scale:
        values.update(FULL_SCALE)
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
