"""Flat key=value run configuration shared by the CLI subcommands.

Defaults reproduce the driven two-level-atom study: gamma = kappa = 1
(single-component kernel A = gamma*kappa/4 = 0.25), chi = 5, delta = 3,
initial state |e>.  Time is measured in units of 1/gamma throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .errors import ConfigError, KernelError
from .functionals import MAX_ORDER, PerturbativeProvider
from .kernel import MemoryKernel
from .linalg import SystemModel, driven_tla, excited_ket
from .sse import StepperConfig, ydgs_provider_for

UNRAVELLINGS = ("coherent", "quadrature")
METHODS = ("perturbative", "ydgs")
VARIANTS = ("nonlinear", "linear")
SCHEMES = ("heun", "rk4")


@dataclass
class RunConfig:
    kernel: str = "0.25,1,0"
    delta: float = 3.0
    chi: float = 5.0
    unravelling: str = "coherent"
    order: int = 1
    method: str = "perturbative"
    variant: str = "nonlinear"
    dt: float = 1e-3
    scheme: str = "heun"
    t_final: float = 10.0
    record_stride: int = 100
    substeps: int = 1
    ntraj: int = 10000
    seed: int = 20240521
    nmax: int = 20
    enlarged_dt: float = 1e-3
    output: str = ""


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"key '{key}': cannot parse {raw!r} as {kind}") from None


def _validate(cfg: RunConfig) -> RunConfig:
    def need(cond: bool, msg: str) -> None:
        if not cond:
            raise ConfigError(msg)

    need(cfg.unravelling in UNRAVELLINGS,
         f"key 'unravelling': got {cfg.unravelling!r}, want one of {UNRAVELLINGS}")
    need(cfg.method in METHODS,
         f"key 'method': got {cfg.method!r}, want one of {METHODS}")
    need(cfg.variant in VARIANTS,
         f"key 'variant': got {cfg.variant!r}, want one of {VARIANTS}")
    need(cfg.scheme in SCHEMES,
         f"key 'scheme': got {cfg.scheme!r}, want one of {SCHEMES}")
    max_order = MAX_ORDER[cfg.unravelling]
    need(0 <= cfg.order <= max_order,
         f"key 'order': got {cfg.order}, supported 0..{max_order} for "
         f"{cfg.unravelling} unravelling")
    need(cfg.dt > 0, "key 'dt': must be > 0")
    need(cfg.enlarged_dt > 0, "key 'enlarged_dt': must be > 0")
    need(cfg.t_final >= 0, "key 't_final': must be >= 0")
    need(cfg.record_stride >= 1, "key 'record_stride': must be >= 1")
    need(cfg.substeps >= 1, "key 'substeps': must be >= 1")
    need(cfg.ntraj >= 1, "key 'ntraj': must be >= 1")
    need(cfg.seed >= 0, "key 'seed': must be >= 0")
    need(cfg.nmax >= 1, "key 'nmax': must be >= 1")
    try:
        build_kernel(cfg)
    except (KernelError, ValueError) as exc:
        raise ConfigError(f"key 'kernel': {exc}") from None
    return cfg


def parse_config(path: str | None, overrides: dict[str, str] | None = None,
                 defaults: dict[str, str] | None = None) -> RunConfig:
    """File (flat ``key = value`` lines, # comments) merged under flag overrides.

    Precedence: built-in dataclass defaults < ``defaults`` (subcommand-level)
    < config file < ``overrides`` (flags).
    """
    values: dict[str, object] = {}
    for key, raw in (defaults or {}).items():
        values[key] = _coerce(key, raw)
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                text = line.split("#", 1)[0].strip()
                if not text:
                    continue
                if "=" not in text:
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line.strip()!r}")
                key, raw = (part.strip() for part in text.split("=", 1))
                if key not in _FIELD_TYPES:
                    raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
                values[key] = _coerce(key, raw)
    for key, raw in (overrides or {}).items():
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown key {key!r}")
        values[key] = _coerce(key, raw) if isinstance(raw, str) else raw
    return _validate(RunConfig(**values))


# ---------------------------------------------------------------------------
# builders


def build_kernel(cfg: RunConfig) -> MemoryKernel:
    return MemoryKernel.from_string(cfg.kernel)


def build_model(cfg: RunConfig) -> SystemModel:
    return driven_tla(delta=cfg.delta, chi=cfg.chi)


def build_stepper(cfg: RunConfig, dt: float | None = None) -> StepperConfig:
    return StepperConfig(t_final=cfg.t_final, dt=cfg.dt if dt is None else dt,
                         scheme=cfg.scheme, record_stride=cfg.record_stride,
                         substeps=cfg.substeps)


def build_provider(cfg: RunConfig, model: SystemModel, kernel: MemoryKernel,
                   stepper: StepperConfig):
    if cfg.method == "ydgs":
        return ydgs_provider_for(model, kernel, cfg.unravelling, stepper)
    return PerturbativeProvider(model=model, kernel=kernel,
                                unravelling=cfg.unravelling, order=cfg.order)


def initial_ket() -> np.ndarray:
    return excited_ket()
