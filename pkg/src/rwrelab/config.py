"""Experiment configuration: one JSON file, validated sections, unknown keys rejected."""

from dataclasses import dataclass, field, fields, asdict
import json
import os

ENV_PREFIX = "RWRELAB_"


class ConfigError(ValueError):
    pass


@dataclass
class EnvSampleSection:
    n: int = 100_000
    write_samples: bool = True


@dataclass
class PMSection:
    l: list = field(default_factory=lambda: [1.0, 0.0])
    L: list = field(default_factory=lambda: [4, 6, 8, 10])
    M: float = 1.0
    L_tilde_cap: float = 500
    n_walks: int = 10_000
    horizon: int = 10 ** 7
    exact_envs: int = 0


@dataclass
class RegenSection:
    l: list = field(default_factory=lambda: [1.0, 0.0])
    a: float | None = None
    depth: float | None = None
    horizon: int = 100_000
    n_walks: int = 20


@dataclass
class TailSection:
    method: str = "hill"
    source: str = "regen"  # regen, pareto or file
    pareto_alpha: float = 2.0
    n: int = 100_000
    file: str | None = None
    grid: list | None = None
    k: int | None = None


@dataclass
class TrapSection:
    e0: int = 1  # 1-based direction index
    n_samples: int = 1_000_000
    fit_range: list = field(default_factory=lambda: [100, 10_000])
    n_batches: int = 20


@dataclass
class FlowSection:
    alpha: list = field(default_factory=lambda: [1, 1, 1, 1])
    R: int | None = 6
    x_a: list = field(default_factory=lambda: [0, 0])
    x_b: list = field(default_factory=lambda: [40, 0])
    i: int = 1
    exact: bool = True
    input: str | None = None
    self_test_cases: int = 1000


@dataclass
class ReportSection:
    epsilon: float | None = None
    eta_alpha: float | None = None
    v_hat: list | None = None
    eta_samples: int = 100_000


SECTIONS = {"env_sample": EnvSampleSection, "pm": PMSection, "regen": RegenSection,
            "tail": TailSection, "trap": TrapSection, "flow": FlowSection, "report": ReportSection}


@dataclass
class ExperimentConfig:
    law: dict = field(default_factory=lambda: {"variant": "dirichlet", "beta": [1.5, 0.4, 0.2, 0.4]})
    seed: int = 0
    threads: int = 1
    out: str = "out"
    env_sample: EnvSampleSection = field(default_factory=EnvSampleSection)
    pm: PMSection = field(default_factory=PMSection)
    regen: RegenSection = field(default_factory=RegenSection)
    tail: TailSection = field(default_factory=TailSection)
    trap: TrapSection = field(default_factory=TrapSection)
    flow: FlowSection = field(default_factory=FlowSection)
    report: ReportSection = field(default_factory=ReportSection)

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be an object")
    names = {f.name for f in fields(cls)}
    for key in data:
        if key not in names:
            raise ConfigError(f"unknown key {where}.{key}" if where else f"unknown key {key}")
    kw = {}
    for key, val in data.items():
        sub = SECTIONS.get(key) if cls is ExperimentConfig else None
        kw[key] = _build(sub, val, key) if sub is not None else val
    return cls(**kw)


def _check(cfg):
    if not isinstance(cfg.seed, int) or cfg.seed < 0:
        raise ConfigError("seed must be a nonnegative integer")
    if not isinstance(cfg.threads, int) or cfg.threads < 1:
        raise ConfigError("threads must be a positive integer")
    if not isinstance(cfg.law, dict) or "variant" not in cfg.law:
        raise ConfigError("law must be an object with a 'variant' key")
    if cfg.tail.method not in ("hill", "loglog"):
        raise ConfigError(f"tail.method must be hill or loglog, got {cfg.tail.method!r}")
    if cfg.tail.source not in ("regen", "pareto", "file"):
        raise ConfigError(f"tail.source must be regen, pareto or file, got {cfg.tail.source!r}")
    for name in ("n_walks", "horizon"):
        if int(getattr(cfg.regen, name)) < 1:
            raise ConfigError(f"regen.{name} must be positive")
    return cfg


def config_from_dict(data):
    return _check(_build(ExperimentConfig, dict(data), ""))


def load_config(path=None, overrides=None, environ=None):
    """Config from a JSON file (or defaults), then environment variables, then ``overrides``.

    Environment variables RWRELAB_SEED, RWRELAB_THREADS and RWRELAB_OUT mirror
    the command-line flags; flags win.
    """
    data = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from None
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
    environ = os.environ if environ is None else environ
    for key, conv in (("seed", int), ("threads", int), ("out", str)):
        raw = environ.get(ENV_PREFIX + key.upper())
        if raw is not None:
            try:
                data[key] = conv(raw)
            except ValueError:
                raise ConfigError(f"{ENV_PREFIX}{key.upper()}={raw!r} is not a valid {key}") from None
    for key, val in (overrides or {}).items():
        if val is not None:
            data[key] = val
    return config_from_dict(data)
