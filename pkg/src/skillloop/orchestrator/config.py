"""Run configuration: one structured file (YAML or JSON) with documented keys."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import yaml

from ..policy.expert import ALICE_EXPLORE_WEIGHT, DEFAULT_BOOST
from ..trainer.sft import CUMULATIVE, NON_CUMULATIVE, TrainConfig

EXIF = "exif"
EF_NO_FEEDBACK = "ef_no_feedback"
PF_BASELINE = "pf_baseline"
SELF_PLAY = "self_play"
MODES = (EXIF, EF_NO_FEEDBACK, PF_BASELINE, SELF_PLAY)

# Exploration seeds start well above the evaluation seeds (42..61).
EXPLORE_SEED_BASE = 1000
SEED_STRIDE = 100_000


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Everything a loop run depends on.

    ``alice_explore_weight`` and ``beta`` shape the scripted explorer;
    ``self_play_epsilon`` is the noise on Bob when Bob explores for itself;
    ``labeler`` is ``template`` or ``llm`` (the latter needs ``llm``).
    """

    iterations: int = 3
    episodes: int = 50
    horizon: int = 100
    mode: str = EXIF
    master_seed: int = 0
    beta: float = DEFAULT_BOOST
    alice_explore_weight: float = ALICE_EXPLORE_WEIGHT
    alice_epsilon: float = 0.0
    self_play_epsilon: float = 0.3
    pf_infeasible_ratio: float = 0.7
    labeler: str = "template"
    eval_budget: int = 100
    rollouts: int = 20
    workers: int = 1
    train: TrainConfig = field(default_factory=TrainConfig)
    llm: dict | None = None

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if self.episodes < 1 or self.horizon < 0:
            raise ConfigError("episodes must be >= 1 and horizon >= 0")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.labeler not in ("template", "llm"):
            raise ConfigError(f"labeler must be 'template' or 'llm', got {self.labeler!r}")
        if self.labeler == "llm" and not self.llm:
            raise ConfigError("labeler 'llm' needs an 'llm' endpoint section")
        if not 0.0 <= self.self_play_epsilon <= 1.0 or not 0.0 <= self.alice_epsilon <= 1.0:
            raise ConfigError("epsilons must lie in [0, 1]")
        if not 0.0 <= self.pf_infeasible_ratio <= 1.0:
            raise ConfigError("pf_infeasible_ratio must lie in [0, 1]")
        if self.beta <= 0:
            raise ConfigError("beta must be > 0")

    def explore_seed(self, k: int) -> int:
        return EXPLORE_SEED_BASE + self.master_seed * SEED_STRIDE + k * self.episodes

    def to_json(self) -> dict:
        d = asdict(self)
        d["train"] = self.train.to_json()
        return d

    @classmethod
    def from_mapping(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a mapping")
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        try:
            if "train" in d:
                t = d["train"] or {}
                tnames = {f.name for f in fields(TrainConfig)}
                bad = set(t) - tnames
                if bad:
                    raise ConfigError(f"unknown train keys: {sorted(bad)}")
                d["train"] = TrainConfig(**t)
            return cls(**d)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        if "data_mode" in kw:
            dm = kw.pop("data_mode")
            if dm not in (CUMULATIVE, NON_CUMULATIVE):
                raise ConfigError(f"unknown data mode {dm!r}")
            kw["train"] = replace(kw.get("train", self.train), data_mode=dm)
        try:
            return replace(self, **kw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror or exc}") from exc
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {p} is not valid YAML/JSON: {exc}") from exc
    return RunConfig.from_mapping(data)
