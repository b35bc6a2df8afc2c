"""Flat key=value run configuration."""

import dataclasses
from dataclasses import dataclass

from .assign import AssignMode
from .cost import Metric
from .data import ToyDataset


@dataclass
class TrainConfig:
    """Everything one training run needs; defaults suit the 2-D toy tasks.

    beta_start/beta_end of None select the scaled default range for
    t_steps. eval_seed feeds the evaluation stream only, so evaluation
    cadence never perturbs training draws.
    """

    dataset: str = "gauss8"
    scale: float = 4.0
    bs: int = 256
    mode: AssignMode = AssignMode.VANILLA
    metric: Metric = Metric.L2
    quantize: bool = False
    t_steps: int = 100
    beta_start: float = None
    beta_end: float = None
    hidden: int = 128
    depth: int = 3
    embed_dim: int = 16
    lr: float = 1e-3
    steps: int = 3000
    eval_every: int = 300
    sampler_steps: int = 20
    eval_n: int = 2048
    swd_projections: int = 128
    seed: int = 0
    eval_seed: int = 10000
    out_dir: str = None

    def validate(self) -> "TrainConfig":
        ToyDataset(self.dataset, self.scale)  # raises on bad name or scale
        if self.bs < 1:
            raise ValueError(f"bs must be >= 1, got {self.bs}")
        if self.mode is not AssignMode.VANILLA and self.bs < 2:
            raise ValueError(f"mode {self.mode.value} needs bs >= 2, assignment needs alternatives")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.eval_every < 1 or self.steps % self.eval_every != 0:
            raise ValueError(
                f"eval_every must be >= 1 and divide steps, got {self.eval_every} for {self.steps}"
            )
        if not 1 <= self.sampler_steps <= self.t_steps:
            raise ValueError(f"sampler_steps must lie in [1, t_steps], got {self.sampler_steps}")
        if self.eval_n < 2 or self.swd_projections < 1:
            raise ValueError("eval_n must be >= 2 and swd_projections >= 1")
        if (self.beta_start is None) != (self.beta_end is None):
            raise ValueError("set both beta_start and beta_end, or neither")
        return self


_BOOL_WORDS = {"on": True, "true": True, "1": True, "yes": True,
               "off": False, "false": False, "0": False, "no": False}


def _parse_bool(val: str) -> bool:
    try:
        return _BOOL_WORDS[val.lower()]
    except KeyError:
        raise ValueError(f"expected on/off, got {val!r}") from None


def _coerce(name: str, val: str, typ):
    if name in ("beta_start", "beta_end", "out_dir") and val.lower() in ("auto", "none"):
        return None
    if name == "mode":
        return AssignMode.parse(val)
    if name == "metric":
        return Metric.parse(val)
    if typ is bool:
        return _parse_bool(val)
    if typ is int:
        return int(val)
    if typ is float:
        return float(val)
    return val


def parse_config_text(text: str, base: TrainConfig = None) -> TrainConfig:
    """Apply key=value lines (comments with #, blank lines ignored) to a config.

    Unknown keys are errors: a typo must fail fast, not silently train
    with a default.
    """
    cfg = base if base is not None else TrainConfig()
    fields = {f.name: f for f in dataclasses.fields(TrainConfig)}
    types = {"dataset": str, "scale": float, "bs": int, "mode": AssignMode, "metric": Metric,
             "quantize": bool, "t_steps": int, "beta_start": float, "beta_end": float,
             "hidden": int, "depth": int, "embed_dim": int, "lr": float, "steps": int,
             "eval_every": int, "sampler_steps": int, "eval_n": int, "swd_projections": int,
             "seed": int, "eval_seed": int, "out_dir": str}
    updates = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        if key not in fields:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        try:
            updates[key] = _coerce(key, val, types[key])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad value for {key}: {exc}") from None
    return dataclasses.replace(cfg, **updates)


def load_config(path, base: TrainConfig = None) -> TrainConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), base)


def config_lines(cfg: TrainConfig) -> list:
    """Render a config as parseable key=value lines (run.meta contents)."""
    out = []
    for f in dataclasses.fields(TrainConfig):
        val = getattr(cfg, f.name)
        if val is None:
            val = "auto" if f.name.startswith("beta_") else "none"
        elif isinstance(val, (AssignMode, Metric)):
            val = val.value
        elif isinstance(val, bool):
            val = "on" if val else "off"
        elif isinstance(val, float):
            val = f"{val:.17g}"
        out.append(f"{f.name}={val}")
    return out
