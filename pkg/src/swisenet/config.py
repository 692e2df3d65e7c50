"""Versioned key=value run configuration.

One plain-text file drives every subcommand; flags override file values.
Unknown keys are rejected. Defaults follow the published training setup
(learning rate 5e-5, 100 epochs, batch 32, 300x300 images, alpha 0.5).
"""

from dataclasses import dataclass, field, fields

from .errors import ConfigError
from .model import ModelCfg, reduced_config
from .preprocess import PreprocessConfig
from .data import SplitConfig
from .train import TrainConfig

SCHEMA_VERSION = 1


@dataclass
class RunConfig:
    schema_version: int = SCHEMA_VERSION
    dataset_root: str = ""
    output_dir: str = "out"
    checkpoint: str = ""
    cache_dir: str = ""
    learning_rate: float = 5e-5
    epochs: int = 100
    batch_size: int = 32
    image_size: int = 300
    alpha: float = 0.5
    seed: int = 0
    train_fraction: float = 0.75
    stratified: bool = True
    sigma: float = 1.0
    radius: int = 2
    border: str = "replicate"
    adaptive_sigma: bool = False
    se_reduction: int = 16
    ca_reduction: int = 16
    reduced: bool = False
    strict: bool = False
    optimizer: str = "adam"
    metric_average: str = "macro"
    plots: bool = True
    sample_stage_images: int = 4
    explicit: set = field(default_factory=set, repr=False)

    def set_key(self, key, raw):
        spec = {f.name: f.type for f in fields(self) if f.name != "explicit"}
        if key not in spec:
            raise ConfigError(f"unknown config key {key!r}")
        t = spec[key]
        try:
            if t in (bool, "bool"):
                if raw.lower() not in ("true", "false", "1", "0"):
                    raise ValueError(raw)
                value = raw.lower() in ("true", "1")
            elif t in (int, "int"):
                value = int(raw)
            elif t in (float, "float"):
                value = float(raw)
            else:
                value = raw
        except ValueError:
            raise ConfigError(f"bad value {raw!r} for config key {key!r}")
        setattr(self, key, value)
        self.explicit.add(key)

    def validate(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(
                f"unsupported schema_version {self.schema_version} "
                f"(expected {SCHEMA_VERSION})"
            )
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(
                f"train_fraction must be in (0,1), got {self.train_fraction}"
            )
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must be in [0,1], got {self.alpha}")
        if self.learning_rate <= 0 or self.batch_size < 1 or self.image_size < 8:
            raise ConfigError("learning_rate/batch_size/image_size out of range")
        if self.sigma <= 0 or self.radius < 1:
            raise ConfigError("sigma must be > 0 and radius >= 1")
        return self

    # -- derived configs --------------------------------------------------

    def effective_image_size(self):
        # reduced runs default to 64 px unless the user pinned image_size
        if self.reduced and "image_size" not in self.explicit:
            return 64
        return self.image_size

    def model_cfg(self):
        if self.reduced:
            cfg = reduced_config(seed=self.seed,
                                 input_size=self.effective_image_size())
            cfg.alpha = self.alpha
            return cfg
        return ModelCfg(
            input_size=self.effective_image_size(),
            se_reduction=self.se_reduction,
            ca_reduction=self.ca_reduction,
            alpha=self.alpha,
            seed=self.seed,
        )

    def preprocess_cfg(self):
        s = self.effective_image_size()
        return PreprocessConfig(
            target_h=s, target_w=s, sigma=self.sigma, radius=self.radius,
            border=self.border, adaptive_sigma=self.adaptive_sigma,
        )

    def split_cfg(self):
        return SplitConfig(train_fraction=self.train_fraction, seed=self.seed,
                           stratified=self.stratified)

    def train_cfg(self):
        return TrainConfig(
            learning_rate=self.learning_rate, epochs=self.epochs,
            batch_size=self.batch_size, image_size=self.effective_image_size(),
            seed=self.seed, alpha=self.alpha, optimizer=self.optimizer,
            metric_average=self.metric_average,
        )

    def to_text(self):
        lines = []
        for f in fields(self):
            if f.name == "explicit":
                continue
            lines.append(f"{f.name}={getattr(self, f.name)}")
        return "\n".join(lines) + "\n"


def parse_config_text(text, cfg=None):
    cfg = cfg or RunConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, _, raw = line.partition("=")
        cfg.set_key(key.strip(), raw.strip())
    return cfg


def load_config(path):
    try:
        with open(path) as f:
            text = f.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}")
    return parse_config_text(text)
