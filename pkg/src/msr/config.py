"""Run configuration: one JSON document drives generation, the pipeline, and
reporting. Unknown keys anywhere in the document are errors, so typos fail
fast instead of silently running defaults."""

from dataclasses import dataclass, field, fields
import json

from .dataset import MODALITIES, GeneratorConfig
from .errors import ConfigError
from .scenario import ModalityWeights


def _mapping_for(cls, data: dict, label: str) -> dict:
    if not isinstance(data, dict):
        raise ConfigError(f"{label} must be an object")
    allowed = {f.name for f in fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown {label} keys {sorted(unknown)}")
    return dict(data)


@dataclass(frozen=True)
class GridSpec:
    """Base gridworld shared by the simulated and 'real' environments; the
    goal cell is placed per record, goal_distance cells from the start in the
    direction named by the winning decision."""

    width: int = 5
    height: int = 5
    start: tuple = (2, 2)
    goal_distance: int = 2
    step_reward: float = -1.0
    goal_reward: float = 10.0
    slip_prob: float = 0.0
    horizon: int = 4
    real_step_reward: float = -1.2

    def validate(self) -> None:
        if self.goal_distance < 1:
            raise ConfigError(f"goal_distance must be >= 1, got {self.goal_distance}")
        if self.horizon < self.goal_distance:
            raise ConfigError(
                f"horizon {self.horizon} shorter than goal_distance {self.goal_distance}"
            )
        x, y = self.start
        for dx, dy in ((0, -1), (0, 1), (-1, 0), (1, 0)):
            gx = x + dx * self.goal_distance
            gy = y + dy * self.goal_distance
            if not (0 <= gx < self.width and 0 <= gy < self.height):
                raise ConfigError(
                    f"goal at distance {self.goal_distance} from start {self.start} "
                    f"leaves the {self.width}x{self.height} grid"
                )
        if not 0.0 <= self.slip_prob < 1.0:
            raise ConfigError(f"slip_prob must be in [0, 1), got {self.slip_prob}")

    @classmethod
    def from_mapping(cls, data: dict) -> "GridSpec":
        kwargs = _mapping_for(cls, data, "grid")
        if "start" in kwargs:
            kwargs["start"] = tuple(kwargs["start"])
        spec = cls(**kwargs)
        spec.validate()
        return spec


@dataclass(frozen=True)
class RandomizationConfig:
    continuous: dict = field(default_factory=lambda: {"step_reward": (0.0, 0.05)})
    variants: dict = field(default_factory=lambda: {"keep": 1.0})

    @classmethod
    def from_mapping(cls, data: dict) -> "RandomizationConfig":
        kwargs = _mapping_for(cls, data, "randomization")
        if "continuous" in kwargs:
            kwargs["continuous"] = {
                name: tuple(pair) for name, pair in kwargs["continuous"].items()
            }
        return cls(**kwargs)


@dataclass(frozen=True)
class AlignConfig:
    steps: int = 300
    learning_rate: float = 0.05
    lambda_task: float = 0.1
    samples: int = 128  # trajectories rolled out per domain

    @classmethod
    def from_mapping(cls, data: dict) -> "AlignConfig":
        return cls(**_mapping_for(cls, data, "align"))


@dataclass(frozen=True)
class RunConfig:
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    dataset_path: str | None = None
    tau: float = 0.5
    weights: ModalityWeights = field(
        default_factory=lambda: ModalityWeights(0.6, 0.2, 0.2)
    )
    internal_state: tuple | None = None   # defaults to zeros at run time
    instruction: tuple | None = None
    m_count: int = 16
    k: int = 4
    noise_width: float = 0.1
    rel_threshold: float = 0.5
    beta: float = 0.3
    stm_capacity: int = 32
    sparse_readout_top_n: int = 8
    sparse_readout_threshold: int = 64
    extraction_mode: str = "identity"
    extraction_window: int | None = None
    context_weights: tuple = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
    lambda_feedback: float = 0.4
    gamma: float = 0.95
    alpha: float = 0.5
    grid: GridSpec = field(default_factory=GridSpec)
    randomization: RandomizationConfig = field(default_factory=RandomizationConfig)
    align: AlignConfig = field(default_factory=AlignConfig)
    seed: int = 42
    workers: int = 1
    modalities: tuple = MODALITIES
    out_dir: str = "msr_out"

    def validate(self) -> None:
        self.generator.validate()
        if self.generator.n_actions > 4:
            raise ConfigError(
                "the pipeline realizes actions as the 4 grid directions; "
                f"n_actions must be <= 4, got {self.generator.n_actions}"
            )
        if not 0.0 <= self.tau <= 1.0:
            raise ConfigError(f"tau must be in [0, 1], got {self.tau}")
        if self.m_count < 1:
            raise ConfigError(f"m_count must be >= 1, got {self.m_count}")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.noise_width < 0.0:
            raise ConfigError(f"noise_width must be >= 0, got {self.noise_width}")
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError(f"beta must be in [0, 1], got {self.beta}")
        if not 0.0 < self.rel_threshold < 1.0:
            raise ConfigError(f"rel_threshold must be in (0, 1), got {self.rel_threshold}")
        if self.stm_capacity < 1:
            raise ConfigError(f"stm_capacity must be >= 1, got {self.stm_capacity}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError(f"gamma must be in [0, 1], got {self.gamma}")
        if self.alpha < 0.0:
            raise ConfigError(f"alpha must be >= 0, got {self.alpha}")
        if self.lambda_feedback < 0.0:
            raise ConfigError(f"lambda_feedback must be >= 0, got {self.lambda_feedback}")
        if len(self.context_weights) != 3:
            raise ConfigError("context_weights must hold 3 values")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.extraction_mode != "identity":
            raise ConfigError(
                "only identity extraction keeps the feature layout the scoring "
                f"steps rely on; got {self.extraction_mode!r}"
            )
        bad = [m for m in self.modalities if m not in MODALITIES]
        if bad:
            raise ConfigError(f"unknown modalities {bad}")
        if not self.modalities:
            raise ConfigError("at least one modality required")
        if self.align.steps < 1:
            raise ConfigError(f"align.steps must be >= 1, got {self.align.steps}")
        if self.align.samples < 1:
            raise ConfigError(f"align.samples must be >= 1, got {self.align.samples}")
        if self.align.learning_rate <= 0.0:
            raise ConfigError("align.learning_rate must be > 0")
        if self.align.lambda_task < 0.0:
            raise ConfigError("align.lambda_task must be >= 0")
        self.grid.validate()

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        kwargs = _mapping_for(cls, data, "run config")
        if "generator" in kwargs:
            kwargs["generator"] = GeneratorConfig.from_mapping(kwargs["generator"])
        if "weights" in kwargs:
            w = _mapping_for(ModalityWeights, kwargs["weights"], "weights")
            kwargs["weights"] = ModalityWeights(**w)
        if "grid" in kwargs:
            kwargs["grid"] = GridSpec.from_mapping(kwargs["grid"])
        if "randomization" in kwargs:
            kwargs["randomization"] = RandomizationConfig.from_mapping(kwargs["randomization"])
        if "align" in kwargs:
            kwargs["align"] = AlignConfig.from_mapping(kwargs["align"])
        for name in ("internal_state", "instruction", "context_weights", "modalities"):
            if name in kwargs and kwargs[name] is not None:
                kwargs[name] = tuple(kwargs[name])
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def to_mapping(self) -> dict:
        return {
            "generator": self.generator.to_mapping(),
            "dataset_path": self.dataset_path,
            "tau": self.tau,
            "weights": {
                "sensor": self.weights.sensor,
                "internal": self.weights.internal,
                "instruction": self.weights.instruction,
            },
            "internal_state": None if self.internal_state is None else list(self.internal_state),
            "instruction": None if self.instruction is None else list(self.instruction),
            "m_count": self.m_count,
            "k": self.k,
            "noise_width": self.noise_width,
            "rel_threshold": self.rel_threshold,
            "beta": self.beta,
            "stm_capacity": self.stm_capacity,
            "sparse_readout_top_n": self.sparse_readout_top_n,
            "sparse_readout_threshold": self.sparse_readout_threshold,
            "extraction_mode": self.extraction_mode,
            "extraction_window": self.extraction_window,
            "context_weights": list(self.context_weights),
            "lambda_feedback": self.lambda_feedback,
            "gamma": self.gamma,
            "alpha": self.alpha,
            "grid": {
                "width": self.grid.width,
                "height": self.grid.height,
                "start": list(self.grid.start),
                "goal_distance": self.grid.goal_distance,
                "step_reward": self.grid.step_reward,
                "goal_reward": self.grid.goal_reward,
                "slip_prob": self.grid.slip_prob,
                "horizon": self.grid.horizon,
                "real_step_reward": self.grid.real_step_reward,
            },
            "randomization": {
                "continuous": {k: list(v) for k, v in self.randomization.continuous.items()},
                "variants": dict(self.randomization.variants),
            },
            "align": {
                "steps": self.align.steps,
                "learning_rate": self.align.learning_rate,
                "lambda_task": self.align.lambda_task,
                "samples": self.align.samples,
            },
            "seed": self.seed,
            "workers": self.workers,
            "modalities": list(self.modalities),
            "out_dir": self.out_dir,
        }


def load_run_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    return RunConfig.from_mapping(data)
