import copy
import logging
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, Mapping, Optional

import yaml

from ..common.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

SEED_ENV = "CFGEVADE_SEED"
DEFAULT_SEED = 42


def load_config(config_path: str) -> Dict[str, Any]:
    """
    Loads a YAML configuration file. JSON is valid YAML, so .json works too.
    """
    if not os.path.exists(config_path):
        raise FileNotFoundError(f"Config file not found: {config_path}")

    with open(config_path, 'r', encoding="utf-8") as f:
        try:
            config = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigurationError(f"Unreadable config {config_path}: {e}")

    if config is None:
        return {}
    if not isinstance(config, dict):
        raise ConfigurationError(f"Config {config_path} must be a mapping at the top level")
    return config


def merge_configs(base: Mapping, override: Mapping) -> Dict:
    """
    Deep merge; override takes precedence. Inputs are not modified.
    """
    merged = copy.deepcopy(dict(base))
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = merge_configs(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


@dataclass
class PathsConfig:
    corpus_dir: str = "corpus"
    vocab_file: str = "vocab.txt"
    weights_file: str = "model.bin"
    report_dir: str = "reports"


@dataclass
class TokenizerConfig:
    vocab_size: int = 2048
    max_tokens: int = 128
    max_calls: Optional[int] = 16
    min_frequency: int = 2

    def __post_init__(self):
        if self.min_frequency < 1:
            raise ConfigurationError(f"min_frequency must be >= 1, got {self.min_frequency}")
        if self.max_tokens < 2:
            raise ConfigurationError(f"max_tokens must be >= 2, got {self.max_tokens}")
        if self.max_calls is not None and self.max_calls < 1:
            raise ConfigurationError(f"max_calls must be >= 1, got {self.max_calls}")


def _as_int(value: Any, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise ConfigurationError(f"{what} must be an integer, got {value!r}")
    try:
        return int(value)
    except ValueError:
        raise ConfigurationError(f"{what} must be an integer, got {value!r}")


def _section(cls, data: Optional[Mapping], name: str, **extra):
    data = dict(data or {})
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigurationError(f"unknown key(s) in '{name}': {', '.join(unknown)}")
    data.update(extra)
    try:
        return cls(**data)
    except ConfigurationError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"invalid '{name}' section: {e}")


@dataclass
class RunConfig:
    """
    Merged run configuration. The global seed is copied into every
    seeded section; `model` holds architecture overrides, the vocab size
    and position count are filled in from the tokenizer at train time.
    """
    seed: int = DEFAULT_SEED
    threads: int = 1
    paths: PathsConfig = field(default_factory=PathsConfig)
    corpus: Any = None
    tokenizer: TokenizerConfig = field(default_factory=TokenizerConfig)
    model: Dict[str, Any] = field(default_factory=dict)
    train: Any = None
    attack: Any = None

    @classmethod
    def from_dict(cls, data: Optional[Mapping] = None, seed: Optional[int] = None) -> 'RunConfig':
        # late imports: these modules import utils.repro
        from ..attack.state import AttackConfig
        from ..graph.builder import CorpusConfig
        from ..model.encoder import ModelConfig
        from ..model.trainer import TrainConfig

        data = dict(data or {})
        allowed = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - allowed)
        if unknown:
            raise ConfigurationError(f"unknown top-level key(s): {', '.join(unknown)}")

        seed = _as_int(seed if seed is not None else data.get("seed", DEFAULT_SEED), "seed")
        threads = _as_int(data.get("threads", 1), "threads")
        if threads < 1:
            raise ConfigurationError(f"threads must be >= 1, got {threads}")

        model = dict(data.get("model") or {})
        model_keys = {f.name for f in fields(ModelConfig)} - {"vocab_size", "max_positions"}
        if set(model) - model_keys:
            raise ConfigurationError(f"unknown key(s) in 'model': {', '.join(sorted(set(model) - model_keys))}")

        tokenizer = _section(TokenizerConfig, data.get("tokenizer"), "tokenizer")
        attack = dict(data.get("attack") or {})
        attack.setdefault("max_calls", tokenizer.max_calls)
        return cls(
            seed=seed,
            threads=threads,
            paths=_section(PathsConfig, data.get("paths"), "paths"),
            corpus=_section(CorpusConfig, data.get("corpus"), "corpus", seed=seed),
            tokenizer=tokenizer,
            model=model,
            train=_section(TrainConfig, data.get("train"), "train", seed=seed),
            attack=_section(AttackConfig, attack, "attack", seed=seed),
        )

    def model_config(self, vocab_size: int):
        from ..model.encoder import ModelConfig
        return ModelConfig(vocab_size=vocab_size, max_positions=self.tokenizer.max_tokens, **self.model)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "threads": self.threads,
            "paths": asdict(self.paths),
            "corpus": asdict(self.corpus),
            "tokenizer": asdict(self.tokenizer),
            "model": dict(self.model),
            "train": asdict(self.train),
            "attack": asdict(self.attack),
        }


def resolve_seed(flag: Optional[int], file_config: Mapping, environ: Optional[Mapping] = None) -> int:
    """flag > CFGEVADE_SEED > config file > default."""
    environ = os.environ if environ is None else environ
    if flag is not None:
        return int(flag)
    if environ.get(SEED_ENV):
        try:
            return int(environ[SEED_ENV])
        except ValueError:
            raise ConfigurationError(f"{SEED_ENV} must be an integer, got {environ[SEED_ENV]!r}")
    return _as_int(file_config.get("seed", DEFAULT_SEED), "seed")


def build_run_config(
    config_path: Optional[str] = None,
    overrides: Optional[Mapping] = None,
    seed: Optional[int] = None,
    environ: Optional[Mapping] = None,
) -> RunConfig:
    """defaults <- config file <- flag overrides; seed resolved separately."""
    file_config = load_config(config_path) if config_path else {}
    merged = merge_configs(file_config, overrides or {})
    run = RunConfig.from_dict(merged, seed=resolve_seed(seed, file_config, environ))
    logger.debug("Run config: %s", run.to_dict())
    return run
