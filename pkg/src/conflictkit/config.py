"""Pipeline configuration: a flat INI file plus command-line overrides.

Every run is driven by one config file; ``--set section.key=value`` flags
win over file values. All randomness flows from the [seeds] section, so a
config hash identifies an experiment exactly.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .classifier import TrainConfig
from .corpus import DEFAULT_LEXICON, VerdictLexicon

DEFAULTS: dict[str, dict[str, str]] = {
    "paths": {
        "corpus": "data/corpus.jsonl",
        "situation_embeddings": "data/situation.emb1",
        "fulltext_embeddings": "data/fulltext.emb1",
        "verdict_embeddings": "data/verdict_input.emb1",
        "annotations": "data/annotations.csv",
        "output_dir": "out",
    },
    "lexicon": {
        "yta": " | ".join(DEFAULT_LEXICON.yta_patterns),
        "nta": " | ".join(DEFAULT_LEXICON.nta_patterns),
    },
    "corpus": {
        "situation_prefixes": "AITA for",
    },
    "cluster": {
        "cutoffs": "0,10,20,30,40,50,60,70,80,90",
        "chosen_cutoff_situation": "",
        "chosen_cutoff_fulltext": "",
        "min_cluster_size": "26",
        "resolution": "1.0",
    },
    "split": {
        "train": "0.7",
        "val": "0.2",
        "test": "0.1",
    },
    "train": {
        "epochs": "10",
        "learning_rate": "1e-4",
        "focal_gamma": "2.0",
        "focal_alpha": "balanced",
        "batch_size": "32",
        "stratify_by": "fulltext",
    },
    "seeds": {
        "louvain": "0",
        "split": "0",
        "train": "0",
        "permutation": "0",
    },
    "stats": {
        "permutation_resamples": "100000",
    },
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    values: dict[str, dict[str, str]] = field(default_factory=dict)

    def get(self, section: str, key: str) -> str:
        try:
            return self.values[section][key]
        except KeyError:
            raise ConfigError(f"missing config value {section}.{key}") from None

    def get_float(self, section: str, key: str) -> float:
        raw = self.get(section, key)
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{section}.{key} must be a number, got {raw!r}") from None

    def get_int(self, section: str, key: str) -> int:
        raw = self.get(section, key)
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{section}.{key} must be an integer, got {raw!r}") from None

    def get_optional_float(self, section: str, key: str) -> float | None:
        raw = self.get(section, key).strip()
        return float(raw) if raw else None

    def path(self, key: str) -> Path:
        return Path(self.get("paths", key))

    @property
    def output_dir(self) -> Path:
        return Path(self.get("paths", "output_dir"))

    def lexicon(self) -> VerdictLexicon:
        def split(raw: str) -> tuple[str, ...]:
            return tuple(p.strip() for p in raw.split("|") if p.strip())
        return VerdictLexicon(
            yta_patterns=split(self.get("lexicon", "yta")),
            nta_patterns=split(self.get("lexicon", "nta")),
        )

    def situation_prefixes(self) -> tuple[str, ...]:
        raw = self.get("corpus", "situation_prefixes")
        return tuple(p.strip() for p in raw.split(",") if p.strip())

    def cutoffs(self) -> tuple[float, ...]:
        raw = self.get("cluster", "cutoffs")
        return tuple(float(c.strip()) for c in raw.split(",") if c.strip())

    def split_ratios(self) -> tuple[float, float, float]:
        return (
            self.get_float("split", "train"),
            self.get_float("split", "val"),
            self.get_float("split", "test"),
        )

    def train_config(self) -> TrainConfig:
        alpha_raw = self.get("train", "focal_alpha")
        alpha: float | str = alpha_raw if alpha_raw == "balanced" else float(alpha_raw)
        return TrainConfig(
            epochs=self.get_int("train", "epochs"),
            learning_rate=self.get_float("train", "learning_rate"),
            focal_gamma=self.get_float("train", "focal_gamma"),
            focal_alpha=alpha,
            batch_size=self.get_int("train", "batch_size"),
            seed=self.get_int("seeds", "train"),
        )

    def hash(self) -> str:
        canon = "\n".join(
            f"{s}.{k}={self.values[s][k]}"
            for s in sorted(self.values)
            for k in sorted(self.values[s])
        )
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def load_config(
    path: str | Path | None = None, overrides: Sequence[str] = ()
) -> PipelineConfig:
    """Merge defaults, the config file, and ``section.key=value`` overrides."""
    values = {section: dict(entries) for section, entries in DEFAULTS.items()}
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        read = parser.read(path)
        if not read:
            raise ConfigError(f"config file not found: {path}")
        for section in parser.sections():
            if section not in values:
                raise ConfigError(f"unknown config section [{section}]")
            for key, value in parser.items(section):
                if key not in values[section]:
                    raise ConfigError(f"unknown config key {section}.{key}")
                values[section][key] = value
    for override in overrides:
        if "=" not in override:
            raise ConfigError(f"override must look like section.key=value: {override!r}")
        target, value = override.split("=", 1)
        if "." not in target:
            raise ConfigError(f"override key must be section.key: {target!r}")
        section, key = target.split(".", 1)
        if section not in values or key not in values[section]:
            raise ConfigError(f"unknown config key {section}.{key}")
        values[section][key] = value
    return PipelineConfig(values=values)
