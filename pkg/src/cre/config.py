"""Flat ``key = value`` run configuration with dotted keys.

Unknown keys are rejected; every key has a typed default so a config
file only needs to override what a run changes. All randomness flows
from exactly two seeds: ``data.seed`` and ``model.seed``.
"""

from __future__ import annotations

import sys

from .errors import ConfigError

# key -> (type, default)
SCHEMA = {
    "data.corpus": (str, "corpus.jsonl"),
    "data.kb": (str, "kb.tsv"),
    "data.embeddings": (str, "embeddings.txt"),
    "data.dataset": (str, "dataset.json"),
    "data.top_n": (int, 100000),
    "data.test_fraction": (float, 0.25),
    "data.seed": (int, 0),
    "synthetic.entities": (int, 30),
    "synthetic.relations": (int, 4),
    "synthetic.templates_per_relation": (int, 5),
    "synthetic.pairs_per_relation": (int, 100),
    "synthetic.negative_pairs": (int, 400),
    "synthetic.sentences_per_pair": (int, 3),
    "synthetic.vocab_size": (int, 200),
    "synthetic.word_dim": (int, 20),
    "model.entity_dim": (int, 50),
    "model.pos_dim": (int, 5),
    "model.max_distance": (int, 100),
    "model.max_length": (int, 120),
    "model.seed": (int, 0),
    "encoder.kind": (str, "cnn"),
    "encoder.hidden_dim": (int, 230),
    "encoder.window": (int, 3),
    "encoder.layers": (int, 2),
    "encoder.heads": (int, 5),
    "kb.model": (str, "transe"),
    "train.learning_rate": (float, 1e-3),
    "train.beta1": (float, 0.9),
    "train.beta2": (float, 0.999),
    "train.epsilon": (float, 1e-8),
    "train.lambda": (float, 1e-4),
    "train.batch_size": (int, 16),
    "train.max_epochs": (int, 50),
    "train.window": (int, 10),
    "train.aggregation": (str, "sum"),
    "train.negative_target": (int, 0),  # 0 selects the automatic default
    "train.checkpoint": (str, "model.ckpt"),
    "train.epoch_log": (str, "epochs.jsonl"),
    "eval.k_values": (str, "1,3,5"),
    "eval.report": (str, "metrics.json"),
    "eval.pr_csv": (str, "pr_curves.csv"),
    "eval.pr_plot": (str, "pr_curves.png"),
    "eval.predictions": (str, "predictions.jsonl"),
    "threads": (int, 1),
}


class RunConfig:
    def __init__(self, values: dict):
        self.values = values

    def __getitem__(self, key: str):
        return self.values[key]

    def k_values(self):
        try:
            ks = tuple(int(v) for v in str(self.values["eval.k_values"]).split(","))
        except ValueError:
            raise ConfigError(f"bad eval.k_values: {self.values['eval.k_values']}") from None
        if not ks or any(k < 1 for k in ks):
            raise ConfigError("eval.k_values must be positive integers")
        return ks

    def log_resolved(self, stream=None) -> None:
        stream = stream or sys.stderr
        for key in sorted(self.values):
            print(f"{key} = {self.values[key]}", file=stream)


def _coerce(key: str, raw: str):
    if key not in SCHEMA:
        raise ConfigError(f"unknown config key: {key}")
    typ, _ = SCHEMA[key]
    try:
        return typ(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r} (expected {typ.__name__})") from None


def parse_config_text(text: str, source: str = "<config>") -> dict:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}: line {lineno}: expected 'key = value'")
        key, _, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        values[key] = _coerce(key, raw)
    return values


def load_config(path, overrides=()) -> RunConfig:
    """Read a config file and apply ``key=value`` override strings."""
    try:
        with open(path, encoding="utf-8") as f:
            values = parse_config_text(f.read(), source=str(path))
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    merged = {k: d for k, (_, d) in SCHEMA.items()}
    merged.update(values)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"bad --set override (expected key=value): {item!r}")
        key, _, raw = item.partition("=")
        merged[key.strip()] = _coerce(key.strip(), raw.strip())
    return RunConfig(merged)
