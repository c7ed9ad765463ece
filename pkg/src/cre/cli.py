"""Command-line entry point wiring configuration files to the pipeline.

Subcommands: gen-synthetic, build-dataset, train, evaluate, predict,
grad-check, export-pr. Every command takes --config and optional
--set key=value overrides; --seed overrides both the data and model
seeds at once.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import dataio, evaluation, synthetic, training
from .config import RunConfig, load_config
from .embedding import load_word_embeddings
from .encoders import EncoderConfig
from .errors import CheckpointError, ConfigError, CreError
from .model import ModelDims, load_checkpoint, save_checkpoint
from .synthetic import SyntheticSpec

GRAD_CHECK_TOLERANCE = 1e-4


def _spec_from_config(cfg: RunConfig) -> SyntheticSpec:
    return SyntheticSpec(
        entities=cfg["synthetic.entities"],
        relations=cfg["synthetic.relations"],
        templates_per_relation=cfg["synthetic.templates_per_relation"],
        pairs_per_relation=cfg["synthetic.pairs_per_relation"],
        negative_pairs=cfg["synthetic.negative_pairs"],
        sentences_per_pair=cfg["synthetic.sentences_per_pair"],
        vocab_size=cfg["synthetic.vocab_size"],
        word_dim=cfg["synthetic.word_dim"],
    )


def _dims_from_config(cfg: RunConfig, word_dim: int) -> ModelDims:
    return ModelDims(
        word_dim=word_dim,
        pos_dim=cfg["model.pos_dim"],
        max_distance=cfg["model.max_distance"],
        max_length=cfg["model.max_length"],
        entity_dim=cfg["model.entity_dim"],
    )


def _encoder_from_config(cfg: RunConfig) -> EncoderConfig:
    enc = EncoderConfig(
        kind=cfg["encoder.kind"],
        hidden_dim=cfg["encoder.hidden_dim"],
        window=cfg["encoder.window"],
        layers=cfg["encoder.layers"],
        heads=cfg["encoder.heads"],
    )
    enc.validate()
    return enc


def _load_split(cfg: RunConfig):
    path = cfg["data.dataset"]
    if not os.path.exists(path):
        raise CreError(f"dataset file not found: {path}")
    ds = dataio.load_dataset(path)
    return dataio.split_dataset(ds, cfg["data.test_fraction"], cfg["data.seed"])


def _load_params(cfg: RunConfig):
    path = cfg["train.checkpoint"]
    if not os.path.exists(path):
        raise CheckpointError(f"checkpoint not found: {path}")
    return load_checkpoint(path)


def cmd_gen_synthetic(cfg: RunConfig) -> None:
    synthetic.gen_synthetic(
        _spec_from_config(cfg),
        cfg["data.seed"],
        cfg["data.corpus"],
        cfg["data.kb"],
        cfg["data.embeddings"],
    )
    print(f"wrote {cfg['data.corpus']}, {cfg['data.kb']}, {cfg['data.embeddings']}")


def cmd_build_dataset(cfg: RunConfig) -> None:
    corpus = dataio.parse_corpus(cfg["data.corpus"])
    kb = dataio.parse_kb(cfg["data.kb"])
    ds = dataio.build_dataset(corpus, kb, cfg["data.top_n"])
    dataio.save_dataset(ds, cfg["data.dataset"])
    print(f"wrote {cfg['data.dataset']}: {ds.provenance}")


def cmd_train(cfg: RunConfig) -> None:
    train_ds, _ = _load_split(cfg)
    words = load_word_embeddings(cfg["data.embeddings"])
    dims = _dims_from_config(cfg, words.dimension)
    tcfg = training.TrainConfig(
        learning_rate=cfg["train.learning_rate"],
        beta1=cfg["train.beta1"],
        beta2=cfg["train.beta2"],
        epsilon=cfg["train.epsilon"],
        lam=cfg["train.lambda"],
        batch_size=cfg["train.batch_size"],
        max_epochs=cfg["train.max_epochs"],
        window=cfg["train.window"],
        data_seed=cfg["data.seed"],
        model_seed=cfg["model.seed"],
        aggregation=cfg["train.aggregation"],
        negative_target=cfg["train.negative_target"] or None,
    )
    params, logs = training.train(
        train_ds, words, dims, _encoder_from_config(cfg), cfg["kb.model"], tcfg
    )
    save_checkpoint(params, cfg["train.checkpoint"])
    with open(cfg["train.epoch_log"], "w", encoding="utf-8") as f:
        for log in logs:
            f.write(json.dumps(
                {"epoch": log.epoch, "mean_loss": log.mean_loss, "wall_time": log.wall_time}
            ) + "\n")
    print(f"trained {len(logs)} epochs; best mean loss "
          f"{min(l.mean_loss for l in logs):.6f}; wrote {cfg['train.checkpoint']}")


def cmd_evaluate(cfg: RunConfig) -> None:
    _, test_ds = _load_split(cfg)
    params = _load_params(cfg)
    words = load_word_embeddings(cfg["data.embeddings"])
    report = evaluation.evaluate_model(params, test_ds, words, cfg.k_values())
    with open(cfg["eval.report"], "w", encoding="utf-8") as f:
        json.dump(report, f, sort_keys=True, indent=2)
        f.write("\n")
    print(f"wrote {cfg['eval.report']}: mrr_top3={report['mrr_top3']:.4f} "
          f"mrr_top5={report['mrr_top5']:.4f}")


def cmd_predict(cfg: RunConfig) -> None:
    _, test_ds = _load_split(cfg)
    params = _load_params(cfg)
    words = load_word_embeddings(cfg["data.embeddings"])
    k = max(cfg.k_values())
    with open(cfg["eval.predictions"], "w", encoding="utf-8") as f:
        for bag in test_ds.bags:
            recs = evaluation.predict(params, bag, words, k)
            f.write(json.dumps({
                "head_id": bag.head_id,
                "tail_id": bag.tail_id,
                "predictions": [
                    {"relation": params.relation_vocab[r.relation], "score": r.score}
                    for r in recs
                ],
            }, sort_keys=True) + "\n")
    print(f"wrote {cfg['eval.predictions']} ({len(test_ds.bags)} pairs)")


def cmd_grad_check(cfg: RunConfig) -> None:
    err = training.grad_check(cfg["encoder.kind"], cfg["kb.model"], seed=cfg["model.seed"])
    print(f"grad-check {cfg['encoder.kind']}+{cfg['kb.model']} max_rel_err={err:.3e}")
    if err > GRAD_CHECK_TOLERANCE:
        raise CreError(f"gradient check failed: {err:.3e} > {GRAD_CHECK_TOLERANCE:.0e}")


def cmd_export_pr(cfg: RunConfig) -> None:
    path = cfg["eval.report"]
    if not os.path.exists(path):
        raise CreError(f"metrics report not found: {path}")
    with open(path, encoding="utf-8") as f:
        report = json.load(f)
    evaluation.write_pr_csv(report, cfg["eval.pr_csv"])
    _plot_pr(report, cfg["eval.pr_plot"])
    print(f"wrote {cfg['eval.pr_csv']} and {cfg['eval.pr_plot']}")


def _plot_pr(report: dict, path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4.5))
    for k in sorted(report["pr_curves"], key=int):
        points = report["pr_curves"][k]
        ax.plot([p[0] for p in points], [p[1] for p in points], label=f"top-{k}")
    ax.set_xlabel("recall")
    ax.set_ylabel("precision")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.05)
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


COMMANDS = {
    "gen-synthetic": cmd_gen_synthetic,
    "build-dataset": cmd_build_dataset,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "predict": cmd_predict,
    "grad-check": cmd_grad_check,
    "export-pr": cmd_export_pr,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cre",
        description="Relation extraction with contextualized relation embeddings",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="path to a key = value config file")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override a config key")
    parser.add_argument("--seed", type=int, default=None,
                        help="override both data.seed and model.seed")
    args = parser.parse_args(argv)

    try:
        overrides = list(args.overrides)
        if args.seed is not None:
            overrides += [f"data.seed={args.seed}", f"model.seed={args.seed}"]
        cfg = load_config(args.config, overrides)
        cfg.log_resolved()
        COMMANDS[args.command](cfg)
    except CreError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
