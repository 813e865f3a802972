"""Trainer entry point: reads a YAML hyperparameter file, trains one model
per requested skill, and writes .bkw bundles, JSON training logs, and
(optionally) reference fixtures."""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np
import yaml

from .data import generate_corpus, load_corpus, load_raw_segments
from .fixtures import export_reference_fixtures
from .netspec import NetSpec
from .train import TrainConfig, export_bundle, train, write_log

DEFAULT_SKILLS = ("concentration", "sensory_clarity", "equanimity")


def _spec_from_config(cfg: dict) -> NetSpec:
    network = cfg.get("network", {})
    preset = network.get("preset", "full")
    if preset == "full":
        return NetSpec.full()
    if preset == "scaled":
        return NetSpec.scaled(
            stem_channels=int(network.get("stem_channels", 8)),
            stage_channels=tuple(network.get("stage_channels", (8, 16, 32, 64))),
            gru_hidden=int(network.get("gru_hidden", 32)),
        )
    raise ValueError(f"unknown network preset {preset!r}")


def _train_config(cfg: dict, seed_offset: int) -> TrainConfig:
    t = cfg.get("training", {})
    return TrainConfig(
        lr=float(t.get("lr", 1e-4)),
        epochs=int(t.get("epochs", 50)),
        batch_size=int(t.get("batch_size", 32)),
        scheduler_factor=float(t.get("scheduler_factor", 0.5)),
        scheduler_patience=int(t.get("scheduler_patience", 5)),
        seed=int(t.get("seed", 0)) + seed_offset,
        val_fraction=float(t.get("val_fraction", 0.2)),
        stop_f1=t.get("stop_f1"),
        deterministic=bool(t.get("deterministic", True)),
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="breathkit-train",
        description="Train mindfulness-skill classifiers and export weight bundles.",
    )
    parser.add_argument("--config", default="mindfulness.yaml",
                        help="YAML hyperparameter file")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--skills", nargs="*", default=list(DEFAULT_SKILLS))
    args = parser.parse_args(argv)

    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = yaml.safe_load(fh)
        os.makedirs(args.out, exist_ok=True)

        data_cfg = cfg.get("data", {})
        corpus_dir = data_cfg.get("corpus_dir")
        if corpus_dir is None:
            corpus_dir = os.path.join(args.out, "corpus")
            if not os.path.exists(os.path.join(corpus_dir, "labels.json")):
                generate_corpus(
                    corpus_dir,
                    n_per_class=int(data_cfg.get("n_per_class", 200)),
                    separation=float(data_cfg.get("separation", 1.0)),
                    seed=int(data_cfg.get("seed", 0)),
                    breathkit_cmd=data_cfg.get("breathkit_cmd", "breathkit"),
                )
        ds = load_corpus(corpus_dir)
        spec = _spec_from_config(cfg)

        fixture_segments = int(cfg.get("fixtures", {}).get("n_segments", 0))
        for i, skill in enumerate(args.skills):
            tc = _train_config(cfg, seed_offset=i)
            result = train(ds, spec, tc)
            bundle_path = os.path.join(args.out, f"{skill}.bkw")
            export_bundle(result, bundle_path)
            write_log(result, tc, os.path.join(args.out, f"{skill}_log.json"))
            print(f"{skill}: best validation F1 {result.best_f1:.3f} "
                  f"at epoch {result.best_epoch}")
            if fixture_segments and i == 0:
                rng = np.random.default_rng(int(cfg["fixtures"].get("seed", 0)))
                idx = rng.choice(len(ds), size=fixture_segments, replace=False)
                raw = load_raw_segments(corpus_dir, idx)
                export_reference_fixtures(
                    bundle_path, raw,
                    os.path.join(args.out, "fixtures"),
                    bundle_name=f"{skill}.bkw",
                )
        return 0
    except Exception as exc:  # noqa: BLE001 - single CLI reporting point
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
