"""Training loop, evaluation and run-directory handling."""

from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .autodiff import (CheckpointError, NonFiniteGradient, Tape, adam_step, gather_rows,
                       load_checkpoint, save_checkpoint)
from .config import TrainConfig
from .embedding import GraphEmbeddingNet, ModelConfig
from .ged import build_eval_sets, make_training_pair, make_training_triplet
from .graph import LabeledPair, Triplet, parse_pair, parse_triplet, read_jsonl
from .losses import batch_pair_loss, batch_triplet_loss, similarity
from .matching import GraphMatchingNet
from .metrics import pair_auc, triplet_accuracy

log = logging.getLogger(__name__)

METRICS_COLUMNS = ("step", "loss", "pair_auc", "triplet_acc")
CHECKPOINT_NAME = "model.ckpt"
CONFIG_NAME = "config.json"
METRICS_NAME = "metrics.csv"


class TrainingDiverged(FloatingPointError):
    pass


@dataclass(frozen=True)
class EvalReport:
    step: int
    pair_auc: float
    triplet_accuracy: float
    loss: float = float("nan")


def build_model(kind: str, config: ModelConfig, seed=0) -> GraphEmbeddingNet:
    cls = GraphMatchingNet if kind == "matching" else GraphEmbeddingNet
    return cls(config, seed=seed)


# --- evaluation -----------------------------------------------------------------

def score_pairs(model: GraphEmbeddingNet, pairs: Sequence[tuple], family: str,
                batch_size: int = 100) -> np.ndarray:
    """Similarity of each ``(g1, g2)``; larger means more similar."""
    out = []
    for k in range(0, len(pairs), batch_size):
        u, v = model.pair_vectors(list(pairs[k:k + batch_size]))
        out.append(np.atleast_1d(similarity(family, u, v).value))
    return np.concatenate(out) if out else np.zeros(0)


def evaluate(model: GraphEmbeddingNet, pairs: Sequence[LabeledPair], triplets: Sequence[Triplet],
             family: str, step: int = 0, loss: float = float("nan")) -> EvalReport:
    pair_scores = score_pairs(model, [(p.g1, p.g2) for p in pairs], family)
    trip_scores = score_pairs(model, [x for t in triplets for x in ((t.g1, t.g2), (t.g1, t.g3))],
                              family)
    return EvalReport(step, pair_auc(pair_scores, [p.label for p in pairs]),
                      triplet_accuracy(trip_scores[0::2], trip_scores[1::2]), loss)


def load_eval_sets(directory: str | os.PathLike) -> tuple[list[LabeledPair], list[Triplet]]:
    return (read_jsonl(os.path.join(directory, "pairs.jsonl"), parse_pair),
            read_jsonl(os.path.join(directory, "triplets.jsonl"), parse_triplet))


# --- training -------------------------------------------------------------------

def training_loss(model: GraphEmbeddingNet, cfg: TrainConfig, rng: np.random.Generator):
    """Sample one fresh batch and build its loss (inside the caller's tape)."""
    if cfg.loss.mode == "pair":
        batch = [make_training_pair(cfg.data, rng) for _ in range(cfg.batch_size)]
        u, v = model.pair_vectors([(p.g1, p.g2) for p in batch])
        labels = np.array([p.label for p in batch], dtype=np.float64)
        return batch_pair_loss(cfg.loss, u, v, labels)
    batch = [make_training_triplet(cfg.data, rng) for _ in range(cfg.batch_size)]
    pairs = [x for t in batch for x in ((t.g1, t.g2), (t.g1, t.g3))]
    u, v = model.pair_vectors(pairs)
    n = len(batch)
    even, odd = np.arange(0, 2 * n, 2), np.arange(1, 2 * n, 2)
    return batch_triplet_loss(cfg.loss, gather_rows(u, even), gather_rows(v, even),
                              gather_rows(u, odd), gather_rows(v, odd))


def _param_diagnostics(model: GraphEmbeddingNet) -> str:
    parts = []
    for name in model.params:
        value = model.params[name].value
        if not np.all(np.isfinite(value)):
            parts.append(f"{name}: non-finite values")
        else:
            parts.append(f"{name}: max|w|={np.abs(value).max():.3g}")
    return "; ".join(parts)


def train_step(model: GraphEmbeddingNet, cfg: TrainConfig, rng: np.random.Generator,
               step: int) -> float:
    params = model.params
    names = params.names()
    with Tape() as tape:
        loss = training_loss(model, cfg, rng)
    value = float(loss.value)
    if not np.isfinite(value):
        raise TrainingDiverged(f"non-finite loss at step {step}: {_param_diagnostics(model)}")
    grads = tape.gradient(loss, params.tensors())
    try:
        adam_step(params, dict(zip(names, grads)), cfg.learning_rate)
    except NonFiniteGradient as exc:
        raise TrainingDiverged(f"{exc} at step {step}: {_param_diagnostics(model)}") from None
    return value


def _fmt(x: float) -> str:
    return repr(float(x))


def train_loop(cfg: TrainConfig, out_dir: str | os.PathLike,
               eval_sets: tuple[list[LabeledPair], list[Triplet]] | None = None,
               on_report: Callable[[EvalReport], None] | None = None) -> list[EvalReport]:
    """Train from scratch, writing ``config.json``, ``metrics.csv`` and ``model.ckpt``.

    The run is a pure function of ``cfg``: the model is seeded from
    ``(seed, 0)``, the training stream from ``(seed, 1)`` and the evaluation
    sets from ``cfg.data``.
    """
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, CONFIG_NAME), "w") as f:
        f.write(cfg.to_json())
    model = build_model(cfg.model_kind, cfg.model, seed=[cfg.seed, 0])
    rng = np.random.default_rng([cfg.seed, 1])
    pairs, triplets = eval_sets if eval_sets is not None else build_eval_sets(cfg.data, cfg.eval_size)
    ckpt = os.path.join(out_dir, CHECKPOINT_NAME)
    reports: list[EvalReport] = []
    running, count = 0.0, 0
    with open(os.path.join(out_dir, METRICS_NAME), "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(METRICS_COLUMNS)
        for step in range(1, cfg.num_training_steps + 1):
            running += train_step(model, cfg, rng, step)
            count += 1
            if step % cfg.eval_every == 0 or step == cfg.num_training_steps:
                report = evaluate(model, pairs, triplets, cfg.loss.family, step, running / count)
                running, count = 0.0, 0
                reports.append(report)
                writer.writerow([step, _fmt(report.loss), _fmt(report.pair_auc),
                                 _fmt(report.triplet_accuracy)])
                f.flush()
                save_checkpoint(model.params, ckpt)
                log.info("step %d loss %.4f pair_auc %.4f triplet_acc %.4f", step,
                         report.loss, report.pair_auc, report.triplet_accuracy)
                if on_report is not None:
                    on_report(report)
    return reports


def load_run_config(run_dir: str | os.PathLike) -> TrainConfig:
    from .config import load_config
    return load_config(os.path.join(run_dir, CONFIG_NAME))


def load_model(checkpoint: str | os.PathLike, cfg: TrainConfig) -> GraphEmbeddingNet:
    model = build_model(cfg.model_kind, cfg.model)
    try:
        load_checkpoint(checkpoint, model.params)
    except CheckpointError as exc:
        raise CheckpointError(f"{checkpoint}: {exc}") from None
    return model


def read_metrics(path: str | os.PathLike) -> list[dict[str, float]]:
    with open(path, newline="") as f:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(f)]
