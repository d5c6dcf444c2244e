"""Behavior cloning on skill records: summed action NLL over every recorded step.

Each step of a record is one decision: the instruction, the record's earlier
steps as history, the observation text and the action taken.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.special import logsumexp, softmax

from ..craftworld import ACTION_INDEX, N_ACTIONS, Action
from ..io import dumps, sha256_bytes
from ..policy.base import DEFAULT_HISTORY
from ..policy.prompts import render_eval_prompt
from .features import DEFAULT_DIM, featurize
from .model import LinearSoftmaxModel

log = logging.getLogger(__name__)

CUMULATIVE = "cumulative"
NON_CUMULATIVE = "non_cumulative"
SFT_SCHEMA = "sft.v1"


class EmptyDatasetError(ValueError):
    pass


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class Decision:
    instruction: str
    history: tuple[tuple[str, str], ...]
    obs: str
    action: int


def record_key(record) -> str:
    """Content hash of a record's training-relevant fields."""
    return sha256_bytes(dumps({"i": record.instruction, "s": [list(s) for s in record.steps]}).encode("utf-8"))


def dataset_hash(records) -> str:
    """Order-independent digest of a dataset."""
    return sha256_bytes("\n".join(sorted(record_key(r) for r in records)).encode("utf-8"))


def decisions(records, history: int = DEFAULT_HISTORY) -> list[Decision]:
    out = []
    for r in records:
        for t, (obs, action) in enumerate(r.steps):
            if action not in ACTION_INDEX:
                raise ValueError(f"record action {action!r} is not one of the {N_ACTIONS} actions")
            hist = tuple(r.steps[max(0, t - history): t]) if history > 0 else ()
            out.append(Decision(r.instruction, hist, obs, ACTION_INDEX[action]))
    return out


@dataclass
class Dataset:
    """Design matrix (n x dim, CSR) plus target action indices."""

    X: sparse.csr_matrix
    y: np.ndarray

    def __len__(self) -> int:
        return self.X.shape[0]

    @classmethod
    def from_decisions(cls, decs, dim: int = DEFAULT_DIM) -> "Dataset":
        if not decs:
            raise EmptyDatasetError("dataset is empty")
        indptr = [0]
        cols, vals = [], []
        for d in decs:
            c, v = featurize(d.instruction, d.history, d.obs, dim)
            cols.append(c)
            vals.append(v)
            indptr.append(indptr[-1] + len(c))
        X = sparse.csr_matrix((np.concatenate(vals), np.concatenate(cols), np.array(indptr)),
                              shape=(len(decs), dim))
        return cls(X, np.array([d.action for d in decs], dtype=np.int64))

    @classmethod
    def from_records(cls, records, dim: int = DEFAULT_DIM, history: int = DEFAULT_HISTORY) -> "Dataset":
        return cls.from_decisions(decisions(records, history), dim)


def _as_dataset(data, dim: int) -> Dataset:
    if isinstance(data, Dataset):
        if len(data) == 0:
            raise EmptyDatasetError("dataset is empty")
        return data
    return Dataset.from_records(list(data), dim)


def _logits(theta: np.ndarray, X) -> np.ndarray:
    return np.asarray(X @ theta.T)


def sft_loss(model: LinearSoftmaxModel, data) -> float:
    """Summed negative log-likelihood of the recorded actions (no L2 term).

    The per-decision terms are added with compensated summation, so at theta = 0
    the result is exactly ``n * ln 17``.
    """
    ds = _as_dataset(data, model.dim)
    z = _logits(model.theta, ds.X)
    return math.fsum(logsumexp(z, axis=1) - z[np.arange(len(ds)), ds.y])


def l2_term(model: LinearSoftmaxModel, l2: float) -> float:
    return 0.5 * l2 * float(np.sum(model.theta ** 2))


def _grad(theta: np.ndarray, X, y: np.ndarray) -> np.ndarray:
    p = softmax(_logits(theta, X), axis=1)
    p[np.arange(len(y)), y] -= 1.0
    return np.asarray((X.T @ p).T)


def grad(model: LinearSoftmaxModel, data) -> np.ndarray:
    """Gradient of :func:`sft_loss` with respect to theta."""
    ds = _as_dataset(data, model.dim)
    return _grad(model.theta, ds.X, ds.y)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 2.0
    epochs: int = 20
    batch_size: int = 32
    l2: float = 1e-4
    seed: int = 0
    data_mode: str = CUMULATIVE
    from_scratch: bool = True
    dim: int = DEFAULT_DIM
    history: int = DEFAULT_HISTORY

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError("learning rate must be > 0")
        if self.epochs < 0 or self.batch_size < 1 or self.l2 < 0:
            raise ValueError("epochs >= 0, batch_size >= 1 and l2 >= 0 are required")
        if self.data_mode not in (CUMULATIVE, NON_CUMULATIVE):
            raise ValueError(f"unknown data mode {self.data_mode!r}")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict) -> "TrainConfig":
        return cls(**d)


def train(config: TrainConfig, records, prev_model: LinearSoftmaxModel | None = None,
          iteration: int = 0) -> LinearSoftmaxModel:
    """Minibatch gradient descent on summed NLL + L2, deterministic in (config, dataset).

    Records are put in canonical content order first and the per-epoch shuffle is
    seeded from (config.seed, dataset hash), so input order does not matter.
    """
    records = sorted(records, key=record_key)
    if not records:
        raise EmptyDatasetError("dataset is empty")
    dhash = dataset_hash(records)
    ds = Dataset.from_records(records, config.dim, config.history)
    if config.from_scratch or prev_model is None:
        theta = np.zeros((N_ACTIONS, config.dim))
    else:
        if prev_model.dim != config.dim:
            raise ValueError("previous model dimension differs from the config")
        theta = prev_model.theta.copy()
    n = len(ds)

    def objective(th):
        model = LinearSoftmaxModel(th) if np.all(np.isfinite(th)) else None
        if model is None:
            return float("nan")
        return sft_loss(model, ds) + l2_term(model, config.l2)

    initial = objective(theta)
    rng = np.random.default_rng([config.seed, int(dhash[:8], 16)])
    X, y = ds.X, ds.y
    best, best_theta = initial, theta.copy()
    history = [initial]
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = np.sort(order[start: start + config.batch_size])
            Xb = X[idx]
            cols = np.unique(Xb.indices)
            sub = theta[:, cols]
            g = _grad(sub, Xb[:, cols], y[idx])
            if config.l2 > 0:
                theta *= 1.0 - config.lr * config.l2 * (len(idx) / n)
            theta[:, cols] -= config.lr * g
        loss = objective(theta)
        history.append(loss)
        if not np.isfinite(loss):
            raise TrainingDiverged(f"loss became {loss} at epoch {epoch} (lr={config.lr}, "
                                   f"batch={config.batch_size}, n={n}, initial={initial:.4f})")
        if loss <= best:
            best, best_theta = loss, theta.copy()
    # keep the best epoch so the returned model never ends above the starting objective
    final = best
    if not final <= initial:
        raise TrainingDiverged(f"final objective {final} exceeds initial {initial}")
    meta = {
        "iteration": iteration,
        "dataset_hash": dhash,
        "records": len(records),
        "decisions": n,
        "config": config.to_json(),
        "initial_loss": initial,
        "final_loss": final,
        "epoch_losses": history,
    }
    log.info("trained on %d decisions: objective %.3f -> %.3f", n, initial, final)
    return LinearSoftmaxModel(best_theta, meta)


def accuracy(model: LinearSoftmaxModel, records) -> float:
    ds = _as_dataset(list(records), model.dim)
    pred = np.argmax(_logits(model.theta, ds.X), axis=1)
    return float(np.mean(pred == ds.y))


def assemble_dataset(rounds, k: int, mode: str = CUMULATIVE) -> list:
    """Valid records of rounds 0..k (cumulative) or of round k alone."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k >= len(rounds):
        raise ValueError(f"round {k} not available ({len(rounds)} rounds given)")
    if mode == CUMULATIVE:
        chosen = [r for rnd in rounds[: k + 1] for r in rnd]
    elif mode == NON_CUMULATIVE:
        chosen = list(rounds[k])
    else:
        raise ValueError(f"unknown data mode {mode!r}")
    out = [r for r in chosen if r.valid is True]
    if not out:
        raise EmptyDatasetError(f"no valid records in rounds up to {k} ({mode})")
    return out


def export_training_file(records, path: str | Path, history: int = DEFAULT_HISTORY) -> int:
    """Write prompt/completion JSONL, one line per recorded step; returns the line count."""
    path = Path(path)
    lines = []
    for j, r in enumerate(records):
        for t, (obs, action) in enumerate(r.steps):
            Action(action)
            hist = r.steps[max(0, t - history): t] if history > 0 else []
            lines.append(dumps({"schema": SFT_SCHEMA, "record": j, "t": t, "instruction": r.instruction,
                                "prompt": render_eval_prompt(r.instruction, obs, hist),
                                "completion": action}))
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        tmp.replace(path)
    except OSError as exc:
        raise OSError(f"cannot write training file {path}: {exc.strerror or exc}") from exc
    return len(lines)


def load_training_file(path: str | Path) -> list[list[dict]]:
    """Lines grouped back into records, in file order."""
    groups: dict[int, list[dict]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            row = json.loads(line)
            if row.get("schema") != SFT_SCHEMA:
                raise ValueError(f"unsupported training file schema {row.get('schema')!r}")
            groups.setdefault(row["record"], []).append(row)
    return [groups[k] for k in sorted(groups)]
