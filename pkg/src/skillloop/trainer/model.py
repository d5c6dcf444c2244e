"""Linear softmax action model and its deterministic checkpoint format."""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..craftworld import ACTIONS, N_ACTIONS
from ..io import write_bytes_atomic
from .features import DEFAULT_DIM, featurize

MAGIC = b"BOBM1\n"
ACTION_NAMES = tuple(a.value for a in ACTIONS)


class CheckpointError(ValueError):
    pass


@dataclass
class LinearSoftmaxModel:
    """theta has shape (17, dim); rows follow the canonical action order."""

    theta: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.theta.shape[0] != N_ACTIONS:
            raise ValueError(f"theta must have {N_ACTIONS} rows, got {self.theta.shape[0]}")
        if not np.all(np.isfinite(self.theta)):
            raise ValueError("theta has non-finite entries")

    @classmethod
    def zeros(cls, dim: int = DEFAULT_DIM, meta: dict | None = None) -> "LinearSoftmaxModel":
        return cls(np.zeros((N_ACTIONS, dim)), dict(meta or {}))

    @property
    def dim(self) -> int:
        return self.theta.shape[1]

    def logits(self, cols: np.ndarray, vals: np.ndarray) -> np.ndarray:
        return self.theta[:, cols] @ vals

    def scores(self, instruction: str, history, obs_text: str) -> np.ndarray:
        cols, vals = featurize(instruction, history, obs_text, self.dim)
        return self.logits(cols, vals)

    def predict(self, instruction: str, history, obs_text: str) -> int:
        """Argmax action index; ties go to the earliest action in canonical order."""
        return int(np.argmax(self.scores(instruction, history, obs_text)))

    def to_bytes(self) -> bytes:
        used = np.flatnonzero(np.any(self.theta != 0.0, axis=0)).astype("<u4")
        header = json.dumps({"dim": self.dim, "actions": list(ACTION_NAMES), "columns": int(used.size),
                             "meta": self.meta}, sort_keys=True, separators=(",", ":")).encode("utf-8")
        block = np.ascontiguousarray(self.theta[:, used], dtype="<f8")
        return MAGIC + struct.pack("<I", len(header)) + header + used.tobytes() + block.tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "LinearSoftmaxModel":
        if not data.startswith(MAGIC):
            raise CheckpointError("not a model checkpoint (bad magic)")
        off = len(MAGIC)
        try:
            (hlen,) = struct.unpack_from("<I", data, off)
            off += 4
            header = json.loads(data[off: off + hlen].decode("utf-8"))
            off += hlen
            if tuple(header["actions"]) != ACTION_NAMES:
                raise CheckpointError("checkpoint action order differs from the canonical order")
            n = header["columns"]
            used = np.frombuffer(data, dtype="<u4", count=n, offset=off).astype(np.int64)
            off += 4 * n
            block = np.frombuffer(data, dtype="<f8", count=N_ACTIONS * n, offset=off).reshape(N_ACTIONS, n)
            off += 8 * N_ACTIONS * n
        except (struct.error, KeyError, ValueError) as exc:
            if isinstance(exc, CheckpointError):
                raise
            raise CheckpointError(f"corrupt checkpoint: {exc}") from exc
        if off != len(data):
            raise CheckpointError("trailing bytes in checkpoint")
        theta = np.zeros((N_ACTIONS, header["dim"]))
        theta[:, used] = block
        return cls(theta, header["meta"])

    def save(self, path: str | Path) -> str:
        return write_bytes_atomic(path, self.to_bytes())

    @classmethod
    def load(cls, path: str | Path) -> "LinearSoftmaxModel":
        return cls.from_bytes(Path(path).read_bytes())
