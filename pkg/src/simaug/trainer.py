"""Classifier training: Adam with decoupled weight decay, warmup schedule, two stages.

The built-in classifiers (a linear layer or a one-hidden-layer ReLU net)
operate on encoder features.  Everything runs in 64-bit numpy so that
training is bit-deterministic for a fixed seed and gradient checks are
exact to rounding.

The learning rate follows linear warmup then inverse-square-root decay,
normalized so the peak at the end of warmup equals base_lr.  Stage two of
two-stage training continues the optimizer state and schedule by default;
set reset_stage2 to restart them.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .corpus import DataFormatError, Dataset, Sentence
from .encoder import Encoder, encode

LINEAR = "linear"
MLP1 = "mlp1"


class TrainingError(RuntimeError):
    """Non-finite loss or parameters; message carries step and batch ids."""


@dataclass(frozen=True)
class TrainConfig:
    epochs_per_stage: int = 50
    batch_size: int = 16
    base_lr: float = 2e-5
    warmup_steps: int = 1000
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    weight_decay: float = 0.01
    seed: int = 2
    shuffle: bool = True
    reset_stage2: bool = False

    def validate(self) -> None:
        if self.epochs_per_stage < 1 or self.batch_size < 1 or self.warmup_steps < 1:
            raise DataFormatError("epochs_per_stage, batch_size and warmup_steps must be positive")
        if self.base_lr <= 0 or self.adam_eps <= 0 or self.weight_decay < 0:
            raise DataFormatError("base_lr and adam_eps must be positive; weight_decay non-negative")
        if not (0 < self.adam_beta1 < 1 and 0 < self.adam_beta2 < 1):
            raise DataFormatError("adam betas must lie in (0, 1)")


@dataclass(frozen=True)
class Schedule:
    base_lr: float
    warmup_steps: int


def lr_at(sched: Schedule, step: int) -> float:
    """Learning rate at a 1-based step.

    lr = base_lr * min(step / warmup, sqrt(warmup / step)): linear up to
    the peak (exactly base_lr at step == warmup), then inverse-sqrt decay.
    """
    if step < 1:
        raise DataFormatError(f"schedule step must be >= 1, got {step}")
    warm = sched.warmup_steps
    return sched.base_lr * min(step / warm, math.sqrt(warm / step))


@dataclass
class Model:
    """Classifier parameters plus carried optimizer state.

    step_counter and epoch_counter advance monotonically across training
    stages so the schedule and the per-epoch shuffle streams continue.
    """

    architecture: str
    input_dim: int
    num_classes: int
    labels: tuple[str, ...]
    hidden_dim: int | None
    params: dict[str, np.ndarray]
    step_counter: int = 0
    epoch_counter: int = 0
    opt_m: dict[str, np.ndarray] = field(default_factory=dict)
    opt_v: dict[str, np.ndarray] = field(default_factory=dict)

    def parameter_count(self) -> int:
        return sum(p.size for p in self.params.values())

    def reset_optimizer(self) -> None:
        self.opt_m = {name: np.zeros_like(p) for name, p in self.params.items()}
        self.opt_v = {name: np.zeros_like(p) for name, p in self.params.items()}
        self.step_counter = 0
        self.epoch_counter = 0


def _xavier(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


def init_model(
    architecture: str,
    input_dim: int,
    num_classes: int,
    seed: int,
    hidden_dim: int = 256,
    labels: tuple[str, ...] | None = None,
) -> Model:
    """Seeded uniform(-a, a) weights with a = sqrt(6 / (fan_in + fan_out)); zero biases."""
    if input_dim < 1 or num_classes < 1:
        raise DataFormatError("input_dim and num_classes must be positive")
    if labels is None:
        labels = tuple(str(i) for i in range(num_classes))
    if len(labels) != num_classes:
        raise DataFormatError(f"{len(labels)} labels given for {num_classes} classes")
    rng = np.random.default_rng(seed)
    if architecture == LINEAR:
        params = {
            "w": _xavier(rng, input_dim, num_classes),
            "b": np.zeros(num_classes, dtype=np.float64),
        }
        hidden: int | None = None
    elif architecture == MLP1:
        if hidden_dim < 1:
            raise DataFormatError("hidden_dim must be positive")
        params = {
            "w1": _xavier(rng, input_dim, hidden_dim),
            "b1": np.zeros(hidden_dim, dtype=np.float64),
            "w2": _xavier(rng, hidden_dim, num_classes),
            "b2": np.zeros(num_classes, dtype=np.float64),
        }
        hidden = hidden_dim
    else:
        raise DataFormatError(f"unknown architecture {architecture!r}")
    model = Model(
        architecture=architecture,
        input_dim=input_dim,
        num_classes=num_classes,
        labels=tuple(labels),
        hidden_dim=hidden,
        params=params,
    )
    model.reset_optimizer()
    return model


def _logits(model: Model, x: np.ndarray) -> np.ndarray:
    p = model.params
    if model.architecture == LINEAR:
        return x @ p["w"] + p["b"]
    hidden = np.maximum(x @ p["w1"] + p["b1"], 0.0)
    return hidden @ p["w2"] + p["b2"]


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with log-sum-exp stabilization."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def loss_and_grads(
    model: Model, x: np.ndarray, y: np.ndarray
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy over the batch and its analytic gradients."""
    n = x.shape[0]
    p = model.params
    if model.architecture == LINEAR:
        logits = x @ p["w"] + p["b"]
    else:
        pre = x @ p["w1"] + p["b1"]
        hidden = np.maximum(pre, 0.0)
        logits = hidden @ p["w2"] + p["b2"]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    loss = float(-log_probs[np.arange(n), y].mean())
    dlogits = np.exp(log_probs)
    dlogits[np.arange(n), y] -= 1.0
    dlogits /= n
    if model.architecture == LINEAR:
        grads = {"w": x.T @ dlogits, "b": dlogits.sum(axis=0)}
    else:
        dhidden = (dlogits @ p["w2"].T) * (pre > 0.0)
        grads = {
            "w1": x.T @ dhidden,
            "b1": dhidden.sum(axis=0),
            "w2": hidden.T @ dlogits,
            "b2": dlogits.sum(axis=0),
        }
    return loss, grads


def _adam_update(model: Model, grads: dict[str, np.ndarray], lr: float, cfg: TrainConfig) -> None:
    """Bias-corrected Adam step, then decoupled weight decay on weights only."""
    t = model.step_counter  # already advanced to this step's 1-based index
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    for name, grad in grads.items():
        m = model.opt_m[name]
        v = model.opt_v[name]
        m *= b1
        m += (1.0 - b1) * grad
        v *= b2
        v += (1.0 - b2) * grad * grad
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        param = model.params[name]
        param -= lr * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
        if name.startswith("w"):
            param -= lr * cfg.weight_decay * param


def encode_dataset(enc: Encoder, data: Dataset) -> np.ndarray:
    """Feature matrix for a whole dataset, one unit row per sentence."""
    return np.stack([encode(enc, s) for s in data])


def train_stage(model: Model, data: Dataset, enc: Encoder, cfg: TrainConfig) -> Model:
    """One stage: epochs_per_stage passes of shuffled minibatch Adam updates.

    The per-epoch shuffle stream is derived from (cfg.seed, epoch counter),
    and step/epoch counters carry across calls, so two consecutive stages
    on the same data are bit-identical to one stage of doubled length.
    """
    cfg.validate()
    if len(data) == 0:
        raise DataFormatError("cannot train on an empty dataset")
    label_index = {label: i for i, label in enumerate(model.labels)}
    missing = sorted({s.label for s in data} - set(model.labels))
    if missing:
        raise DataFormatError(f"labels not in the model's class catalog: {missing}")
    x = encode_dataset(enc, data)
    y = np.array([label_index[s.label] for s in data], dtype=np.int64)
    ids = [s.id for s in data]
    sched = Schedule(base_lr=cfg.base_lr, warmup_steps=cfg.warmup_steps)
    n = len(data)
    for _ in range(cfg.epochs_per_stage):
        if cfg.shuffle:
            rng = np.random.default_rng([cfg.seed % 2**64, model.epoch_counter])
            order = rng.permutation(n)
        else:
            order = np.arange(n)
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            model.step_counter += 1
            lr = lr_at(sched, model.step_counter)
            loss, grads = loss_and_grads(model, x[batch], y[batch])
            if not math.isfinite(loss):
                batch_ids = [ids[i] for i in batch]
                raise TrainingError(
                    f"non-finite loss at step {model.step_counter} (batch ids: {batch_ids})"
                )
            _adam_update(model, grads, lr, cfg)
            for name, param in model.params.items():
                if not np.all(np.isfinite(param)):
                    batch_ids = [ids[i] for i in batch]
                    raise TrainingError(
                        f"non-finite parameter {name!r} at step {model.step_counter} "
                        f"(batch ids: {batch_ids})"
                    )
        model.epoch_counter += 1
    return model


def two_stage_train(
    architecture: str,
    stage1_data: Dataset,
    stage2_data: Dataset,
    enc: Encoder,
    cfg: TrainConfig,
    hidden_dim: int = 256,
) -> Model:
    """Train on the augmented data, then continue on the primary data.

    The class catalog is the union of both stages' labels (first-appearance
    order).  With reset_stage2 the optimizer state, schedule position and
    shuffle stream restart before stage two; by default they continue.
    """
    if len(stage2_data) == 0:
        raise DataFormatError("stage-2 dataset must be nonempty")
    labels = list(stage1_data.labels)
    labels.extend(l for l in stage2_data.labels if l not in stage1_data.labels)
    model = init_model(
        architecture,
        input_dim=enc.dimension,
        num_classes=len(labels),
        seed=cfg.seed,
        hidden_dim=hidden_dim,
        labels=tuple(labels),
    )
    train_stage(model, stage1_data, enc, cfg)
    if cfg.reset_stage2:
        model.reset_optimizer()
    train_stage(model, stage2_data, enc, cfg)
    return model


def predict(model: Model, enc: Encoder, sentence: Sentence) -> tuple[str, np.ndarray]:
    """Predicted label (argmax, lowest class index on ties) and softmax scores."""
    x = encode(enc, sentence)
    scores = softmax(_logits(model, x[np.newaxis, :]))[0]
    return model.labels[int(np.argmax(scores))], scores


def predict_dataset(model: Model, enc: Encoder, data: Dataset) -> list[str]:
    """Predicted labels for every sentence, via one vectorized forward pass."""
    x = encode_dataset(enc, data)
    scores = softmax(_logits(model, x))
    return [model.labels[int(i)] for i in np.argmax(scores, axis=1)]


_PARAM_ORDER = {LINEAR: ("w", "b"), MLP1: ("w1", "b1", "w2", "b2")}


def save_model(
    model: Model,
    path: str | Path,
    encoder_fingerprint: str = "",
    config: TrainConfig | None = None,
) -> None:
    """Write header JSON plus raw little-endian float64 parameter arrays."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    order = _PARAM_ORDER[model.architecture]
    header = {
        "architecture": model.architecture,
        "input_dim": model.input_dim,
        "hidden_dim": model.hidden_dim,
        "num_classes": model.num_classes,
        "labels": list(model.labels),
        "step_counter": model.step_counter,
        "epoch_counter": model.epoch_counter,
        "encoder_fingerprint": encoder_fingerprint,
        "config": asdict(config) if config is not None else None,
        "arrays": [{"name": name, "shape": list(model.params[name].shape)} for name in order],
    }
    with path.open("wb") as handle:
        handle.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        for name in order:
            handle.write(np.ascontiguousarray(model.params[name], dtype="<f8").tobytes())


def load_model(path: str | Path) -> Model:
    """Bit-exact inverse of save_model; optimizer state starts fresh."""
    path = Path(path)
    blob = path.read_bytes()
    newline = blob.index(b"\n")
    header = json.loads(blob[:newline].decode("utf-8"))
    params: dict[str, np.ndarray] = {}
    offset = newline + 1
    for spec in header["arrays"]:
        shape = tuple(spec["shape"])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=offset).reshape(shape)
        params[spec["name"]] = arr.astype(np.float64, copy=True)
        offset += count * 8
    model = Model(
        architecture=header["architecture"],
        input_dim=header["input_dim"],
        num_classes=header["num_classes"],
        labels=tuple(header["labels"]),
        hidden_dim=header["hidden_dim"],
        params=params,
        step_counter=header["step_counter"],
        epoch_counter=header["epoch_counter"],
    )
    model.opt_m = {name: np.zeros_like(p) for name, p in params.items()}
    model.opt_v = {name: np.zeros_like(p) for name, p in params.items()}
    return model
