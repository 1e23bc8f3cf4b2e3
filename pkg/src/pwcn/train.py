"""Training loop: batching with padding, Adam, metrics, model selection."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .corpus import LABELS, LABEL_INDEX, Instance, Vocabulary
from .errors import DataError, NumericError
from .nn import (
    ForwardTrace,
    HyperParams,
    ModelParams,
    backward,
    batch_loss,
    forward,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters with the published defaults."""

    learning_rate: float = 0.001
    l2: float = 1e-5
    batch_size: int = 64
    epochs: int = 30
    seed: int = 1
    proximity_mode: str = "position"
    kernel: int = 3
    d_e: int = 300
    d_h: int = 300
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    init_range: float = 0.01
    train_embeddings: bool = True

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise DataError("learning rate must be positive")
        if self.l2 < 0:
            raise DataError("L2 coefficient must be non-negative")
        if self.batch_size < 1:
            raise DataError("batch size must be >= 1")
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise DataError("kernel length must be odd")
        if self.proximity_mode not in ("position", "dependency"):
            raise DataError(f"unknown proximity mode {self.proximity_mode!r}")

    def hyper(self) -> HyperParams:
        return HyperParams(d_e=self.d_e, d_h=self.d_h, d_p=len(LABELS), kernel=self.kernel)


@dataclass
class Example:
    """One instance encoded for the network."""

    token_ids: np.ndarray  # (n,) int64
    prox: np.ndarray       # (n,) float64
    label: int

    @property
    def n(self) -> int:
        return len(self.token_ids)


@dataclass
class Batch:
    token_ids: np.ndarray  # (B, T)
    prox: np.ndarray       # (B, T), zero on padding
    mask: np.ndarray       # (B, T), 1.0 real / 0.0 pad
    labels: np.ndarray     # (B,)

    @property
    def size(self) -> int:
        return self.token_ids.shape[0]


@dataclass
class EvalReport:
    accuracy: float
    macro_f1: float
    precision: np.ndarray   # per class
    recall: np.ndarray
    f1: np.ndarray
    confusion: np.ndarray   # rows = gold, columns = predicted

    def lines(self) -> list[tuple[str, float]]:
        rows = [("accuracy", self.accuracy), ("macro_f1", self.macro_f1)]
        for k, name in enumerate(LABELS):
            rows.append((f"precision_{name}", float(self.precision[k])))
            rows.append((f"recall_{name}", float(self.recall[k])))
            rows.append((f"f1_{name}", float(self.f1[k])))
        for i, gold in enumerate(LABELS):
            for j, pred in enumerate(LABELS):
                rows.append((f"confusion_{gold}_{pred}", float(self.confusion[i, j])))
        return rows


def encode_examples(instances: list[Instance], prox_vectors: list[np.ndarray],
                    vocab: Vocabulary) -> list[Example]:
    if len(instances) != len(prox_vectors):
        raise DataError("instances and proximity vectors are not aligned 1:1")
    out = []
    for inst, prox in zip(instances, prox_vectors):
        if len(prox) != inst.n:
            raise DataError(f"sentence {inst.sentence_id!r}: proximity length mismatch")
        out.append(Example(vocab.encode(inst.tokens), np.asarray(prox, dtype=np.float64),
                           LABEL_INDEX[inst.label]))
    return out


def collate(examples: list[Example]) -> Batch:
    """Pad a group of examples to the longest member (pad id 0, prox 0)."""
    B = len(examples)
    T = max(ex.n for ex in examples)
    token_ids = np.zeros((B, T), dtype=np.int64)
    prox = np.zeros((B, T), dtype=np.float64)
    mask = np.zeros((B, T), dtype=np.float64)
    labels = np.zeros(B, dtype=np.int64)
    for row, ex in enumerate(examples):
        token_ids[row, : ex.n] = ex.token_ids
        prox[row, : ex.n] = ex.prox
        mask[row, : ex.n] = 1.0
        labels[row] = ex.label
    return Batch(token_ids, prox, mask, labels)


def make_batches(examples: list[Example], batch_size: int, seed: int) -> list[Batch]:
    """Shuffle with the given (epoch-salted) seed, then pad into batches."""
    order = np.random.default_rng(seed).permutation(len(examples))
    shuffled = [examples[i] for i in order]
    return [collate(shuffled[i : i + batch_size]) for i in range(0, len(shuffled), batch_size)]


def init_params(hyper: HyperParams, seed: int, embeddings: np.ndarray,
                init_range: float = 0.01) -> ModelParams:
    """Copy the embedding table; draw every other tensor from U(-a, a)."""
    rng = np.random.default_rng(seed)
    d_e, d_h, d_p, l = hyper.d_e, hyper.d_h, hyper.d_p, hyper.kernel
    if embeddings.ndim != 2 or embeddings.shape[1] != d_e:
        raise DataError(f"embedding table shape {embeddings.shape} does not match d_e={d_e}")

    def draw(*shape):
        return rng.uniform(-init_range, init_range, size=shape)

    return ModelParams(
        emb=embeddings.astype(np.float64).copy(),
        fw_wx=draw(d_e, 4 * d_h),
        fw_wh=draw(d_h, 4 * d_h),
        fw_b=draw(4 * d_h),
        bw_wx=draw(d_e, 4 * d_h),
        bw_wh=draw(d_h, 4 * d_h),
        bw_b=draw(4 * d_h),
        conv_w=draw(l * 2 * d_h, 2 * d_h),
        conv_b=draw(2 * d_h),
        out_w=draw(2 * d_h, d_p),
        out_b=draw(d_p),
    )


@dataclass
class AdamState:
    m: ModelParams
    v: ModelParams
    step: int = 0

    @classmethod
    def for_params(cls, params: ModelParams) -> "AdamState":
        return cls(m=params.zeros_like(), v=params.zeros_like())


def adam_step(params: ModelParams, grads: ModelParams, state: AdamState,
              config: TrainConfig) -> None:
    """Bias-corrected Adam update, in place.

    Raises NumericError (before touching the parameters) if any gradient is
    non-finite.  Embeddings are skipped when configured as frozen.
    """
    for name, g in grads.tensors().items():
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient in {name}; aborting update step")
    state.step += 1
    b1, b2 = config.beta1, config.beta2
    correction1 = 1.0 - b1**state.step
    correction2 = 1.0 - b2**state.step
    for name, tensor in params.tensors().items():
        if name == "emb" and not config.train_embeddings:
            continue
        g = getattr(grads, name)
        m = getattr(state.m, name)
        v = getattr(state.v, name)
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        tensor -= config.learning_rate * m_hat / (np.sqrt(v_hat) + config.eps)


def metrics_from_confusion(confusion: np.ndarray) -> EvalReport:
    """Accuracy plus unweighted per-class precision/recall/F1 means.

    Any zero denominator (no predictions, no gold, or both) resolves to 0.
    """
    confusion = np.asarray(confusion, dtype=np.float64)
    k = confusion.shape[0]
    if confusion.shape != (k, k):
        raise DataError("confusion matrix must be square")
    total = confusion.sum()
    if total <= 0:
        raise DataError("empty confusion matrix")
    correct = np.trace(confusion)
    precision = np.zeros(k)
    recall = np.zeros(k)
    f1 = np.zeros(k)
    for c in range(k):
        tp = confusion[c, c]
        predicted = confusion[:, c].sum()
        actual = confusion[c, :].sum()
        precision[c] = tp / predicted if predicted > 0 else 0.0
        recall[c] = tp / actual if actual > 0 else 0.0
        if precision[c] + recall[c] > 0:
            f1[c] = 2.0 * precision[c] * recall[c] / (precision[c] + recall[c])
    return EvalReport(
        accuracy=float(correct / total),
        macro_f1=float(f1.mean()),
        precision=precision,
        recall=recall,
        f1=f1,
        confusion=confusion,
    )


def predict(params: ModelParams, hyper: HyperParams, examples: list[Example],
            batch_size: int = 64) -> np.ndarray:
    """Class distributions for every example, in input order."""
    ys = np.zeros((len(examples), hyper.d_p), dtype=np.float64)
    for start in range(0, len(examples), batch_size):
        chunk = examples[start : start + batch_size]
        batch = collate(chunk)
        trace = forward(params, hyper, batch.token_ids, batch.prox, batch.mask)
        ys[start : start + len(chunk)] = trace.y
    return ys


def evaluate(params: ModelParams, hyper: HyperParams, examples: list[Example],
             batch_size: int = 64) -> EvalReport:
    if not examples:
        raise DataError("cannot evaluate on an empty set")
    ys = predict(params, hyper, examples, batch_size)
    preds = ys.argmax(axis=1)
    confusion = np.zeros((hyper.d_p, hyper.d_p), dtype=np.float64)
    for ex, pred in zip(examples, preds):
        confusion[ex.label, pred] += 1.0
    return metrics_from_confusion(confusion)


@dataclass
class EpochLog:
    epoch: int
    train_loss: float
    test_accuracy: float
    test_macro_f1: float

    def tsv(self) -> str:
        return f"{self.epoch}\t{self.train_loss:.6f}\t{self.test_accuracy:.6f}\t{self.test_macro_f1:.6f}"


@dataclass
class TrainResult:
    best_params: ModelParams
    best_epoch: int
    best_report: EvalReport
    log: list[EpochLog] = field(default_factory=list)


def train(config: TrainConfig, params: ModelParams, train_examples: list[Example],
          test_examples: list[Example], on_epoch=None) -> TrainResult:
    """Run the epoch loop; retain the checkpoint with best test accuracy.

    The epoch shuffle seed is config.seed + epoch so runs are reproducible
    while epochs differ.  Per-epoch rows record summed train loss and test
    metrics.  ``on_epoch`` (if given) receives each EpochLog as it is made.
    """
    hyper = config.hyper()
    state = AdamState.for_params(params)
    best: TrainResult | None = None
    log: list[EpochLog] = []

    for epoch in range(1, config.epochs + 1):
        epoch_loss = 0.0
        for batch in make_batches(train_examples, config.batch_size, config.seed + epoch):
            trace = forward(params, hyper, batch.token_ids, batch.prox, batch.mask)
            epoch_loss += batch_loss(trace, batch.labels, params, config.l2,
                                     config.train_embeddings)
            grads = backward(trace, batch.labels, params, hyper, config.l2,
                             config.train_embeddings)
            adam_step(params, grads, state, config)

        report = evaluate(params, hyper, test_examples, config.batch_size)
        row = EpochLog(epoch, epoch_loss, report.accuracy, report.macro_f1)
        log.append(row)
        if on_epoch is not None:
            on_epoch(row)
        if best is None or report.accuracy > best.best_report.accuracy:
            best = TrainResult(params.copy(), epoch, report)
        logger.info("epoch %d: loss=%.4f acc=%.4f macro_f1=%.4f",
                    epoch, epoch_loss, report.accuracy, report.macro_f1)

    assert best is not None, "epochs must be >= 1"
    best.log = log
    return best


def replace_config(config: TrainConfig, **kwargs) -> TrainConfig:
    return replace(config, **kwargs)
