"""The proximity-weighted convolution network, with analytic gradients.

Pipeline per sentence: embedding lookup -> bidirectional LSTM -> scale each
hidden state by its proximity weight -> zero-padded 1-D convolution with
ReLU -> per-channel max-pool -> linear + softmax.  Training loss is summed
cross entropy plus an L2 penalty on the trainable parameters.

Everything operates on padded batches (leading batch dimension); the
single-sentence operations below wrap the batched core with batch size 1.
Gradients are derived by hand for this fixed architecture; there is no
generic autodiff.  The LSTM recurrences are masked so that padded positions
pass state through unchanged, which makes predictions invariant to padding.
"""

from __future__ import annotations

import io
import json
import logging
import struct
from dataclasses import dataclass, fields

import numpy as np

from .errors import FormatError, NumericError, ShapeError

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"PWCN1"

# Probability floor applied before taking log in the loss.
PROB_FLOOR = 1e-12

# Gate packing order inside the stacked LSTM weight columns.
GATES = ("input", "forget", "cell", "output")


@dataclass(frozen=True)
class HyperParams:
    """Architecture sizes: embedding, per-direction hidden, classes, kernel."""

    d_e: int
    d_h: int
    d_p: int = 3
    kernel: int = 3

    def __post_init__(self):
        if min(self.d_e, self.d_h, self.d_p) < 1:
            raise ShapeError("all dimensions must be >= 1")
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise ShapeError(f"kernel length must be odd and >= 1, got {self.kernel}")


@dataclass
class ModelParams:
    """All trainable tensors.  Field order is the checkpoint wire order.

    LSTM weights are stacked per direction with gate columns packed in
    GATES order: wx is (d_e, 4*d_h), wh is (d_h, 4*d_h), b is (4*d_h,).
    """

    emb: np.ndarray
    fw_wx: np.ndarray
    fw_wh: np.ndarray
    fw_b: np.ndarray
    bw_wx: np.ndarray
    bw_wh: np.ndarray
    bw_b: np.ndarray
    conv_w: np.ndarray
    conv_b: np.ndarray
    out_w: np.ndarray
    out_b: np.ndarray

    def field_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in fields(self))

    def tensors(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in self.field_names()}

    def copy(self) -> "ModelParams":
        return ModelParams(**{k: v.copy() for k, v in self.tensors().items()})

    def zeros_like(self) -> "ModelParams":
        return ModelParams(**{k: np.zeros_like(v) for k, v in self.tensors().items()})

    def validate(self, hyper: HyperParams, vocab_size: int):
        d_e, d_h, d_p, l = hyper.d_e, hyper.d_h, hyper.d_p, hyper.kernel
        expected = {
            "emb": (vocab_size, d_e),
            "fw_wx": (d_e, 4 * d_h),
            "fw_wh": (d_h, 4 * d_h),
            "fw_b": (4 * d_h,),
            "bw_wx": (d_e, 4 * d_h),
            "bw_wh": (d_h, 4 * d_h),
            "bw_b": (4 * d_h,),
            "conv_w": (l * 2 * d_h, 2 * d_h),
            "conv_b": (2 * d_h,),
            "out_w": (2 * d_h, d_p),
            "out_b": (d_p,),
        }
        for name, shape in expected.items():
            actual = getattr(self, name).shape
            if actual != shape:
                raise ShapeError(f"{name} has shape {actual}, expected {shape}")
            if not np.all(np.isfinite(getattr(self, name))):
                raise NumericError(f"{name} contains non-finite values")


# Gradients mirror ModelParams field for field.
Gradients = ModelParams


@dataclass
class DirectionTrace:
    """Retained activations of one LSTM direction (post-masking states)."""

    gates: np.ndarray   # (B, T, 4*d_h): sigmoid/tanh outputs, GATES order
    c_raw: np.ndarray   # (B, T, d_h): candidate cell state before masking
    c: np.ndarray       # (B, T, d_h)
    h: np.ndarray       # (B, T, d_h)
    reverse: bool


@dataclass
class ForwardTrace:
    """Everything the backward pass needs, for one padded batch."""

    token_ids: np.ndarray   # (B, T) int
    mask: np.ndarray        # (B, T) 1.0 for real tokens, 0.0 for padding
    prox: np.ndarray        # (B, T)
    x: np.ndarray           # (B, T, d_e)
    fw: DirectionTrace
    bw: DirectionTrace
    h: np.ndarray           # (B, T, 2*d_h)
    r: np.ndarray           # (B, T, 2*d_h)
    q: np.ndarray           # (B, T, 2*d_h), post-ReLU
    pool_argmax: np.ndarray  # (B, 2*d_h) int
    q_s: np.ndarray         # (B, 2*d_h)
    logits: np.ndarray      # (B, d_p)
    y: np.ndarray           # (B, d_p)


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _lstm_direction(x, mask, wx, wh, b, reverse: bool) -> DirectionTrace:
    B, T, _ = x.shape
    d_h = wh.shape[0]
    gates = np.zeros((B, T, 4 * d_h), dtype=x.dtype)
    c_raw = np.zeros((B, T, d_h), dtype=x.dtype)
    c_states = np.zeros((B, T, d_h), dtype=x.dtype)
    h_states = np.zeros((B, T, d_h), dtype=x.dtype)

    xw = x @ wx
    h_prev = np.zeros((B, d_h), dtype=x.dtype)
    c_prev = np.zeros((B, d_h), dtype=x.dtype)
    order = range(T - 1, -1, -1) if reverse else range(T)
    for t in order:
        a = xw[:, t] + h_prev @ wh + b
        i = sigmoid(a[:, :d_h])
        f = sigmoid(a[:, d_h : 2 * d_h])
        g = np.tanh(a[:, 2 * d_h : 3 * d_h])
        o = sigmoid(a[:, 3 * d_h :])
        c_new = f * c_prev + i * g
        h_new = o * np.tanh(c_new)
        m = mask[:, t : t + 1]
        c_t = m * c_new + (1.0 - m) * c_prev
        h_t = m * h_new + (1.0 - m) * h_prev
        gates[:, t] = np.concatenate([i, f, g, o], axis=1)
        c_raw[:, t] = c_new
        c_states[:, t] = c_t
        h_states[:, t] = h_t
        h_prev, c_prev = h_t, c_t
    return DirectionTrace(gates=gates, c_raw=c_raw, c=c_states, h=h_states, reverse=reverse)


def _lstm_direction_backward(trace: DirectionTrace, dh_out, x, mask, wx, wh):
    """Backprop through time for one direction; returns (dx, dwx, dwh, db)."""
    B, T, _ = x.shape
    d_h = wx.shape[1] // 4
    dx = np.zeros_like(x)
    dwx = np.zeros_like(wx)
    dwh = np.zeros_like(wh)
    db = np.zeros(4 * d_h, dtype=x.dtype)

    order = list(range(T - 1, -1, -1)) if trace.reverse else list(range(T))
    dh_rec = np.zeros((B, d_h), dtype=x.dtype)
    dc_rec = np.zeros((B, d_h), dtype=x.dtype)
    zeros = np.zeros((B, d_h), dtype=x.dtype)
    for step in range(T - 1, -1, -1):
        t = order[step]
        t_prev = order[step - 1] if step > 0 else None
        h_prev = trace.h[:, t_prev] if t_prev is not None else zeros
        c_prev = trace.c[:, t_prev] if t_prev is not None else zeros

        g_all = trace.gates[:, t]
        i = g_all[:, :d_h]
        f = g_all[:, d_h : 2 * d_h]
        g = g_all[:, 2 * d_h : 3 * d_h]
        o = g_all[:, 3 * d_h :]
        tanh_c = np.tanh(trace.c_raw[:, t])

        m = mask[:, t : t + 1]
        dh_total = dh_out[:, t] + dh_rec
        dh_new = m * dh_total
        dc_new = m * dc_rec + dh_new * o * (1.0 - tanh_c**2)

        do = dh_new * tanh_c
        df = dc_new * c_prev
        di = dc_new * g
        dg = dc_new * i

        da = np.concatenate(
            [di * i * (1.0 - i), df * f * (1.0 - f), dg * (1.0 - g**2), do * o * (1.0 - o)],
            axis=1,
        )
        x_t = x[:, t]
        dwx += x_t.T @ da
        dwh += h_prev.T @ da
        db += da.sum(axis=0)
        dx[:, t] = da @ wx.T
        dh_rec = (1.0 - m) * dh_total + da @ wh.T
        dc_rec = (1.0 - m) * dc_rec + dc_new * f
    return dx, dwx, dwh, db


def _conv_windows(r: np.ndarray, kernel: int) -> np.ndarray:
    """Stack the kernel-wide zero-padded context of every position."""
    B, T, C = r.shape
    half = kernel // 2
    if half == 0:
        return r
    r_pad = np.zeros((B, T + 2 * half, C), dtype=r.dtype)
    r_pad[:, half : half + T] = r
    return np.concatenate([r_pad[:, k : k + T] for k in range(kernel)], axis=2)


def forward(params: ModelParams, hyper: HyperParams, token_ids, prox, mask=None) -> ForwardTrace:
    """Run the full network on a padded batch and retain activations.

    token_ids, prox and mask are (B, T); mask defaults to all-real.  Padded
    positions must carry proximity weight 0 and token id 0; they are
    excluded from the max-pool by forcing their channels to -inf.
    """
    token_ids = np.asarray(token_ids, dtype=np.int64)
    prox = np.asarray(prox, dtype=params.emb.dtype)
    if token_ids.ndim != 2 or prox.shape != token_ids.shape:
        raise ShapeError("token_ids and prox must both be (batch, time)")
    if mask is None:
        mask = np.ones_like(prox)
    mask = np.asarray(mask, dtype=params.emb.dtype)
    if mask.shape != token_ids.shape:
        raise ShapeError("mask shape must match token_ids")
    if token_ids.size and (token_ids.min() < 0 or token_ids.max() >= params.emb.shape[0]):
        raise ShapeError("token id outside the embedding table")

    x = params.emb[token_ids]
    fw = _lstm_direction(x, mask, params.fw_wx, params.fw_wh, params.fw_b, reverse=False)
    bw = _lstm_direction(x, mask, params.bw_wx, params.bw_wh, params.bw_b, reverse=True)
    h = np.concatenate([fw.h, bw.h], axis=2)
    r = prox[:, :, None] * h

    windows = _conv_windows(r, hyper.kernel)
    q = np.maximum(windows @ params.conv_w + params.conv_b, 0.0)

    q_masked = np.where(mask[:, :, None] > 0, q, -np.inf)
    pool_argmax = np.argmax(q_masked, axis=1)
    q_s = np.take_along_axis(q, pool_argmax[:, None, :], axis=1)[:, 0, :]

    logits = q_s @ params.out_w + params.out_b
    if not np.all(np.isfinite(logits)):
        raise NumericError("non-finite classifier logits")
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    y = exp / exp.sum(axis=1, keepdims=True)

    return ForwardTrace(
        token_ids=token_ids, mask=mask, prox=prox, x=x, fw=fw, bw=bw,
        h=h, r=r, q=q, pool_argmax=pool_argmax, q_s=q_s, logits=logits, y=y,
    )


def param_sum_squares(params: ModelParams, include_embeddings: bool = True) -> float:
    total = 0.0
    for name, tensor in params.tensors().items():
        if name == "emb" and not include_embeddings:
            continue
        total += float(np.sum(tensor * tensor))
    return total


def batch_loss(trace: ForwardTrace, labels, params: ModelParams, l2: float,
               include_embeddings: bool = True) -> float:
    """Summed cross entropy over the batch plus one L2 term."""
    labels = np.asarray(labels, dtype=np.int64)
    picked = trace.y[np.arange(len(labels)), labels]
    if np.any(picked < PROB_FLOOR):
        logger.warning("clamped %d gold-class probabilities below %.0e",
                       int(np.sum(picked < PROB_FLOOR)), PROB_FLOOR)
        picked = np.maximum(picked, PROB_FLOOR)
    ce = -float(np.sum(np.log(picked)))
    return ce + l2 * param_sum_squares(params, include_embeddings)


def backward(trace: ForwardTrace, labels, params: ModelParams, hyper: HyperParams,
             l2: float = 0.0, train_embeddings: bool = True) -> Gradients:
    """Exact gradients of batch_loss with respect to every parameter.

    Max-pool routes gradient only to the argmax position per channel (ties
    resolved to the smallest index by the forward pass); ReLU passes
    gradient only where its output is positive; proximity weights enter as
    constants.  The L2 term contributes 2*l2*theta once per call.
    """
    labels = np.asarray(labels, dtype=np.int64)
    B, T, _ = trace.x.shape
    d_h = hyper.d_h
    grads = params.zeros_like()

    dlogits = trace.y.copy()
    dlogits[np.arange(B), labels] -= 1.0

    grads.out_w[:] = trace.q_s.T @ dlogits
    grads.out_b[:] = dlogits.sum(axis=0)
    dq_s = dlogits @ params.out_w.T

    dq = np.zeros_like(trace.q)
    b_idx = np.arange(B)[:, None]
    c_idx = np.arange(trace.q.shape[2])[None, :]
    dq[b_idx, trace.pool_argmax, c_idx] = dq_s

    dq_pre = dq * (trace.q > 0)

    windows = _conv_windows(trace.r, hyper.kernel)
    C = 2 * d_h
    grads.conv_w[:] = windows.reshape(-1, windows.shape[2]).T @ dq_pre.reshape(-1, C)
    grads.conv_b[:] = dq_pre.sum(axis=(0, 1))
    dwin = dq_pre @ params.conv_w.T
    half = hyper.kernel // 2
    dr_pad = np.zeros((B, T + 2 * half, C), dtype=trace.r.dtype)
    for k in range(hyper.kernel):
        dr_pad[:, k : k + T] += dwin[:, :, k * C : (k + 1) * C]
    dr = dr_pad[:, half : half + T]

    dh = trace.prox[:, :, None] * dr

    dx_f, dwx_f, dwh_f, db_f = _lstm_direction_backward(
        trace.fw, dh[:, :, :d_h], trace.x, trace.mask, params.fw_wx, params.fw_wh)
    dx_b, dwx_b, dwh_b, db_b = _lstm_direction_backward(
        trace.bw, dh[:, :, d_h:], trace.x, trace.mask, params.bw_wx, params.bw_wh)
    grads.fw_wx[:], grads.fw_wh[:], grads.fw_b[:] = dwx_f, dwh_f, db_f
    grads.bw_wx[:], grads.bw_wh[:], grads.bw_b[:] = dwx_b, dwh_b, db_b

    dx = dx_f + dx_b
    np.add.at(grads.emb, trace.token_ids, dx)
    grads.emb[0] = 0.0  # padding row stays frozen

    if l2 > 0.0:
        for name, tensor in params.tensors().items():
            if name == "emb":
                if train_embeddings:
                    g = grads.emb
                    g += 2.0 * l2 * tensor
                    g[0] = 0.0
                continue
            getattr(grads, name)[:] += 2.0 * l2 * tensor
    if not train_embeddings:
        grads.emb[:] = 0.0
    return grads


# ---------------------------------------------------------------------------
# Single-sentence operation surface (thin wrappers over the batched core).
# ---------------------------------------------------------------------------

def bilstm_forward(embeddings: np.ndarray, params: ModelParams) -> np.ndarray:
    """Encode an (n, d_e) sentence into (n, 2*d_h) hidden states."""
    if embeddings.ndim != 2:
        raise ShapeError("embeddings must be (n, d_e)")
    x = embeddings[None]
    mask = np.ones((1, x.shape[1]), dtype=x.dtype)
    fw = _lstm_direction(x, mask, params.fw_wx, params.fw_wh, params.fw_b, reverse=False)
    bw = _lstm_direction(x, mask, params.bw_wx, params.bw_wh, params.bw_b, reverse=True)
    return np.concatenate([fw.h, bw.h], axis=2)[0]


def apply_proximity(h: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Scale each hidden state by its scalar proximity weight."""
    p = np.asarray(p, dtype=h.dtype)
    if p.shape != (h.shape[0],):
        raise ShapeError(f"proximity vector has shape {p.shape}, expected ({h.shape[0]},)")
    return p[:, None] * h


def pwconv_forward(r: np.ndarray, conv_w: np.ndarray, conv_b: np.ndarray, kernel: int) -> np.ndarray:
    """Zero-padded 1-D convolution with ReLU; output length equals input."""
    if kernel < 1 or kernel % 2 == 0:
        raise ShapeError(f"kernel length must be odd, got {kernel}")
    C = r.shape[1]
    if conv_w.shape != (kernel * C, C) or conv_b.shape != (C,):
        raise ShapeError(
            f"convolution weights {conv_w.shape}/{conv_b.shape} do not match "
            f"kernel {kernel} and channels {C}"
        )
    windows = _conv_windows(r[None], kernel)
    return np.maximum(windows @ conv_w + conv_b, 0.0)[0]


def max_pool(q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-channel max over positions; also returns the argmax indices.

    Ties resolve to the smallest position index.
    """
    if q.ndim != 2 or q.shape[0] < 1:
        raise ShapeError("max_pool expects a non-empty (n, channels) array")
    idx = np.argmax(q, axis=0)
    return q[idx, np.arange(q.shape[1])], idx


def classify(q_s: np.ndarray, out_w: np.ndarray, out_b: np.ndarray) -> np.ndarray:
    """Softmax distribution over polarity classes, max-shifted for stability."""
    logits = q_s @ out_w + out_b
    if not np.all(np.isfinite(logits)):
        raise NumericError("non-finite classifier logits")
    shifted = logits - logits.max()
    exp = np.exp(shifted)
    return exp / exp.sum()


def loss(y: np.ndarray, label: int, params: ModelParams, l2: float,
         include_embeddings: bool = True) -> float:
    """Per-example cross entropy plus the L2 penalty."""
    picked = float(y[label])
    if picked < PROB_FLOOR:
        logger.warning("clamped gold-class probability %.3e below %.0e", picked, PROB_FLOOR)
        picked = PROB_FLOOR
    return -float(np.log(picked)) + l2 * param_sum_squares(params, include_embeddings)


# ---------------------------------------------------------------------------
# Checkpoint serialization.
# ---------------------------------------------------------------------------

def save_checkpoint(path, params: ModelParams, metadata: dict):
    """Write magic, length-prefixed JSON metadata, then each tensor.

    Tensors appear in ModelParams field order as a shape header (uint32
    ndim, then uint32 dims) followed by row-major little-endian float32.
    """
    meta_bytes = json.dumps(metadata, sort_keys=True).encode("utf-8")
    buf = io.BytesIO()
    buf.write(CHECKPOINT_MAGIC)
    buf.write(struct.pack("<I", len(meta_bytes)))
    buf.write(meta_bytes)
    for name in params.field_names():
        tensor = np.ascontiguousarray(getattr(params, name), dtype="<f4")
        buf.write(struct.pack("<I", tensor.ndim))
        buf.write(struct.pack(f"<{tensor.ndim}I", *tensor.shape))
        buf.write(tensor.tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_checkpoint(path) -> tuple[ModelParams, dict]:
    """Read a checkpoint back; tensors are widened to float64."""
    with open(path, "rb") as fh:
        data = fh.read()
    view = memoryview(data)
    if data[: len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise FormatError(f"{path}: not a model checkpoint (bad magic)")
    offset = len(CHECKPOINT_MAGIC)

    def take(count: int) -> memoryview:
        nonlocal offset
        if offset + count > len(data):
            raise FormatError(f"{path}: truncated checkpoint")
        chunk = view[offset : offset + count]
        offset += count
        return chunk

    (meta_len,) = struct.unpack("<I", take(4))
    try:
        metadata = json.loads(bytes(take(meta_len)).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: unreadable metadata block") from exc

    tensors = {}
    for name in [f.name for f in fields(ModelParams)]:
        (ndim,) = struct.unpack("<I", take(4))
        if ndim > 8:
            raise FormatError(f"{path}: implausible tensor rank {ndim}")
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim))
        count = int(np.prod(shape)) if shape else 1
        raw = take(4 * count)
        tensors[name] = (
            np.frombuffer(raw, dtype="<f4").reshape(shape).astype(np.float64)
        )
    if offset != len(data):
        raise FormatError(f"{path}: trailing bytes after last tensor")
    return ModelParams(**tensors), metadata
