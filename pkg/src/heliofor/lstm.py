"""Stacked LSTM regressor with backpropagation through time.

Gate blocks inside every weight matrix are ordered input, forget, output,
candidate, and each gate sees the concatenation ``[h_{t-1}, x_t]`` (recurrent
columns first). Sequences are processed in independent chunks that start
from zero state, both in training (truncated BPTT) and in prediction.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .narx import DivergedError

log = logging.getLogger(__name__)

HEADS = ("linear", "sigmoid")


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


@dataclass(frozen=True, eq=False)
class LstmCellParams:
    weights: np.ndarray  # (4H, H + I)
    bias: np.ndarray  # (4H,)

    def __post_init__(self):
        W = np.ascontiguousarray(self.weights, dtype=np.float64)
        b = np.ascontiguousarray(self.bias, dtype=np.float64)
        if W.ndim != 2 or W.shape[0] % 4 or W.shape[1] <= W.shape[0] // 4 or b.shape != (W.shape[0],):
            raise ValueError("LSTM weights must be (4H, H+I) with a (4H,) bias")
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "bias", b)

    @property
    def hidden_size(self):
        return self.weights.shape[0] // 4

    @property
    def input_size(self):
        return self.weights.shape[1] - self.hidden_size

    def _block(self, k):
        H = self.hidden_size
        return self.weights[k * H:(k + 1) * H], self.bias[k * H:(k + 1) * H]

    w_i = property(lambda self: self._block(0)[0])
    w_f = property(lambda self: self._block(1)[0])
    w_o = property(lambda self: self._block(2)[0])
    w_g = property(lambda self: self._block(3)[0])
    b_i = property(lambda self: self._block(0)[1])
    b_f = property(lambda self: self._block(1)[1])
    b_o = property(lambda self: self._block(2)[1])
    b_g = property(lambda self: self._block(3)[1])

    def split(self):
        H = self.hidden_size
        return np.ascontiguousarray(self.weights[:, :H]), np.ascontiguousarray(self.weights[:, H:])


@dataclass(frozen=True, eq=False)
class LstmStack:
    layers: tuple
    head_weights: np.ndarray
    head_bias: float
    seed: int = 0
    head: str = "linear"
    loss_trace: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "head_weights", np.ascontiguousarray(self.head_weights, dtype=np.float64))
        object.__setattr__(self, "head_bias", float(self.head_bias))
        if self.head not in HEADS:
            raise ValueError(f"head must be one of {HEADS}")
        for below, above in zip(self.layers, self.layers[1:]):
            if above.input_size != below.hidden_size:
                raise ValueError("layer input size must equal the previous hidden size")
        if self.head_weights.shape != (self.layers[-1].hidden_size,):
            raise ValueError("head weights must match the top hidden size")

    @property
    def input_size(self):
        return self.layers[0].input_size

    def params(self):
        """Flat list of parameter arrays in a fixed order."""
        out = []
        for layer in self.layers:
            out += [layer.weights, layer.bias]
        return out + [self.head_weights, np.array([self.head_bias])]

    def with_params(self, arrays):
        arrays = list(arrays)
        layers = tuple(LstmCellParams(arrays[2 * k], arrays[2 * k + 1]) for k in range(len(self.layers)))
        return replace(self, layers=layers, head_weights=arrays[-2], head_bias=float(np.asarray(arrays[-1]).reshape(-1)[0]))

    def equals(self, other):
        return (
            self.head == other.head
            and len(self.layers) == len(other.layers)
            and all(np.array_equal(a, b) for a, b in zip(self.params(), other.params()))
        )


@dataclass
class LstmState:
    h: list
    c: list

    @classmethod
    def zeros(cls, stack, batch=None):
        shape = (lambda H: (H,)) if batch is None else (lambda H: (batch, H))
        return cls([np.zeros(shape(l.hidden_size)) for l in stack.layers],
                   [np.zeros(shape(l.hidden_size)) for l in stack.layers])


@dataclass(frozen=True)
class LstmConfig:
    hidden_size: int = 16
    n_layers: int = 3
    epochs: int = 20
    learning_rate: float = 0.1
    momentum: float = 0.9
    batch_size: int = 2
    seq_len: int = 64
    clip_norm: float = 1.0
    head: str = "linear"
    seed: int = 0
    lr_final_fraction: float = 0.1  # geometric step-size decay down to this fraction

    def lr_at(self, epoch):
        if self.epochs <= 1:
            return self.learning_rate
        return self.learning_rate * self.lr_final_fraction ** (epoch / (self.epochs - 1))

    def __post_init__(self):
        if self.hidden_size < 1 or self.n_layers < 1 or self.batch_size < 1 or self.seq_len < 1:
            raise ValueError("sizes must be >= 1")
        if self.epochs < 0 or self.learning_rate <= 0 or not 0 <= self.momentum < 1:
            raise ValueError("invalid optimiser settings")
        if self.head not in HEADS:
            raise ValueError(f"head must be one of {HEADS}")
        if not 0 < self.lr_final_fraction <= 1:
            raise ValueError("lr_final_fraction must lie in (0, 1]")


def init_stack(input_size, hidden_sizes=(16, 16, 16), seed=0, head="linear", forget_bias=1.0) -> LstmStack:
    """Weights uniform in +-1/sqrt(fan_in), forget-gate bias ``forget_bias``, other biases 0."""
    rng = np.random.default_rng(seed)
    layers = []
    n_in = input_size
    for H in hidden_sizes:
        fan_in = H + n_in
        W = rng.uniform(-1.0, 1.0, size=(4 * H, fan_in)) / np.sqrt(fan_in)
        b = np.zeros(4 * H)
        b[H:2 * H] = forget_bias
        layers.append(LstmCellParams(W, b))
        n_in = H
    hw = rng.uniform(-1.0, 1.0, size=n_in) / np.sqrt(n_in)
    return LstmStack(tuple(layers), hw, 0.0, seed, head)


def cell_step(params: LstmCellParams, x, h_prev, c_prev):
    """Single time step of one cell; returns ``(h, c)``."""
    x = np.asarray(x, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    c_prev = np.asarray(c_prev, dtype=np.float64)
    H = params.hidden_size
    if x.shape[-1] != params.input_size or h_prev.shape[-1] != H or c_prev.shape[-1] != H:
        raise ValueError("cell input/state shapes do not match the parameters")
    z = params.weights @ np.concatenate([h_prev, x]) + params.bias
    i = _sigmoid(z[:H])
    f = _sigmoid(z[H:2 * H])
    o = _sigmoid(z[2 * H:3 * H])
    g = np.tanh(z[3 * H:])
    c = f * c_prev + i * g
    return o * np.tanh(c), c


def cell_gates(params: LstmCellParams, x, h_prev):
    """Gate activations ``(i, f, o, g)`` for inspection."""
    H = params.hidden_size
    z = params.weights @ np.concatenate([np.asarray(h_prev, float), np.asarray(x, float)]) + params.bias
    return _sigmoid(z[:H]), _sigmoid(z[H:2 * H]), _sigmoid(z[2 * H:3 * H]), np.tanh(z[3 * H:])


def _head(stack, top):
    a = top @ stack.head_weights + stack.head_bias
    return _sigmoid(a) if stack.head == "sigmoid" else a


def _forward(stack, X):
    caches = []
    inp = np.ascontiguousarray(X, dtype=np.float64)
    for layer in stack.layers:
        Wh, Wx = layer.split()
        Hs, Cs, Gs = kernels.lstm_layer_forward(inp, Wh, Wx, layer.bias)
        caches.append((inp, Wh, Wx, Hs, Cs, Gs))
        inp = Hs
    return _head(stack, inp), caches


def forward_batch(stack: LstmStack, X) -> np.ndarray:
    """Predictions for a ``(T, B, I)`` batch of sequences, each from zero state."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 3 or X.shape[2] != stack.input_size:
        raise ValueError(f"expected (T, B, {stack.input_size}) input")
    return _forward(stack, X)[0]


def forward_sequence(stack: LstmStack, xs):
    """Run one sequence from zero state; returns ``(predictions, final_state)``."""
    X = np.asarray(xs, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("need a non-empty sequence of input vectors")
    if X.shape[1] != stack.input_size:
        raise ValueError(f"inputs must have {stack.input_size} features")
    preds, caches = _forward(stack, X[:, None, :])
    state = LstmState([c[3][-1, 0].copy() for c in caches], [c[4][-1, 0].copy() for c in caches])
    return preds[:, 0], state


def _backward(stack, caches, preds, d_pred):
    if stack.head == "sigmoid":
        d_a = d_pred * preds * (1.0 - preds)
    else:
        d_a = d_pred
    top = caches[-1][3]
    g_hw = np.tensordot(d_a, top, axes=([0, 1], [0, 1]))
    g_hb = float(d_a.sum())
    dH = d_a[:, :, None] * stack.head_weights[None, None, :]
    layer_grads = []
    top_total = None
    for k in range(len(stack.layers) - 1, -1, -1):
        inp, Wh, Wx, Hs, Cs, Gs = caches[k]
        dX, dWh, dWx, db, dH_total = kernels.lstm_layer_backward(inp, Wh, Wx, Hs, Cs, Gs, np.ascontiguousarray(dH))
        if top_total is None:
            top_total = dH_total
        layer_grads.append((np.hstack([dWh, dWx]), db))
        dH = dX
    layer_grads.reverse()
    grads = []
    for dW, db in layer_grads:
        grads += [dW, db]
    return grads + [g_hw, np.array([g_hb])], top_total


def loss_and_gradients(stack: LstmStack, X, Y):
    """MSE over all steps of a ``(T, B, I)`` batch and its gradient list."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    preds, caches = _forward(stack, X)
    err = preds - Y
    n = err.size
    grads, _ = _backward(stack, caches, preds, 2.0 * err / n)
    return float(np.mean(err * err)), grads


@dataclass(frozen=True)
class StackGradients:
    layers: tuple  # ((dW, db), ...)
    head_weights: np.ndarray
    head_bias: float

    def flat(self):
        out = []
        for dW, db in self.layers:
            out += [dW, db]
        return out + [self.head_weights, np.array([self.head_bias])]


def bptt(stack: LstmStack, xs, targets) -> StackGradients:
    """Gradient of the sequence MSE with respect to every parameter block.

    ``xs`` is ``(T, I)`` for one sequence or ``(T, B, I)`` for a batch.
    """
    X = np.asarray(xs, dtype=np.float64)
    Y = np.asarray(targets, dtype=np.float64)
    if X.ndim == 2:
        X, Y = X[:, None, :], Y.reshape(-1, 1)
    if X.shape[:2] != Y.shape:
        raise ValueError("need one target per input step")
    if X.shape[2] != stack.input_size:
        raise ValueError(f"inputs must have {stack.input_size} features")
    _, g = loss_and_gradients(stack, X, Y)
    n_layers = len(stack.layers)
    return StackGradients(tuple((g[2 * k], g[2 * k + 1]) for k in range(n_layers)), g[-2], float(g[-1][0]))


def gradient_norm_probe(stack: LstmStack, xs, targets) -> np.ndarray:
    """Norm of d(final-step squared error)/d(h_t) for the top layer, per t."""
    X = np.asarray(xs, dtype=np.float64)
    Y = np.asarray(targets, dtype=np.float64).reshape(-1)
    if X.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise ValueError("need one target per input step")
    preds, caches = _forward(stack, X[:, None, :])
    d_pred = np.zeros_like(preds)
    d_pred[-1, 0] = 2.0 * (preds[-1, 0] - Y[-1])
    _, top_total = _backward(stack, caches, preds, d_pred)
    return np.linalg.norm(top_total[:, 0, :], axis=1)


# ---------------------------------------------------------------------------
# plain sigmoid recurrence used as the vanishing-gradient reference
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SigmoidRnn:
    """``h_t = sigmoid(W h_{t-1} + U x_t + b)``, prediction ``v . h_t + c``."""

    W: np.ndarray
    U: np.ndarray
    b: np.ndarray
    v: np.ndarray
    c: float = 0.0


def sigmoid_rnn(input_size, hidden_size, spectral_radius=0.3, seed=0) -> SigmoidRnn:
    rng = np.random.default_rng(seed)
    W = rng.normal(size=(hidden_size, hidden_size))
    W *= spectral_radius / np.max(np.abs(np.linalg.eigvals(W)))
    U = rng.uniform(-1, 1, size=(hidden_size, input_size)) / np.sqrt(input_size)
    v = rng.uniform(-1, 1, size=hidden_size) / np.sqrt(hidden_size)
    return SigmoidRnn(W, U, np.zeros(hidden_size), v)


def sigmoid_rnn_probe(rnn: SigmoidRnn, xs, targets) -> np.ndarray:
    """Same quantity as :func:`gradient_norm_probe` for the sigmoid recurrence."""
    X = np.asarray(xs, dtype=np.float64)
    Y = np.asarray(targets, dtype=np.float64).reshape(-1)
    T = X.shape[0]
    hs = np.zeros((T, rnn.W.shape[0]))
    h = np.zeros(rnn.W.shape[0])
    for t in range(T):
        h = _sigmoid(rnn.W @ h + rnn.U @ X[t] + rnn.b)
        hs[t] = h
    pred = rnn.v @ hs[-1] + rnn.c
    dh = 2.0 * (pred - Y[-1]) * rnn.v
    norms = np.zeros(T)
    for t in range(T - 1, -1, -1):
        norms[t] = np.linalg.norm(dh)
        dh = rnn.W.T @ (dh * hs[t] * (1.0 - hs[t]))
    return norms


# ---------------------------------------------------------------------------
# training and chunked prediction
# ---------------------------------------------------------------------------


def _chunks(segments, seq_len, offset):
    """Cut every segment into full ``seq_len`` chunks starting at ``offset``."""
    xs, ys = [], []
    for X, y in segments:
        start = offset if X.shape[0] - offset >= seq_len else 0
        for s in range(start, X.shape[0] - seq_len + 1, seq_len):
            xs.append(X[s:s + seq_len])
            ys.append(y[s:s + seq_len])
    return xs, ys


def train_lstm(segments, cfg: LstmConfig, input_size=None) -> LstmStack:
    """Momentum SGD with truncated BPTT over ``seq_len`` chunks.

    The step size decays geometrically from ``learning_rate`` in the first
    epoch to ``learning_rate * lr_final_fraction`` in the last.

    ``segments`` is a list of ``(X, y)`` pairs (``X`` of shape ``(n, I)``),
    each a contiguous stretch of time. Chunk alignment is shifted by a seeded
    random offset every epoch and chunks are shuffled into batches. The
    returned stack carries the mean batch loss of every epoch.
    """
    segments = [(np.asarray(X, np.float64), np.asarray(y, np.float64)) for X, y in segments]
    if input_size is None:
        input_size = segments[0][0].shape[1]
    stack = init_stack(input_size, (cfg.hidden_size,) * cfg.n_layers, cfg.seed, cfg.head)
    if cfg.epochs == 0:
        return stack
    if not any(X.shape[0] >= cfg.seq_len for X, _ in segments):
        raise ValueError(f"no segment is as long as seq_len={cfg.seq_len}")
    rng = np.random.default_rng(cfg.seed + 1)
    params = [p.copy() for p in stack.params()]
    velocity = [np.zeros_like(p) for p in params]
    trace = []
    for epoch in range(cfg.epochs):
        offset = int(rng.integers(cfg.seq_len))
        xs, ys = _chunks(segments, cfg.seq_len, offset)
        order = rng.permutation(len(xs))
        lr = cfg.lr_at(epoch)
        losses = []
        for s in range(0, len(order), cfg.batch_size):
            idx = order[s:s + cfg.batch_size]
            Xb = np.stack([xs[i] for i in idx], axis=1)
            Yb = np.stack([ys[i] for i in idx], axis=1)
            loss, grads = loss_and_gradients(stack.with_params(params), Xb, Yb)
            if not np.isfinite(loss):
                raise DivergedError(epoch)
            losses.append(loss)
            if cfg.clip_norm > 0:
                norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads))
                if norm > cfg.clip_norm:
                    grads = [g * (cfg.clip_norm / norm) for g in grads]
            for p, v, g in zip(params, velocity, grads):
                v *= cfg.momentum
                v -= lr * g
                p += v
        mean_loss = float(np.mean(losses))
        if not np.isfinite(mean_loss):
            raise DivergedError(epoch)
        trace.append(mean_loss)
        log.debug("lstm epoch %d loss %.6g", epoch, mean_loss)
    return replace(stack.with_params(params), loss_trace=tuple(trace))


def predict_series(stack: LstmStack, X, seq_len: int, context=None) -> np.ndarray:
    """Predict a long sequence with zero-state windows of ``seq_len`` steps.

    Consecutive windows overlap by ``context`` steps (default ``seq_len // 2``)
    and the outputs of the overlapping steps are discarded, so apart from the
    very first window every reported step has at least ``context`` steps of
    history. A zero-state first step is the weakest output of a trained
    stack, which is why windows are not simply laid end to end.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if n == 0:
        return np.zeros(0)
    context = seq_len // 2 if context is None else int(context)
    if not 0 <= context < seq_len:
        raise ValueError("context must lie in [0, seq_len)")
    if n <= seq_len:
        return forward_batch(stack, X[:, None, :])[:, 0]
    stride = seq_len - context
    starts = np.arange(0, n - seq_len + 1, stride)
    idx = starts[:, None] + np.arange(seq_len)
    windows = forward_batch(stack, X[idx].transpose(1, 0, 2)).T
    out = np.empty(n)
    out[:seq_len] = windows[0]
    for j in range(1, len(starts)):
        out[starts[j] + context:starts[j] + seq_len] = windows[j, context:]
    covered = starts[-1] + seq_len
    if covered < n:
        last = forward_batch(stack, X[n - seq_len:, None, :])[:, 0]
        out[covered:] = last[covered - (n - seq_len):]
    return out


def to_dict(stack: LstmStack):
    from .serialize import encode_array

    return {
        "layers": [{"weights": encode_array(l.weights), "bias": encode_array(l.bias)} for l in stack.layers],
        "head_weights": encode_array(stack.head_weights),
        "head_bias": stack.head_bias,
        "seed": stack.seed,
        "head": stack.head,
        "loss_trace": list(stack.loss_trace),
    }


def from_dict(d) -> LstmStack:
    from .serialize import decode_array

    return LstmStack(
        tuple(LstmCellParams(decode_array(l["weights"]), decode_array(l["bias"])) for l in d["layers"]),
        decode_array(d["head_weights"]),
        float(d["head_bias"]),
        int(d["seed"]),
        d["head"],
        tuple(d.get("loss_trace", ())),
    )
