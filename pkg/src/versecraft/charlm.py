"""Character-level LSTM language model, from scratch on numpy.

Everything runs in float64 so the analytic backpropagation-through-time
gradients can be checked against central finite differences to tight
tolerances. Gate layout inside each fused weight matrix is [input, forget,
cell, output]; per layer and step:

    a = x W_x + h_prev W_h + b
    i, f, o = sigmoid(a_i), sigmoid(a_f), sigmoid(a_o);  g = tanh(a_g)
    c = f * c_prev + i * g;  h = o * tanh(c)

The model file is a self-describing container: a little-endian uint32
header length, a JSON header (shapes, vocabulary, array order), then the
raw float64 little-endian payload.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Corpus

LM_FORMAT = "versecraft-lm"
LM_VERSION = 1

END_CHAR = "\x03"  # poem-end marker
UNK_CHAR = "\x1a"  # stand-in for characters outside the vocabulary


class LmError(Exception):
    pass


class TrainingDiverged(LmError):
    def __init__(self, step: int):
        super().__init__(f"loss became non-finite at step {step}")
        self.step = step


class CharVocab:
    """Bijective char <-> dense id mapping with reserved end/unknown marks."""

    def __init__(self, chars: list[str]):
        if len(set(chars)) != len(chars):
            raise LmError("duplicate characters in vocabulary")
        self.chars = list(chars)
        self.ids = {c: i for i, c in enumerate(chars)}

    @classmethod
    def from_text(cls, text: str) -> "CharVocab":
        alphabet = sorted(set(text) | {"\n", END_CHAR, UNK_CHAR})
        return cls(alphabet)

    def __len__(self) -> int:
        return len(self.chars)

    @property
    def end_id(self) -> int:
        return self.ids[END_CHAR]

    @property
    def unk_id(self) -> int:
        return self.ids[UNK_CHAR]

    def encode(self, text: str) -> np.ndarray:
        unk = self.unk_id
        return np.array([self.ids.get(c, unk) for c in text], dtype=np.int64)

    def decode(self, ids) -> str:
        return "".join(self.chars[int(i)] for i in ids)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    ex = np.exp(shifted)
    return ex / ex.sum(axis=-1, keepdims=True)


@dataclass
class LstmParams:
    """All learnable arrays plus the vocabulary they index."""

    vocab: CharVocab
    emb: np.ndarray  # (S, E)
    wx: list[np.ndarray]  # per layer (E or H, 4H)
    wh: list[np.ndarray]  # per layer (H, 4H)
    b: list[np.ndarray]  # per layer (4H,)
    w_out: np.ndarray  # (H, S)
    b_out: np.ndarray  # (S,)

    @property
    def layers(self) -> int:
        return len(self.wx)

    @property
    def hidden(self) -> int:
        return self.wh[0].shape[0]

    @property
    def embed(self) -> int:
        return self.emb.shape[1]

    def named_arrays(self) -> list[tuple[str, np.ndarray]]:
        out = [("emb", self.emb)]
        for l in range(self.layers):
            out += [(f"wx{l}", self.wx[l]), (f"wh{l}", self.wh[l]), (f"b{l}", self.b[l])]
        out += [("w_out", self.w_out), ("b_out", self.b_out)]
        return out

    def check(self) -> None:
        size = len(self.vocab)
        h = self.hidden
        if self.emb.shape[0] != size or self.w_out.shape != (h, size):
            raise LmError("parameter shapes inconsistent with vocabulary")
        in_dim = self.embed
        for l in range(self.layers):
            if self.wx[l].shape != (in_dim, 4 * h) or self.wh[l].shape != (h, 4 * h):
                raise LmError(f"layer {l} weight shapes inconsistent")
            if self.b[l].shape != (4 * h,):
                raise LmError(f"layer {l} bias shape inconsistent")
            in_dim = h
        for name, arr in self.named_arrays():
            if not np.all(np.isfinite(arr)):
                raise LmError(f"non-finite values in {name}")

    @classmethod
    def init(cls, vocab: CharVocab, layers: int, hidden: int, embed: int,
             seed: int = 0) -> "LstmParams":
        """Uniform(-0.08, 0.08) weights; forget-gate bias starts at +1."""
        rng = np.random.default_rng(seed)
        size = len(vocab)

        def u(*shape):
            return rng.uniform(-0.08, 0.08, size=shape)

        wx, wh, b = [], [], []
        in_dim = embed
        for _ in range(layers):
            wx.append(u(in_dim, 4 * hidden))
            wh.append(u(hidden, 4 * hidden))
            bias = np.zeros(4 * hidden)
            bias[hidden : 2 * hidden] = 1.0
            b.append(bias)
            in_dim = hidden
        return cls(vocab, u(size, embed), wx, wh, b, u(hidden, size), np.zeros(size))

    @classmethod
    def zeros(cls, vocab: CharVocab, layers: int, hidden: int, embed: int) -> "LstmParams":
        size = len(vocab)
        wx, wh, b = [], [], []
        in_dim = embed
        for _ in range(layers):
            wx.append(np.zeros((in_dim, 4 * hidden)))
            wh.append(np.zeros((hidden, 4 * hidden)))
            b.append(np.zeros(4 * hidden))
            in_dim = hidden
        return cls(vocab, np.zeros((size, embed)), wx, wh, b,
                   np.zeros((hidden, size)), np.zeros(size))

    def save(self, path: str | Path) -> None:
        arrays = self.named_arrays()
        header = {
            "format": LM_FORMAT,
            "version": LM_VERSION,
            "layers": self.layers,
            "hidden": self.hidden,
            "embed": self.embed,
            "vocab": self.chars_for_header(),
            "arrays": [[name, list(arr.shape)] for name, arr in arrays],
        }
        blob = json.dumps(header).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(struct.pack("<I", len(blob)))
            fh.write(blob)
            for _, arr in arrays:
                fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())

    def chars_for_header(self) -> list[str]:
        return self.vocab.chars

    @classmethod
    def load(cls, path: str | Path) -> "LstmParams":
        with open(path, "rb") as fh:
            (hlen,) = struct.unpack("<I", fh.read(4))
            header = json.loads(fh.read(hlen).decode("utf-8"))
            if header.get("format") != LM_FORMAT or header.get("version") != LM_VERSION:
                raise LmError("not a recognized model file")
            vocab = CharVocab(header["vocab"])
            arrays = {}
            for name, shape in header["arrays"]:
                count = int(np.prod(shape)) if shape else 1
                data = np.frombuffer(fh.read(count * 8), dtype="<f8").astype(np.float64)
                arrays[name] = data.reshape(shape)
        layers = header["layers"]
        params = cls(
            vocab,
            arrays["emb"],
            [arrays[f"wx{l}"] for l in range(layers)],
            [arrays[f"wh{l}"] for l in range(layers)],
            [arrays[f"b{l}"] for l in range(layers)],
            arrays["w_out"],
            arrays["b_out"],
        )
        params.check()
        return params


@dataclass
class DecoderState:
    """Per-hypothesis recurrent state: hidden and cell stacks, shape (L, B, H)."""

    h: np.ndarray
    c: np.ndarray

    @classmethod
    def initial(cls, params: LstmParams, batch: int = 1) -> "DecoderState":
        shape = (params.layers, batch, params.hidden)
        return cls(np.zeros(shape), np.zeros(shape))

    def copy(self) -> "DecoderState":
        return DecoderState(self.h.copy(), self.c.copy())

    def select(self, indices) -> "DecoderState":
        """Reorder/replicate batch lanes, as beam search survivors require."""
        return DecoderState(self.h[:, indices, :].copy(), self.c[:, indices, :].copy())

    @property
    def batch(self) -> int:
        return self.h.shape[1]


def _step(params: LstmParams, state: DecoderState, char_ids: np.ndarray,
          cache: list | None = None) -> tuple[np.ndarray, DecoderState]:
    """One character step for a batch. Returns (logits, new state)."""
    h_new = np.empty_like(state.h)
    c_new = np.empty_like(state.c)
    x = params.emb[char_ids]
    hidden = params.hidden
    for l in range(params.layers):
        a = x @ params.wx[l] + state.h[l] @ params.wh[l] + params.b[l]
        i = _sigmoid(a[:, :hidden])
        f = _sigmoid(a[:, hidden : 2 * hidden])
        g = np.tanh(a[:, 2 * hidden : 3 * hidden])
        o = _sigmoid(a[:, 3 * hidden :])
        c = f * state.c[l] + i * g
        tc = np.tanh(c)
        h = o * tc
        if cache is not None:
            cache.append((x, state.h[l].copy(), state.c[l].copy(), i, f, g, o, c, tc))
        h_new[l], c_new[l] = h, c
        x = h
    logits = x @ params.w_out + params.b_out
    return logits, DecoderState(h_new, c_new)


def forward_step(params: LstmParams, state: DecoderState, char_id) -> tuple[np.ndarray, DecoderState]:
    """Next-character distribution after consuming one character.

    `char_id` may be a scalar (batch of one) or an id per batch lane. The
    input state is left untouched; a fresh state is returned.
    """
    ids = np.atleast_1d(np.asarray(char_id, dtype=np.int64))
    if ids.max() >= len(params.vocab) or ids.min() < 0:
        raise LmError(f"character id out of range: {ids}")
    if state.h.shape != (params.layers, len(ids), params.hidden):
        raise LmError("decoder state does not match model dimensions")
    logits, new_state = _step(params, state, ids)
    probs = softmax(logits)
    if np.isscalar(char_id) or np.asarray(char_id).ndim == 0:
        return probs[0], new_state
    return probs, new_state


def _forward_backward(params: LstmParams, inputs: np.ndarray, targets: np.ndarray,
                      state: DecoderState) -> tuple[float, dict[str, np.ndarray], DecoderState]:
    """Mean cross-entropy (nats/char) over a (B, T) window plus gradients."""
    batch, steps = inputs.shape
    hidden = params.hidden
    layers = params.layers
    caches: list[list] = []
    logits_all = np.empty((steps, batch, len(params.vocab)))
    cur = state
    for t in range(steps):
        cache: list = []
        logits, cur = _step(params, cur, inputs[:, t], cache)
        caches.append(cache)
        logits_all[t] = logits

    probs = softmax(logits_all)
    rows = np.arange(batch)
    total = batch * steps
    loss = 0.0
    dlogits = probs.copy()
    for t in range(steps):
        loss -= np.log(probs[t][rows, targets[:, t]]).sum()
        dlogits[t][rows, targets[:, t]] -= 1.0
    loss /= total
    dlogits /= total

    grads = {name: np.zeros_like(arr) for name, arr in params.named_arrays()}
    dh_next = np.zeros((layers, batch, hidden))
    dc_next = np.zeros((layers, batch, hidden))
    for t in reversed(range(steps)):
        cache = caches[t]
        # top-layer h feeds the output projection
        h_top = cache[layers - 1][6] * cache[layers - 1][8]  # o * tanh(c)
        grads["w_out"] += h_top.T @ dlogits[t]
        grads["b_out"] += dlogits[t].sum(axis=0)
        dx_above = dlogits[t] @ params.w_out.T
        for l in reversed(range(layers)):
            x, h_prev, c_prev, i, f, g, o, c, tc = cache[l]
            dh = dx_above + dh_next[l]
            dc = dc_next[l] + dh * o * (1.0 - tc * tc)
            da = np.concatenate(
                [
                    dc * g * i * (1.0 - i),
                    dc * c_prev * f * (1.0 - f),
                    dc * i * (1.0 - g * g),
                    dh * tc * o * (1.0 - o),
                ],
                axis=1,
            )
            grads[f"wx{l}"] += x.T @ da
            grads[f"wh{l}"] += h_prev.T @ da
            grads[f"b{l}"] += da.sum(axis=0)
            dh_next[l] = da @ params.wh[l].T
            dc_next[l] = dc * f
            dx_above = da @ params.wx[l].T
        np.add.at(grads["emb"], inputs[:, t], dx_above)
    return loss, grads, cur


@dataclass
class TrainConfig:
    layers: int = 2
    hidden: int = 128
    embed: int = 32
    bptt_len: int = 64
    lr: float = 2e-3
    steps: int = 2000
    batch: int = 16
    seed: int = 0
    clip: float = 5.0


def training_text(corpus: Corpus) -> str:
    """Character stream for LM training: each poem body, a newline, then the
    poem-end marker."""
    from .corpus import detokenize

    parts = []
    for doc in corpus.documents:
        parts.append(detokenize(doc.lines, doc.stanza_breaks) + "\n" + END_CHAR)
    return "".join(parts)


def train_on_text(text: str, cfg: TrainConfig,
                  vocab: CharVocab | None = None) -> tuple[LstmParams, list[float]]:
    """Adam over truncated-BPTT windows sampled at random offsets.

    Deterministic for a given config seed. Raises TrainingDiverged when the
    loss leaves the reals.
    """
    if cfg.steps < 1:
        raise ValueError(f"need at least one step, got {cfg.steps}")
    if len(text) < 2:
        raise LmError("training text must have at least two characters")
    vocab = vocab or CharVocab.from_text(text)
    ids = vocab.encode(text)
    params = LstmParams.init(vocab, cfg.layers, cfg.hidden, cfg.embed, cfg.seed)
    rng = np.random.default_rng(cfg.seed + 1)
    window = min(cfg.bptt_len, len(ids) - 1)

    names = [name for name, _ in params.named_arrays()]
    m = {n: np.zeros_like(a) for n, a in params.named_arrays()}
    v = {n: np.zeros_like(a) for n, a in params.named_arrays()}
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    trace = []
    for step in range(1, cfg.steps + 1):
        starts = rng.integers(0, len(ids) - window, size=cfg.batch)
        inputs = np.stack([ids[s : s + window] for s in starts])
        targets = np.stack([ids[s + 1 : s + window + 1] for s in starts])
        state = DecoderState.initial(params, cfg.batch)
        loss, grads, _ = _forward_backward(params, inputs, targets, state)
        if not np.isfinite(loss):
            raise TrainingDiverged(step)
        trace.append(float(loss))

        norm = np.sqrt(sum(float((grads[n] ** 2).sum()) for n in names))
        scale = cfg.clip / norm if norm > cfg.clip else 1.0
        arrays = dict(params.named_arrays())
        for n in names:
            g = grads[n] * scale
            m[n] = beta1 * m[n] + (1 - beta1) * g
            v[n] = beta2 * v[n] + (1 - beta2) * g * g
            m_hat = m[n] / (1 - beta1**step)
            v_hat = v[n] / (1 - beta2**step)
            arrays[n] -= cfg.lr * m_hat / (np.sqrt(v_hat) + eps)
    return params, trace


def train_lm(corpus: Corpus, cfg: TrainConfig) -> tuple[LstmParams, list[float]]:
    return train_on_text(training_text(corpus), cfg)


def gradient_check(params: LstmParams, window: str | np.ndarray,
                   epsilon: float = 1e-5) -> float:
    """Max relative error between analytic BPTT gradients and central finite
    differences, over every parameter. Zero-length windows check nothing."""
    ids = params.vocab.encode(window) if isinstance(window, str) else np.asarray(window)
    if len(ids) < 2:
        return 0.0
    inputs = ids[:-1][None, :]
    targets = ids[1:][None, :]

    def loss_only() -> float:
        state = DecoderState.initial(params, 1)
        loss, _, _ = _forward_backward(params, inputs, targets, state)
        return loss

    _, grads, _ = _forward_backward(params, inputs, targets, DecoderState.initial(params, 1))
    worst = 0.0
    for name, arr in params.named_arrays():
        flat = arr.reshape(-1)
        gflat = grads[name].reshape(-1)
        for j in range(flat.size):
            keep = flat[j]
            flat[j] = keep + epsilon
            up = loss_only()
            flat[j] = keep - epsilon
            down = loss_only()
            flat[j] = keep
            numeric = (up - down) / (2 * epsilon)
            analytic = gflat[j]
            err = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)
            worst = max(worst, err)
    return worst


def sample(params: LstmParams, prefix: str = "", temperature: float = 0.8,
           seed: int = 0, max_chars: int = 400, argmax: bool = False) -> str:
    """Draw characters from softmax(logits / temperature) until the poem-end
    mark or the length cap. argmax mode is the zero-temperature limit."""
    if temperature <= 0.0:
        raise ValueError(f"temperature must be > 0, got {temperature}")
    rng = np.random.default_rng(seed)
    state = DecoderState.initial(params, 1)
    context = [params.vocab.end_id] + [int(i) for i in params.vocab.encode(prefix)]
    for cid in context[:-1]:
        _, state = _step(params, state, np.array([cid], dtype=np.int64))
    last = context[-1]
    out = []
    for _ in range(max_chars):
        logits, state = _step(params, state, np.array([last], dtype=np.int64))
        probs = softmax(logits[0] / temperature)
        if argmax:
            last = int(np.argmax(probs))
        else:
            last = int(np.searchsorted(np.cumsum(probs), rng.random(), side="right"))
            last = min(last, len(probs) - 1)
        if last == params.vocab.end_id:
            break
        out.append(params.vocab.chars[last])
    return "".join(out)


def perplexity(params: LstmParams, text: str) -> tuple[float, float]:
    """Mean negative log-likelihood (nats/char) and its exponential.

    The first character is conditioned on the poem-end mark, mirroring how
    poems begin in the training stream. Unknown characters map to the
    reserved unknown id.
    """
    if not text:
        raise LmError("cannot score empty text")
    ids = params.vocab.encode(text)
    state = DecoderState.initial(params, 1)
    prev = params.vocab.end_id
    nll = 0.0
    for target in ids:
        logits, state = _step(params, state, np.array([prev], dtype=np.int64))
        probs = softmax(logits[0])
        nll -= float(np.log(probs[int(target)]))
        prev = int(target)
    nats = nll / len(ids)
    return nats, float(np.exp(nats))
