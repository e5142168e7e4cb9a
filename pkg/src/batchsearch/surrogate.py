"""Shared predictive model and embedding over one-hot sequences.

A small convolutional network fit from scratch on the observed set at
each step: 1-D same-padding conv layers extract positional features, a
dense layer condenses them into a feature vector, and two heads share
that vector -- a sigmoid unit predicting the label, and a linear
autoencoder whose bottleneck is the embedding.  Both heads train with
squared error at equal weight; the reconstruction target is the feature
vector itself, and its dependence on the parameters is kept in the
gradient (no stop-gradient), so analytic gradients match finite
differences of the loss exactly.

Everything is float64 numpy with hand-written backprop: training is
deterministic given the randomness stream, and the gradient computation
is checkable against central finite differences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import as_strided

from .core import Alphabet, ObservationLog, SequencePool
from .errors import TrainingError

_CHUNK = 2048  # pool-wide predict/embed batch size, bounds im2col memory


@dataclass(frozen=True)
class SurrogateConfig:
    """Training hyperparameters; conv_layers is a tuple of (filters, width)."""

    learning_rate: float = 5e-4
    minibatch: int = 100
    embedding_dim: int = 5
    conv_layers: tuple = ((32, 5), (32, 5))
    dense_hidden: int = 64
    epochs: int = 20
    seed: int | None = None

    def validate(self) -> "SurrogateConfig":
        if self.learning_rate <= 0 or self.embedding_dim < 1:
            raise TrainingError("SHAPE_MISMATCH", "learning_rate > 0 and embedding_dim >= 1 required")
        if self.minibatch < 1 or self.epochs < 1:
            raise TrainingError("SHAPE_MISMATCH", "minibatch and epochs must be >= 1")
        return self


@dataclass(frozen=True)
class Arch:
    """Concrete layer shapes: config specialized to one pool's geometry."""

    conv_layers: tuple          # ((filters, width), ...)
    dense_hidden: int
    embedding_dim: int
    length: int
    n_channels: int


def one_hot_encode(seq, alphabet: Alphabet, strand: str | None = None) -> np.ndarray:
    """One-hot matrix, channels x positions; strand adds a constant channel.

    Strand encoding: '+' -> 0.0, '-' -> 1.0.
    """
    if isinstance(seq, str):
        tokens = alphabet.encode(seq)
    else:
        tokens = np.asarray(seq, dtype=np.uint8)
    mat = np.zeros((alphabet.size + (1 if strand is not None else 0), tokens.shape[0]))
    mat[tokens, np.arange(tokens.shape[0])] = 1.0
    if strand is not None:
        mat[alphabet.size, :] = {"+": 0.0, "-": 1.0}[strand]
    return mat


def decode_one_hot(mat: np.ndarray, alphabet: Alphabet) -> str:
    """Inverse of one_hot_encode on the alphabet channels: argmax per column."""
    return alphabet.decode(np.argmax(mat[: alphabet.size], axis=0))


def _encode_batch(tokens: np.ndarray, n_alphabet: int, strands: np.ndarray | None) -> np.ndarray:
    """(B, length) tokens -> (B, length, channels) one-hot, channels-last."""
    b, ell = tokens.shape
    n_ch = n_alphabet + (1 if strands is not None else 0)
    x = np.zeros((b, ell, n_ch))
    x.reshape(b * ell, n_ch)[np.arange(b * ell), tokens.reshape(-1)] = 1.0
    if strands is not None:
        x[:, :, n_alphabet] = strands[:, None].astype(np.float64)
    return x


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _im2col(x: np.ndarray, width: int) -> np.ndarray:
    """(B, L, C) -> (B, L, width*C) sliding windows with same-padding."""
    b, ell, c = x.shape
    pad = (width - 1) // 2
    xp = np.pad(x, ((0, 0), (pad, pad), (0, 0)))
    sb, sl, sc = xp.strides
    windows = as_strided(xp, shape=(b, ell, width, c), strides=(sb, sl, sl, sc))
    return windows.reshape(b, ell, width * c)


def _col2im(dcols: np.ndarray, width: int, n_ch: int) -> np.ndarray:
    """Adjoint of _im2col: scatter window gradients back to input positions."""
    b, ell, _ = dcols.shape
    pad = (width - 1) // 2
    dcols = dcols.reshape(b, ell, width, n_ch)
    dxp = np.zeros((b, ell + 2 * pad, n_ch))
    for w in range(width):
        dxp[:, w : w + ell] += dcols[:, :, w, :]
    return dxp[:, pad : pad + ell]


def init_params(arch: Arch, rng: np.random.Generator) -> dict:
    """Seeded uniform fan-in initialization, fixed parameter order."""
    params: dict[str, np.ndarray] = {}

    def uniform(shape, fan_in):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    c_in = arch.n_channels
    for i, (filters, width) in enumerate(arch.conv_layers):
        k = width * c_in
        params[f"conv{i}_w"] = uniform((k, filters), k)
        params[f"conv{i}_b"] = uniform((filters,), k)
        c_in = filters
    flat = arch.length * c_in
    params["dense_w"] = uniform((flat, arch.dense_hidden), flat)
    params["dense_b"] = uniform((arch.dense_hidden,), flat)
    params["pred_w"] = uniform((arch.dense_hidden, 1), arch.dense_hidden)
    params["pred_b"] = uniform((1,), arch.dense_hidden)
    params["enc_w"] = uniform((arch.dense_hidden, arch.embedding_dim), arch.dense_hidden)
    params["enc_b"] = uniform((arch.embedding_dim,), arch.dense_hidden)
    params["dec_w"] = uniform((arch.embedding_dim, arch.dense_hidden), arch.embedding_dim)
    params["dec_b"] = uniform((arch.dense_hidden,), arch.embedding_dim)
    return params


def _forward_features(arch: Arch, params: dict, x: np.ndarray, keep: bool = False):
    """Conv stack + dense: returns the feature vector h (B, dense_hidden).

    With ``keep`` the per-layer intermediates needed for backprop are
    returned as well.
    """
    b = x.shape[0]
    a = x
    cache = [] if keep else None
    for i in range(len(arch.conv_layers)):
        _, width = arch.conv_layers[i]
        cols = _im2col(a, width)
        z = cols.reshape(b * arch.length, -1) @ params[f"conv{i}_w"]
        z = z.reshape(b, arch.length, -1) + params[f"conv{i}_b"]
        a = np.maximum(z, 0.0)
        if keep:
            cache.append((cols, z))
    flat = a.reshape(b, -1)
    zh = flat @ params["dense_w"] + params["dense_b"]
    h = np.maximum(zh, 0.0)
    if keep:
        return h, (flat, zh, cache)
    return h


def _heads(params: dict, h: np.ndarray):
    p = _sigmoid(h @ params["pred_w"] + params["pred_b"])[:, 0]
    e = h @ params["enc_w"] + params["enc_b"]
    r = e @ params["dec_w"] + params["dec_b"]
    return p, e, r


def combined_loss(arch: Arch, params: dict, x: np.ndarray, y: np.ndarray) -> float:
    """Prediction MSE plus feature-reconstruction MSE, equal weight."""
    h = _forward_features(arch, params, x)
    p, _, r = _heads(params, h)
    return float(np.mean((p - y) ** 2) + np.mean((r - h) ** 2))


def loss_and_grads(arch: Arch, params: dict, x: np.ndarray, y: np.ndarray):
    """Combined loss and its exact analytic gradient for every parameter.

    The reconstruction target (the feature vector) is part of the graph,
    so its parameter-dependence contributes -d(recon residual) to the
    feature gradient.
    """
    b = x.shape[0]
    h, (flat, zh, conv_cache) = _forward_features(arch, params, x, keep=True)
    p, e, r = _heads(params, h)
    resid_p = p - y
    resid_r = r - h
    loss = float(np.mean(resid_p**2) + np.mean(resid_r**2))

    grads: dict[str, np.ndarray] = {}
    dzp = (2.0 / b) * resid_p * p * (1.0 - p)
    grads["pred_w"] = h.T @ dzp[:, None]
    grads["pred_b"] = np.array([dzp.sum()])
    dh = dzp[:, None] @ params["pred_w"].T

    dr = (2.0 / resid_r.size) * resid_r
    grads["dec_w"] = e.T @ dr
    grads["dec_b"] = dr.sum(axis=0)
    de = dr @ params["dec_w"].T
    grads["enc_w"] = h.T @ de
    grads["enc_b"] = de.sum(axis=0)
    dh += de @ params["enc_w"].T
    dh -= dr  # target side of the reconstruction term

    dzh = dh * (zh > 0.0)
    grads["dense_w"] = flat.T @ dzh
    grads["dense_b"] = dzh.sum(axis=0)
    da = (dzh @ params["dense_w"].T).reshape(b, arch.length, -1)

    for i in range(len(arch.conv_layers) - 1, -1, -1):
        cols, z = conv_cache[i]
        dz = da * (z > 0.0)
        k = cols.shape[2]
        dz2 = dz.reshape(b * arch.length, -1)
        grads[f"conv{i}_w"] = cols.reshape(b * arch.length, k).T @ dz2
        grads[f"conv{i}_b"] = dz.sum(axis=(0, 1))
        if i > 0:
            dcols = (dz2 @ params[f"conv{i}_w"].T).reshape(b, arch.length, k)
            n_ch_in = arch.conv_layers[i - 1][0]
            da = _col2im(dcols, arch.conv_layers[i][1], n_ch_in)
    return loss, grads


class SurrogateModel:
    """Trained predictor and embedding; immutable, safe to share after fit."""

    def __init__(
        self,
        arch: Arch,
        params: dict,
        alphabet: Alphabet,
        has_strand: bool,
        config: SurrogateConfig,
        loss_trace: list[float],
    ):
        self.arch = arch
        self.params = params
        self.alphabet = alphabet
        self.has_strand = has_strand
        self.config = config
        self.loss_trace = list(loss_trace)

    # -- pool-wide evaluation (chunked to bound memory) ------------------

    def _check_pool(self, pool: SequencePool):
        if pool.length != self.arch.length or pool.n_channels != self.arch.n_channels:
            raise TrainingError(
                "SHAPE_MISMATCH",
                f"pool geometry ({pool.length}, {pool.n_channels} ch) does not match "
                f"model ({self.arch.length}, {self.arch.n_channels} ch)",
            )

    def _map_pool(self, pool: SequencePool, indices: np.ndarray | None, want_embed: bool):
        self._check_pool(pool)
        tokens = pool.tokens if indices is None else pool.tokens[indices]
        strands = pool.strands if pool.strands is None else (
            pool.strands if indices is None else pool.strands[indices]
        )
        outs = []
        for start in range(0, tokens.shape[0], _CHUNK):
            stop = start + _CHUNK
            x = _encode_batch(
                tokens[start:stop],
                self.alphabet.size,
                None if strands is None else strands[start:stop],
            )
            h = _forward_features(self.arch, self.params, x)
            if want_embed:
                outs.append(h @ self.params["enc_w"] + self.params["enc_b"])
            else:
                outs.append(_sigmoid(h @ self.params["pred_w"] + self.params["pred_b"])[:, 0])
        return np.concatenate(outs) if outs else np.empty(0)

    def predict_pool(self, pool: SequencePool, indices: np.ndarray | None = None) -> np.ndarray:
        """Predicted labels for the whole pool (or a subset of indices)."""
        return self._map_pool(pool, indices, want_embed=False)

    def embed_pool(self, pool: SequencePool, indices: np.ndarray | None = None) -> np.ndarray:
        """Embedding vectors, one row per sequence."""
        return self._map_pool(pool, indices, want_embed=True)

    # -- single-sequence evaluation --------------------------------------

    def _encode_one(self, seq, strand: str | None) -> np.ndarray:
        if isinstance(seq, str):
            tokens = self.alphabet.encode(seq)
        else:
            tokens = np.asarray(seq, dtype=np.uint8)
        if tokens.shape[0] != self.arch.length:
            raise TrainingError(
                "SHAPE_MISMATCH", f"sequence length {tokens.shape[0]} != model length {self.arch.length}"
            )
        if self.has_strand and strand is None:
            raise TrainingError("SHAPE_MISMATCH", "model was trained with a strand channel")
        svec = None
        if self.has_strand:
            svec = np.array([{"+": 0, "-": 1}[strand]], dtype=np.uint8)
        return _encode_batch(tokens[None, :], self.alphabet.size, svec)

    def predict(self, seq, strand: str | None = None) -> float:
        x = self._encode_one(seq, strand)
        h = _forward_features(self.arch, self.params, x)
        return float(_sigmoid(h @ self.params["pred_w"] + self.params["pred_b"])[0, 0])

    def embed(self, seq, strand: str | None = None) -> np.ndarray:
        x = self._encode_one(seq, strand)
        h = _forward_features(self.arch, self.params, x)
        return (h @ self.params["enc_w"] + self.params["enc_b"])[0]

    # -- checkpointing ----------------------------------------------------

    def save(self, path: str | Path) -> None:
        meta = {
            "format": "batchsearch-surrogate-v1",
            "alphabet": self.alphabet.symbols,
            "has_strand": self.has_strand,
            "arch": {
                "conv_layers": [list(cw) for cw in self.arch.conv_layers],
                "dense_hidden": self.arch.dense_hidden,
                "embedding_dim": self.arch.embedding_dim,
                "length": self.arch.length,
                "n_channels": self.arch.n_channels,
            },
            "loss_trace": self.loss_trace,
        }
        np.savez(path, __meta__=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8), **self.params)

    @classmethod
    def load(cls, path: str | Path) -> "SurrogateModel":
        with np.load(path) as data:
            meta = json.loads(bytes(data["__meta__"]).decode())
            if meta.get("format") != "batchsearch-surrogate-v1":
                raise TrainingError("SHAPE_MISMATCH", f"{path}: not a surrogate checkpoint")
            params = {k: data[k] for k in data.files if k != "__meta__"}
        arch = Arch(
            conv_layers=tuple(tuple(cw) for cw in meta["arch"]["conv_layers"]),
            dense_hidden=meta["arch"]["dense_hidden"],
            embedding_dim=meta["arch"]["embedding_dim"],
            length=meta["arch"]["length"],
            n_channels=meta["arch"]["n_channels"],
        )
        return cls(arch, params, Alphabet(meta["alphabet"]), meta["has_strand"], SurrogateConfig(), meta["loss_trace"])


def make_arch(cfg: SurrogateConfig, pool: SequencePool) -> Arch:
    return Arch(
        conv_layers=tuple(tuple(cw) for cw in cfg.conv_layers),
        dense_hidden=cfg.dense_hidden,
        embedding_dim=cfg.embedding_dim,
        length=pool.length,
        n_channels=pool.n_channels,
    )


def fit_surrogate(
    log: ObservationLog,
    pool: SequencePool,
    cfg: SurrogateConfig,
    rng: np.random.Generator | None = None,
) -> SurrogateModel:
    """Train a fresh model on the observed set with minibatch SGD.

    A fresh seeded initialization every call: either the caller's stream
    (agents pass theirs for replayability) or one derived from cfg.seed.
    The per-epoch mean combined loss is recorded as the loss trace.
    """
    cfg.validate()
    if len(log) == 0:
        raise TrainingError("EMPTY_LOG", "cannot fit on an empty observation log")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    arch = make_arch(cfg, pool)
    params = init_params(arch, rng)

    strands = None if pool.strands is None else pool.strands[log.indices]
    x_all = _encode_batch(pool.tokens[log.indices], pool.alphabet.size, strands)
    y_all = log.labels
    n = x_all.shape[0]

    trace: list[float] = []
    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        losses = []
        for start in range(0, n, cfg.minibatch):
            idx = perm[start : start + cfg.minibatch]
            loss, grads = loss_and_grads(arch, params, x_all[idx], y_all[idx])
            for k, g in grads.items():
                params[k] -= cfg.learning_rate * g
            losses.append(loss)
        trace.append(float(np.mean(losses)))
    return SurrogateModel(arch, params, pool.alphabet, pool.strands is not None, cfg, trace)


def predict(model: SurrogateModel, seq, strand: str | None = None) -> float:
    """Predicted label for one sequence (unclamped; consumers rank by it)."""
    return model.predict(seq, strand)


def embed(model: SurrogateModel, seq, strand: str | None = None) -> np.ndarray:
    """Embedding vector for one sequence."""
    return model.embed(seq, strand)


def export_embeddings(path: str | Path, model: SurrogateModel, pool: SequencePool, labels: np.ndarray) -> None:
    """Write ``index,e1..eH,label`` CSV for the whole pool."""
    emb = model.embed_pool(pool)
    h = emb.shape[1]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("index," + ",".join(f"e{i+1}" for i in range(h)) + ",label\n")
        for i in range(emb.shape[0]):
            coords = ",".join(repr(float(v)) for v in emb[i])
            fh.write(f"{i},{coords},{repr(float(labels[i]))}\n")
