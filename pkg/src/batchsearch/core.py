"""Domain types for sequence pools, environments, and observation logs.

An environment is a triple (pool, labels, batch size): a finite pool of
fixed-length sequences, a hidden deterministic label in [0, 1] for each,
and the number of sequences whose labels are revealed together per step.
Agents interact by proposing batches of unobserved pool indices; the
harness reveals the labels and appends them to an observation log.

Sequences are interned to integer indices at environment construction;
everything downstream (logs, batches, partitions) speaks indices.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence

import numpy as np

from .errors import EnvironmentInvalid, ObservationInvalid

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Alphabet:
    """Ordered residue alphabet; the ordering fixes one-hot channel order."""

    symbols: str

    def __post_init__(self):
        if len(self.symbols) < 2:
            raise ValueError("alphabet needs at least 2 symbols")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("alphabet symbols must be distinct")

    @property
    def size(self) -> int:
        return len(self.symbols)

    def index_of(self, ch: str) -> int:
        i = self.symbols.find(ch)
        if i < 0:
            raise EnvironmentInvalid(
                "ALPHABET_MISMATCH", f"character {ch!r} not in alphabet {self.symbols!r}"
            )
        return i

    def encode(self, seq: str) -> np.ndarray:
        """String -> uint8 index array; rejects out-of-alphabet characters."""
        table = np.full(256, 255, dtype=np.uint8)
        for i, ch in enumerate(self.symbols):
            table[ord(ch)] = i
        raw = np.frombuffer(seq.encode("ascii", errors="replace"), dtype=np.uint8)
        tokens = table[raw]
        if (tokens == 255).any():
            bad = seq[int(np.argmax(tokens == 255))]
            raise EnvironmentInvalid(
                "ALPHABET_MISMATCH", f"character {bad!r} not in alphabet {self.symbols!r}"
            )
        return tokens

    def decode(self, tokens: np.ndarray) -> str:
        return "".join(self.symbols[int(t)] for t in tokens)


DNA = Alphabet("ACGT")
PROTEIN = Alphabet("ACDEFGHIKLMNPQRSTVWY")

#: strand flag encoding used throughout: '+' -> 0, '-' -> 1
STRANDS = "+-"


class SequencePool:
    """Deduplicated, index-addressable set of equal-length sequences.

    ``tokens`` is a (n, length) uint8 matrix of alphabet indices; ``strands``
    (optional) is a (n,) uint8 vector with '+' -> 0 and '-' -> 1.
    """

    def __init__(self, tokens: np.ndarray, alphabet: Alphabet, strands: np.ndarray | None = None):
        tokens = np.asarray(tokens, dtype=np.uint8)
        if tokens.ndim != 2:
            raise EnvironmentInvalid("EMPTY_POOL", "token matrix must be 2-D")
        if tokens.shape[0] == 0:
            raise EnvironmentInvalid("EMPTY_POOL", "pool must be nonempty")
        if tokens.size and tokens.max() >= alphabet.size:
            raise EnvironmentInvalid("ALPHABET_MISMATCH", "token index outside alphabet")
        self.tokens = tokens
        self.alphabet = alphabet
        self.strands = None if strands is None else np.asarray(strands, dtype=np.uint8)
        if self.strands is not None and self.strands.shape != (tokens.shape[0],):
            raise EnvironmentInvalid("CONFIG_INVALID", "strand vector length mismatch")

    @classmethod
    def from_strings(
        cls,
        sequences: Sequence[str],
        alphabet: Alphabet = DNA,
        strands: Sequence[str] | None = None,
    ) -> "SequencePool":
        seqs = list(sequences)
        if not seqs:
            raise EnvironmentInvalid("EMPTY_POOL", "pool must be nonempty")
        lengths = {len(s) for s in seqs}
        if len(lengths) != 1:
            raise EnvironmentInvalid(
                "UNEQUAL_LENGTHS", f"sequences have mixed lengths {sorted(lengths)}"
            )
        tokens = np.stack([alphabet.encode(s) for s in seqs])
        svec = None
        if strands is not None:
            svec = np.array([STRANDS.index(s) for s in strands], dtype=np.uint8)
        return cls(tokens, alphabet, svec)

    def __len__(self) -> int:
        return self.tokens.shape[0]

    @property
    def length(self) -> int:
        return self.tokens.shape[1]

    @property
    def n_channels(self) -> int:
        """One-hot channel count: alphabet size plus one strand channel if present."""
        return self.alphabet.size + (1 if self.strands is not None else 0)

    def sequence(self, i: int) -> str:
        return self.alphabet.decode(self.tokens[i])


class Environment:
    """Immutable (pool, labels, batch_size) triple; labels only leak via reveal()."""

    def __init__(self, pool: SequencePool, labels: np.ndarray, batch_size: int):
        labels = np.asarray(labels, dtype=np.float64)
        if labels.shape != (len(pool),):
            raise EnvironmentInvalid("CONFIG_INVALID", "one label per pool sequence required")
        if labels.size and (labels.min() < 0.0 or labels.max() > 1.0):
            bad = float(labels[(labels < 0.0) | (labels > 1.0)][0])
            raise EnvironmentInvalid("LABEL_RANGE", f"label {bad} outside [0, 1]")
        if batch_size < 1:
            raise EnvironmentInvalid("CONFIG_INVALID", "batch_size must be >= 1")
        if batch_size > len(pool):
            raise EnvironmentInvalid(
                "BATCH_TOO_LARGE", f"batch_size {batch_size} exceeds pool size {len(pool)}"
            )
        self.pool = pool
        self.batch_size = int(batch_size)
        self._labels = labels
        self._labels.setflags(write=False)

    @property
    def size(self) -> int:
        return len(self.pool)

    def reveal(self, indices: np.ndarray) -> np.ndarray:
        """Observation access: labels for the given pool indices."""
        indices = np.asarray(indices, dtype=np.int64)
        if indices.size and (indices.min() < 0 or indices.max() >= self.size):
            raise ObservationInvalid("OUT_OF_POOL", "index outside pool")
        return self._labels[indices].copy()

    def all_labels(self) -> np.ndarray:
        """Full label vector; harness-side use only (regret needs the ground truth)."""
        return self._labels


def dedupe_sequences(
    sequences: Sequence[str], strands: Sequence[str] | None = None
) -> tuple[list[int], np.ndarray]:
    """Collapse duplicates keeping the first occurrence of each sequence.

    Returns (kept original positions, map original position -> kept index).
    Strand is part of sequence identity when present.
    """
    seen: dict = {}
    keep: list[int] = []
    remap = np.empty(len(sequences), dtype=np.int64)
    for i, s in enumerate(sequences):
        key = (s, strands[i]) if strands is not None else s
        j = seen.get(key)
        if j is None:
            seen[key] = len(keep)
            remap[i] = len(keep)
            keep.append(i)
        else:
            remap[i] = j
    if len(keep) < len(sequences):
        logger.warning(
            "collapsed %d duplicate sequences (kept first label of each)",
            len(sequences) - len(keep),
        )
    return keep, remap


def validate_environment(
    sequences: Sequence[str],
    labels: Iterable[float],
    batch_size: int,
    alphabet: Alphabet = DNA,
    strands: Sequence[str] | None = None,
) -> Environment:
    """Build an Environment from raw strings, enforcing every invariant.

    Duplicate sequences are collapsed to the first occurrence (with a
    warning); the batch size is checked against the deduplicated pool.
    """
    seqs = list(sequences)
    labs = np.asarray(list(labels), dtype=np.float64)
    if not seqs:
        raise EnvironmentInvalid("EMPTY_POOL", "pool must be nonempty")
    if labs.shape != (len(seqs),):
        raise EnvironmentInvalid("CONFIG_INVALID", "labels must be defined for every sequence")
    keep, _ = dedupe_sequences(seqs, strands)
    seqs = [seqs[i] for i in keep]
    labs = labs[keep]
    kept_strands = None if strands is None else [strands[i] for i in keep]
    pool = SequencePool.from_strings(seqs, alphabet, kept_strands)
    return Environment(pool, labs, batch_size)


class ObservationLog:
    """Value-like set of (index, label) observations plus the step counter.

    ``step`` counts agent batches; bootstrap observations installed at
    construction live at step 0, so ``len(log) == n_initial + step * M``.
    """

    __slots__ = ("indices", "labels", "step", "_index_set")

    def __init__(self, indices: np.ndarray, labels: np.ndarray, step: int):
        self.indices = np.asarray(indices, dtype=np.int64)
        self.labels = np.asarray(labels, dtype=np.float64)
        self.step = int(step)
        self.indices.setflags(write=False)
        self.labels.setflags(write=False)
        self._index_set: frozenset | None = None

    @classmethod
    def empty(cls) -> "ObservationLog":
        return cls(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64), 0)

    def __len__(self) -> int:
        return self.indices.shape[0]

    @property
    def index_set(self) -> frozenset:
        if self._index_set is None:
            self._index_set = frozenset(self.indices.tolist())
        return self._index_set

    def observed_mask(self, pool_size: int) -> np.ndarray:
        mask = np.zeros(pool_size, dtype=bool)
        mask[self.indices] = True
        return mask


def initial_log(env: Environment, indices: np.ndarray) -> ObservationLog:
    """Bootstrap log: the given indices observed before any agent action (step 0)."""
    indices = np.asarray(indices, dtype=np.int64)
    if len(np.unique(indices)) != indices.shape[0]:
        raise ObservationInvalid("DUPLICATE_SELECTION", "bootstrap indices must be distinct")
    return ObservationLog(indices, env.reveal(indices), 0)


def check_batch(log: ObservationLog, batch: np.ndarray, batch_size: int, pool_size: int) -> np.ndarray:
    """Validate a batch against the log: size, distinctness, pool bounds, disjointness."""
    batch = np.asarray(batch, dtype=np.int64)
    if batch.shape != (batch_size,):
        raise ObservationInvalid(
            "SIZE_MISMATCH", f"batch has {batch.shape[0] if batch.ndim == 1 else '?'} entries, expected {batch_size}"
        )
    if batch.size and (batch.min() < 0 or batch.max() >= pool_size):
        raise ObservationInvalid("OUT_OF_POOL", "batch index outside pool")
    if len(set(batch.tolist())) != batch.shape[0]:
        raise ObservationInvalid("DUPLICATE_SELECTION", "batch indices must be distinct")
    overlap = log.index_set.intersection(batch.tolist())
    if overlap:
        raise ObservationInvalid(
            "DUPLICATE_SELECTION", f"index {min(overlap)} already observed"
        )
    return batch


def observe(env: Environment, log: ObservationLog, batch: np.ndarray) -> ObservationLog:
    """Reveal a batch's labels, returning a new log with step incremented.

    The input log is unchanged; logs are value-like.
    """
    batch = check_batch(log, batch, env.batch_size, env.size)
    new_indices = np.concatenate([log.indices, batch])
    new_labels = np.concatenate([log.labels, env.reveal(batch)])
    return ObservationLog(new_indices, new_labels, log.step + 1)


class AgentPolicy(Protocol):
    """Uniform agent interface: observations in, one batch of pool indices out.

    Identical (pool, log, batch_size) plus an identical randomness-stream
    state must reproduce the batch byte for byte.
    """

    name: str

    def act(
        self, pool: SequencePool, log: ObservationLog, batch_size: int, rng: np.random.Generator
    ) -> np.ndarray: ...


@dataclass
class AgentInfo:
    """Name plus hyperparameter record, used by the harness for reporting."""

    name: str
    params: dict = field(default_factory=dict)

    def config_string(self) -> str:
        return ",".join(f"{k}={self.params[k]}" for k in sorted(self.params))
