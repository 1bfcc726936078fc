"""Scalar estimators: innovation and hallucination rates, missing mass,
Good-Turing, exact binomial intervals, and cosine-based semantic rates."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import beta as beta_dist

from .distcore import Corpus, Dist, mass_on
from .models import Model
from .worlds import World

EMB_MAGIC = b"IEMB"
EMB_VERSION = 1
ROW_NORM_TOL = 1e-4


class EmbFileError(ValueError):
    """Malformed embedding table file."""


class EmbFileBadMagic(EmbFileError):
    pass


class EmbFileBadVersion(EmbFileError):
    pass


class EmbFileTruncated(EmbFileError):
    pass


@dataclass(frozen=True)
class IntervalEstimate:
    point: float
    lo: float
    hi: float
    confidence: float

    def __post_init__(self):
        if not 0.0 <= self.lo <= self.point <= self.hi <= 1.0:
            raise ValueError("interval must satisfy 0 <= lo <= point <= hi <= 1")
        if not 0.0 < self.confidence < 1.0:
            raise ValueError("confidence must lie in (0, 1)")


@dataclass(frozen=True)
class EmbeddingTable:
    """A count x dim matrix of L2-normalized embedding rows."""

    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] == 0 or rows.shape[1] == 0:
            raise ValueError("rows must be a nonempty 2-D matrix")
        norms = np.linalg.norm(rows, axis=1)
        if np.any(np.abs(norms - 1.0) > ROW_NORM_TOL):
            raise ValueError(f"every row must be L2-normalized within {ROW_NORM_TOL}")
        rows = rows.copy()
        rows.flags.writeable = False
        object.__setattr__(self, "rows", rows)

    @property
    def count(self) -> int:
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        return self.rows.shape[1]


def load_embedding_table(path) -> EmbeddingTable:
    """Read an IEMB file: 'IEMB' magic, u32 LE version=1, u32 count, u32 dim,
    then count*dim float32 LE row-major, rows pre-normalized."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 16:
        raise EmbFileTruncated(f"header needs 16 bytes, file has {len(data)}")
    if data[:4] != EMB_MAGIC:
        raise EmbFileBadMagic(f"bad magic {data[:4]!r}, expected {EMB_MAGIC!r}")
    version, count, dim = struct.unpack_from("<III", data, 4)
    if version != EMB_VERSION:
        raise EmbFileBadVersion(f"unsupported version {version}, expected {EMB_VERSION}")
    expected = 16 + 4 * count * dim
    if len(data) != expected:
        raise EmbFileTruncated(f"payload length {len(data)} != expected {expected}")
    rows = np.frombuffer(data, dtype="<f4", offset=16).reshape(count, dim)
    return EmbeddingTable(rows.astype(np.float64))


def innovation_rate(g: Model, corpus: Corpus) -> float:
    """g's mass on statements absent from the corpus; the model innovates
    iff this is positive."""
    if g.n_statements != corpus.n_statements:
        raise ValueError("dimension mismatch: model and corpus universe sizes differ")
    return mass_on(g.dist, corpus.unseen)


def hallucination_rate(g: Model, world: World) -> float:
    """g's mass outside the world's fact set."""
    if g.n_statements != world.n_statements:
        raise ValueError("dimension mismatch: model and world universe sizes differ")
    return mass_on(g.dist, world.hallucinations)


def missing_mass(world: World, corpus: Corpus) -> float:
    """True-distribution mass on statements the corpus never drew."""
    if world.n_statements != corpus.n_statements:
        raise ValueError("dimension mismatch: world and corpus universe sizes differ")
    return mass_on(world.dist, corpus.unseen)


def good_turing(corpus: Corpus) -> float:
    """Singleton fraction N1/n, the classical missing-mass estimator."""
    if corpus.n < 1:
        raise ValueError("Good-Turing needs a nonempty corpus")
    n1 = int(np.count_nonzero(corpus.counts == 1))
    return n1 / corpus.n


def clopper_pearson(successes: int, trials: int, confidence: float = 0.95) -> IntervalEstimate:
    """Exact binomial confidence interval from Beta quantiles.

    lo = 0 at zero successes and hi = 1 at all successes; otherwise the
    endpoints are Beta(k, n-k+1) and Beta(k+1, n-k) quantiles at alpha/2
    and 1-alpha/2.
    """
    if trials < 1 or not 0 <= successes <= trials:
        raise ValueError("need 0 <= successes <= trials with trials >= 1")
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie in (0, 1)")
    alpha = 1.0 - confidence
    k, n = successes, trials
    lo = 0.0 if k == 0 else float(beta_dist.ppf(alpha / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(beta_dist.ppf(1 - alpha / 2, k + 1, n - k))
    return IntervalEstimate(point=k / n, lo=lo, hi=hi, confidence=confidence)


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError("vectors must be 1-D with equal dimension")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine similarity undefined for zero vectors")
    return float(np.dot(u, v) / (nu * nv))


def max_cosine_per_row(generated: EmbeddingTable, training: EmbeddingTable) -> np.ndarray:
    """Max cosine similarity of each generated row over all training rows."""
    if generated.dim != training.dim:
        raise ValueError("dimension mismatch: embedding tables differ in dim")
    g = generated.rows / np.linalg.norm(generated.rows, axis=1, keepdims=True)
    t = training.rows / np.linalg.norm(training.rows, axis=1, keepdims=True)
    best = np.full(generated.count, -np.inf)
    for start in range(0, generated.count, 1024):
        block = g[start : start + 1024] @ t.T
        best[start : start + 1024] = block.max(axis=1)
    return best


def semantic_innovation_rate(
    generated: EmbeddingTable, training: EmbeddingTable, threshold: float = 0.95
) -> float:
    """Fraction of generated rows whose max cosine to the training rows
    falls strictly below the threshold."""
    best = max_cosine_per_row(generated, training)
    return float(np.mean(best < threshold))


def empirical_innovation_rate(
    generated: Sequence[tuple], training_set: set, dedup: bool = False
) -> float:
    """Fraction of generated statements not found in the training set.

    Duplicated generations count separately by default; dedup=True scores
    each distinct generation once instead.
    """
    if len(generated) == 0:
        raise ValueError("no generated statements")
    pool = list(dict.fromkeys(generated)) if dedup else list(generated)
    novel = sum(1 for s in pool if s not in training_set)
    return novel / len(pool)
