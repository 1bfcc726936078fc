"""Meta-distributions over sparse-support worlds, sampling, and the exact
posterior over fact supports given a corpus.

A world is a document distribution whose support is its fact set. The
meta-distribution draws a support (uniform, weighted, or fixed-size) and
then symmetric-Dirichlet weights on it. Because the within-support weights
are Dirichlet, the marginal likelihood of a corpus given a candidate
support has a closed Dirichlet-multinomial form, so the posterior over
supports is computable by direct enumeration whenever the candidate count
is small enough.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import gammaln, logsumexp

from .distcore import Corpus, Dist

SUPPORT_PRIORS = ("uniform-k-subsets", "weighted-subsets", "fixed-size-m-subsets")

DEFAULT_ENUMERATION_CAP = 2_000_000


class EnumerationCapError(RuntimeError):
    """Candidate-support count exceeds the exact-posterior enumeration cap."""


def k_from_sparsity_exponent(n_statements: int, s: float) -> float:
    """Max fact count equivalent to sparsity exponent s: N / (1 + e^s)."""
    return n_statements / (1.0 + math.exp(s))


@dataclass(frozen=True)
class MetaSpec:
    """Parameters of a meta-distribution over worlds.

    support_prior:
      - "uniform-k-subsets": support uniform over size-K subsets
        (sizes uniform on {1..K} first when mixed_sizes is set);
      - "weighted-subsets": size-K support drawn with probability
        proportional to the product of per-statement weights;
      - "fixed-size-m-subsets": uniform over size-m subsets, m <= K.

    Within-support probabilities are symmetric Dirichlet(alpha).
    """

    n_statements: int
    k_max: int
    support_prior: str = "uniform-k-subsets"
    weights: np.ndarray | None = None
    m: int | None = None
    alpha: float = 1.0
    seed: int = 0
    mixed_sizes: bool = False

    def __post_init__(self):
        if not 1 <= self.k_max < self.n_statements:
            raise ValueError("k_max must satisfy 1 <= k_max < n_statements")
        if self.support_prior not in SUPPORT_PRIORS:
            raise ValueError(f"unknown support_prior {self.support_prior!r}")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.k_max / self.n_statements > 0.25:
            warnings.warn(
                f"k_max/N = {self.k_max / self.n_statements:.2f} leaves the sparse regime",
                stacklevel=2,
            )
        if self.support_prior == "weighted-subsets":
            if self.weights is None:
                raise ValueError("weighted-subsets prior requires a weight vector")
            w = np.asarray(self.weights, dtype=np.float64)
            if w.shape != (self.n_statements,) or np.any(w <= 0):
                raise ValueError("weights must be length-N and strictly positive")
            w = w.copy()
            w.flags.writeable = False
            object.__setattr__(self, "weights", w)
        if self.support_prior == "fixed-size-m-subsets":
            if self.m is None or not 1 <= self.m <= self.k_max:
                raise ValueError("fixed-size-m-subsets prior requires 1 <= m <= k_max")
        if self.mixed_sizes and self.support_prior != "uniform-k-subsets":
            raise ValueError("mixed_sizes is only defined for the uniform-k-subsets prior")

    def support_sizes(self) -> list[int]:
        """Support sizes carrying prior mass, ascending."""
        if self.support_prior == "fixed-size-m-subsets":
            return [self.m]
        if self.mixed_sizes:
            return list(range(1, self.k_max + 1))
        return [self.k_max]

    @classmethod
    def from_json(cls, obj: dict) -> "MetaSpec":
        return cls(
            n_statements=int(obj["n_statements"]),
            k_max=int(obj["k_max"]),
            support_prior=obj.get("support_prior", "uniform-k-subsets"),
            weights=None if obj.get("weights") is None else np.asarray(obj["weights"], float),
            m=obj.get("m"),
            alpha=float(obj.get("alpha", 1.0)),
            seed=int(obj.get("seed", 0)),
            mixed_sizes=bool(obj.get("mixed_sizes", False)),
        )


@dataclass(frozen=True)
class World:
    """A sampled document distribution with its fact set made explicit."""

    facts: np.ndarray  # sorted statement ids, the support
    dist: Dist

    def __post_init__(self):
        facts = np.asarray(self.facts, dtype=np.int64)
        facts = np.sort(facts)
        facts.flags.writeable = False
        object.__setattr__(self, "facts", facts)
        positive = np.flatnonzero(self.dist.mass > 0)
        if not np.array_equal(positive, facts):
            raise ValueError("dist support must equal the fact set exactly")

    @property
    def n_statements(self) -> int:
        return self.dist.n_statements

    @cached_property
    def fact_set(self) -> frozenset:
        return frozenset(int(y) for y in self.facts)

    @cached_property
    def hallucinations(self) -> np.ndarray:
        out = np.setdiff1d(np.arange(self.n_statements), self.facts)
        out.flags.writeable = False
        return out


def _weighted_subset(w: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a size-k subset with probability proportional to prod of weights.

    Sequential conditional sampling via elementary symmetric polynomials:
    e[i][r] = e_r(w[i:]) by backward recursion, then item i is included
    with probability w[i] * e[i+1][r-1] / e[i][r]. Exact for the
    product-weighted subset law.
    """
    n = w.size
    w = w / w.mean()  # rescaling leaves the subset law invariant, tames overflow
    e = np.zeros((n + 1, k + 1))
    e[n, 0] = 1.0
    for i in range(n - 1, -1, -1):
        e[i, 0] = 1.0
        hi = min(k, n - i)
        for r in range(1, hi + 1):
            e[i, r] = e[i + 1, r] + w[i] * e[i + 1, r - 1]
    chosen = np.empty(k, dtype=np.int64)
    r = k
    for i in range(n):
        if r == 0:
            break
        p_take = w[i] * e[i + 1, r - 1] / e[i, r]
        if rng.random() < p_take:
            chosen[k - r] = i
            r -= 1
    return chosen


def sample_world(meta: MetaSpec, rng: np.random.Generator) -> World:
    """Draw a world: support from the support prior, then Dirichlet weights."""
    sizes = meta.support_sizes()
    j = sizes[0] if len(sizes) == 1 else int(rng.integers(1, meta.k_max + 1))
    if meta.support_prior == "weighted-subsets":
        facts = np.sort(_weighted_subset(meta.weights, j, rng))
    else:
        facts = np.sort(rng.choice(meta.n_statements, size=j, replace=False))
    w = rng.dirichlet(np.full(j, meta.alpha))
    # Dirichlet draws are positive a.s.; guard against float underflow so the
    # support-equals-facts invariant cannot be broken.
    w = np.maximum(w, np.finfo(np.float64).tiny)
    w = w / w.sum()
    mass = np.zeros(meta.n_statements)
    mass[facts] = w
    return World(facts=facts, dist=Dist(mass))


def sample_corpus(world: World, n: int, rng: np.random.Generator) -> Corpus:
    """Draw n i.i.d. statements from the world's distribution."""
    if n < 1:
        raise ValueError("corpus size must be at least 1")
    return Corpus(rng.multinomial(n, world.dist.mass))


@dataclass(frozen=True)
class Posterior:
    """Exact posterior over fact supports given a corpus.

    Candidates are every support F with O subseteq F whose size carries
    prior mass; weight(F) is proportional to prior(F) times the
    Dirichlet-multinomial marginal likelihood of the corpus counts.
    Candidates are stored blockwise by support size as (extras, weights)
    where extras indexes the unseen statements added to O.
    """

    meta: MetaSpec
    corpus: Corpus
    sizes: tuple[int, ...]
    extras_blocks: tuple[np.ndarray, ...]  # per size: (n_candidates, size-|O|) ids
    weight_blocks: tuple[np.ndarray, ...]
    fact_marginals: np.ndarray  # Pr[y in F | X], length N
    expected_fu: float  # E[|F intersect U| | X]

    @property
    def n_candidates(self) -> int:
        return sum(len(wb) for wb in self.weight_blocks)

    @cached_property
    def supports(self) -> list[tuple[frozenset, float]]:
        """Materialized (fact-set candidate, weight) pairs. Small universes only."""
        observed = [int(y) for y in self.corpus.observed]
        out = []
        for extras, ws in zip(self.extras_blocks, self.weight_blocks):
            for row, w in zip(extras, ws):
                out.append((frozenset(observed + [int(y) for y in row]), float(w)))
        return out

    @cached_property
    def _cum_weights(self) -> np.ndarray:
        return np.cumsum(np.concatenate(self.weight_blocks))

    def _candidate(self, idx: int) -> np.ndarray:
        """Full sorted support array of the idx-th candidate."""
        for extras, ws in zip(self.extras_blocks, self.weight_blocks):
            if idx < len(ws):
                return np.sort(np.concatenate([self.corpus.observed, extras[idx]]))
            idx -= len(ws)
        raise IndexError(idx)


def exact_posterior(
    meta: MetaSpec, corpus: Corpus, cap: int = DEFAULT_ENUMERATION_CAP
) -> Posterior:
    """Enumerate the posterior over candidate supports for a corpus.

    Raises EnumerationCapError when the candidate count exceeds cap, and
    ValueError when no candidate support is consistent with the corpus.
    """
    if corpus.n_statements != meta.n_statements:
        raise ValueError("dimension mismatch: corpus and meta universe sizes differ")
    observed = corpus.observed
    unseen = corpus.unseen
    o, u = observed.size, unseen.size
    n = corpus.n

    sizes = [j for j in meta.support_sizes() if o <= j <= o + u]
    if not sizes:
        raise ValueError("corpus is inconsistent with every candidate support")
    n_candidates = sum(math.comb(u, j - o) for j in sizes)
    if n_candidates > cap:
        raise EnumerationCapError(
            f"universe too large for exact posterior: {n_candidates} candidates > cap {cap}"
        )

    alpha = meta.alpha
    counts_obs = corpus.counts[observed]
    # Dirichlet-multinomial log marginal likelihood; only the support size
    # varies across candidates since unseen members contribute zero counts.
    def log_dm(j: int) -> float:
        return float(
            gammaln(j * alpha)
            - gammaln(j * alpha + n)
            + np.sum(gammaln(alpha + counts_obs) - gammaln(alpha))
        )

    if meta.support_prior == "weighted-subsets":
        log_w_unseen = np.log(meta.weights[unseen]) if u else np.zeros(0)
    else:
        log_w_unseen = None

    extras_blocks: list[np.ndarray] = []
    log_weight_blocks: list[np.ndarray] = []
    for j in sizes:
        c = j - o
        n_j = math.comb(u, c)
        flat = np.fromiter(
            itertools.chain.from_iterable(itertools.combinations(range(u), c)),
            dtype=np.int64,
            count=n_j * c,
        )
        extras_local = flat.reshape(n_j, c)
        logw = np.full(n_j, log_dm(j))
        if meta.mixed_sizes and meta.support_prior == "uniform-k-subsets":
            logw -= gammaln(meta.n_statements + 1) - gammaln(j + 1) - gammaln(meta.n_statements - j + 1)
        if log_w_unseen is not None and c > 0:
            logw += log_w_unseen[extras_local].sum(axis=1)
        extras_blocks.append(unseen[extras_local] if c else extras_local)
        log_weight_blocks.append(logw)

    all_log = np.concatenate(log_weight_blocks)
    norm = logsumexp(all_log)
    weight_blocks = [np.exp(lw - norm) for lw in log_weight_blocks]

    marginals = np.zeros(meta.n_statements)
    marginals[observed] = 1.0
    for extras, ws in zip(extras_blocks, weight_blocks):
        if extras.shape[1]:
            np.add.at(marginals, extras.ravel(), np.repeat(ws, extras.shape[1]))
    expected_fu = float(marginals[unseen].sum()) if u else 0.0

    return Posterior(
        meta=meta,
        corpus=corpus,
        sizes=tuple(sizes),
        extras_blocks=tuple(extras_blocks),
        weight_blocks=tuple(weight_blocks),
        fact_marginals=marginals,
        expected_fu=expected_fu,
    )


def regularity_ratio(post: Posterior) -> float:
    """Smallest r such that every unseen fact marginal is <= r * mean.

    r = max_{y in U} Pr[y in F | X] * |U| / E[|F intersect U| | X]; equals 1
    exactly when the posterior treats all unseen statements alike.
    """
    unseen = post.corpus.unseen
    if unseen.size == 0:
        raise ValueError("regularity ratio needs at least one unseen statement")
    if post.expected_fu == 0.0:
        warnings.warn("no unseen statement can be a fact; regularity ratio defaults to 1")
        return 1.0
    return float(post.fact_marginals[unseen].max() * unseen.size / post.expected_fu)


def prob_hallucinate(g: Dist, post: Posterior) -> float:
    """Posterior probability that g places mass outside the fact set.

    Sums candidate weights where the support fails to cover every
    statement with positive g-mass; exact given the enumerated posterior.
    """
    if g.n_statements != post.corpus.n_statements:
        raise ValueError("dimension mismatch: g and posterior universe sizes differ")
    positive = np.flatnonzero(g.mass > 0)
    needed = np.setdiff1d(positive, post.corpus.observed)  # must all lie in F
    prob = 0.0
    for extras, ws in zip(post.extras_blocks, post.weight_blocks):
        if needed.size > extras.shape[1]:
            prob += float(ws.sum())
            continue
        covered = np.isin(extras, needed).sum(axis=1) == needed.size
        prob += float(ws[~covered].sum())
    return min(max(prob, 0.0), 1.0)


def expected_hallucination(g: Dist, post: Posterior) -> float:
    """Posterior expectation of g's mass on the hallucination set."""
    if g.n_statements != post.corpus.n_statements:
        raise ValueError("dimension mismatch: g and posterior universe sizes differ")
    unseen = post.corpus.unseen
    return float(np.sum(g.mass[unseen] * (1.0 - post.fact_marginals[unseen])))


def expected_world_probabilities(post: Posterior) -> np.ndarray:
    """Posterior mean document distribution E[p(y) | X], length N.

    Per candidate support F the Dirichlet posterior mean of p(y) is
    (alpha + count_y) / (|F| alpha + n) for y in F and 0 otherwise.
    """
    meta, corpus = post.meta, post.corpus
    out = np.zeros(meta.n_statements)
    n = corpus.n
    for j, extras, ws in zip(post.sizes, post.extras_blocks, post.weight_blocks):
        denom = j * meta.alpha + n
        block_total = float(ws.sum())
        out[corpus.observed] += block_total * (meta.alpha + corpus.counts[corpus.observed]) / denom
        if extras.shape[1]:
            np.add.at(out, extras.ravel(), np.repeat(ws, extras.shape[1]) * meta.alpha / denom)
    return out


def conditional_world_sampler(post: Posterior, rng: np.random.Generator) -> World:
    """Draw a world from the posterior: support by weight, then weights from
    the Dirichlet posterior restricted to that support."""
    idx = int(np.searchsorted(post._cum_weights, rng.random(), side="right"))
    idx = min(idx, post.n_candidates - 1)
    facts = post._candidate(idx)
    w = rng.dirichlet(post.meta.alpha + post.corpus.counts[facts])
    w = np.maximum(w, np.finfo(np.float64).tiny)
    w = w / w.sum()
    mass = np.zeros(post.meta.n_statements)
    mass[facts] = w
    return World(facts=facts, dist=Dist(mass))
