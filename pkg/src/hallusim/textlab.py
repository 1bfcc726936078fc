"""Desk-scale text experiments: preprocessing, unsmoothed n-gram models,
ancestral generation, judge protocols, label persistence, and the
seven-field tuple experiment.
"""

from __future__ import annotations

import json
import logging
import sys
import time
import unicodedata
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

BOS = "<s>"
EOS = "</s>"

MAX_SENTENCE_TOKENS = 20

JUDGE_PROMPT_TEMPLATE = (
    "Is the following text a review? Respond with a 1 if it is, "
    "or with a 0 if it isn't. ⟨BEGIN TEXT⟩ {text} ⟨END TEXT⟩"
)

TUPLE_FIELDS = ("name", "dob", "birthplace", "degree", "college", "job", "employer")


class JudgeError(RuntimeError):
    pass


class UnparseableVerdictError(JudgeError):
    def __init__(self, reply: str):
        super().__init__(f"no parsable 0/1 verdict in reply: {reply!r}")
        self.reply = reply


class JudgeTransportError(JudgeError):
    pass


class JudgeAuthError(JudgeError):
    pass


@dataclass(frozen=True)
class Sentence:
    """A tokenized statement. preprocess() guarantees lowercase,
    punctuation-free tokens; token count is capped structurally."""

    tokens: tuple[str, ...]
    raw: str

    def __post_init__(self):
        if not 1 <= len(self.tokens) <= MAX_SENTENCE_TOKENS:
            raise ValueError(f"token count must lie in [1, {MAX_SENTENCE_TOKENS}]")


def _is_stripped(ch: str) -> bool:
    cat = unicodedata.category(ch)
    return cat.startswith("P") or (ord(ch) < 128 and cat.startswith("S"))


def preprocess(raw_text: str) -> Sentence | None:
    """Lowercase, strip punctuation and ASCII symbols, whitespace-tokenize.

    Returns None when the result has no tokens or more than 20, matching
    the corpus length filter.
    """
    lowered = raw_text.lower()
    cleaned = "".join(ch for ch in lowered if not _is_stripped(ch))
    tokens = tuple(sys.intern(t) for t in cleaned.split())
    if not 1 <= len(tokens) <= MAX_SENTENCE_TOKENS:
        return None
    return Sentence(tokens=tokens, raw=" ".join(tokens))


class NgramModel:
    """Unsmoothed maximum-likelihood n-gram model with BOS/EOS padding.

    Context tables are built once by train_ngram and frozen; conditional
    probabilities are raw count ratios, so generation can only follow
    transitions observed in training.
    """

    def __init__(self, order: int):
        if not 2 <= order <= 7:
            raise ValueError("order must lie in [2, 7]")
        self.order = order
        self.counts: dict[tuple, dict[str, int]] = {}
        self.vocabulary: set[str] = {BOS, EOS}
        self._sampler: dict[tuple, tuple[list[str], np.ndarray]] = {}

    def _freeze(self):
        for context, nexts in self.counts.items():
            tokens = sorted(nexts)
            weights = np.array([nexts[t] for t in tokens], dtype=np.float64)
            self._sampler[context] = (tokens, np.cumsum(weights / weights.sum()))

    def conditional_prob(self, context: Sequence[str], token: str) -> float:
        nexts = self.counts.get(tuple(context))
        if not nexts:
            return 0.0
        return nexts.get(token, 0) / sum(nexts.values())


def _as_token_sequences(sentences: Iterable) -> list[tuple[str, ...]]:
    out = []
    for s in sentences:
        out.append(tuple(s.tokens) if isinstance(s, Sentence) else tuple(s))
    return out


def train_ngram(sentences: Iterable, n: int) -> NgramModel:
    """Count n-gram transitions over sentences padded with n-1 BOS and one EOS."""
    seqs = _as_token_sequences(sentences)
    if not seqs:
        raise ValueError("cannot train on an empty corpus")
    model = NgramModel(n)
    for seq in seqs:
        if not seq:
            raise ValueError("cannot train on an empty sentence")
        padded = (BOS,) * (n - 1) + seq + (EOS,)
        model.vocabulary.update(seq)
        for i in range(len(padded) - n + 1):
            context = padded[i : i + n - 1]
            nxt = padded[i + n - 1]
            model.counts.setdefault(context, {}).setdefault(nxt, 0)
            model.counts[context][nxt] += 1
    model._freeze()
    return model


def generate(model: NgramModel, rng: np.random.Generator, max_len: int = 20) -> Sentence:
    """Ancestral sampling from the BOS context until EOS or max_len tokens."""
    context = (BOS,) * (model.order - 1)
    tokens: list[str] = []
    while len(tokens) < max_len:
        choices, cum = model._sampler[context]
        nxt = choices[int(np.searchsorted(cum, rng.random(), side="right"))]
        if nxt == EOS:
            break
        tokens.append(nxt)
        context = (context + (nxt,))[1:]
    return Sentence(tokens=tuple(tokens), raw=" ".join(tokens))


# ---------------------------------------------------------------------------
# Judges.
# ---------------------------------------------------------------------------


def judge_prompt(text: str) -> str:
    if not text:
        raise ValueError("cannot build a judge prompt for empty text")
    return JUDGE_PROMPT_TEMPLATE.format(text=text)


def parse_verdict(reply: str) -> int:
    """First literal '0' or '1' character in the reply decides the verdict."""
    for ch in reply:
        if ch == "0":
            return 0
        if ch == "1":
            return 1
    raise UnparseableVerdictError(reply)


@dataclass(frozen=True)
class EndpointConfig:
    url: str
    api_key_env: str = "JUDGE_API_KEY"
    timeout: float = 30.0
    max_attempts: int = 3
    debug_http: bool = False


def remote_judge(endpoint: EndpointConfig, model_name: str, text: str) -> int:
    """Send the judge prompt as a chat-completion request and parse the reply.

    Retries transport failures with exponential backoff; authentication
    failures and unparseable replies are raised as typed errors.
    """
    import os

    import requests

    payload = {
        "model": model_name,
        "messages": [{"role": "user", "content": judge_prompt(text)}],
    }
    headers = {"Content-Type": "application/json"}
    key = os.environ.get(endpoint.api_key_env)
    if key:
        headers["Authorization"] = f"Bearer {key}"
    if endpoint.debug_http:
        logger.info("judge request: %s", json.dumps(payload))

    last_error: Exception | None = None
    for attempt in range(endpoint.max_attempts):
        try:
            resp = requests.post(
                endpoint.url, json=payload, headers=headers, timeout=endpoint.timeout
            )
        except requests.RequestException as exc:
            last_error = exc
            time.sleep(0.5 * 2**attempt)
            continue
        if endpoint.debug_http:
            logger.info("judge response [%d]: %s", resp.status_code, resp.text)
        if resp.status_code in (401, 403):
            raise JudgeAuthError(f"authentication failed ({resp.status_code})")
        if resp.status_code >= 400:
            last_error = JudgeTransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
            time.sleep(0.5 * 2**attempt)
            continue
        try:
            content = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError) as exc:
            raise JudgeTransportError(f"malformed judge response: {exc}") from exc
        return parse_verdict(content)
    raise JudgeTransportError(f"judge unreachable after {endpoint.max_attempts} attempts: {last_error}")


# ---------------------------------------------------------------------------
# Label persistence.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LabelRecord:
    text: str
    judge: str
    verdict: int
    ts: float
    dup: bool = False

    def __post_init__(self):
        if self.verdict not in (0, 1):
            raise ValueError("verdict must be 0 or 1")

    def to_json(self) -> dict:
        return {
            "text": self.text,
            "judge": self.judge,
            "verdict": self.verdict,
            "ts": self.ts,
            "dup": self.dup,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LabelRecord":
        return cls(
            text=obj["text"],
            judge=obj["judge"],
            verdict=int(obj["verdict"]),
            ts=float(obj["ts"]),
            dup=bool(obj.get("dup", False)),
        )


def load_labels(path) -> list[LabelRecord]:
    """Read the append-only JSONL store, tolerating a torn final line so a
    session killed mid-write stays resumable."""
    records = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    records.append(LabelRecord.from_json(json.loads(line)))
                except (json.JSONDecodeError, KeyError):
                    logger.warning("skipping malformed label line: %r", line[:80])
    except FileNotFoundError:
        pass
    return records


def append_label(path, record: LabelRecord):
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(record.to_json(), sort_keys=True) + "\n")
        fh.flush()


def interactive_label(
    statements: Iterable[dict],
    store_path,
    judge_id: str = "human",
    input_fn: Callable[[str], str] | None = None,
    output=None,
) -> dict:
    """Terminal labeling loop over {"text", "dup"} records.

    Skips statements flagged as training duplicates, duplicates within the
    stream, and statements already labeled by this judge in the store; the
    store is append-only JSONL so an interrupted session resumes at the
    first unlabeled statement. Keys: 1 = is a review, 0 = is not, q = stop.
    Returns counts and the running judged-hallucination fraction (share of
    0 verdicts).
    """
    out = output or sys.stdout
    if input_fn is None:
        input_fn = input
    already = {r.text for r in load_labels(store_path) if r.judge == judge_id}
    seen: set[str] = set()
    labeled = 0
    zeros = 0
    skipped = 0
    for item in statements:
        text = item["text"]
        if item.get("dup") or text in seen or text in already:
            skipped += 1
            continue
        seen.add(text)
        verdict = None
        while verdict is None:
            try:
                key = input_fn(f"{text}\n  [1=review / 0=not / q=quit] ").strip()
            except EOFError:
                key = "q"
            if key == "q":
                verdict = -1
            elif key in ("0", "1"):
                verdict = int(key)
            else:
                print("  please answer 0, 1, or q", file=out)
        if verdict == -1:
            break
        append_label(
            store_path,
            LabelRecord(text=text, judge=judge_id, verdict=verdict, ts=time.time(), dup=False),
        )
        labeled += 1
        zeros += 1 if verdict == 0 else 0
    rate = zeros / labeled if labeled else None
    if labeled == 0:
        logger.warning("no statements labeled; hallucination rate undefined")
    return {"labeled": labeled, "skipped": skipped, "hallucination_rate": rate}


# ---------------------------------------------------------------------------
# Tuple experiment.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TupleRecord:
    """One seven-field record; every field nonempty."""

    name: str
    dob: str
    birthplace: str
    degree: str
    college: str
    job: str
    employer: str

    def __post_init__(self):
        for f in TUPLE_FIELDS:
            if not getattr(self, f):
                raise ValueError(f"tuple field {f!r} must be nonempty")

    def as_tokens(self) -> tuple[str, ...]:
        return tuple(getattr(self, f) for f in TUPLE_FIELDS)


def load_tuples(path) -> list[TupleRecord]:
    """Read a CSV with the seven named columns into TupleRecords."""
    import csv

    records = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(TUPLE_FIELDS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"tuple CSV is missing columns: {sorted(missing)}")
        for row in reader:
            records.append(TupleRecord(**{f: row[f] for f in TUPLE_FIELDS}))
    return records


def synthetic_tuple_dataset(
    count: int,
    rng: np.random.Generator,
    pool_sizes: dict | None = None,
) -> list[TupleRecord]:
    """Field-tagged synthetic tuples for the desk-scale experiment.

    Names are unique per record; the other six fields draw from finite
    pools whose tags keep per-field vocabularies disjoint, so n-gram
    generations are always well-formed seven-field sequences.
    """
    # Pools sized so consecutive field triples are mostly unique across a
    # few thousand records (high orders memorize) while single fields are
    # heavily shared (low orders recombine).
    sizes = {
        "dob": 365,
        "birthplace": 120,
        "degree": 40,
        "college": 150,
        "job": 80,
        "employer": 200,
    }
    if pool_sizes:
        sizes.update(pool_sizes)
    records = []
    for i in range(count):
        records.append(
            TupleRecord(
                name=f"name{i:05d}",
                dob=f"dob{rng.integers(sizes['dob']):04d}",
                birthplace=f"place{rng.integers(sizes['birthplace']):04d}",
                degree=f"degree{rng.integers(sizes['degree']):04d}",
                college=f"college{rng.integers(sizes['college']):04d}",
                job=f"job{rng.integers(sizes['job']):04d}",
                employer=f"employer{rng.integers(sizes['employer']):04d}",
            )
        )
    return records


def run_tuple_experiment(
    dataset: list[TupleRecord],
    corpus_size: int,
    n: int,
    generations: int,
    seed: int,
) -> dict:
    """Sample a training corpus with replacement, train an n-gram over the
    seven-field sequences, generate, and score innovation (absent from the
    training corpus) and hallucination (absent from the full dataset)."""
    if not dataset:
        raise ValueError("tuple dataset is empty")
    if not 2 <= n <= 5:
        raise ValueError("tuple experiment order must lie in [2, 5]")
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, len(dataset), size=corpus_size)
    training = [dataset[i].as_tokens() for i in picks]
    training_set = set(training)
    dataset_set = {rec.as_tokens() for rec in dataset}

    model = train_ngram(training, n)
    generated = [tuple(generate(model, rng, max_len=7).tokens) for _ in range(generations)]
    innovation = sum(1 for t in generated if t not in training_set) / generations
    hallucination = sum(1 for t in generated if t not in dataset_set) / generations
    return {
        "n": n,
        "corpus_size": corpus_size,
        "generations": generations,
        "seed": seed,
        "innovation_rate": innovation,
        "hallucination_rate": hallucination,
    }
