"""Command-line orchestration: verify, ngram, judge, and report subcommands.

Every run resolves its configuration (JSON file plus flag overrides, flags
winning), records it to the output directory, and is deterministic for a
fixed seed; only remote judging depends on the outside world.

Exit codes: 0 success, 1 verification failure, 2 config/precondition
error, 3 I/O error, 4 network error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import measures, svgplot, textlab, verify
from .worlds import MetaSpec

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NETWORK = 4


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _write_csv(path: Path, header: list[str], rows: list[dict]):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(row.get(col)) for col in header])
    path.write_bytes(buf.getvalue().encode("utf-8"))


def _resolve_config(args, defaults: dict) -> dict:
    cfg = dict(defaults)
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            loaded = json.load(fh)
        unknown = set(loaded) - set(defaults)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key in defaults:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
    return cfg


def _prepare_out(cfg: dict) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    resolved = {k: v for k, v in sorted(cfg.items())}
    (out / "config.resolved.json").write_text(
        json.dumps(resolved, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return out


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

VERIFY_DEFAULTS = {
    "out": "out",
    "seed": 0,
    "n_statements": 12,
    "k_max": 3,
    "alpha": 1.0,
    "corpus_n": 8,
    "trials": 1000,
    "deltas": None,  # None -> per-corpus default grid
    "theorems": list(verify.THEOREMS),
    "models": ["empirical", "scatter(0.5)", "spike(0.5)", "calibrated(4)", "perturbed(0.1,4)"],
    "n_corpora": 1,
    "det_instances": 1000,
    "exact_n_statements": 8,
    "exact_k_max": 2,
    "exact_corpus_n": 3,
    "threads": 1,
}

VERIFY_CSV_HEADER = [
    "theorem", "N", "K", "n", "delta", "r", "model",
    "trials", "successes", "freq", "guaranteed", "slack", "pass",
]


def cmd_verify(cfg: dict) -> int:
    out = _prepare_out(cfg)
    meta = MetaSpec(
        n_statements=int(cfg["n_statements"]),
        k_max=int(cfg["k_max"]),
        alpha=float(cfg["alpha"]),
        seed=int(cfg["seed"]),
    )
    summary: dict = {}

    det = verify.run_deterministic_battery(int(cfg["det_instances"]), seed=int(cfg["seed"]))
    summary["deterministic"] = {
        "instances": det["instances"],
        "failures": {k: len(v) for k, v in det["failures"].items()},
        "all_pass": det["all_pass"],
    }
    if not det["all_pass"]:
        failed = [k for k, v in det["failures"].items() if v]
        print(f"verification failure: unconditional check(s) failed: {failed}", file=sys.stderr)

    exact_meta = MetaSpec(
        n_statements=int(cfg["exact_n_statements"]),
        k_max=int(cfg["exact_k_max"]),
        alpha=float(cfg["alpha"]),
    )
    exact = verify.exhaustive_exact_battery(exact_meta, int(cfg["exact_corpus_n"]))
    summary["exact"] = {
        "corpora": exact["corpora"],
        "checks": exact["checks"],
        "marginal_errors": len(exact["marginal_errors"]),
        "ratio_errors": len(exact["ratio_errors"]),
        "failed_checks": [c.name for c in exact["failed_checks"]],
        "all_pass": exact["all_pass"],
    }
    if not exact["all_pass"]:
        print("verification failure: exact posterior battery failed", file=sys.stderr)

    user_deltas = cfg["deltas"]
    n_draws = int(cfg["corpus_n"])
    trials = int(cfg["trials"])
    workers = int(cfg["threads"])
    rows: list[dict] = []
    mc_all_pass = True
    for i in range(int(cfg["n_corpora"])):
        corpus_seed = int(np.random.SeedSequence([int(cfg["seed"]), i]).generate_state(1)[0])
        _, corpus, _ = verify.sample_setting(meta, n_draws, corpus_seed)
        u_size = corpus.unseen.size
        boundary = meta.k_max / u_size
        if user_deltas is not None:
            bad = [d for d in user_deltas if d <= boundary]
            if bad and any(
                t in cfg["theorems"] for t in ("markov", "markov_r", "cor_markov_mm")
            ):
                raise ConfigError(
                    f"delta {bad[0]} violates the markov-family precondition "
                    f"delta > K/|U| = {boundary:.6g} for corpus seed {corpus_seed}"
                )
            deltas = list(user_deltas)
        else:
            deltas = verify.delta_grid(meta.k_max, u_size)
        for theorem in cfg["theorems"]:
            if theorem in ("markov", "markov_r", "cor_markov_mm"):
                theorem_deltas = [d for d in deltas if d > boundary]
            elif theorem in ("kv_cor1", "kv_cor2"):
                theorem_deltas = deltas
            else:
                theorem_deltas = [None]
            for delta in theorem_deltas:
                for kind in cfg["models"]:
                    report = verify.mc_verify(
                        theorem, meta, kind, n_draws, delta, trials, corpus_seed,
                        workers=workers,
                    )
                    rows.append(report.to_row())
                    mc_all_pass = mc_all_pass and report.passed
    summary["monte_carlo"] = {"cells": len(rows), "all_pass": mc_all_pass}
    summary["all_pass"] = det["all_pass"] and exact["all_pass"] and mc_all_pass

    _write_csv(out / "verify.csv", VERIFY_CSV_HEADER, rows)
    (out / "verify.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    if not summary["all_pass"]:
        return EXIT_VERIFY_FAIL
    print(f"verify: all checks passed ({len(rows)} Monte Carlo cells); reports in {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# ngram
# ---------------------------------------------------------------------------

NGRAM_DEFAULTS = {
    "out": "out",
    "seed": 0,
    "corpus": None,  # None -> bundled mini corpus
    "n_values": [2, 3, 4, 5, 6, 7],
    "generations": 300,
    "embeddings": None,
    "generated_embeddings": None,
    "semantic_threshold": 0.95,
    "confidence": 0.95,
}


def _bundled_corpus_path() -> Path:
    return Path(str(resources.files("hallusim").joinpath("data/mini_reviews.txt")))


def cmd_ngram(cfg: dict) -> int:
    out = _prepare_out(cfg)
    corpus_path = Path(cfg["corpus"]) if cfg["corpus"] else _bundled_corpus_path()
    if not corpus_path.exists():
        print(f"corpus file not found: {corpus_path}", file=sys.stderr)
        return EXIT_IO
    lines = corpus_path.read_text(encoding="utf-8").splitlines()
    sentences = [s for s in (textlab.preprocess(line) for line in lines) if s is not None]
    if not sentences:
        print("corpus is empty after preprocessing", file=sys.stderr)
        return EXIT_IO
    training_set = {s.tokens for s in sentences}

    confidence = float(cfg["confidence"])
    generations = int(cfg["generations"])
    n_values = [int(n) for n in cfg["n_values"]]
    gen_records: list[dict] = []
    rows: list[dict] = []
    for n in n_values:
        model = textlab.train_ngram(sentences, n)
        rng = np.random.default_rng([int(cfg["seed"]), n])
        novel = 0
        texts: list[textlab.Sentence] = []
        for _ in range(generations):
            sent = textlab.generate(model, rng)
            texts.append(sent)
            if sent.tokens not in training_set:
                novel += 1
        ci = measures.clopper_pearson(novel, generations, confidence)
        rows.append(
            {
                "n": n,
                "generations": generations,
                "innovation_rate": ci.point,
                "innovation_lo": ci.lo,
                "innovation_hi": ci.hi,
            }
        )
        for sent in texts:
            gen_records.append(
                {"n": n, "text": sent.raw, "dup": sent.tokens in training_set}
            )

    header = ["n", "generations", "innovation_rate", "innovation_lo", "innovation_hi"]
    emb_path = cfg["embeddings"]
    gen_emb_path = cfg["generated_embeddings"]
    if emb_path and gen_emb_path:
        try:
            training_table = measures.load_embedding_table(emb_path)
            generated_table = measures.load_embedding_table(gen_emb_path)
        except measures.EmbFileError as exc:
            print(f"embedding table error: {exc}", file=sys.stderr)
            return EXIT_IO
        if training_table.count != len(lines):
            raise ConfigError(
                f"training embeddings have {training_table.count} rows, corpus has {len(lines)} lines"
            )
        if generated_table.count != len(gen_records):
            raise ConfigError(
                f"generated embeddings have {generated_table.count} rows, "
                f"run produced {len(gen_records)} generations"
            )
        best = measures.max_cosine_per_row(generated_table, training_table)
        threshold = float(cfg["semantic_threshold"])
        offset = 0
        for row in rows:
            block = best[offset : offset + row["generations"]]
            offset += row["generations"]
            k = int(np.sum(block < threshold))
            ci = measures.clopper_pearson(k, len(block), confidence)
            row["semantic_rate"] = ci.point
            row["semantic_lo"] = ci.lo
            row["semantic_hi"] = ci.hi
        header += ["semantic_rate", "semantic_lo", "semantic_hi"]
    elif emb_path or gen_emb_path:
        raise ConfigError(
            "semantic rates need both --embeddings (training) and "
            "--generated-embeddings; provide both or neither"
        )

    _write_csv(out / "rates.csv", header, rows)
    with open(out / "generations.jsonl", "w", encoding="utf-8") as fh:
        for rec in gen_records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    print(f"ngram: wrote {len(rows)} rate rows and {len(gen_records)} generations to {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# judge
# ---------------------------------------------------------------------------

JUDGE_DEFAULTS = {
    "out": "out",
    "seed": 0,
    "generations_file": None,  # default <out>/generations.jsonl
    "judge_mode": "human",
    "endpoint": None,
    "model": None,
    "api_key_env": "JUDGE_API_KEY",
    "timeout": 30.0,
    "max_in_flight": 4,
    "debug_http": False,
}


def _load_generations(path: Path) -> list[dict]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def _judged_rates(records: list[dict], labels: list[textlab.LabelRecord]) -> dict:
    """Judged hallucination rates per judge and per n, under both
    denominator conventions.

    "all" weights each labeled statement by its generation multiplicity
    (a verdict is assumed to apply to every duplicate of its text);
    "excl" counts each distinct non-training statement once, matching the
    manual protocol that skips duplicates and training statements.
    """
    by_text: dict[str, dict] = {}
    for rec in records:
        info = by_text.setdefault(rec["text"], {"n": rec["n"], "dup": rec["dup"], "mult": 0})
        info["mult"] += 1
    rates: dict = {}
    for judge in sorted({r.judge for r in labels}):
        per_n: dict = {}
        for rec in labels:
            if rec.judge != judge or rec.text not in by_text:
                continue
            meta = by_text[rec.text]
            cell = per_n.setdefault(
                meta["n"], {"judged": 0, "zeros": 0, "judged_excl": 0, "zeros_excl": 0}
            )
            zero = 1 if rec.verdict == 0 else 0
            cell["judged"] += meta["mult"]
            cell["zeros"] += zero * meta["mult"]
            if not meta["dup"]:
                cell["judged_excl"] += 1
                cell["zeros_excl"] += zero
        rates[judge] = {
            str(n): {
                "judged": c["judged"],
                "hallucination_rate_all": c["zeros"] / c["judged"] if c["judged"] else None,
                "hallucination_rate_excl_dups": (
                    c["zeros_excl"] / c["judged_excl"] if c["judged_excl"] else None
                ),
            }
            for n, c in sorted(per_n.items())
        }
    return rates


def cmd_judge(cfg: dict) -> int:
    out = _prepare_out(cfg)
    gen_path = Path(cfg["generations_file"]) if cfg["generations_file"] else out / "generations.jsonl"
    if not gen_path.exists():
        print(f"generations file not found: {gen_path}", file=sys.stderr)
        return EXIT_IO
    records = _load_generations(gen_path)
    labels_path = out / "labels.jsonl"

    network_failures = 0
    if cfg["judge_mode"] == "human":
        stats = textlab.interactive_label(records, labels_path, judge_id="human")
        print(json.dumps({"human": stats}, indent=2))
    elif cfg["judge_mode"] == "remote":
        if not cfg["endpoint"] or not cfg["model"]:
            raise ConfigError("remote judging requires --endpoint and --model")
        if cfg["debug_http"]:
            import logging

            logging.basicConfig(level=logging.INFO)
        endpoint = textlab.EndpointConfig(
            url=cfg["endpoint"],
            api_key_env=cfg["api_key_env"],
            timeout=float(cfg["timeout"]),
            debug_http=bool(cfg["debug_http"]),
        )
        judge_id = cfg["model"]
        already = {r.text for r in textlab.load_labels(labels_path) if r.judge == judge_id}
        pending: list[dict] = []
        seen: set[str] = set()
        for rec in records:
            if rec["text"] in seen or rec["text"] in already:
                continue
            seen.add(rec["text"])
            pending.append(rec)
        from concurrent.futures import ThreadPoolExecutor

        def judge_one(rec):
            return rec, textlab.remote_judge(endpoint, judge_id, rec["text"])

        with ThreadPoolExecutor(max_workers=int(cfg["max_in_flight"])) as pool:
            futures = [pool.submit(judge_one, rec) for rec in pending]
            for fut in futures:
                try:
                    rec, verdict = fut.result()
                except textlab.UnparseableVerdictError as exc:
                    print(f"unparseable verdict: {exc}", file=sys.stderr)
                    continue
                except textlab.JudgeError as exc:
                    print(f"judge error: {exc}", file=sys.stderr)
                    network_failures += 1
                    continue
                import time as _time

                textlab.append_label(
                    labels_path,
                    textlab.LabelRecord(
                        text=rec["text"], judge=judge_id, verdict=verdict,
                        ts=_time.time(), dup=bool(rec.get("dup")),
                    ),
                )
    else:
        raise ConfigError(f"unknown judge mode {cfg['judge_mode']!r}")

    rates = _judged_rates(records, textlab.load_labels(labels_path))
    print(json.dumps({"judged_rates": rates}, indent=2, sort_keys=True))
    if network_failures:
        print(f"{network_failures} statements failed with network errors", file=sys.stderr)
        return EXIT_NETWORK
    return EXIT_OK


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

REPORT_DEFAULTS = {
    "out": "out",
    "seed": 0,
    "rates_file": None,  # default <out>/rates.csv
    "labels_file": None,  # default <out>/labels.jsonl
    "generations_file": None,  # default <out>/generations.jsonl
    "confidence": 0.95,
}


def cmd_report(cfg: dict) -> int:
    out = _prepare_out(cfg)
    rates_path = Path(cfg["rates_file"]) if cfg["rates_file"] else out / "rates.csv"
    labels_path = Path(cfg["labels_file"]) if cfg["labels_file"] else out / "labels.jsonl"
    gen_path = Path(cfg["generations_file"]) if cfg["generations_file"] else out / "generations.jsonl"
    for path in (rates_path, labels_path, gen_path):
        if not path.exists():
            print(f"input file not found: {path}", file=sys.stderr)
            return EXIT_IO

    rates_by_n: dict[int, dict] = {}
    with open(rates_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames:
            print(f"empty rates CSV: {rates_path}", file=sys.stderr)
            return EXIT_IO
        for i, row in enumerate(reader, start=2):
            try:
                rates_by_n[int(row["n"])] = {
                    "x": float(row["innovation_rate"]),
                    "x_lo": float(row["innovation_lo"]),
                    "x_hi": float(row["innovation_hi"]),
                }
            except (KeyError, ValueError) as exc:
                print(f"malformed rates CSV row {i}: {exc}", file=sys.stderr)
                return EXIT_IO
    if not rates_by_n:
        print(f"rates CSV has no data rows: {rates_path}", file=sys.stderr)
        return EXIT_IO

    records = _load_generations(gen_path)
    labels = textlab.load_labels(labels_path)
    text_to_n = {rec["text"]: rec["n"] for rec in records}
    confidence = float(cfg["confidence"])

    series: list[svgplot.Series] = []
    for judge in sorted({r.judge for r in labels}):
        counts: dict[int, list[int]] = {}
        for rec in labels:
            if rec.judge != judge or rec.text not in text_to_n:
                continue
            cell = counts.setdefault(text_to_n[rec.text], [0, 0])
            cell[0] += 1
            cell[1] += 1 if rec.verdict == 0 else 0
        points = []
        for n, (judged, zeros) in sorted(counts.items()):
            if n not in rates_by_n or judged == 0:
                continue
            x = rates_by_n[n]
            ci = measures.clopper_pearson(zeros, judged, confidence)
            points.append((x["x"], ci.point, x["x_lo"], x["x_hi"], ci.lo, ci.hi))
        if points:
            series.append(svgplot.Series(label=judge, points=points))
    if not series:
        print("no labeled statements match the generations file", file=sys.stderr)
        return EXIT_IO

    svg = svgplot.scatter_svg(
        series,
        x_label="innovation rate",
        y_label="judged hallucination rate",
        title="hallucination vs innovation",
    )
    (out / "figure1.svg").write_bytes(svg.encode("utf-8"))
    print(f"report: wrote {out / 'figure1.svg'} with {sum(len(s.points) for s in series)} points")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hallusim")
    sub = parser.add_subparsers(dest="command", required=True)

    pv = sub.add_parser("verify", help="run the bound battery and Monte Carlo sweeps")
    pv.add_argument("--config", type=str)
    pv.add_argument("--seed", type=int)
    pv.add_argument("--out", type=str)
    pv.add_argument("--trials", type=int)
    pv.add_argument("--delta", type=float, action="append", dest="deltas")
    pv.add_argument("--threads", type=int)
    pv.add_argument("--n-statements", type=int, dest="n_statements")
    pv.add_argument("--k-max", type=int, dest="k_max")
    pv.add_argument("--corpus-n", type=int, dest="corpus_n")
    pv.add_argument("--n-corpora", type=int, dest="n_corpora")
    pv.add_argument("--det-instances", type=int, dest="det_instances")
    pv.add_argument("--theorem", action="append", dest="theorems", choices=verify.THEOREMS)
    pv.add_argument("--model", action="append", dest="models")

    pn = sub.add_parser("ngram", help="train n-gram models and measure innovation rates")
    pn.add_argument("--config", type=str)
    pn.add_argument("--seed", type=int)
    pn.add_argument("--out", type=str)
    pn.add_argument("--corpus", type=str)
    pn.add_argument("--n-values", type=_int_list, dest="n_values")
    pn.add_argument("--generations", type=int)
    pn.add_argument("--embeddings", type=str)
    pn.add_argument("--generated-embeddings", type=str, dest="generated_embeddings")

    pj = sub.add_parser("judge", help="label generations by hand or via a remote model")
    pj.add_argument("--config", type=str)
    pj.add_argument("--seed", type=int)
    pj.add_argument("--out", type=str)
    pj.add_argument("--generations-file", type=str, dest="generations_file")
    pj.add_argument("--judge-mode", choices=("human", "remote"), dest="judge_mode")
    pj.add_argument("--endpoint", type=str)
    pj.add_argument("--model", type=str)
    pj.add_argument("--timeout", type=float)
    pj.add_argument("--debug-http", action="store_const", const=True, dest="debug_http")

    pr = sub.add_parser("report", help="emit the hallucination-vs-innovation scatter")
    pr.add_argument("--config", type=str)
    pr.add_argument("--seed", type=int)
    pr.add_argument("--out", type=str)
    pr.add_argument("--rates-file", type=str, dest="rates_file")
    pr.add_argument("--labels-file", type=str, dest="labels_file")
    pr.add_argument("--generations-file", type=str, dest="generations_file")
    return parser


COMMANDS = {
    "verify": (cmd_verify, VERIFY_DEFAULTS),
    "ngram": (cmd_ngram, NGRAM_DEFAULTS),
    "judge": (cmd_judge, JUDGE_DEFAULTS),
    "report": (cmd_report, REPORT_DEFAULTS),
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    fn, defaults = COMMANDS[args.command]
    try:
        cfg = _resolve_config(args, defaults)
    except (ConfigError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        return fn(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        # library-level precondition violations surface as config errors
        print(f"precondition error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
