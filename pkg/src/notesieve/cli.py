"""Unified command-line interface.

Exit codes: 0 ok, 2 validation error, 3 fingerprint mismatch.
"""

from __future__ import annotations

import dataclasses
import json
import os
import sys
from pathlib import Path

import click

from .corpus import (CorpusError, GeneratorConfig, corpus_stats,
                     generate_synthetic, load_corpus, write_corpus)
from .evaluation import (ExperimentConfig, classification_metrics,
                         report_markdown, retrieval_metrics, run_experiment,
                         _session_rankings)
from .featurizer import (FeatureSchema, ablate_recent, build_dataset,
                         read_examples, write_examples)
from .flowstats import session_copy_analysis
from .model import LogisticModel, crossval_tune, examples_to_csr, train
from .sessionizer import sessionize_corpus
from .textfeat import VocabConfig, Vocabulary, build_vocabulary

EXIT_VALIDATION = 2
EXIT_FINGERPRINT = 3


def _fail(exc: Exception) -> None:
    msg = str(exc)
    code = EXIT_FINGERPRINT if "fingerprint" in msg else EXIT_VALIDATION
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


@click.group()
def main() -> None:
    """notesieve: dynamic clinical-note retrieval toolkit."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--seed", type=int, default=None, help="Overrides the config seed.")
@click.option("--out", "out_dir", type=click.Path(), required=True)
def generate(config_path, seed, out_dir):
    """Generate a synthetic corpus into OUT."""
    try:
        cfg = GeneratorConfig.from_json(config_path) if config_path else GeneratorConfig()
        if seed is not None:
            cfg = dataclasses.replace(cfg, seed=seed)
        corpus = generate_synthetic(cfg)
        write_corpus(corpus, out_dir)
    except (CorpusError, ValueError, OSError) as exc:
        _fail(exc)
    click.echo(f"wrote corpus to {out_dir}")


@main.command()
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True), required=True)
def stats(corpus_dir):
    """Print corpus statistics as JSON."""
    try:
        report = corpus_stats(load_corpus(corpus_dir))
    except (CorpusError, ValueError) as exc:
        _fail(exc)
    click.echo(json.dumps(report.to_dict(), indent=2, sort_keys=True))


@main.command()
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--keep-all", is_flag=True, help="Emit all sessions, not only information-seeking ones.")
def sessionize(corpus_dir, out_path, keep_all):
    """Segment every visit into labeled sessions (one JSON line each)."""
    try:
        corpus = load_corpus(corpus_dir)
        session_sets = sessionize_corpus(corpus, keep_all=keep_all)
    except (CorpusError, ValueError) as exc:
        _fail(exc)
    with open(out_path, "w", encoding="utf-8") as fh:
        for visit_id in sorted(session_sets):
            for s in session_sets[visit_id].sessions:
                fh.write(json.dumps({
                    "visit_id": s.visit_id, "index": s.index,
                    "start_time": s.start_time, "end_time": s.end_time,
                    "n_read_events": len(s.read_doc_ids),
                    "available_count": len(s.available_doc_ids),
                    "labels": dict(sorted(s.labels.items())),
                }, sort_keys=True) + "\n")
    click.echo(f"wrote sessions to {out_path}")


@main.command()
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True), required=True)
@click.option("--role", type=click.Choice(["source", "written"]), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--max-unigrams", type=int, default=20000)
@click.option("--min-count", type=int, default=10)
@click.option("--n-bigrams", type=int, default=500)
@click.option("--n-trigrams", type=int, default=500)
def vocab(corpus_dir, role, out_path, max_unigrams, min_count, n_bigrams, n_trigrams):
    """Build and save a vocabulary for source documents or written notes."""
    try:
        corpus = load_corpus(corpus_dir)
    except (CorpusError, ValueError) as exc:
        _fail(exc)
    cfg = VocabConfig(max_unigrams=max_unigrams, min_count=min_count,
                      n_bigrams=n_bigrams, n_trigrams=n_trigrams)
    if role == "source":
        texts = [corpus.documents[d].text for d in sorted(corpus.documents)]
    else:
        texts = [corpus.snapshots[v][-1].text
                 for v in sorted(corpus.snapshots) if corpus.snapshots[v]]
    vocabulary = build_vocabulary(texts, cfg, corpus_role=role)
    vocabulary.to_json(out_path)
    click.echo(f"wrote {role} vocabulary ({len(vocabulary)} n-grams) to {out_path}")


@main.command()
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True), required=True)
@click.option("--sessions", "sessions_path", type=click.Path(exists=True), default=None,
              help="Restrict to the (visit, index) pairs listed in this sessions file.")
@click.option("--vocab-src", type=click.Path(exists=True), required=True)
@click.option("--vocab-wr", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--schema", "schema_path", type=click.Path(), required=True)
@click.option("--source-dims", type=int, default=None)
@click.option("--written-dims", type=int, default=None)
def featurize(corpus_dir, sessions_path, vocab_src, vocab_wr, out_path,
              schema_path, source_dims, written_dims):
    """Build the example set and its schema."""
    try:
        corpus = load_corpus(corpus_dir)
        src = Vocabulary.from_json(vocab_src)
        wr = Vocabulary.from_json(vocab_wr)
        schema = FeatureSchema.for_corpus(corpus.registries, src, wr,
                                          source_dims=source_dims,
                                          written_dims=written_dims)
        session_sets = sessionize_corpus(corpus)
        if sessions_path:
            wanted = set()
            with open(sessions_path, "r", encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        rec = json.loads(line)
                        wanted.add((rec["visit_id"], rec["index"]))
            for visit_id, sset in session_sets.items():
                kept = tuple(s for s in sset.sessions if (visit_id, s.index) in wanted)
                session_sets[visit_id] = dataclasses.replace(sset, sessions=kept)
        dataset = build_dataset(corpus, session_sets, src, wr, schema)
        schema.to_json(schema_path)
        write_examples(dataset, out_path)
    except (CorpusError, ValueError) as exc:
        _fail(exc)
    click.echo(f"wrote {len(dataset)} examples ({dataset.n_positive} positive) to {out_path}")


@main.command(name="train")
@click.option("--examples", "examples_path", type=click.Path(exists=True), required=True)
@click.option("--schema", "schema_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--lambda", "lam", type=float, default=None)
@click.option("--cv", is_flag=True, help="Choose lambda by 5-fold patient-level CV.")
@click.option("--seed", type=int, default=0)
def train_cmd(examples_path, schema_path, out_path, lam, cv, seed):
    """Train a logistic model on a featurized example set."""
    try:
        schema = FeatureSchema.from_json(schema_path)
        dataset = read_examples(examples_path, schema)
        if cv:
            result = crossval_tune(dataset, seed=seed)
            lam = result.chosen_lambda
            click.echo(f"cross-validation chose lambda={lam:g}")
        elif lam is None:
            lam = 1e-4
        model = train(dataset, lam)
        model.save(out_path)
    except (CorpusError, ValueError) as exc:
        _fail(exc)
    click.echo(f"trained model (lambda={lam:g}, {model.n_iterations} iterations) "
               f"-> {out_path}")


@main.command()
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--examples", "examples_path", type=click.Path(exists=True), required=True)
@click.option("--schema", "schema_path", type=click.Path(exists=True), required=True)
@click.option("--report", "report_path", type=click.Path(), required=True)
@click.option("--ablation", is_flag=True, help="Evaluate after removing the 5 most recent notes.")
@click.option("--format", "fmt", type=click.Choice(["json", "md"]), default="json")
@click.option("-k", type=int, default=10)
def evaluate(model_path, examples_path, schema_path, report_path, ablation, fmt, k):
    """Evaluate a saved model on a featurized example set."""
    try:
        schema = FeatureSchema.from_json(schema_path)
        dataset = read_examples(examples_path, schema)
        model = LogisticModel.load(model_path)
        if model.schema_fingerprint != schema.fingerprint:
            raise ValueError("model/schema fingerprint mismatch")
        if ablation:
            dataset = ablate_recent(dataset)
        X, y = examples_to_csr(dataset)
        probs = model.predict_proba(X)
        report = {
            "classification": classification_metrics(y, probs).to_dict(),
            "retrieval": retrieval_metrics(_session_rankings(dataset, probs), k).to_dict(),
            "n_examples": len(dataset), "ablation": ablation,
        }
    except (CorpusError, ValueError) as exc:
        _fail(exc)
    text = json.dumps(report, indent=2, sort_keys=True)
    Path(report_path).write_text(text + "\n", encoding="utf-8")
    click.echo(text if fmt == "json" else _eval_markdown(report, k))


def _eval_markdown(report: dict, k: int) -> str:
    c = report["classification"]
    r = report["retrieval"]
    auc = f"{c['auc']:.3f}" if c["auc"] is not None else "n/a"
    lines = ["| Precision | Recall | F1 | AUC |", "|---|---|---|---|",
             f"| {c['precision']:.3f} | {c['recall']:.3f} | {c['f1']:.3f} | {auc} |"]
    if r["precision_at_k"] is not None:
        lines += ["", f"| Precision@{k} | Recall@{k} | F1@{k} |", "|---|---|---|",
                  f"| {r['precision_at_k']:.3f} | {r['recall_at_k']:.3f} "
                  f"| {r['f1_at_k']:.3f} |"]
    return "\n".join(lines)


@main.command()
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--seed", type=int, default=0)
@click.option("--lambda", "lam", type=float, default=1e-4)
@click.option("--cv", is_flag=True)
@click.option("--md", "emit_md", is_flag=True, help="Also print markdown tables.")
def experiment(corpus_dir, out_path, seed, lam, cv, emit_md):
    """Run the full model-comparison and ablation experiment."""
    try:
        corpus = load_corpus(corpus_dir)
        cfg = ExperimentConfig(seed=seed, lam=lam, use_cv=cv)
        report = run_experiment(corpus, cfg)
    except (CorpusError, ValueError) as exc:
        _fail(exc)
    Path(out_path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                              encoding="utf-8")
    if emit_md:
        click.echo(report_markdown(report))
    else:
        click.echo(f"wrote experiment report to {out_path}")


@main.command()
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), required=True)
@click.option("--keep-all", is_flag=True,
              help="Analyze all sessions, not only information-seeking ones.")
def rouge(corpus_dir, out_path, keep_all):
    """Copy-forwarding analysis: ROUGE of new text vs. read notes per session."""
    try:
        corpus = load_corpus(corpus_dir)
        session_sets = sessionize_corpus(corpus, keep_all=keep_all)
        analysis = session_copy_analysis(corpus, session_sets)
    except (CorpusError, ValueError) as exc:
        _fail(exc)
    Path(out_path).write_text(
        json.dumps(analysis.to_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    click.echo(f"wrote ROUGE analysis ({analysis.n_sessions_used} sessions) to {out_path}")


def _load_service_parts(corpus_dir, model_path, schema_path, vocab_src, vocab_wr):
    corpus = load_corpus(corpus_dir)
    schema = FeatureSchema.from_json(schema_path)
    model = LogisticModel.load(model_path)
    src = Vocabulary.from_json(vocab_src)
    wr = Vocabulary.from_json(vocab_wr)
    return corpus, model, schema, src, wr


@main.command()
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True), required=True)
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--schema", "schema_path", type=click.Path(exists=True), required=True)
@click.option("--vocab-src", type=click.Path(exists=True), required=True)
@click.option("--vocab-wr", type=click.Path(exists=True), required=True)
@click.option("--visit", "visit_id", required=True)
@click.option("--text", default="")
@click.option("--timestamp", type=int, required=True)
@click.option("-k", type=int, default=10)
def rank(corpus_dir, model_path, schema_path, vocab_src, vocab_wr,
         visit_id, text, timestamp, k):
    """Rank suggestions for one visit at a point in time."""
    from .ranker import LiveRanker
    try:
        corpus, model, schema, src, wr = _load_service_parts(
            corpus_dir, model_path, schema_path, vocab_src, vocab_wr)
        if model.schema_fingerprint != schema.fingerprint:
            raise ValueError("model/schema fingerprint mismatch")
        ranker = LiveRanker(corpus, model, schema, src, wr)
        result = ranker.rank(visit_id, text, timestamp, k)
    except (CorpusError, ValueError, KeyError) as exc:
        _fail(exc)
    click.echo(json.dumps(result.to_dict(), indent=2, sort_keys=True))


@main.command()
@click.option("--corpus", "corpus_dir", type=click.Path(exists=True), required=True)
@click.option("--model", "model_path", type=click.Path(exists=True), required=True)
@click.option("--schema", "schema_path", type=click.Path(exists=True), required=True)
@click.option("--vocab-src", type=click.Path(exists=True), required=True)
@click.option("--vocab-wr", type=click.Path(exists=True), required=True)
@click.option("--judgments", "judgments_path", type=click.Path(), default="judgments.jsonl")
@click.option("--ui-dir", type=click.Path(), default=None)
@click.option("--bind", default=None, help="host:port (NOTESIEVE_BIND overrides default)")
def serve(corpus_dir, model_path, schema_path, vocab_src, vocab_wr,
          judgments_path, ui_dir, bind):
    """Start the ranking/judgment HTTP service."""
    import uvicorn
    from .service import create_app
    try:
        corpus, model, schema, src, wr = _load_service_parts(
            corpus_dir, model_path, schema_path, vocab_src, vocab_wr)
        app = create_app(corpus, model, schema, src, wr, judgments_path,
                         ui_dir=ui_dir)
    except (CorpusError, ValueError) as exc:
        _fail(exc)
    bind = bind or os.environ.get("NOTESIEVE_BIND", "127.0.0.1:8600")
    host, _, port = bind.partition(":")
    uvicorn.run(app, host=host, port=int(port or 8600))


if __name__ == "__main__":
    main()
