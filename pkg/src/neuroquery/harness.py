"""Dataset loading and the evaluation tasks built on the metric suite.

A dataset directory holds three CSV files in the knowledge-base row
schemas: product properties, reviews and questions. Questions join
products to their text, reference query, gold answers and (optionally)
gold review ids; when the gold review rows are absent the gold reviews
are derived as the reviews of the example's product whose text contains
a gold answer span.
"""

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParseError
from .kb import KnowledgeBase
from .metrics import MetricReport, bleu_corpus, em_score, f1_score, recall_at_k
from .terms import Ident
from .unify import EMPTY_FRAME
from .terms import Var

logger = logging.getLogger(__name__)

SPLIT_SEED = "neuroquery-split-1"

PUBLISHED_COUNTS = {
    "questions": 1505,
    "properties": 4250,
    "products": 500,
    "reviews": 1583,
    "ground_truths": 1627,
}

_FILE_ALIASES = {
    "properties": ("asin_key_properties.csv", "properties.csv"),
    "reviews": ("asin_reviews.csv", "reviews.csv"),
    "questions": ("asin_questions.csv", "questions.csv"),
}


@dataclass
class QAExample:
    qid: str
    asin: str
    question: str
    gold_answers: list = field(default_factory=list)
    gold_review_ids: list = field(default_factory=list)
    reference_query: str | None = None


@dataclass
class TranslationPair:
    qid: str
    question: str
    reference_query: str


@dataclass
class DatasetStats:
    counts: dict = field(default_factory=dict)
    mismatches: list = field(default_factory=list)
    unparsable_queries: list = field(default_factory=list)
    split_seed: str = SPLIT_SEED


@dataclass
class DatasetBundle:
    kb: KnowledgeBase
    examples: list
    pairs: list
    stats: DatasetStats


def split_of(asin: str, seed: str = SPLIT_SEED) -> str:
    """Deterministic 80/10/10 split by product id."""
    digest = hashlib.sha256(f"{seed}:{asin}".encode("utf-8")).digest()
    bucket = digest[0] % 10
    if bucket < 8:
        return "train"
    return "val" if bucket == 8 else "test"


def _find_file(directory: Path, kind: str) -> Path | None:
    for name in _FILE_ALIASES[kind]:
        candidate = directory / name
        if candidate.exists():
            return candidate
    return None


def load_dataset(directory) -> DatasetBundle:
    """Load a dataset directory; returns the product KB, examples and pairs.

    The knowledge base holds properties and reviews only, mirroring what a
    query session loads; question rows feed the evaluation structures. The
    stats record row counts and how they compare with the published
    dataset's, a mismatch being a warning rather than an error so partial
    datasets stay loadable.
    """
    directory = Path(directory)
    properties_path = _find_file(directory, "properties")
    reviews_path = _find_file(directory, "reviews")
    if properties_path is None or reviews_path is None:
        raise FileNotFoundError(
            f"{directory} needs a properties and a reviews csv file")
    kb = KnowledgeBase()
    property_count = kb.load_csv(properties_path, "properties")
    products = {fact[0] for fact in kb.facts}
    kb.load_csv(reviews_path, "reviews")

    questions_path = _find_file(directory, "questions")
    questions_kb = KnowledgeBase()
    if questions_path is not None:
        questions_kb.load_csv(questions_path, "questions")
    else:
        logger.warning("%s: no questions file found", directory)

    examples, pairs = _build_examples(kb, questions_kb)
    stats = DatasetStats()
    stats.counts = {
        "questions": _count(questions_kb, "question"),
        "properties": property_count,
        "products": len(products),
        "reviews": _count(kb, "review"),
        "ground_truths": _count(questions_kb, "answer"),
    }
    for name, expected in PUBLISHED_COUNTS.items():
        actual = stats.counts.get(name, 0)
        if actual != expected:
            stats.mismatches.append(f"{name}: expected {expected}, loaded {actual}")
    if any(actual == PUBLISHED_COUNTS[name] for name, actual in stats.counts.items()) \
            and stats.mismatches:
        for mismatch in stats.mismatches:
            logger.warning("dataset count mismatch: %s", mismatch)

    for pair in pairs:
        try:
            from .parser import parse_program

            parse_program(pair.reference_query)
        except ParseError:
            stats.unparsable_queries.append(pair.qid)
    return DatasetBundle(kb=kb, examples=examples, pairs=pairs, stats=stats)


def _pred(fact: tuple) -> str | None:
    if len(fact) == 3 and isinstance(fact[1], Ident):
        return fact[1].name
    return None


def _count(kb: KnowledgeBase, predicate: str) -> int:
    return sum(1 for f in kb.facts if _pred(f) == predicate)


def _objects(kb: KnowledgeBase, subject: Ident, predicate: str) -> list:
    pattern = (subject, Ident(predicate), Var("object"))
    out = []
    for fact in kb.facts_matching(pattern, EMPTY_FRAME):
        out.append(fact[2])
    return out


def _build_examples(kb: KnowledgeBase, questions_kb: KnowledgeBase):
    examples = []
    pairs = []
    for fact in questions_kb.facts:
        if _pred(fact) != "question":
            continue
        asin, qid = fact[0], fact[2]
        texts = _objects(questions_kb, qid, "text")
        question = texts[0] if texts else ""
        queries = _objects(questions_kb, qid, "query")
        answers = [a for a in _objects(questions_kb, qid, "answer")]
        explicit_golds = [r.name for r in _objects(questions_kb, qid, "review")
                          if isinstance(r, Ident)]
        gold_reviews = explicit_golds or _derive_gold_reviews(kb, asin, answers)
        example = QAExample(
            qid=qid.name, asin=asin.name, question=question,
            gold_answers=list(answers), gold_review_ids=gold_reviews,
            reference_query=queries[0] if queries else None)
        examples.append(example)
        if example.reference_query is not None:
            pairs.append(TranslationPair(qid=example.qid, question=question,
                                         reference_query=example.reference_query))
    return examples, pairs


def _derive_gold_reviews(kb: KnowledgeBase, asin: Ident, answers: list) -> list:
    golds = []
    for review_id, text in review_documents(kb, asin.name):
        lowered = text.lower()
        if any(str(answer).lower() in lowered for answer in answers):
            golds.append(review_id)
    return golds


def review_documents(kb: KnowledgeBase, asin: str) -> list:
    """The (review id, review text) documents of one product, in KB order."""
    docs = []
    for review in _objects(kb, Ident(asin), "review"):
        if not isinstance(review, Ident):
            continue
        texts = _objects(kb, review, "text")
        if texts:
            docs.append((review.name, str(texts[0])))
    return docs


# -- evaluation tasks ----------------------------------------------------------

def _filter_split(examples: list, split: str) -> list:
    if split == "all":
        return list(examples)
    return [e for e in examples if split_of(e.asin) == split]


def run_retrieval(bundle: DatasetBundle, gateway, split: str = "all") -> dict:
    """Rank every example's review documents; returns qid -> (ids, scores)."""
    run = {}
    for example in _filter_split(bundle.examples, split):
        docs = review_documents(bundle.kb, example.asin)
        if not docs:
            run[example.qid] = ([], [])
            continue
        hits = gateway.retrieve(example.question, docs, k=len(docs))
        run[example.qid] = ([h.doc_key for h in hits], [h.score for h in hits])
    return run


def run_query_task(bundle: DatasetBundle, gateway, k_grid, split: str = "all",
                   out_dir=None) -> list:
    """Retrieval recall plus reader EM/F1 over the top-k pipeline.

    For each k in the grid: recall@k of the gold review, then EM and F1 of
    the best span the reader extracts from the k top-ranked reviews.
    Reports come back in metric order; when ``out_dir`` is given the CSV,
    the summary and the retrieval dump are written there.
    """
    examples = _filter_split(bundle.examples, split)
    run_pairs = run_retrieval(bundle, gateway, split)
    ranked_run = {qid: ids for qid, (ids, _) in run_pairs.items()}
    reports = []
    for k in k_grid:
        reports.append(recall_at_k(examples, ranked_run, k))
        em_by_qid = {}
        f1_by_qid = {}
        for example in examples:
            prediction = _read_top_answer(bundle, gateway, example,
                                          ranked_run.get(example.qid, [])[:k])
            em_by_qid[example.qid] = float(em_score(prediction, example.gold_answers))
            f1_by_qid[example.qid] = f1_score(prediction, example.gold_answers)
        n = len(examples)
        reports.append(MetricReport(metric="em", k=k,
                                    value=sum(em_by_qid.values()) / n if n else 0.0,
                                    per_example=em_by_qid))
        reports.append(MetricReport(metric="f1", k=k,
                                    value=sum(f1_by_qid.values()) / n if n else 0.0,
                                    per_example=f1_by_qid))
    if out_dir is not None:
        write_reports(out_dir, reports, bundle, run_pairs)
    return reports


def _read_top_answer(bundle: DatasetBundle, gateway, example: QAExample,
                     top_ids: list) -> str:
    docs = [(rid, text) for rid, text in review_documents(bundle.kb, example.asin)
            if rid in set(top_ids)]
    if not docs:
        return ""
    spans = gateway.extract(example.question, docs, k=1)
    return spans[0].text if spans else ""


def load_retrieval_dump(path) -> dict:
    """Read a stored retrieval dump back into a qid -> ranked-ids run.

    Replaying a dump through :func:`neuroquery.metrics.recall_at_k`
    reproduces the original recall reports exactly; the metrics are pure
    functions of the run.
    """
    run = {}
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if not line.strip():
                continue
            row = json.loads(line)
            run[row["qid"]] = list(row["ranked"])
    return run


def run_translation_task(candidates: list, pairs: list) -> MetricReport:
    """Corpus BLEU of candidate queries against the dataset's references.

    Candidates align positionally with the pairs, i.e. with the question
    file's row order.
    """
    references = [pair.reference_query for pair in pairs]
    return bleu_corpus(candidates, references)


def write_reports(out_dir, reports: list, bundle: DatasetBundle | None = None,
                  run_pairs: dict | None = None) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "metrics.csv", "w", encoding="utf-8") as handle:
        handle.write("metric,k,value\n")
        for report in reports:
            for metric, k, value in report.rows():
                handle.write(f"{metric},{'' if k is None else k},{value:.6f}\n")
    with open(out_dir / "summary.txt", "w", encoding="utf-8") as handle:
        handle.write(f"split seed: {SPLIT_SEED}\n")
        if bundle is not None:
            for name, count in bundle.stats.counts.items():
                handle.write(f"{name}: {count}\n")
            for mismatch in bundle.stats.mismatches:
                handle.write(f"count mismatch: {mismatch}\n")
        for report in reports:
            k = "" if report.k is None else f"@{report.k}"
            handle.write(f"{report.metric}{k}: {report.value:.4f}\n")
    if run_pairs is not None:
        with open(out_dir / "retrieval_dump.jsonl", "w", encoding="utf-8") as handle:
            for qid in sorted(run_pairs):
                ids, scores = run_pairs[qid]
                handle.write(json.dumps({
                    "qid": qid, "k": len(ids), "ranked": list(ids),
                    "scores": [float(s) for s in scores]}) + "\n")
