"""Evaluation metrics: recall@k, exact match, token F1 and corpus BLEU.

All metrics are pure functions of their inputs. Answer normalization
follows the extractive-QA convention: lowercase, strip punctuation, drop
the articles a/an/the, collapse whitespace. EM and F1 are taken as the
best score over the provided gold answers.
"""

import math
import re
import string
from collections import Counter
from dataclasses import dataclass, field

from .errors import LengthMismatch, MissingRun

_ARTICLES_RE = re.compile(r"\b(a|an|the)\b")
_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


def normalize_answer(text: str) -> str:
    text = text.lower()
    text = text.translate(_PUNCT_TABLE)
    text = _ARTICLES_RE.sub(" ", text)
    return " ".join(text.split())


def em_score(prediction: str, golds: list) -> int:
    """1 when the normalized prediction equals any normalized gold."""
    prediction = normalize_answer(prediction)
    if not golds:
        return int(prediction == "")
    return int(any(prediction == normalize_answer(g) for g in golds))


def _token_f1(prediction_tokens: list, gold_tokens: list) -> float:
    if not prediction_tokens and not gold_tokens:
        return 1.0
    common = Counter(prediction_tokens) & Counter(gold_tokens)
    overlap = sum(common.values())
    if overlap == 0:
        return 0.0
    # 2pr/(p+r) simplified; exact for the integer counts involved
    return 2.0 * overlap / (len(prediction_tokens) + len(gold_tokens))


def f1_score(prediction: str, golds: list) -> float:
    """Best token-overlap F1 against the gold answers, in [0, 1]."""
    prediction_tokens = normalize_answer(prediction).split()
    if not golds:
        return _token_f1(prediction_tokens, [])
    return max(_token_f1(prediction_tokens, normalize_answer(g).split())
               for g in golds)


@dataclass
class MetricReport:
    metric: str
    value: float
    k: int | None = None
    per_example: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    def rows(self) -> list:
        """(metric, k, value) rows for CSV output."""
        out = [(self.metric, self.k, self.value)]
        for name, value in sorted(self.extras.items()):
            out.append((name, self.k, value))
        return out


def recall_at_k(examples, run: dict, k: int) -> MetricReport:
    """Fraction of examples whose gold document appears in their top k.

    ``run`` maps example qid to that example's ranked document ids.
    Examples without gold documents are excluded and counted in the
    report's extras.
    """
    per_example = {}
    excluded = 0
    for example in examples:
        golds = set(example.gold_review_ids)
        if not golds:
            excluded += 1
            continue
        if example.qid not in run:
            raise MissingRun(example.qid)
        ranked = run[example.qid]
        per_example[example.qid] = float(any(doc in golds for doc in ranked[:k]))
    value = sum(per_example.values()) / len(per_example) if per_example else 0.0
    return MetricReport(metric="recall", value=value, k=k, per_example=per_example,
                        extras={"excluded_no_gold": float(excluded)})


# -- corpus BLEU ---------------------------------------------------------------

# two-character operators first, then word runs, then lone punctuation
_BLEU_TOKEN_RE = re.compile(r"==|!=|<=|>=|\w+|[^\w\s]")


def bleu_tokenize(text: str) -> list:
    """Whitespace tokens after isolating punctuation.

    Two-character operators stay single tokens, every other punctuation
    character is split out on its own, so ``bm25_match(?asin.title==?title``
    becomes ``bm25_match ( ? asin . title == ? title``.
    """
    return _BLEU_TOKEN_RE.findall(text)


def _ngrams(tokens: list, n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def bleu_corpus(candidates: list, references: list, max_n: int = 4,
                smooth: bool = False) -> MetricReport:
    """Corpus BLEU: clipped n-gram precision under a brevity penalty.

    Counts are pooled over the corpus; the score is the geometric mean of
    the n-gram precisions for n = 1..max_n times
    ``exp(min(0, 1 - ref_len/cand_len))``. Orders longer than every
    candidate (zero n-grams corpus-wide) are excluded from the mean so a
    corpus always scores 1 against itself. With ``smooth`` the +1 clipped
    count correction is applied to every order. The report's extras carry
    the individual precisions (``precision_3``, ``precision_4``, ...).
    """
    if len(candidates) != len(references) or not candidates:
        raise LengthMismatch(
            f"{len(candidates)} candidates vs {len(references)} references")
    clipped = [0] * (max_n + 1)
    totals = [0] * (max_n + 1)
    cand_len = 0
    ref_len = 0
    for candidate, reference in zip(candidates, references):
        cand_tokens = bleu_tokenize(candidate)
        ref_tokens = bleu_tokenize(reference)
        cand_len += len(cand_tokens)
        ref_len += len(ref_tokens)
        for n in range(1, max_n + 1):
            cand_ngrams = _ngrams(cand_tokens, n)
            ref_ngrams = _ngrams(ref_tokens, n)
            totals[n] += sum(cand_ngrams.values())
            clipped[n] += sum(min(count, ref_ngrams[gram])
                              for gram, count in cand_ngrams.items())
    precisions = []
    effective = []  # orders where the corpus has any candidate n-grams at all
    for n in range(1, max_n + 1):
        num, den = clipped[n], totals[n]
        if smooth:
            num, den = num + 1, den + 1
        precisions.append(num / den if den else 0.0)
        if totals[n] > 0 or smooth:
            effective.append(precisions[-1])
    if cand_len == 0 or ref_len == 0 or not effective:
        value = 0.0
    elif any(p == 0.0 for p in effective):
        value = 0.0
    else:
        # orders beyond every candidate's length are neutral, which keeps
        # the self-comparison of a short corpus at exactly 1
        brevity = math.exp(min(0.0, 1.0 - ref_len / cand_len))
        value = brevity * math.exp(sum(math.log(p) for p in effective)
                                   / len(effective))
    extras = {f"precision_{n}": precisions[n - 1] for n in range(1, max_n + 1)}
    extras["bleu_x100"] = value * 100.0
    return MetricReport(metric="bleu", value=value, extras=extras)
