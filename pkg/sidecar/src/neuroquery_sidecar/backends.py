"""Model backends behind the wire protocol.

Two implementations share one duck-typed surface (embed / extract /
translate / has_translator):

* ``HashBackend`` needs no model files and is fully deterministic; it
  exists so the service and its protocol can run and be tested on machines
  without model weights.
* ``TransformersBackend`` serves a DPR bi-encoder for embeddings, an
  extractive reader for spans (384-token windows with a 128-token stride,
  no-answer allowed) and, when a checkpoint is configured, a seq2seq
  question-to-query translator. Inference runs in eval mode without
  sampling, so outputs are deterministic for fixed weights and inputs.
"""

import hashlib
import math
import re

from .config import SidecarConfig

_HASH_DIM = 256
_WINDOW_TOKENS = 15
_TOKEN_RE = re.compile(r"[A-Za-z0-9]+")


class BackendStartupError(RuntimeError):
    """Raised when a backend's model artifacts cannot be loaded."""


class HashBackend:
    """Deterministic bag-of-words stand-in for the neural models."""

    def __init__(self, config: SidecarConfig):
        self.config = config

    def has_translator(self) -> bool:
        return False

    def embed(self, texts: list, kind: str) -> list:
        return [self._vector(text) for text in texts]

    @staticmethod
    def _vector(text: str) -> list:
        vec = [0.0] * _HASH_DIM
        for token in _TOKEN_RE.findall(text.lower()):
            digest = hashlib.sha1(token.encode("utf-8")).digest()
            vec[int.from_bytes(digest[:4], "big") % _HASH_DIM] += 1.0
        norm = math.sqrt(sum(v * v for v in vec))
        return [v / norm for v in vec] if norm else vec

    def extract(self, question: str, contexts: list, top_k: int) -> list:
        question_tokens = {t.lower() for t in _TOKEN_RE.findall(question)}
        answers = []
        for context in contexts:
            span = self._best_span(question_tokens, context["text"])
            if span is not None:
                start, end, overlap = span
                answers.append({
                    "id": context["id"],
                    "text": context["text"][start:end],
                    "start": start,
                    "end": end,
                    "score": overlap / (1.0 + len(question_tokens)),
                })
        answers.sort(key=lambda a: (-a["score"], a["id"], a["start"]))
        return answers[:top_k]

    @staticmethod
    def _best_span(question_tokens: set, text: str):
        tokens = [(m.start(), m.end(), m.group().lower())
                  for m in _TOKEN_RE.finditer(text)]
        best = None
        for i in range(len(tokens)):
            overlap = 0
            for j in range(i, min(i + _WINDOW_TOKENS, len(tokens))):
                if tokens[j][2] in question_tokens:
                    overlap += 1
                if overlap == 0:
                    continue
                key = (overlap, -(j - i + 1), -i)
                if best is None or key > best[0]:
                    best = (key, i, j)
        if best is None:
            return None
        _, i, j = best
        return tokens[i][0], tokens[j][1], best[0][0]

    def translate(self, question: str) -> str:
        raise BackendStartupError("the hash backend has no translator")


class TransformersBackend:
    """DPR embeddings plus an extractive reader, optionally a translator."""

    def __init__(self, config: SidecarConfig):
        self.config = config
        try:
            import torch
            from transformers import (AutoModelForSeq2SeqLM, AutoTokenizer,
                                      DPRContextEncoder,
                                      DPRContextEncoderTokenizerFast,
                                      DPRQuestionEncoder,
                                      DPRQuestionEncoderTokenizerFast, pipeline)
        except ImportError as exc:
            raise BackendStartupError(
                "transformers backend needs the [models] extra installed") from exc
        self._torch = torch
        device = config.device
        try:
            self._query_tokenizer = DPRQuestionEncoderTokenizerFast.from_pretrained(
                config.query_encoder_model)
            self._query_encoder = DPRQuestionEncoder.from_pretrained(
                config.query_encoder_model).to(device).eval()
            self._passage_tokenizer = DPRContextEncoderTokenizerFast.from_pretrained(
                config.passage_encoder_model)
            self._passage_encoder = DPRContextEncoder.from_pretrained(
                config.passage_encoder_model).to(device).eval()
            self._reader = pipeline(
                "question-answering", model=config.reader_model,
                tokenizer=config.reader_model,
                device=-1 if device == "cpu" else device)
            if config.translator_model:
                self._translator_tokenizer = AutoTokenizer.from_pretrained(
                    config.translator_model)
                self._translator = AutoModelForSeq2SeqLM.from_pretrained(
                    config.translator_model).to(device).eval()
            else:
                self._translator = None
        except Exception as exc:  # model resolution is the startup contract
            raise BackendStartupError(f"cannot load model artifacts: {exc}") from exc

    def has_translator(self) -> bool:
        return self._translator is not None

    def embed(self, texts: list, kind: str) -> list:
        tokenizer = self._query_tokenizer if kind == "query" \
            else self._passage_tokenizer
        encoder = self._query_encoder if kind == "query" else self._passage_encoder
        batch = tokenizer(texts, return_tensors="pt", padding=True,
                          truncation=True, max_length=self.config.max_seq_length)
        batch = {k: v.to(self.config.device) for k, v in batch.items()}
        with self._torch.no_grad():
            output = encoder(**batch)
        return output.pooler_output.cpu().tolist()

    def extract(self, question: str, contexts: list, top_k: int) -> list:
        answers = []
        for context in contexts:
            results = self._reader(
                question=question, context=context["text"], top_k=top_k,
                max_seq_len=self.config.max_seq_length,
                doc_stride=self.config.doc_stride,
                handle_impossible_answer=True)
            if isinstance(results, dict):
                results = [results]
            for result in results:
                if not result.get("answer"):
                    continue  # the no-answer prediction for this context
                answers.append({
                    "id": context["id"],
                    "text": result["answer"],
                    "start": int(result["start"]),
                    "end": int(result["end"]),
                    "score": float(result["score"]),
                })
        answers.sort(key=lambda a: (-a["score"], a["id"], a["start"]))
        return answers[:top_k]

    def translate(self, question: str) -> str:
        inputs = self._translator_tokenizer(
            question, return_tensors="pt", truncation=True,
            max_length=512).to(self.config.device)
        with self._torch.no_grad():
            output = self._translator.generate(**inputs, max_length=512,
                                               num_beams=1, do_sample=False)
        return self._translator_tokenizer.decode(output[0],
                                                 skip_special_tokens=True)


def make_backend(config: SidecarConfig):
    if config.backend == "hash":
        return HashBackend(config)
    return TransformersBackend(config)
