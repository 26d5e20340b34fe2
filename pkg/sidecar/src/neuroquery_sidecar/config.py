"""Sidecar configuration: model identifiers, device, lengths, port.

Values resolve from defaults, then an optional ``key = value`` config file,
then NEUROQUERY_SIDECAR_* environment variables (e.g.
NEUROQUERY_SIDECAR_PORT, NEUROQUERY_SIDECAR_BACKEND,
NEUROQUERY_SIDECAR_READER_MODEL).
"""

import os
from dataclasses import dataclass, fields

_ENV_PREFIX = "NEUROQUERY_SIDECAR_"

DEFAULT_QUERY_ENCODER = "facebook/dpr-question_encoder-single-nq-base"
DEFAULT_PASSAGE_ENCODER = "facebook/dpr-ctx_encoder-single-nq-base"
DEFAULT_READER = "deepset/minilm-uncased-squad2"


@dataclass
class SidecarConfig:
    backend: str = "transformers"  # transformers | hash
    query_encoder_model: str = DEFAULT_QUERY_ENCODER
    passage_encoder_model: str = DEFAULT_PASSAGE_ENCODER
    reader_model: str = DEFAULT_READER
    translator_model: str | None = None  # endpoint is 404 when absent
    device: str = "cpu"
    max_seq_length: int = 384
    doc_stride: int = 128
    host: str = "127.0.0.1"
    port: int = 8900

    def __post_init__(self):
        if self.backend not in ("transformers", "hash"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.doc_stride >= self.max_seq_length:
            raise ValueError("doc_stride must be smaller than max_seq_length")
        if not 0 < self.port < 65536:
            raise ValueError(f"port {self.port} out of range")


def _coerce(name: str, value: str):
    if name in ("max_seq_length", "doc_stride", "port"):
        return int(value)
    if name == "translator_model" and value == "":
        return None
    return value


def load_config(path: str | None = None) -> SidecarConfig:
    values: dict = {}
    names = {f.name for f in fields(SidecarConfig)}
    if path:
        with open(path, encoding="utf-8") as handle:
            for lineno, raw in enumerate(handle, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                key, sep, value = line.partition("=")
                key = key.strip()
                if not sep or key not in names:
                    raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
                values[key] = _coerce(key, value.strip())
    for name in names:
        env = os.environ.get(_ENV_PREFIX + name.upper())
        if env is not None:
            values[name] = _coerce(name, env)
    return SidecarConfig(**values)
