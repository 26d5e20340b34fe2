"""Engine configuration: defaults, key-value config files, env overrides.

Config files are plain ``key = value`` text with ``#`` comments::

    kb.properties = tests/fixtures/asin_key_properties.csv
    kb.reviews = tests/fixtures/asin_reviews.csv
    gateway.backend = remote
    gateway.endpoint = http://localhost:8900
    gateway.timeout_ms = 30000
    gateway.batch_size = 16
    bm25.k1 = 1.5
    bm25.b = 0.75
    bm25.delta = 1.0
    engine.max_rule_depth = 32
    engine.keep_unanswered = false
    output.format = records

Unknown keys are rejected. The NEUROQUERY_ENDPOINT environment variable
overrides the gateway endpoint (and implies the remote backend), and
NEUROQUERY_CONFIG names a config file to load when no --config is given.
"""

import os
from dataclasses import dataclass, field, replace

from .bm25 import Bm25Params
from .errors import ConfigError
from .gateway import GatewayConfig

_VALID_KEYS = {
    "kb.properties", "kb.reviews", "kb.questions",
    "gateway.backend", "gateway.endpoint", "gateway.timeout_ms",
    "gateway.batch_size", "gateway.max_in_flight",
    "bm25.k1", "bm25.b", "bm25.delta",
    "engine.max_rule_depth", "engine.keep_unanswered",
    "output.format",
}

ENDPOINT_ENV = "NEUROQUERY_ENDPOINT"
CONFIG_ENV = "NEUROQUERY_CONFIG"


@dataclass
class EngineConfig:
    kb_properties: str | None = None
    kb_reviews: str | None = None
    kb_questions: str | None = None
    gateway: GatewayConfig = field(default_factory=GatewayConfig)
    bm25: Bm25Params = field(default_factory=Bm25Params)
    max_rule_depth: int = 32
    keep_unanswered: bool = False
    output_format: str = "records"  # records | csv

    def __post_init__(self):
        if self.output_format not in ("records", "csv"):
            raise ConfigError(f"unknown output format {self.output_format!r}")
        if self.max_rule_depth < 1:
            raise ConfigError("engine.max_rule_depth must be >= 1")

    def print_lines(self) -> list:
        gw = self.gateway
        return [
            f"kb.properties = {self.kb_properties or ''}",
            f"kb.reviews = {self.kb_reviews or ''}",
            f"kb.questions = {self.kb_questions or ''}",
            f"gateway.backend = {gw.backend}",
            f"gateway.endpoint = {gw.endpoint or ''}",
            f"gateway.timeout_ms = {gw.timeout_ms}",
            f"gateway.batch_size = {gw.batch_size}",
            f"gateway.max_in_flight = {gw.max_in_flight}",
            f"bm25.k1 = {self.bm25.k1}",
            f"bm25.b = {self.bm25.b}",
            f"bm25.delta = {self.bm25.delta}",
            f"engine.max_rule_depth = {self.max_rule_depth}",
            f"engine.keep_unanswered = {str(self.keep_unanswered).lower()}",
            f"output.format = {self.output_format}",
        ]


def parse_config_text(text: str, source: str = "<config>") -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _VALID_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = value.strip()
    return values


def _parse_bool(value: str, key: str) -> bool:
    lowered = value.lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{key} expects a boolean, got {value!r}")


def _parse_int(value: str, key: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key} expects an integer, got {value!r}") from None


def _parse_float(value: str, key: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key} expects a number, got {value!r}") from None


def build_config(values: dict) -> EngineConfig:
    """Build a validated EngineConfig from flat key-value pairs."""
    try:
        gateway = GatewayConfig(
            backend=values.get("gateway.backend", "fallback"),
            endpoint=values.get("gateway.endpoint") or None,
            timeout_ms=_parse_int(values.get("gateway.timeout_ms", "30000"),
                                  "gateway.timeout_ms"),
            batch_size=_parse_int(values.get("gateway.batch_size", "16"),
                                  "gateway.batch_size"),
            max_in_flight=_parse_int(values.get("gateway.max_in_flight", "4"),
                                     "gateway.max_in_flight"),
        )
        bm25 = Bm25Params(
            k1=_parse_float(values.get("bm25.k1", "1.5"), "bm25.k1"),
            b=_parse_float(values.get("bm25.b", "0.75"), "bm25.b"),
            delta=_parse_float(values.get("bm25.delta", "1.0"), "bm25.delta"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return EngineConfig(
        kb_properties=values.get("kb.properties") or None,
        kb_reviews=values.get("kb.reviews") or None,
        kb_questions=values.get("kb.questions") or None,
        gateway=gateway,
        bm25=bm25,
        max_rule_depth=_parse_int(values.get("engine.max_rule_depth", "32"),
                                  "engine.max_rule_depth"),
        keep_unanswered=_parse_bool(values.get("engine.keep_unanswered", "false"),
                                    "engine.keep_unanswered"),
        output_format=values.get("output.format", "records"),
    )


def load_config(path: str | None = None, overrides: dict | None = None) -> EngineConfig:
    """Resolve the effective config: file values, then env, then overrides."""
    values: dict = {}
    if path is None:
        path = os.environ.get(CONFIG_ENV) or None
    if path:
        with open(path, encoding="utf-8") as handle:
            values.update(parse_config_text(handle.read(), source=str(path)))
    endpoint = os.environ.get(ENDPOINT_ENV)
    if endpoint:
        values["gateway.endpoint"] = endpoint
        values.setdefault("gateway.backend", "remote")
    for key, value in (overrides or {}).items():
        if key not in _VALID_KEYS:
            raise ConfigError(f"unknown key {key!r}")
        if value is not None:
            values[key] = str(value)
    return build_config(values)


def with_gateway_backend(config: EngineConfig, backend: str,
                         endpoint: str | None = None) -> EngineConfig:
    gateway = GatewayConfig(
        backend=backend,
        endpoint=endpoint if endpoint is not None else config.gateway.endpoint,
        timeout_ms=config.gateway.timeout_ms,
        batch_size=config.gateway.batch_size,
        max_in_flight=config.gateway.max_in_flight,
    )
    return replace(config, gateway=gateway)
