"""HTTP service implementing the inference-gateway wire protocol.

    POST /v1/embed     {"texts": [...], "kind": "query"|"passage"}
                       -> {"vectors": [[float, ...], ...]}
    POST /v1/extract   {"question", "contexts": [{"id", "text"}], "top_k"}
                       -> {"answers": [{"id", "text", "start", "end", "score"}]}
    POST /v1/translate {"question"} -> {"query"}   (404 when no translator)
    GET  /healthz      -> 200 once models are loaded

Every error response carries a JSON body of the form {"error": "..."}.
Offsets in extract answers are character offsets into the submitted
context text, and answers are the global top-k across all contexts; a
context may contribute no answer at all.
"""

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .backends import make_backend
from .config import SidecarConfig


class EmbedRequest(BaseModel):
    texts: list[str]
    kind: str = Field(default="passage", pattern="^(query|passage)$")


class ContextItem(BaseModel):
    id: str
    text: str


class ExtractRequest(BaseModel):
    question: str
    contexts: list[ContextItem]
    top_k: int = 5


class TranslateRequest(BaseModel):
    question: str


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def create_app(config: SidecarConfig | None = None, backend=None) -> FastAPI:
    """Build the service; loads models eagerly so startup fails fast."""
    config = config or SidecarConfig()
    if backend is None:
        backend = make_backend(config)  # BackendStartupError propagates

    app = FastAPI(title="neuroquery-sidecar", version="0.1.0")

    @app.exception_handler(RequestValidationError)
    async def validation_error(request: Request, exc: RequestValidationError):
        return _error(400, f"invalid request: {exc.errors()[:1]}")

    @app.exception_handler(Exception)
    async def internal_error(request: Request, exc: Exception):
        return _error(500, str(exc))

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "backend": config.backend}

    @app.post("/v1/embed")
    async def embed(request: EmbedRequest):
        if not request.texts:
            return _error(400, "texts must be non-empty")
        vectors = backend.embed(request.texts, request.kind)
        return {"vectors": vectors}

    @app.post("/v1/extract")
    async def extract(request: ExtractRequest):
        if not request.contexts:
            return _error(400, "contexts must be non-empty")
        if request.top_k < 1:
            return _error(400, "top_k must be >= 1")
        answers = backend.extract(
            request.question,
            [{"id": c.id, "text": c.text} for c in request.contexts],
            request.top_k)
        return {"answers": answers}

    @app.post("/v1/translate")
    async def translate(request: TranslateRequest):
        if not backend.has_translator():
            return _error(404, "no translator model is configured")
        return {"query": backend.translate(request.question)}

    return app
