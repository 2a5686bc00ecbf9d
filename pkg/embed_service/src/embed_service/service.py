"""Single-model embedding service.

Wire protocol (shared with the quality-estimation client):

    POST /embed   {"texts": [...]}  ->  {"model": str, "dim": int, "vectors": [[float, ...], ...]}
    GET  /healthz                   ->  {"status": "ok", "model": str, "dim": int}

Both endpoints answer 503 until the encoder finishes loading. Vectors are
returned unnormalized, exactly as the encoder produces them; vectors[i]
always corresponds to texts[i]. One model per process; swapping the model
means restarting the service.
"""

from __future__ import annotations

import threading
from contextlib import asynccontextmanager
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import click
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

DEFAULT_MODEL = "all-mpnet-base-v2"


class Encoder(Protocol):
    model_name: str
    dim: int

    def encode(self, texts: Sequence[str]) -> list[list[float]]: ...


@dataclass(frozen=True)
class ServiceConfig:
    model_name: str = DEFAULT_MODEL
    host: str = "127.0.0.1"
    port: int = 8000
    max_batch_size: int = 256
    device: str | None = None

    def __post_init__(self):
        if self.max_batch_size < 1:
            raise ValueError("max_batch_size must be >= 1")


class SentenceTransformerEncoder:
    """Wraps a sentence-transformers model behind the Encoder protocol."""

    def __init__(self, model_name: str, device: str | None = None):
        from sentence_transformers import SentenceTransformer

        self.model_name = model_name
        self._model = SentenceTransformer(model_name, device=device)
        self.dim = self._model.get_sentence_embedding_dimension()

    def encode(self, texts: Sequence[str]) -> list[list[float]]:
        vectors = self._model.encode(
            list(texts), convert_to_numpy=True, normalize_embeddings=False
        )
        return [[float(v) for v in row] for row in vectors]


class EmbedRequest(BaseModel):
    texts: list[str]


def create_app(
    config: ServiceConfig, loader: Callable[[ServiceConfig], Encoder] | None = None
) -> FastAPI:
    """Build the FastAPI app; the encoder loads in a background thread on startup.

    `loader` takes the config and returns a ready Encoder; the default
    loads the configured sentence-transformers model. Encoding is
    serialized with a lock, so concurrent requests only contend, never
    interleave inside the model.
    """
    if loader is None:
        loader = lambda cfg: SentenceTransformerEncoder(cfg.model_name, cfg.device)

    state = {"encoder": None, "error": None}
    encode_lock = threading.Lock()

    def load_in_background():
        try:
            state["encoder"] = loader(config)
        except Exception as exc:
            state["error"] = f"{type(exc).__name__}: {exc}"

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        threading.Thread(target=load_in_background, daemon=True).start()
        yield

    app = FastAPI(title="embed-service", lifespan=lifespan)

    def ready_encoder() -> Encoder:
        if state["error"] is not None:
            raise HTTPException(status_code=503, detail=f"model failed to load: {state['error']}")
        encoder = state["encoder"]
        if encoder is None:
            raise HTTPException(status_code=503, detail="model is loading")
        return encoder

    @app.get("/healthz")
    def healthz():
        encoder = ready_encoder()
        return {"status": "ok", "model": encoder.model_name, "dim": encoder.dim}

    @app.post("/embed")
    def embed(request: EmbedRequest):
        encoder = ready_encoder()
        texts = request.texts
        if not texts:
            raise HTTPException(status_code=400, detail="empty batch")
        if len(texts) > config.max_batch_size:
            raise HTTPException(
                status_code=400,
                detail=f"batch of {len(texts)} exceeds max batch size {config.max_batch_size}",
            )
        for i, text in enumerate(texts):
            if not text.strip():
                raise HTTPException(status_code=400, detail=f"texts[{i}] is empty")
        with encode_lock:
            vectors = encoder.encode(texts)
        return {"model": encoder.model_name, "dim": encoder.dim, "vectors": vectors}

    return app


@click.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--model", "model_name", default=DEFAULT_MODEL, show_default=True)
@click.option("--max-batch-size", default=256, show_default=True, type=int)
@click.option("--device", default=None, help="torch device selector, e.g. cuda:0")
def main(host, port, model_name, max_batch_size, device):
    """Serve the embedding wire protocol for a single encoder model."""
    import uvicorn

    config = ServiceConfig(
        model_name=model_name, host=host, port=port, max_batch_size=max_batch_size, device=device
    )
    uvicorn.run(create_app(config), host=config.host, port=config.port)


if __name__ == "__main__":
    main()
