import math
import socket
import threading
import time

import pytest
from fastapi.testclient import TestClient

from embed_service.service import DEFAULT_MODEL, ServiceConfig, create_app


class FakeEncoder:
    """Deterministic stand-in with the real model's dimensionality."""

    model_name = "fake-encoder"
    dim = 768

    def encode(self, texts):
        out = []
        for text in texts:
            vec = [0.0] * self.dim
            for pos, ch in enumerate(text):
                vec[(ord(ch) * 31 + pos) % self.dim] += float(ord(ch) % 17 + 1)
            out.append(vec)
        return out


def cosine(a, b):
    dot = sum(x * y for x, y in zip(a, b))
    return dot / (math.sqrt(sum(x * x for x in a)) * math.sqrt(sum(y * y for y in b)))


def make_client(config=None, encoder=None, timeout=5.0):
    config = config or ServiceConfig(model_name="fake-encoder")
    encoder = encoder or FakeEncoder()
    client = TestClient(create_app(config, loader=lambda cfg: encoder))
    client.__enter__()
    deadline = time.monotonic() + timeout
    while client.get("/healthz").status_code != 200:
        if time.monotonic() > deadline:
            raise TimeoutError("encoder never became ready")
        time.sleep(0.01)
    return client


@pytest.fixture
def client():
    c = make_client()
    yield c
    c.__exit__(None, None, None)


class TestHealthz:
    def test_ready_body(self, client):
        body = client.get("/healthz").json()
        assert body == {"status": "ok", "model": "fake-encoder", "dim": 768}

    def test_idempotent(self, client):
        assert client.get("/healthz").json() == client.get("/healthz").json()

    def test_503_while_loading(self):
        release = threading.Event()

        def slow_loader(cfg):
            release.wait(5.0)
            return FakeEncoder()

        with TestClient(create_app(ServiceConfig(), loader=slow_loader)) as client:
            assert client.get("/healthz").status_code == 503
            assert client.post("/embed", json={"texts": ["x"]}).status_code == 503
            release.set()
            deadline = time.monotonic() + 5.0
            while client.get("/healthz").status_code != 200:
                assert time.monotonic() < deadline
                time.sleep(0.01)

    def test_503_when_load_fails(self):
        def broken_loader(cfg):
            raise RuntimeError("weights missing")

        with TestClient(create_app(ServiceConfig(), loader=broken_loader)) as client:
            deadline = time.monotonic() + 5.0
            while "loading" in client.get("/healthz").text:
                assert time.monotonic() < deadline
                time.sleep(0.01)
            resp = client.get("/healthz")
            assert resp.status_code == 503
            assert "weights missing" in resp.text


class TestEmbed:
    def test_response_shape(self, client):
        resp = client.post("/embed", json={"texts": ["Hello.", "World."]})
        assert resp.status_code == 200
        body = resp.json()
        assert body["model"] == "fake-encoder"
        assert body["dim"] == 768
        assert len(body["vectors"]) == 2
        assert all(len(v) == 768 for v in body["vectors"])

    def test_duplicate_texts_identical_vectors(self, client):
        body = client.post("/embed", json={"texts": ["Hello.", "Hello."]}).json()
        a, b = body["vectors"]
        assert a == b
        assert cosine(a, b) == pytest.approx(1.0, abs=1e-6)

    def test_order_preserved(self, client):
        texts = [f"sentence number {i}" for i in range(10)]
        body = client.post("/embed", json={"texts": texts}).json()
        singles = [
            client.post("/embed", json={"texts": [t]}).json()["vectors"][0] for t in texts
        ]
        assert body["vectors"] == singles

    def test_empty_batch_400(self, client):
        assert client.post("/embed", json={"texts": []}).status_code == 400

    def test_blank_text_400(self, client):
        assert client.post("/embed", json={"texts": ["ok", "   "]}).status_code == 400

    def test_oversized_batch_400(self):
        client = make_client(config=ServiceConfig(max_batch_size=3))
        try:
            assert client.post("/embed", json={"texts": ["a"] * 4}).status_code == 400
            assert client.post("/embed", json={"texts": ["a"] * 3}).status_code == 200
        finally:
            client.__exit__(None, None, None)

    def test_max_batch_size_validated(self):
        with pytest.raises(ValueError):
            ServiceConfig(max_batch_size=0)


def serve_in_thread(app, port):
    import uvicorn

    server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error"))
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10.0
    while not server.started:
        if time.monotonic() > deadline:
            raise TimeoutError("server did not start")
        time.sleep(0.05)
    return server, thread


def free_port():
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


def consume_with_primary_client(encoder_loader, expected_dim, tmp_path):
    """Run the service over a real socket and pull a 100-text batch through
    the quality-estimation client's remote embedding provider."""
    from pseudoref import embeddings

    port = free_port()
    app = create_app(ServiceConfig(), loader=encoder_loader)
    server, thread = serve_in_thread(app, port)
    try:
        deadline = time.monotonic() + 120.0
        import requests

        while True:
            try:
                if requests.get(f"http://127.0.0.1:{port}/healthz", timeout=5).status_code == 200:
                    break
            except requests.RequestException:
                pass
            if time.monotonic() > deadline:
                raise TimeoutError("service never became healthy")
            time.sleep(0.2)
        spec = embeddings.EmbeddingProviderSpec(
            provider_id="remote",
            model_id=DEFAULT_MODEL,
            endpoint_url=f"http://127.0.0.1:{port}",
            expected_dim=expected_dim,
        )
        texts = [f"The number {i} appears in this sentence." for i in range(99)]
        texts.append(texts[0])
        vectors = embeddings.embed_batch(
            spec, texts, cache=embeddings.VectorCache(tmp_path / "cache")
        )
        assert len(vectors) == 100
        assert all(v.dim == expected_dim for v in vectors)
        assert vectors[99].values == vectors[0].values
        assert embeddings.cosine_similarity(vectors[0], vectors[99]) == pytest.approx(1.0, abs=1e-6)
    finally:
        server.should_exit = True
        thread.join(timeout=10.0)


def test_primary_client_integration(tmp_path):
    consume_with_primary_client(lambda cfg: FakeEncoder(), 768, tmp_path)


def real_model_cached() -> bool:
    try:
        from huggingface_hub import snapshot_download

        snapshot_download(f"sentence-transformers/{DEFAULT_MODEL}", local_files_only=True)
        return True
    except Exception:
        return False


@pytest.mark.skipif(not real_model_cached(), reason="default encoder weights not available locally")
def test_real_model_conformance(tmp_path):
    from embed_service.service import SentenceTransformerEncoder

    consume_with_primary_client(
        lambda cfg: SentenceTransformerEncoder(DEFAULT_MODEL, cfg.device), 768, tmp_path
    )
