import json
from pathlib import Path

import pytest

from pseudoref import corpus, embeddings, llm

REPO = Path(__file__).resolve().parents[1]
DATA = REPO / "data"


@pytest.fixture
def demo_set() -> corpus.EvaluationSet:
    return corpus.load_evaluation_set(DATA / "demo20.jsonl")


@pytest.fixture
def demo_lexicon() -> dict:
    return json.loads((DATA / "demo20_lexicon.json").read_text(encoding="utf-8"))


@pytest.fixture
def roen_set() -> corpus.EvaluationSet:
    return corpus.load_evaluation_set(DATA / "roen867.jsonl")


@pytest.fixture
def roen_meta() -> dict:
    return json.loads((DATA / "roen867.meta.json").read_text(encoding="utf-8"))


@pytest.fixture
def completion_cache(tmp_path) -> llm.CompletionCache:
    return llm.CompletionCache(tmp_path / "cache")


@pytest.fixture
def vector_cache(tmp_path) -> embeddings.VectorCache:
    return embeddings.VectorCache(tmp_path / "cache")


@pytest.fixture
def mock_backend_spec() -> llm.BackendSpec:
    return llm.BackendSpec(backend_id="mock", model_id="mock-model")


@pytest.fixture
def mock_embedder_spec() -> embeddings.EmbeddingProviderSpec:
    return embeddings.EmbeddingProviderSpec(provider_id="mock", model_id="mock-fnv", expected_dim=16)
