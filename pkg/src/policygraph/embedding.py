"""Sentence embeddings: deterministic builtin embedder plus provider hook.

The builtin embedder hashes word {1,2}-grams and byte {3,4,5}-grams into a
fixed number of buckets (compiled kernel when available), weights them with
smoothed TF-IDF fitted on the corpus, and L2-normalizes. Same config and
corpus statistics give bit-identical vectors, which is what makes the
ranking and classification oracles exact.

External providers implement a line-delimited JSON protocol over TCP:
request ``{"texts": [...]}``, response ``{"dim": D, "vectors": [[...]]}``.
Responses are cached by (provider_id, text digest).
"""

from __future__ import annotations

import hashlib
import json
import re
import socket
import threading
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigError, IntegrityError, ProviderError

DEFAULT_DIM = 4096
DEFAULT_SEED = 0xCBF29CE484222325  # fixed so vectors are reproducible

_TOKEN_RE = re.compile(r"\w+", re.UNICODE)


def tokenize(analysis_text: str) -> list[str]:
    return _TOKEN_RE.findall(analysis_text)


@dataclass
class EmbeddingVector:
    provider_id: str
    dim: int
    values: np.ndarray
    is_zero: bool = False


def cosine(u: EmbeddingVector, v: EmbeddingVector) -> float:
    """Dot product of unit vectors; zero vector against anything is 0."""
    if u.dim != v.dim:
        raise IntegrityError(f"dimension mismatch: {u.dim} vs {v.dim}")
    if u.is_zero or v.is_zero:
        return 0.0
    return float(np.dot(u.values, v.values))


class HashedTfidfEmbedder:
    """Corpus-size-independent hashed TF-IDF sentence embedder.

    idf(t) = ln((1 + N) / (1 + df(t))) + 1 over the fitted corpus; the
    statistics are frozen per fit and identified by an epoch id so stale
    models can be detected.
    """

    def __init__(self, dim: int = DEFAULT_DIM, seed: int = DEFAULT_SEED):
        self.dim = dim
        self.seed = seed
        self._idf: np.ndarray | None = None
        self._epoch_id: str | None = None
        self.corpus_size = 0

    @property
    def provider_id(self) -> str:
        return f"builtin-hash-tfidf-{self.dim}"

    @property
    def epoch_id(self) -> str:
        if self._epoch_id is None:
            raise ConfigError("embedder not fitted: corpus document frequencies missing")
        return self._epoch_id

    @property
    def fitted(self) -> bool:
        return self._epoch_id is not None

    def raw_counts(self, analysis_text: str) -> np.ndarray:
        out = np.zeros(self.dim, dtype=np.float64)
        _kernels.accumulate_counts(analysis_text, tokenize(analysis_text),
                                   self.dim, self.seed, out)
        return out

    def fit(self, corpus_texts) -> str:
        """Compute bucket document frequencies over the corpus; returns epoch id."""
        df = np.zeros(self.dim, dtype=np.int64)
        n = 0
        for text in corpus_texts:
            counts = self.raw_counts(text)
            df += counts > 0
            n += 1
        self.corpus_size = n
        self._idf = np.log((1.0 + n) / (1.0 + df)) + 1.0
        h = hashlib.sha256()
        h.update(f"{self.dim}:{self.seed}:{n}:".encode())
        h.update(df.tobytes())
        self._epoch_id = h.hexdigest()[:16]
        return self._epoch_id

    def embed(self, analysis_text: str) -> EmbeddingVector:
        if self._idf is None:
            raise ConfigError("embedder not fitted: corpus document frequencies missing")
        counts = self.raw_counts(analysis_text)
        if not counts.any():
            return EmbeddingVector(self.provider_id, self.dim,
                                   np.zeros(self.dim), is_zero=True)
        weighted = counts * self._idf
        norm = np.linalg.norm(weighted)
        return EmbeddingVector(self.provider_id, self.dim, weighted / norm)

    def embed_batch(self, texts) -> list[EmbeddingVector]:
        return [self.embed(t) for t in texts]


class ExternalEmbedder:
    """Client for an external embedding provider over the line protocol."""

    def __init__(self, provider_id: str, host: str, port: int, *,
                 batch_size: int = 32, timeout: float = 30.0, declared_dim: int | None = None):
        self.provider_id = provider_id
        self.host = host
        self.port = port
        self.batch_size = batch_size
        self.timeout = timeout
        self.declared_dim = declared_dim
        self.remote_calls = 0
        self._cache: dict[str, EmbeddingVector] = {}
        self._lock = threading.Lock()

    def _cache_key(self, text: str) -> str:
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def _request(self, texts: list[str]) -> list[EmbeddingVector]:
        try:
            with socket.create_connection((self.host, self.port), timeout=self.timeout) as sock:
                payload = json.dumps({"texts": texts}) + "\n"
                sock.sendall(payload.encode("utf-8"))
                buf = b""
                while not buf.endswith(b"\n"):
                    chunk = sock.recv(65536)
                    if not chunk:
                        break
                    buf += chunk
        except OSError as exc:
            raise ProviderError(f"embedding provider {self.provider_id} unreachable: {exc}")
        try:
            response = json.loads(buf.decode("utf-8"))
            dim = int(response["dim"])
            vectors = response["vectors"]
        except (ValueError, KeyError) as exc:
            raise ProviderError(f"malformed provider response: {exc}")
        if self.declared_dim is not None and dim != self.declared_dim:
            raise IntegrityError(
                f"provider dim {dim} does not match declared {self.declared_dim}")
        self.remote_calls += 1
        out = []
        for vec in vectors:
            arr = np.asarray(vec, dtype=np.float64)
            if arr.shape != (dim,):
                raise IntegrityError("provider vector has wrong dimension")
            norm = np.linalg.norm(arr)
            if norm == 0:
                out.append(EmbeddingVector(self.provider_id, dim, arr, is_zero=True))
            else:
                out.append(EmbeddingVector(self.provider_id, dim, arr / norm))
        return out

    def embed(self, analysis_text: str) -> EmbeddingVector:
        return self.embed_batch([analysis_text])[0]

    def embed_batch(self, texts) -> list[EmbeddingVector]:
        texts = list(texts)
        with self._lock:
            missing = [t for t in texts if self._cache_key(t) not in self._cache]
            missing = list(dict.fromkeys(missing))  # dedupe, keep order
            for start in range(0, len(missing), self.batch_size):
                batch = missing[start:start + self.batch_size]
                vectors = self._request(batch)
                if len(vectors) != len(batch):
                    raise ProviderError("provider returned wrong number of vectors")
                for text, vec in zip(batch, vectors):
                    self._cache[self._cache_key(text)] = vec
            return [self._cache[self._cache_key(t)] for t in texts]
