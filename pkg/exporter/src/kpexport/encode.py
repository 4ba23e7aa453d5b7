"""Encoder registry: text -> per-layer pooled hidden-state vectors.

Built-in labels ``hashed-<dim>`` (alias ``hashed`` = hashed-64) give a fully
deterministic offline encoder: per-token vectors are seeded from a stable
digest of the token, passed through fixed tanh layers, and pooled per layer
("cls" keeps the first position, "mean" averages). Any other label is
resolved through the `transformers` library when it is importable and the
weights are available locally.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

MAX_TOKENS = 128


class EncoderError(Exception):
    pass


@dataclass
class EncodeResult:
    layers: list[list[float]]  # oldest -> last, each of length dim
    truncated: bool


class HashedEncoder:
    """Deterministic stand-in encoder with shaped per-layer token states."""

    deterministic = True

    def __init__(self, dim: int, n_layers: int, pooling: str):
        if dim < 1:
            raise EncoderError(f"bad hashed encoder dim {dim}")
        if pooling not in ("cls", "mean"):
            raise EncoderError(f"unknown pooling {pooling!r}")
        self.dim = dim
        self.n_layers = n_layers
        self.pooling = pooling
        self._token_cache: dict[str, np.ndarray] = {}
        self._weights = []
        for layer in range(n_layers):
            rng = np.random.default_rng(10_007 * (layer + 1) + dim)
            self._weights.append(
                (
                    rng.normal(0.0, 1.0 / math.sqrt(dim), size=(dim, dim)),
                    rng.normal(0.0, 0.05, size=dim),
                )
            )

    def _token_vector(self, token: str) -> np.ndarray:
        cached = self._token_cache.get(token)
        if cached is None:
            digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "big"))
            cached = rng.normal(0.0, 1.0, size=self.dim)
            self._token_cache[token] = cached
        return cached

    def encode(self, text: str) -> EncodeResult:
        tokens = text.split()
        if not tokens:
            raise EncoderError("cannot encode empty text")
        truncated = len(tokens) > MAX_TOKENS
        tokens = tokens[:MAX_TOKENS]
        states = np.stack([self._token_vector(tok) for tok in tokens])
        layers = []
        for weight, bias in self._weights:
            # Sentence-mean context term mixes tokens, so every position
            # (including the cls-style first one) reflects the whole input.
            context = states.mean(axis=0)
            states = np.tanh(states @ weight + bias + 0.5 * context)
            pooled = states[0] if self.pooling == "cls" else states.mean(axis=0)
            layers.append([round(float(x), 6) for x in pooled])
        return EncodeResult(layers=layers, truncated=truncated)


class TransformerEncoder:
    """Pretrained encoder via transformers; requires locally available weights."""

    deterministic = False  # depends on the backend; recorded in the manifest

    def __init__(self, label: str, n_layers: int, pooling: str):
        try:
            import torch  # noqa: F401
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise EncoderError(f"transformers backend unavailable: {exc}") from None
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(label)
            self.model = AutoModel.from_pretrained(label, output_hidden_states=True)
        except Exception as exc:  # load failure: missing weights, bad label
            raise EncoderError(f"cannot load encoder {label!r}: {exc}") from None
        self.model.eval()
        self.n_layers = n_layers
        self.pooling = pooling
        self.dim = int(self.model.config.hidden_size)

    def encode(self, text: str) -> EncodeResult:
        import torch

        enc = self.tokenizer(text, truncation=True, return_tensors="pt")
        truncated = bool(
            len(self.tokenizer(text)["input_ids"]) > self.tokenizer.model_max_length
        )
        with torch.no_grad():
            out = self.model(**enc)
        hidden = out.hidden_states[-self.n_layers :]
        layers = []
        for state in hidden:
            vec = state[0, 0] if self.pooling == "cls" else state[0].mean(dim=0)
            layers.append([round(float(x), 6) for x in vec.tolist()])
        return EncodeResult(layers=layers, truncated=truncated)


def resolve_encoder(label: str, n_layers: int, pooling: str):
    """Label -> encoder instance; hashed-* labels never touch the network."""
    if n_layers < 1:
        raise EncoderError("n_layers must be >= 1")
    if label == "hashed":
        return HashedEncoder(64, n_layers, pooling)
    if label.startswith("hashed-"):
        try:
            dim = int(label.split("-", 1)[1])
        except ValueError:
            raise EncoderError(f"bad hashed encoder label {label!r}") from None
        return HashedEncoder(dim, n_layers, pooling)
    return TransformerEncoder(label, n_layers, pooling)
