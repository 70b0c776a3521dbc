"""Review polarity classifier.

A deterministic logistic regression over bag-of-words counts stands in
for an external sentiment tagger behind a single interface: ``classify``
returns the probability that a review is positive. Tokens the model has
never seen are ignored, so classification is a pure function of the
stored model.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np

from .nn import sigmoid

_TOKEN_CLEANER = re.compile(r"[^a-z0-9]+")

POSITIVE = "pos"
NEGATIVE = "neg"


def tokenize(text: str) -> list[str]:
    """Lowercase, strip non-alphanumerics, split on whitespace."""
    return [t for t in _TOKEN_CLEANER.sub(" ", text.lower()).split() if t]


@dataclass
class LabeledDocument:
    text: str
    label: str  # "pos" | "neg"


@dataclass
class SentimentModel:
    """Vocabulary plus logistic weights; the last weight is the bias."""

    vocabulary: dict[str, int]  # token -> contiguous index from 0
    weights: np.ndarray  # len(vocabulary) + 1, bias last
    training_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.weights.shape != (len(self.vocabulary) + 1,):
            raise ValueError("weights length must be vocabulary size + 1")
        idx = sorted(self.vocabulary.values())
        if idx != list(range(len(self.vocabulary))):
            raise ValueError("vocabulary indices must be contiguous from 0")

    @property
    def bias(self) -> float:
        return float(self.weights[-1])

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "vocab": list(self.vocabulary.keys()),
            "weights": [float(w) for w in self.weights[:-1]],
            "bias": self.bias,
            "meta": self.training_meta,
        }

    @staticmethod
    def from_dict(d: dict) -> "SentimentModel":
        if d.get("version") != 1:
            raise ValueError(f"unsupported sentiment model version {d.get('version')!r}")
        vocab = {tok: i for i, tok in enumerate(d["vocab"])}
        weights = np.array(list(d["weights"]) + [d["bias"]], dtype=np.float64)
        return SentimentModel(vocab, weights, dict(d.get("meta", {})))


def _count_vector(model_vocab: dict[str, int], tokens: list[str], size: int) -> np.ndarray:
    x = np.zeros(size + 1, dtype=np.float64)
    x[size] = 1.0  # bias input
    for t in tokens:
        i = model_vocab.get(t)
        if i is not None:
            x[i] += 1.0
    return x


def train_sentiment(
    corpus: list[LabeledDocument],
    epochs: int = 200,
    learning_rate: float = 0.5,
    seed: int = 0,
) -> SentimentModel:
    """Fit logistic regression on token counts by full-batch gradient descent.

    Weights start at zero, which keeps the result independent of
    vocabulary insertion order, and the pass over the corpus is a fixed
    order sum, so training is bit-reproducible for a given corpus.
    """
    if learning_rate <= 0:
        raise ValueError("learning rate must be positive")
    if epochs < 1:
        raise ValueError("epochs must be positive")
    labels = {doc.label for doc in corpus}
    if labels != {POSITIVE, NEGATIVE}:
        if not corpus or len(labels) == 1:
            raise ValueError("degenerate corpus: need both pos and neg documents")
        raise ValueError(f"corpus labels must be pos/neg, found {sorted(labels)}")

    vocab: dict[str, int] = {}
    docs = []
    for doc in corpus:
        tokens = tokenize(doc.text)
        if not tokens:
            raise ValueError("document is empty after tokenization")
        for t in tokens:
            if t not in vocab:
                vocab[t] = len(vocab)
        docs.append((tokens, 1.0 if doc.label == POSITIVE else 0.0))

    size = len(vocab)
    xs = np.stack([_count_vector(vocab, tokens, size) for tokens, _ in docs])
    ys = np.array([y for _, y in docs], dtype=np.float64)
    w = np.zeros(size + 1, dtype=np.float64)
    for _ in range(epochs):
        p = sigmoid(xs @ w)
        w -= learning_rate * (xs.T @ (p - ys)) / len(docs)
    return SentimentModel(
        vocabulary=vocab,
        weights=w,
        training_meta={
            "corpus_size": len(docs),
            "epochs": epochs,
            "learning_rate": learning_rate,
            "seed": seed,
        },
    )


def classify(model: SentimentModel, text: str) -> float:
    """Probability the text is positive; unknown tokens contribute nothing."""
    x = _count_vector(model.vocabulary, tokenize(text), len(model.vocabulary))
    return float(sigmoid(np.array([x @ model.weights]))[0])


def is_positive(p_pos: float) -> bool:
    """Discrete polarity rule: strictly above one half is positive."""
    return p_pos > 0.5


def save_model(model: SentimentModel, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh)
        fh.write("\n")


def load_model(path) -> SentimentModel:
    with open(path, "r", encoding="utf-8") as fh:
        return SentimentModel.from_dict(json.load(fh))


def load_corpus(path) -> list[LabeledDocument]:
    """Read a JSONL corpus of {"text": ..., "label": "pos"|"neg"} lines."""
    docs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                d = json.loads(line)
                docs.append(LabeledDocument(text=str(d["text"]), label=str(d["label"])))
            except (KeyError, json.JSONDecodeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad corpus record: {exc}") from exc
    return docs


def save_corpus(docs: list[LabeledDocument], path):
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps({"text": doc.text, "label": doc.label}) + "\n")
