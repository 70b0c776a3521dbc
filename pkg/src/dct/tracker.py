"""Model assembly, training and daily tracking.

A trained model carries its feature schema, so a checkpoint is enough to
score any campaign with matching attributes. Tracking re-infers the
success probability on every day prefix 1..t of a campaign: hidden
states are causal and computed once, while attention is re-normalized
per prefix, which is what makes the per-day curve exact rather than an
incremental approximation. The funds-only ablation is the same
architecture reading only the funds bucket one-hot.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import features as ft
from . import nn

FAILURE, SUCCESS = 0, 1  # outcome class order everywhere
EMO_NEG, EMO_POS = 0, 1

VARIANT_FULL = "full"
VARIANT_FUNDS_ONLY = "funds_only"


@dataclass
class ModelSizes:
    static_dim: int
    hidden_dim: int
    input_dim: int

    def to_dict(self) -> dict:
        return {
            "static_dim": self.static_dim,
            "hidden_dim": self.hidden_dim,
            "input_dim": self.input_dim,
        }

    @staticmethod
    def from_dict(d: dict) -> "ModelSizes":
        return ModelSizes(int(d["static_dim"]), int(d["hidden_dim"]), int(d["input_dim"]))


@dataclass
class DctParameters:
    """Trainable tensors plus the schema they were fitted against."""

    variant: str
    sizes: ModelSizes
    schema: ft.FeatureSchema
    core: nn.DctCore

    @property
    def include_reviews(self) -> bool:
        return self.variant == VARIANT_FULL


@dataclass
class TrainConfig:
    epochs: int = 30
    learning_rate: float = 0.15
    batch_size: int = 16
    aux_weight: float = 0.2
    seed: int = 0
    clip_norm: float = 5.0

    def validate(self):
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch size must be positive")
        if self.aux_weight < 0:
            raise ValueError("aux weight cannot be negative")
        if self.clip_norm <= 0:
            raise ValueError("clip norm must be positive")


@dataclass
class TrackedDay:
    day: int
    p_success_full: float
    p_success_funds_only: float
    emotion: str  # "pos" | "neg" | "none"
    emotion_prob: float


@dataclass
class TrackingCurve:
    campaign_id: str
    days: list[TrackedDay]
    attention: np.ndarray = field(default=None)  # final-day weights, full model

    def rows(self) -> list[tuple]:
        return [
            (d.day, d.p_success_full, d.p_success_funds_only, d.emotion, d.emotion_prob)
            for d in self.days
        ]


class ForwardOutput(NamedTuple):
    p_success: float
    alphas: np.ndarray
    day_emotions: np.ndarray  # (n, 2) softmax rows, [neg, pos]


def input_width(schema: ft.FeatureSchema, variant: str) -> int:
    if variant == VARIANT_FULL:
        return schema.bucket_count + 4
    if variant == VARIANT_FUNDS_ONLY:
        return schema.bucket_count
    raise ValueError(f"unknown variant {variant!r}")


def init_parameters(
    schema: ft.FeatureSchema,
    static_dim: int = 16,
    hidden_dim: int = 16,
    variant: str = VARIANT_FULL,
    seed: int = 0,
) -> DctParameters:
    """Fresh seeded parameters for a fitted schema."""
    sizes = ModelSizes(static_dim, hidden_dim, input_width(schema, variant))
    rng = np.random.default_rng(seed)
    core = nn.init_core(schema.static_width(), static_dim, hidden_dim, sizes.input_dim, rng)
    return DctParameters(variant=variant, sizes=sizes, schema=schema, core=core)


def make_funds_only(template: DctParameters, seed: int = 0) -> DctParameters:
    """Funds-only twin of a model: same dims and schema, fresh parameters."""
    return init_parameters(
        template.schema,
        static_dim=template.sizes.static_dim,
        hidden_dim=template.sizes.hidden_dim,
        variant=VARIANT_FUNDS_ONLY,
        seed=seed,
    )


def campaign_prefix(campaign: ft.Campaign, t: int) -> ft.Campaign:
    """The campaign restricted to days 1..t (no re-validation)."""
    return ft.Campaign(
        id=campaign.id, static=campaign.static, days=campaign.days[:t],
        outcome=campaign.outcome,
    )


def _encode(campaign: ft.Campaign, params: DctParameters):
    if not campaign.days:
        raise ValueError("empty prefix")
    static_raw = ft.encode_static(campaign.static, params.schema)
    day_inputs = ft.feature_sequence(campaign, params.schema, params.include_reviews)
    return static_raw, day_inputs


def forward(campaign: ft.Campaign, params: DctParameters) -> ForwardOutput:
    """Success probability, attention weights and per-day emotion for a
    campaign (or a prefix of one)."""
    static_raw, day_inputs = _encode(campaign, params)
    record = nn.forward_pass(static_raw, day_inputs, params.core)
    return ForwardOutput(
        p_success=float(record.head.success_probs[SUCCESS]),
        alphas=record.head.alphas,
        day_emotions=record.emotion_probs,
    )


def track(
    campaign: ft.Campaign,
    params: DctParameters,
    params_funds_only: DctParameters,
) -> TrackingCurve:
    """Per-day tracking curve for both model variants.

    Day t of the curve is the model evaluated on the prefix 1..t. The
    emotion column comes from the full model's emotion head; a polarity is
    shown only when the day has at least one review and the head is
    strictly more than 50% confident, otherwise the row reads "none" (the
    reported probability is then the suppressed top-class value).
    """
    if params.variant != VARIANT_FULL or params_funds_only.variant != VARIANT_FUNDS_ONLY:
        raise ValueError("track needs a full model and a funds-only model, in that order")
    static_full, days_full = _encode(campaign, params)
    static_funds, days_funds = _encode(campaign, params_funds_only)
    rec_full = nn.forward_pass(static_full, days_full, params.core)
    rec_funds = nn.forward_pass(static_funds, days_funds, params_funds_only.core)

    out = []
    for t in range(1, campaign.duration + 1):
        head_full = nn.head_forward(
            rec_full.static_repr, rec_full.day_reprs, rec_full.scores, t, params.core
        )
        head_funds = nn.head_forward(
            rec_funds.static_repr, rec_funds.day_reprs, rec_funds.scores, t,
            params_funds_only.core,
        )
        probs = rec_full.emotion_probs[t - 1]
        cls = int(np.argmax(probs))
        prob = float(probs[cls])
        has_reviews = len(campaign.days[t - 1].reviews) > 0
        if has_reviews and prob > 0.5:
            emotion = "pos" if cls == EMO_POS else "neg"
        else:
            emotion = "none"
        out.append(
            TrackedDay(
                day=t,
                p_success_full=float(head_full.success_probs[SUCCESS]),
                p_success_funds_only=float(head_funds.success_probs[SUCCESS]),
                emotion=emotion,
                emotion_prob=prob,
            )
        )
    return TrackingCurve(campaign_id=campaign.id, days=out, attention=rec_full.head.alphas)


def _day_emotion_labels(campaign: ft.Campaign, include_reviews: bool) -> list[int | None]:
    """Majority review polarity per day; None when untrainable (no reviews,
    tie, or the funds-only variant, which never reads reviews)."""
    if not include_reviews:
        return [None] * campaign.duration
    labels: list[int | None] = []
    for rec in campaign.days:
        if not rec.reviews:
            labels.append(None)
            continue
        stats = ft.aggregate_day(rec)
        if stats.n_pos > stats.n_neg:
            labels.append(EMO_POS)
        elif stats.n_neg > stats.n_pos:
            labels.append(EMO_NEG)
        else:
            labels.append(None)
    return labels


def train(
    dataset: list[ft.Campaign],
    config: TrainConfig,
    variant: str = VARIANT_FULL,
    static_dim: int = 16,
    hidden_dim: int = 16,
    schema: ft.FeatureSchema | None = None,
    bucket_count: int = ft.DEFAULT_BUCKETS,
) -> tuple[DctParameters, list[float]]:
    """Mini-batch gradient descent with gradient-norm clipping.

    Minimizes the outcome cross entropy plus ``aux_weight`` times the
    per-day emotion cross entropy against each day's majority review
    polarity (full variant only). Returns the trained parameters and the
    mean training loss per epoch. Deterministic for a fixed seed.
    """
    config.validate()
    if not dataset:
        raise ValueError("training set is empty")
    for c in dataset:
        if c.outcome not in ("success", "failure"):
            raise ValueError(f"campaign {c.id} has unknown outcome")
    if schema is None:
        schema = ft.fit_schema(dataset, bucket_count)
    rng = np.random.default_rng(config.seed)
    sizes = ModelSizes(static_dim, hidden_dim, input_width(schema, variant))
    core = nn.init_core(schema.static_width(), static_dim, hidden_dim, sizes.input_dim, rng)
    params = DctParameters(variant=variant, sizes=sizes, schema=schema, core=core)

    prepared = []
    for c in dataset:
        static_raw, day_inputs = _encode(c, params)
        outcome = SUCCESS if c.outcome == "success" else FAILURE
        emo = _day_emotion_labels(c, params.include_reviews)
        prepared.append((static_raw, day_inputs, outcome, emo))

    aux = config.aux_weight if variant == VARIANT_FULL else 0.0
    n = len(prepared)
    tensors = params.core.tensors()
    history = []
    for _ in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            acc = nn.zero_gradients(params.core)
            for idx in batch:
                static_raw, day_inputs, outcome, emo = prepared[idx]
                loss, record = nn.sequence_loss(
                    static_raw, day_inputs, outcome, emo, aux, params.core
                )
                epoch_loss += loss
                grads = nn.sequence_gradients(record, params.core, outcome, emo, aux)
                for name in acc:
                    acc[name] += grads[name]
            scale = 1.0 / len(batch)
            sq = 0.0
            for name in acc:
                acc[name] *= scale
                sq += float(np.sum(acc[name] ** 2))
            norm = np.sqrt(sq)
            if norm > config.clip_norm:
                shrink = config.clip_norm / norm
                for name in acc:
                    acc[name] *= shrink
            for name, arr in tensors:
                arr -= config.learning_rate * acc[name]
        history.append(epoch_loss / n)
    return params, history


def evaluate(dataset: list[ft.Campaign], params: DctParameters) -> dict:
    """Final-day accuracy at the 0.5 threshold, midrank AUC and mean cross
    entropy. AUC is nan when the dataset holds a single class."""
    scores, labels, ces = [], [], []
    for c in dataset:
        if c.outcome not in ("success", "failure"):
            raise ValueError(f"campaign {c.id} has unknown outcome")
        out = forward(c, params)
        y = SUCCESS if c.outcome == "success" else FAILURE
        scores.append(out.p_success)
        labels.append(y)
        probs = np.array([1.0 - out.p_success, out.p_success])
        ces.append(nn.cross_entropy(probs, y))
    scores = np.array(scores)
    labels = np.array(labels)
    predictions = (scores > 0.5).astype(int)
    return {
        "accuracy": float(np.mean(predictions == labels)),
        "auc": _midrank_auc(scores, labels),
        "mean_ce": float(np.mean(ces)),
    }


def _midrank_auc(scores: np.ndarray, labels: np.ndarray) -> float:
    """Rank-statistic AUC with midranks for tied scores."""
    n_pos = int(np.sum(labels == 1))
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        return float("nan")
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores))
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # 1-based midrank
        i = j + 1
    pos_rank_sum = float(np.sum(ranks[labels == 1]))
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


CHECKPOINT_VERSION = 1


def checkpoint_to_dict(params: DctParameters) -> dict:
    tensors = {
        name: {"shape": list(arr.shape), "data": [float(x) for x in arr.reshape(-1)]}
        for name, arr in params.core.tensors()
    }
    return {
        "version": CHECKPOINT_VERSION,
        "variant": params.variant,
        "sizes": params.sizes.to_dict(),
        "schema": params.schema.to_dict(),
        "tensors": tensors,
    }


def checkpoint_from_dict(d: dict) -> DctParameters:
    if d.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {d.get('version')!r}")
    sizes = ModelSizes.from_dict(d["sizes"])
    schema = ft.FeatureSchema.from_dict(d["schema"])
    raw = d["tensors"]

    def tensor(name):
        entry = raw[name]
        arr = np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])
        return arr

    lstm = nn.LstmParameters(
        **{f: tensor(f) for f in (
            "w_ei", "w_hi", "b_i", "w_ef", "w_hf", "b_f",
            "w_ec", "w_hc", "b_c", "w_eo", "w_ho", "b_o",
        )}
    )
    core = nn.DctCore(
        encoder_w=tensor("encoder_w"),
        encoder_b=tensor("encoder_b"),
        lstm=lstm,
        attention=nn.AttentionParameters(w=tensor("attn_w"), b=tensor("attn_b")),
        success_w=tensor("success_w"),
        success_b=tensor("success_b"),
        emotion_w=tensor("emotion_w"),
        emotion_b=tensor("emotion_b"),
    )
    params = DctParameters(variant=str(d["variant"]), sizes=sizes, schema=schema, core=core)
    if core.input_dim != sizes.input_dim or core.hidden_dim != sizes.hidden_dim:
        raise ValueError("checkpoint tensor shapes disagree with stored sizes")
    return params


def save_checkpoint(params: DctParameters, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(checkpoint_to_dict(params), fh)
        fh.write("\n")


def load_checkpoint(path) -> DctParameters:
    with open(path, "r", encoding="utf-8") as fh:
        return checkpoint_from_dict(json.load(fh))
