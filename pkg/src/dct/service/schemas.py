"""Pydantic request and response models for the HTTP service.

These mirror the file formats the pipeline uses on disk: campaigns as in
the JSONL dataset, sentiment models and checkpoints as their versioned
JSON documents.
"""

from __future__ import annotations

from pydantic import BaseModel, Field

StaticValue = int | float | str


class ReviewModel(BaseModel):
    text: str | None = None
    p_pos: float | None = None


class DayModel(BaseModel):
    day: int
    funds: float
    reviews: list[ReviewModel] = Field(default_factory=list)


class CampaignModel(BaseModel):
    id: str
    static: dict[str, dict[str, StaticValue]]
    days: list[DayModel]
    outcome: str | None = None


class LabeledDocumentModel(BaseModel):
    text: str
    label: str


class GenConfigModel(BaseModel):
    n_campaigns: int = 100
    duration_min: int = 6
    duration_max: int = 18
    base_success_rate: float = 0.40
    sentiment_signal: float = 0.6
    funds_signal: float = 0.2
    reviews_per_day: float = 2.5
    corpus_docs: int = 200
    positive_words: list[str] | None = None
    negative_words: list[str] | None = None
    seed: int = 0


class SimulateRequest(BaseModel):
    config: GenConfigModel = Field(default_factory=GenConfigModel)


class SimulateResponse(BaseModel):
    campaigns: list[CampaignModel]
    corpus: list[LabeledDocumentModel]


class SentimentModelPayload(BaseModel):
    version: int = 1
    vocab: list[str]
    weights: list[float]
    bias: float
    meta: dict = Field(default_factory=dict)


class SentimentTrainRequest(BaseModel):
    corpus: list[LabeledDocumentModel]
    epochs: int = 200
    learning_rate: float = 0.5
    seed: int = 0


class ClassifyRequest(BaseModel):
    model: SentimentModelPayload
    text: str


class ClassifyResponse(BaseModel):
    p_pos: float
    label: str


class TagRequest(BaseModel):
    model: SentimentModelPayload
    campaigns: list[CampaignModel]


class TagResponse(BaseModel):
    campaigns: list[CampaignModel]


class TrainConfigModel(BaseModel):
    epochs: int = 30
    learning_rate: float = 0.15
    batch_size: int = 16
    aux_weight: float = 0.2
    seed: int = 0
    clip_norm: float = 5.0
    static_dim: int = 16
    hidden_dim: int = 16
    bucket_count: int = 12


class TrainRequest(BaseModel):
    campaigns: list[CampaignModel]
    config: TrainConfigModel = Field(default_factory=TrainConfigModel)
    variant: str = "full"  # "full" | "funds_only"


class TrainResponse(BaseModel):
    checkpoint: dict
    loss_history: list[float]


class TrackRequest(BaseModel):
    campaign: CampaignModel
    checkpoint_full: dict
    checkpoint_funds_only: dict


class TrackedDayModel(BaseModel):
    day: int
    p_success_full: float
    p_success_funds_only: float
    emotion: str
    emotion_prob: float


class TrackResponse(BaseModel):
    campaign_id: str
    days: list[TrackedDayModel]
    attention: list[float]


class StatsRequest(BaseModel):
    campaign: CampaignModel
    pattern: str  # "tile" | "stack"


class TileRowModel(BaseModel):
    day: int
    n_pos: int
    n_neg: int


class StackRowModel(BaseModel):
    day: int
    n_total: int
    frac_pos: float
    frac_neg: float


class StatsResponse(BaseModel):
    pattern: str
    tile_rows: list[TileRowModel] | None = None
    stack_rows: list[StackRowModel] | None = None


class GradcheckRequest(BaseModel):
    seed: int = 0
    overrides: dict = Field(default_factory=dict)


class HealthResponse(BaseModel):
    status: str
    version: str
