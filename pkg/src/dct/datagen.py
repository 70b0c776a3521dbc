"""Seeded synthetic campaign corpora with controllable signal strength.

Two knobs decide how predictable outcomes are: ``funds_signal`` scales
how much a campaign's daily intake depends on its outcome, and
``sentiment_signal`` biases review polarity toward the outcome. At zero
both are pure noise, which is what the no-leakage control checks. Review
texts are composed from disjoint positive/negative marker vocabularies
(plus shared filler), so the bag-of-words classifier can always recover
polarity when asked to.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .features import Campaign, DailyRecord, Review, StaticAttributes
from .sentiment import LabeledDocument

POSITIVE_MARKERS = [
    "great", "love", "amazing", "awesome", "excellent",
    "fantastic", "wonderful", "perfect", "brilliant", "superb",
]
NEGATIVE_MARKERS = [
    "terrible", "awful", "refund", "broken", "horrible",
    "waste", "disappointing", "scam", "useless", "defective",
]
FILLER_WORDS = [
    "the", "campaign", "product", "shipping", "update",
    "backer", "perk", "team", "delivery", "this",
]

CATEGORIES = ["tech", "art", "games", "food", "film", "music"]
COUNTRIES = ["us", "uk", "de", "fr", "ca", "au"]
REGIONS = ["north", "south", "east", "west"]
TIERS = ["bronze", "silver", "gold"]
BANDS = ["small", "medium", "large"]
SCOPES = ["domestic", "worldwide", "none"]


@dataclass
class GenConfig:
    n_campaigns: int = 100
    duration_min: int = 6
    duration_max: int = 18
    base_success_rate: float = 0.40
    sentiment_signal: float = 0.6  # in [0, 1]
    funds_signal: float = 0.2  # in [0, 1]
    reviews_per_day: float = 2.5
    corpus_docs: int = 200
    positive_words: list[str] = field(default_factory=lambda: list(POSITIVE_MARKERS))
    negative_words: list[str] = field(default_factory=lambda: list(NEGATIVE_MARKERS))
    seed: int = 0

    def validate(self):
        if self.n_campaigns < 1:
            raise ValueError("n_campaigns must be positive")
        if self.duration_min < 3:
            raise ValueError("duration_min must be at least 3")
        if self.duration_max < self.duration_min:
            raise ValueError("duration range is inverted")
        if not 0.0 <= self.base_success_rate <= 1.0:
            raise ValueError("base_success_rate must lie in [0, 1]")
        if not 0.0 <= self.sentiment_signal <= 1.0:
            raise ValueError("sentiment_signal must lie in [0, 1]")
        if not 0.0 <= self.funds_signal <= 1.0:
            raise ValueError("funds_signal must lie in [0, 1]")
        if self.reviews_per_day < 0:
            raise ValueError("reviews_per_day cannot be negative")
        if self.corpus_docs < 2:
            raise ValueError("corpus_docs must be at least 2")
        if not self.positive_words or not self.negative_words:
            raise ValueError("marker vocabularies cannot be empty")
        if set(self.positive_words) & set(self.negative_words):
            raise ValueError("marker vocabularies must be disjoint")

    def to_dict(self) -> dict:
        return {
            "n_campaigns": self.n_campaigns,
            "duration_min": self.duration_min,
            "duration_max": self.duration_max,
            "base_success_rate": self.base_success_rate,
            "sentiment_signal": self.sentiment_signal,
            "funds_signal": self.funds_signal,
            "reviews_per_day": self.reviews_per_day,
            "corpus_docs": self.corpus_docs,
            "positive_words": self.positive_words,
            "negative_words": self.negative_words,
            "seed": self.seed,
        }

    _INT_FIELDS = ("n_campaigns", "duration_min", "duration_max", "corpus_docs", "seed")

    @staticmethod
    def from_dict(d: dict) -> "GenConfig":
        cfg = GenConfig()
        for key, value in d.items():
            if not hasattr(cfg, key):
                raise ValueError(f"unknown generator config field {key!r}")
            setattr(cfg, key, int(value) if key in GenConfig._INT_FIELDS else value)
        return cfg


def _review_text(rng: np.random.Generator, markers: list[str]) -> str:
    n_words = int(rng.integers(3, 9))
    words = [str(rng.choice(markers))]  # at least one marker word
    for _ in range(n_words - 1):
        pool = markers if rng.random() < 0.7 else FILLER_WORDS
        words.append(str(rng.choice(pool)))
    return " ".join(words)


def _static_attributes(rng: np.random.Generator, duration: int) -> StaticAttributes:
    goal = round(float(np.exp(rng.normal(np.log(5000.0), 0.8))), 2)
    return StaticAttributes(
        owner={
            "owner_campaign_count": int(rng.integers(0, 20)),
            "owner_success_count": int(rng.integers(0, 10)),
            "owner_years_active": round(float(rng.uniform(0, 12)), 2),
            "owner_verified": str(rng.choice(["yes", "no"])),
            "owner_region": str(rng.choice(REGIONS)),
        },
        backer={
            "avg_backers_prior": int(rng.integers(0, 500)),
            "backer_return_rate": round(float(rng.uniform(0, 1)), 4),
            "mailing_list_size": int(rng.integers(0, 20000)),
            "backer_tier": str(rng.choice(TIERS)),
            "community_band": str(rng.choice(BANDS)),
        },
        perks={
            "perk_count": int(rng.integers(1, 12)),
            "min_perk_price": round(float(rng.uniform(1, 50)), 2),
            "max_perk_price": round(float(rng.uniform(50, 2000)), 2),
            "has_early_bird": str(rng.choice(["yes", "no"])),
            "shipping_scope": str(rng.choice(SCOPES)),
        },
        other={
            "goal": goal,
            "duration": duration,
            "category": str(rng.choice(CATEGORIES)),
            "country": str(rng.choice(COUNTRIES)),
            "has_video": str(rng.choice(["yes", "no"])),
        },
    )


def generate(config: GenConfig) -> tuple[list[Campaign], list[LabeledDocument]]:
    """Campaigns (reviews untagged) plus a labeled sentiment corpus.

    Outcomes are Bernoulli(base_success_rate). Daily funds are log-normal
    around goal/duration, scaled up for successes and down for failures in
    proportion to funds_signal. Review polarity is
    Bernoulli(0.5 + (success ? +1 : -1) * sentiment_signal / 2) and the
    text matches the drawn polarity. Deterministic per seed.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    campaigns = []
    for i in range(config.n_campaigns):
        duration = int(rng.integers(config.duration_min, config.duration_max + 1))
        static = _static_attributes(rng, duration)
        success = bool(rng.random() < config.base_success_rate)
        goal = static.other["goal"]
        direction = 1.0 if success else -1.0
        mean = (goal / duration) * (1.0 + direction * 0.9 * config.funds_signal)
        sigma = 0.75
        p_pos = 0.5 + direction * config.sentiment_signal / 2.0
        days = []
        for day in range(1, duration + 1):
            funds = round(float(rng.lognormal(np.log(mean) - sigma**2 / 2.0, sigma)), 2)
            reviews = []
            for _ in range(int(rng.poisson(config.reviews_per_day))):
                positive = bool(rng.random() < p_pos)
                markers = config.positive_words if positive else config.negative_words
                reviews.append(Review(day=day, text=_review_text(rng, markers)))
            days.append(DailyRecord(day=day, funds_received=funds, reviews=reviews))
        campaigns.append(
            Campaign(
                id=f"camp-{i:04d}",
                static=static,
                days=days,
                outcome="success" if success else "failure",
            )
        )

    corpus = []
    for j in range(config.corpus_docs):
        positive = j % 2 == 0
        markers = config.positive_words if positive else config.negative_words
        corpus.append(
            LabeledDocument(text=_review_text(rng, markers), label="pos" if positive else "neg")
        )
    return campaigns, corpus
