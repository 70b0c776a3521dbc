"""Campaign data model and feature construction.

Campaigns arrive as JSONL (one object per line, see ``load_campaigns``).
Static attributes live in four category maps (owner, backer, perks,
other) and are encoded as one global vector: numerics min-max scaled with
statistics fitted on the training set, categoricals one-hot with a
reserved unknown slot. Daily dynamics become fixed-width vectors made of
a log2 funds bucket one-hot plus a bounded review summary.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

CATEGORY_ORDER = ("owner", "backer", "perks", "other")

# Default 20-attribute declaration, five per category. Attribute values in
# a dataset must match this set unless a custom declaration is supplied.
DEFAULT_ATTRIBUTE_DECLARATION = [
    {"name": "owner_campaign_count", "category": "owner", "kind": "numeric"},
    {"name": "owner_success_count", "category": "owner", "kind": "numeric"},
    {"name": "owner_years_active", "category": "owner", "kind": "numeric"},
    {"name": "owner_verified", "category": "owner", "kind": "categorical"},
    {"name": "owner_region", "category": "owner", "kind": "categorical"},
    {"name": "avg_backers_prior", "category": "backer", "kind": "numeric"},
    {"name": "backer_return_rate", "category": "backer", "kind": "numeric"},
    {"name": "mailing_list_size", "category": "backer", "kind": "numeric"},
    {"name": "backer_tier", "category": "backer", "kind": "categorical"},
    {"name": "community_band", "category": "backer", "kind": "categorical"},
    {"name": "perk_count", "category": "perks", "kind": "numeric"},
    {"name": "min_perk_price", "category": "perks", "kind": "numeric"},
    {"name": "max_perk_price", "category": "perks", "kind": "numeric"},
    {"name": "has_early_bird", "category": "perks", "kind": "categorical"},
    {"name": "shipping_scope", "category": "perks", "kind": "categorical"},
    {"name": "goal", "category": "other", "kind": "numeric"},
    {"name": "duration", "category": "other", "kind": "numeric"},
    {"name": "category", "category": "other", "kind": "categorical"},
    {"name": "country", "category": "other", "kind": "categorical"},
    {"name": "has_video", "category": "other", "kind": "categorical"},
]

UNKNOWN_LEVEL = "__unknown__"
REVIEW_COUNT_CAP = 100
DEFAULT_BUCKETS = 12


@dataclass
class Review:
    day: int
    text: str | None = None
    p_pos: float | None = None

    @property
    def tagged(self) -> bool:
        return self.p_pos is not None


@dataclass
class DailyRecord:
    day: int
    funds_received: float
    reviews: list[Review] = field(default_factory=list)


@dataclass
class StaticAttributes:
    owner: dict = field(default_factory=dict)
    backer: dict = field(default_factory=dict)
    perks: dict = field(default_factory=dict)
    other: dict = field(default_factory=dict)

    def by_category(self, category: str) -> dict:
        return getattr(self, category)

    def all_names(self) -> list[str]:
        return [n for c in CATEGORY_ORDER for n in self.by_category(c)]


@dataclass
class Campaign:
    id: str
    static: StaticAttributes
    days: list[DailyRecord]
    outcome: str | None = None  # "success" | "failure" | None while live

    @property
    def duration(self) -> int:
        return len(self.days)

    def validate(self):
        goal = self.static.other.get("goal")
        duration = self.static.other.get("duration")
        if goal is None or goal <= 0:
            raise ValueError(f"campaign {self.id}: goal must be positive")
        if duration is None or duration < 1:
            raise ValueError(f"campaign {self.id}: duration must be at least 1")
        if len(self.days) != int(duration):
            raise ValueError(
                f"campaign {self.id}: {len(self.days)} day records for "
                f"duration {duration}"
            )
        names = self.static.all_names()
        if len(names) != len(set(names)):
            raise ValueError(f"campaign {self.id}: attribute names overlap categories")
        for expected, rec in enumerate(self.days, start=1):
            if rec.day != expected:
                raise ValueError(
                    f"campaign {self.id}: day records must run 1..n, found "
                    f"{rec.day} at position {expected}"
                )
            if rec.funds_received < 0:
                raise ValueError(f"campaign {self.id}: negative funds on day {rec.day}")
            for r in rec.reviews:
                if r.day != rec.day:
                    raise ValueError(
                        f"campaign {self.id}: review day {r.day} inside day {rec.day}"
                    )
                if r.p_pos is not None and not 0.0 <= r.p_pos <= 1.0:
                    raise ValueError(f"campaign {self.id}: p_pos outside [0,1]")
        if self.outcome not in ("success", "failure", None):
            raise ValueError(f"campaign {self.id}: bad outcome {self.outcome!r}")


@dataclass
class DailySentimentStats:
    day: int
    n_pos: int
    n_neg: int


@dataclass
class FeatureSchema:
    """Fitted encoding recipe: attribute kinds, funds buckets, stats."""

    attributes: list[dict]  # declaration entries {name, category, kind}
    bucket_count: int
    numeric_stats: dict[str, tuple[float, float]]  # name -> (min, max)
    categorical_levels: dict[str, list[str]]  # name -> first-seen levels

    def attribute_names(self) -> list[str]:
        return [a["name"] for a in self.attributes]

    def static_width(self) -> int:
        width = 0
        for a in self._ordered():
            if a["kind"] == "numeric":
                width += 1
            else:
                width += len(self.categorical_levels[a["name"]]) + 1
        return width

    def _ordered(self) -> list[dict]:
        # Fixed category order, declaration order within a category.
        out = []
        for cat in CATEGORY_ORDER:
            out.extend(a for a in self.attributes if a["category"] == cat)
        return out

    def to_dict(self) -> dict:
        return {
            "attributes": self.attributes,
            "bucket_count": self.bucket_count,
            "numeric_stats": {k: list(v) for k, v in self.numeric_stats.items()},
            "categorical_levels": self.categorical_levels,
        }

    @staticmethod
    def from_dict(d: dict) -> "FeatureSchema":
        return FeatureSchema(
            attributes=list(d["attributes"]),
            bucket_count=int(d["bucket_count"]),
            numeric_stats={k: (float(v[0]), float(v[1])) for k, v in d["numeric_stats"].items()},
            categorical_levels={k: list(v) for k, v in d["categorical_levels"].items()},
        )


def fit_schema(
    campaigns: list[Campaign],
    bucket_count: int = DEFAULT_BUCKETS,
    declaration: list[dict] | None = None,
) -> FeatureSchema:
    """Collect normalization statistics from a training set.

    Numeric attributes get min/max over the set; categorical levels are
    recorded in first-seen order and an unknown slot is reserved on top.
    """
    if not campaigns:
        raise ValueError("cannot fit a schema on an empty training set")
    if bucket_count < 2:
        raise ValueError("bucket count must be at least 2")
    declaration = declaration or DEFAULT_ATTRIBUTE_DECLARATION
    kinds = {a["name"]: a["kind"] for a in declaration}
    numeric_stats: dict[str, tuple[float, float]] = {}
    levels: dict[str, list[str]] = {
        a["name"]: [] for a in declaration if a["kind"] == "categorical"
    }
    for c in campaigns:
        for cat in CATEGORY_ORDER:
            for name, value in c.static.by_category(cat).items():
                if name not in kinds:
                    raise ValueError(f"schema mismatch: unknown attribute {name!r}")
                if kinds[name] == "numeric":
                    v = float(value)
                    lo, hi = numeric_stats.get(name, (v, v))
                    numeric_stats[name] = (min(lo, v), max(hi, v))
                else:
                    v = str(value)
                    if v not in levels[name]:
                        levels[name].append(v)
    return FeatureSchema(
        attributes=list(declaration),
        bucket_count=bucket_count,
        numeric_stats=numeric_stats,
        categorical_levels=levels,
    )


def encode_static(attrs: StaticAttributes, schema: FeatureSchema) -> np.ndarray:
    """Fixed-width static vector: scaled numerics and one-hot categoricals.

    Categories concatenate in owner, backer, perks, other order. Numeric
    values are clamped to [0, 1] after scaling; an attribute whose fitted
    min equals its max encodes as 0. Unseen categorical levels land in the
    reserved unknown slot.
    """
    known = set(schema.attribute_names())
    for name in attrs.all_names():
        if name not in known:
            raise ValueError(f"schema mismatch: attribute {name!r} not in schema")
    parts: list[float] = []
    for a in schema._ordered():
        name = a["name"]
        cat_map = attrs.by_category(a["category"])
        if name not in cat_map:
            raise ValueError(f"schema mismatch: attribute {name!r} missing from data")
        value = cat_map[name]
        if a["kind"] == "numeric":
            lo, hi = schema.numeric_stats.get(name, (0.0, 0.0))
            if hi <= lo:
                parts.append(0.0)
            else:
                parts.append(min(1.0, max(0.0, (float(value) - lo) / (hi - lo))))
        else:
            lvls = schema.categorical_levels[name]
            onehot = [0.0] * (len(lvls) + 1)
            v = str(value)
            onehot[lvls.index(v) if v in lvls else len(lvls)] = 1.0
            parts.extend(onehot)
    return np.array(parts, dtype=np.float64)


def bucket_funds(amount: float, bucket_count: int) -> np.ndarray:
    """One-hot log2 bucket: index min(floor(log2(1 + amount)), B - 1)."""
    if bucket_count < 2:
        raise ValueError("bucket count must be at least 2")
    if amount < 0:
        raise ValueError("funds amount cannot be negative")
    k = min(int(math.floor(math.log2(1.0 + amount))), bucket_count - 1)
    out = np.zeros(bucket_count, dtype=np.float64)
    out[k] = 1.0
    return out


def aggregate_day(record: DailyRecord) -> DailySentimentStats:
    """Count positive (p_pos > 0.5) and negative reviews for one day."""
    n_pos = 0
    for r in record.reviews:
        if not r.tagged:
            raise ValueError(f"untagged review on day {record.day}")
        if r.p_pos > 0.5:
            n_pos += 1
    return DailySentimentStats(
        day=record.day, n_pos=n_pos, n_neg=len(record.reviews) - n_pos
    )


_LOG_CAP = math.log(1.0 + REVIEW_COUNT_CAP)


def build_daily_feature(record: DailyRecord, schema: FeatureSchema) -> np.ndarray:
    """Day vector: funds one-hot followed by a four-part review summary.

    The summary is [n_pos / (1 + n), n_neg / (1 + n), mean p_pos (0.5 when
    the day has no reviews), log(1 + n) / log(1 + 100) clamped to 1].
    Width is bucket_count + 4.
    """
    stats = aggregate_day(record)
    n = len(record.reviews)
    mean_pos = sum(r.p_pos for r in record.reviews) / n if n else 0.5
    summary = np.array(
        [
            stats.n_pos / (1.0 + n),
            stats.n_neg / (1.0 + n),
            mean_pos,
            min(1.0, math.log(1.0 + n) / _LOG_CAP),
        ],
        dtype=np.float64,
    )
    return np.concatenate([bucket_funds(record.funds_received, schema.bucket_count), summary])


def funds_only_feature(record: DailyRecord, schema: FeatureSchema) -> np.ndarray:
    """Day vector for the funds-only ablation: just the funds one-hot."""
    return bucket_funds(record.funds_received, schema.bucket_count)


def feature_sequence(
    campaign: Campaign, schema: FeatureSchema, include_reviews: bool = True
) -> np.ndarray:
    """Stack the per-day vectors of one campaign into an (n, width) array."""
    build = build_daily_feature if include_reviews else funds_only_feature
    return np.stack([build(rec, schema) for rec in campaign.days])


def stats_rows(campaign: Campaign, pattern: str) -> list[tuple]:
    """Per-day sentiment statistics for the tile or stack rendering.

    Tile rows are (day, n_pos, n_neg); stack rows are (day, n_total,
    frac_pos, frac_neg) with zero fractions on review-less days.
    """
    if pattern not in ("tile", "stack"):
        raise ValueError(f"unknown stats pattern {pattern!r}")
    rows = []
    for rec in campaign.days:
        s = aggregate_day(rec)
        if pattern == "tile":
            rows.append((s.day, s.n_pos, s.n_neg))
        else:
            n = s.n_pos + s.n_neg
            if n:
                rows.append((s.day, n, s.n_pos / n, s.n_neg / n))
            else:
                rows.append((s.day, 0, 0.0, 0.0))
    return rows


def campaign_from_dict(d: dict) -> Campaign:
    static = StaticAttributes(
        owner=dict(d.get("static", {}).get("owner", {})),
        backer=dict(d.get("static", {}).get("backer", {})),
        perks=dict(d.get("static", {}).get("perks", {})),
        other=dict(d.get("static", {}).get("other", {})),
    )
    days = []
    for rec in d.get("days", []):
        reviews = [
            Review(day=int(rec["day"]), text=r.get("text"), p_pos=r.get("p_pos"))
            for r in rec.get("reviews", [])
        ]
        days.append(
            DailyRecord(
                day=int(rec["day"]),
                funds_received=float(rec["funds"]),
                reviews=reviews,
            )
        )
    campaign = Campaign(
        id=str(d["id"]), static=static, days=days, outcome=d.get("outcome")
    )
    campaign.validate()
    return campaign


def campaign_to_dict(c: Campaign) -> dict:
    days = []
    for rec in c.days:
        reviews = []
        for r in rec.reviews:
            obj = {}
            if r.text is not None:
                obj["text"] = r.text
            if r.p_pos is not None:
                obj["p_pos"] = r.p_pos
            reviews.append(obj)
        days.append({"day": rec.day, "funds": rec.funds_received, "reviews": reviews})
    return {
        "id": c.id,
        "static": {
            "owner": c.static.owner,
            "backer": c.static.backer,
            "perks": c.static.perks,
            "other": c.static.other,
        },
        "days": days,
        "outcome": c.outcome,
    }


def load_campaigns(path) -> list[Campaign]:
    """Read a JSONL campaign dataset, validating every campaign."""
    campaigns = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                campaigns.append(campaign_from_dict(json.loads(line)))
            except (KeyError, TypeError, json.JSONDecodeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad campaign record: {exc}") from exc
    return campaigns


def save_campaigns(campaigns: Iterable[Campaign], path):
    with open(path, "w", encoding="utf-8") as fh:
        for c in campaigns:
            fh.write(json.dumps(campaign_to_dict(c)) + "\n")
