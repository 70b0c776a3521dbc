"""HTTP service exposing the tracking pipeline.

Stateless JSON-in, JSON-out wrappers around the core package, one
endpoint per pipeline stage. Models travel in request and response
bodies using the same documents the CLI writes to disk, so anything
trained over HTTP can be saved and reused by the CLI and vice versa.

Run with: uvicorn dct.service.app:app
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__, datagen, features, sentiment, tracker
from ..cli import gradcheck_report
from . import schemas

app = FastAPI(title="dct", version=__version__)


def _campaign_in(model: schemas.CampaignModel) -> features.Campaign:
    try:
        return features.campaign_from_dict(model.model_dump())
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


def _campaign_out(c: features.Campaign) -> schemas.CampaignModel:
    return schemas.CampaignModel.model_validate(features.campaign_to_dict(c))


def _sentiment_in(payload: schemas.SentimentModelPayload) -> sentiment.SentimentModel:
    try:
        return sentiment.SentimentModel.from_dict(payload.model_dump())
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc


@app.get("/health", response_model=schemas.HealthResponse)
def health():
    return schemas.HealthResponse(status="ok", version=__version__)


@app.post("/simulate", response_model=schemas.SimulateResponse)
def simulate(req: schemas.SimulateRequest):
    cfg_dict = req.config.model_dump()
    for key in ("positive_words", "negative_words"):
        if cfg_dict.get(key) is None:
            cfg_dict.pop(key)
    try:
        config = datagen.GenConfig.from_dict(cfg_dict)
        campaigns, corpus = datagen.generate(config)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return schemas.SimulateResponse(
        campaigns=[_campaign_out(c) for c in campaigns],
        corpus=[schemas.LabeledDocumentModel(text=d.text, label=d.label) for d in corpus],
    )


@app.post("/sentiment/train", response_model=schemas.SentimentModelPayload)
def sentiment_train(req: schemas.SentimentTrainRequest):
    corpus = [sentiment.LabeledDocument(text=d.text, label=d.label) for d in req.corpus]
    try:
        model = sentiment.train_sentiment(
            corpus, epochs=req.epochs, learning_rate=req.learning_rate, seed=req.seed
        )
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return schemas.SentimentModelPayload.model_validate(model.to_dict())


@app.post("/sentiment/classify", response_model=schemas.ClassifyResponse)
def sentiment_classify(req: schemas.ClassifyRequest):
    model = _sentiment_in(req.model)
    p_pos = sentiment.classify(model, req.text)
    return schemas.ClassifyResponse(
        p_pos=p_pos, label="pos" if sentiment.is_positive(p_pos) else "neg"
    )


@app.post("/sentiment/tag", response_model=schemas.TagResponse)
def sentiment_tag(req: schemas.TagRequest):
    model = _sentiment_in(req.model)
    campaigns = [_campaign_in(c) for c in req.campaigns]
    for c in campaigns:
        for rec in c.days:
            for review in rec.reviews:
                if review.text is not None:
                    review.p_pos = sentiment.classify(model, review.text)
                elif review.p_pos is None:
                    raise HTTPException(
                        status_code=400,
                        detail=f"campaign {c.id} day {rec.day}: review has neither text nor p_pos",
                    )
    return schemas.TagResponse(campaigns=[_campaign_out(c) for c in campaigns])


@app.post("/train", response_model=schemas.TrainResponse)
def train(req: schemas.TrainRequest):
    if req.variant not in (tracker.VARIANT_FULL, tracker.VARIANT_FUNDS_ONLY):
        raise HTTPException(status_code=400, detail=f"unknown variant {req.variant!r}")
    dataset = [_campaign_in(c) for c in req.campaigns]
    cfg = req.config
    config = tracker.TrainConfig(
        epochs=cfg.epochs,
        learning_rate=cfg.learning_rate,
        batch_size=cfg.batch_size,
        aux_weight=cfg.aux_weight,
        seed=cfg.seed,
        clip_norm=cfg.clip_norm,
    )
    try:
        params, history = tracker.train(
            dataset,
            config,
            variant=req.variant,
            static_dim=cfg.static_dim,
            hidden_dim=cfg.hidden_dim,
            bucket_count=cfg.bucket_count,
        )
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return schemas.TrainResponse(
        checkpoint=tracker.checkpoint_to_dict(params), loss_history=history
    )


@app.post("/track", response_model=schemas.TrackResponse)
def track(req: schemas.TrackRequest):
    campaign = _campaign_in(req.campaign)
    try:
        params = tracker.checkpoint_from_dict(req.checkpoint_full)
        params_funds = tracker.checkpoint_from_dict(req.checkpoint_funds_only)
        curve = tracker.track(campaign, params, params_funds)
    except (ValueError, KeyError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return schemas.TrackResponse(
        campaign_id=curve.campaign_id,
        days=[
            schemas.TrackedDayModel(
                day=d.day,
                p_success_full=d.p_success_full,
                p_success_funds_only=d.p_success_funds_only,
                emotion=d.emotion,
                emotion_prob=d.emotion_prob,
            )
            for d in curve.days
        ],
        attention=[float(a) for a in curve.attention],
    )


@app.post("/stats", response_model=schemas.StatsResponse)
def stats(req: schemas.StatsRequest):
    campaign = _campaign_in(req.campaign)
    try:
        rows = features.stats_rows(campaign, req.pattern)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    if req.pattern == "tile":
        return schemas.StatsResponse(
            pattern="tile",
            tile_rows=[
                schemas.TileRowModel(day=d, n_pos=p, n_neg=n) for d, p, n in rows
            ],
        )
    return schemas.StatsResponse(
        pattern="stack",
        stack_rows=[
            schemas.StackRowModel(day=d, n_total=t, frac_pos=fp, frac_neg=fn)
            for d, t, fp, fn in rows
        ],
    )


@app.post("/gradcheck")
def gradcheck(req: schemas.GradcheckRequest):
    try:
        return gradcheck_report(seed=req.seed, overrides=req.overrides)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
