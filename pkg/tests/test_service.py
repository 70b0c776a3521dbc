import pytest
from fastapi.testclient import TestClient

from dct.service.app import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


@pytest.fixture(scope="module")
def simulated(client):
    r = client.post("/simulate", json={
        "config": {"n_campaigns": 6, "duration_min": 3, "duration_max": 5,
                   "reviews_per_day": 2.0, "seed": 31},
    })
    assert r.status_code == 200
    return r.json()


@pytest.fixture(scope="module")
def sentiment_model(client, simulated):
    r = client.post("/sentiment/train", json={"corpus": simulated["corpus"], "epochs": 60})
    assert r.status_code == 200
    return r.json()


@pytest.fixture(scope="module")
def tagged(client, simulated, sentiment_model):
    r = client.post("/sentiment/tag", json={
        "model": sentiment_model, "campaigns": simulated["campaigns"],
    })
    assert r.status_code == 200
    return r.json()["campaigns"]


@pytest.fixture(scope="module")
def checkpoints(client, tagged):
    cfg = {"epochs": 2, "static_dim": 4, "hidden_dim": 4, "batch_size": 3, "seed": 0}
    out = {}
    for variant in ("full", "funds_only"):
        r = client.post("/train", json={"campaigns": tagged, "config": cfg, "variant": variant})
        assert r.status_code == 200, r.text
        out[variant] = r.json()
    return out


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    body = r.json()
    assert body["status"] == "ok" and body["version"]


def test_simulate_counts_and_shape(simulated):
    assert len(simulated["campaigns"]) == 6
    assert len(simulated["corpus"]) == 200
    first = simulated["campaigns"][0]
    assert set(first) == {"id", "static", "days", "outcome"}
    assert set(first["static"]) == {"owner", "backer", "perks", "other"}


def test_simulate_rejects_bad_config(client):
    r = client.post("/simulate", json={"config": {"duration_min": 1}})
    assert r.status_code == 400
    assert "duration_min" in r.json()["detail"]


def test_sentiment_train_payload_matches_model_file_format(sentiment_model):
    assert sentiment_model["version"] == 1
    assert len(sentiment_model["weights"]) == len(sentiment_model["vocab"])
    assert isinstance(sentiment_model["bias"], float)


def test_sentiment_train_degenerate_corpus(client):
    corpus = [{"text": "great work", "label": "pos"}] * 3
    r = client.post("/sentiment/train", json={"corpus": corpus})
    assert r.status_code == 400
    assert "degenerate" in r.json()["detail"]


def test_classify_polarity(client, sentiment_model):
    r = client.post("/sentiment/classify", json={
        "model": sentiment_model, "text": "great amazing love this",
    })
    assert r.status_code == 200
    assert r.json()["label"] == "pos" and r.json()["p_pos"] > 0.5
    r = client.post("/sentiment/classify", json={
        "model": sentiment_model, "text": "refund broken terrible",
    })
    assert r.json()["label"] == "neg" and r.json()["p_pos"] < 0.5


def test_tag_fills_probabilities(tagged):
    reviews = [r for c in tagged for d in c["days"] for r in d["reviews"]]
    assert reviews and all(r["p_pos"] is not None for r in reviews)


def test_train_returns_checkpoint_and_history(checkpoints):
    full = checkpoints["full"]
    assert len(full["loss_history"]) == 2
    assert full["checkpoint"]["variant"] == "full"
    assert len(full["checkpoint"]["tensors"]) == 20
    assert checkpoints["funds_only"]["checkpoint"]["variant"] == "funds_only"


def test_train_rejects_unknown_variant(client, tagged):
    r = client.post("/train", json={"campaigns": tagged, "variant": "hybrid"})
    assert r.status_code == 400


def test_train_rejects_unknown_outcome(client, tagged):
    import copy

    broken = copy.deepcopy(tagged)
    broken[0]["outcome"] = None
    r = client.post("/train", json={
        "campaigns": broken, "variant": "full",
        "config": {"epochs": 1, "static_dim": 3, "hidden_dim": 3},
    })
    assert r.status_code == 400
    assert "unknown outcome" in r.json()["detail"]


def test_track_curve(client, tagged, checkpoints):
    campaign = tagged[0]
    r = client.post("/track", json={
        "campaign": campaign,
        "checkpoint_full": checkpoints["full"]["checkpoint"],
        "checkpoint_funds_only": checkpoints["funds_only"]["checkpoint"],
    })
    assert r.status_code == 200, r.text
    body = r.json()
    assert body["campaign_id"] == campaign["id"]
    assert len(body["days"]) == len(campaign["days"])
    assert abs(sum(body["attention"]) - 1.0) < 1e-9
    for day in body["days"]:
        assert day["emotion"] in ("pos", "neg", "none")
        assert 0.0 <= day["p_success_full"] <= 1.0


def test_track_rejects_swapped_checkpoints(client, tagged, checkpoints):
    r = client.post("/track", json={
        "campaign": tagged[0],
        "checkpoint_full": checkpoints["funds_only"]["checkpoint"],
        "checkpoint_funds_only": checkpoints["full"]["checkpoint"],
    })
    assert r.status_code == 400


def test_stats_tile_matches_tag_counts(client, tagged):
    campaign = tagged[0]
    r = client.post("/stats", json={"campaign": campaign, "pattern": "tile"})
    assert r.status_code == 200
    rows = r.json()["tile_rows"]
    assert len(rows) == len(campaign["days"])
    for row, day in zip(rows, campaign["days"]):
        expected_pos = sum(1 for rv in day["reviews"] if rv["p_pos"] > 0.5)
        assert row["n_pos"] == expected_pos
        assert row["n_pos"] + row["n_neg"] == len(day["reviews"])


def test_stats_stack_fractions(client, tagged):
    r = client.post("/stats", json={"campaign": tagged[0], "pattern": "stack"})
    assert r.status_code == 200
    for row in r.json()["stack_rows"]:
        if row["n_total"]:
            assert abs(row["frac_pos"] + row["frac_neg"] - 1.0) < 1e-12


def test_stats_unknown_pattern(client, tagged):
    r = client.post("/stats", json={"campaign": tagged[0], "pattern": "pie"})
    assert r.status_code == 400


def test_gradcheck_endpoint(client):
    r = client.post("/gradcheck", json={"seed": 0})
    assert r.status_code == 200
    body = r.json()
    assert body["pass"] is True and body["max_relative_error"] < 1e-4


def test_gradcheck_rejects_bad_epsilon(client):
    r = client.post("/gradcheck", json={"seed": 0, "overrides": {"epsilon": 0}})
    assert r.status_code == 400


def test_validation_error_is_422(client):
    r = client.post("/train", json={"campaigns": "not a list"})
    assert r.status_code == 422
