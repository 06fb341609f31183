"""
Tests for the API endpoints.
"""

import pytest
from fastapi.testclient import TestClient

from app.config import Settings
from app.main import app, get_settings

client = TestClient(app)


@pytest.fixture(autouse=True)
def default_settings():
    app.dependency_overrides[get_settings] = lambda: Settings()
    yield
    app.dependency_overrides.clear()


def test_health_endpoint():
    """Test the health check endpoint."""
    response = client.get("/")
    assert response.status_code == 200
    assert response.json()["status"] == "healthy"


def test_list_families():
    response = client.get("/families")
    assert response.status_code == 200
    assert "maxwell-cattaneo" in response.json()["families"]
    assert len(response.json()["families"]) == 5


def test_spectrum_closed_form():
    """Maxwell-Cattaneo without a box uses the closed form."""
    response = client.post("/spectrum", json={"family": "maxwell-cattaneo", "n_range": "1:5"})
    assert response.status_code == 200
    document = response.json()
    assert len(document["roots"]) == 10
    assert all(root["re"] == -0.5 for root in document["roots"])
    assert document["meta"]["command"] == "spectrum"


def test_spectrum_with_box():
    request_data = {"family": "parabolic-delay", "n": 1, "box": [-1.0, 1.0, 0.1, 40.0]}
    response = client.post("/spectrum", json=request_data)
    assert response.status_code == 200
    roots = response.json()["roots"]
    assert len(roots) == 1
    assert roots[0]["re"] == pytest.approx(-0.3181315052047641, abs=1e-12)


def test_certify_failure_is_conflict():
    response = client.post("/certify", json={"b": 1, "n": 1})
    assert response.status_code == 409
    detail = response.json()["detail"]
    assert detail["failures"][0]["n"] == 1
    assert detail["report"]["meta"]["command"] == "certify"


def test_certify_success():
    response = client.post("/certify", json={"b": 2, "n": 100})
    assert response.status_code == 200
    document = response.json()
    assert document["roots"][0]["certified"] is True
    assert document["roots"][0]["rouche_margin"] > 0


def test_stablecheck_empty():
    response = client.post("/stablecheck", json={"n_range": "1:3"})
    assert response.status_code == 200
    assert response.json()["meta"]["verdict"] == "EMPTY"


def test_stablecheck_lemma_disk():
    response = client.post("/stablecheck", json={"family": "parabolic-delay", "n": 100, "lemma_disk": True})
    assert response.status_code == 200
    assert response.json()["meta"]["verdict"] == "NONEMPTY"
    assert response.json()["table"] == [{"n": 100, "count": 1}]


def test_asymptote():
    response = client.post("/asymptote", json={"family": "parabolic-delay", "n_range": "100:10000:log"})
    assert response.status_code == 200
    assert [row["n"] for row in response.json()["table"]] == [100, 1000, 10000]


def test_simulate_default_span():
    response = client.post("/simulate", json={"family": "hyperbolic-delay", "n": 1})
    assert response.status_code == 200
    assert response.json()["meta"]["t_end"] == 80.0
    assert response.json()["table"][0]["rel_error"] <= 0.05


def test_simulate():
    response = client.post("/simulate", json={"family": "maxwell-cattaneo", "n": 1, "t_end": 60.0})
    assert response.status_code == 200
    row = response.json()["table"][0]
    assert row["sigma_hat"] == pytest.approx(-0.5, abs=0.02)
    assert row["abscissa"] == pytest.approx(-0.5, abs=1e-9)


def test_invalid_family():
    response = client.post("/spectrum", json={"family": "heat", "n": 1})
    assert response.status_code == 400


def test_missing_required_field():
    response = client.post("/certify", json={"n": 10})
    assert response.status_code == 400


def test_ambiguous_modes():
    response = client.post("/certify", json={"b": 1, "n": 10, "n_range": "10:20"})
    assert response.status_code == 400


def test_grid_mismatch_is_unprocessable():
    response = client.post("/simulate", json={"family": "parabolic-delay", "n": 1, "dt": 0.03})
    assert response.status_code == 422
    assert response.json()["detail"]["error"] == "GridMismatchError"
