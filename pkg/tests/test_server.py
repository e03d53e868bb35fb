"""HTTP session service: routes, documents, and error mapping."""

import pathlib

import pytest
from fastapi.testclient import TestClient

from guitenet.server import create_app
from guitenet.session import action_to_dict, script_from_dict
from helpers import three_tensor_actions

GOLDEN_DIR = pathlib.Path(__file__).parent / "golden"


@pytest.fixture()
def client():
    return TestClient(create_app())


def make_session(client, **body):
    response = client.post("/api/sessions", json=body or {})
    assert response.status_code == 201
    return response.json()


def drive(client, session_id, actions, start_revision=0):
    revision = start_revision
    document = None
    for action in actions:
        response = client.post(
            f"/api/sessions/{session_id}/actions",
            json={"revision": revision, "action": action_to_dict(action)})
        assert response.status_code == 200, response.text
        document = response.json()
        revision = document["revision"]
    return document


def test_health_endpoint(client):
    response = client.get("/healthz")
    assert response.status_code == 200
    assert response.json() == {"status": "ok"}


def test_create_session_returns_the_empty_document(client):
    document = make_session(client)
    assert document["revision"] == 0
    assert document["opt_level"] == 0
    assert document["target"] == "numpy"
    assert document["state"]["tensors"] == []
    assert document["code"].startswith("import numpy as np")
    assert "def f():" in document["code"]


def test_create_session_honors_opt_level(client):
    document = make_session(client, opt_level=2)
    assert document["opt_level"] == 2
    response = client.post("/api/sessions", json={"opt_level": 9})
    assert response.status_code == 422
    assert response.json()["error"]["code"] == "script_parse_error"


def test_scripted_session_over_http_emits_the_golden_module(client):
    session = make_session(client)
    document = drive(client, session["session_id"], three_tensor_actions())
    assert document["revision"] == 15
    expected = (GOLDEN_DIR / "three_tensor_qr_expected.py").read_text()
    assert document["code"] == expected
    response = client.get(
        f"/api/sessions/{session['session_id']}/code",
        params={"opt_level": 0})
    assert response.status_code == 200
    assert response.json()["code"] == expected
    assert response.json()["opt_level"] == 0


def test_code_endpoint_optimizes_on_demand(client):
    session = make_session(client)
    drive(client, session["session_id"], three_tensor_actions())
    response = client.get(f"/api/sessions/{session['session_id']}/code",
                          params={"opt_level": 1})
    assert response.status_code == 200
    assert "np.transpose" not in response.json()["code"]
    response = client.get(f"/api/sessions/{session['session_id']}/code",
                          params={"opt_level": 5})
    assert response.status_code == 422


def test_state_endpoint_reflects_applied_actions(client):
    session = make_session(client)
    drive(client, session["session_id"], three_tensor_actions()[:7])
    response = client.get(f"/api/sessions/{session['session_id']}/state")
    assert response.status_code == 200
    state = response.json()["state"]
    assert [t["id"] for t in state["tensors"]] == [0, 1]
    assert response.json()["revision"] == 7


def test_dag_endpoint_carries_schedule_and_pass_reports(client):
    session = make_session(client)
    drive(client, session["session_id"], three_tensor_actions())
    sid = session["session_id"]
    response = client.get(f"/api/sessions/{sid}/dag")
    assert response.status_code == 200
    document = response.json()
    assert document["opt_level"] == 0
    assert document["schedule"]["levels"] == [[3], [4], [5]]
    assert document["pass_reports"] == []
    response = client.get(f"/api/sessions/{sid}/dag",
                          params={"opt_level": 2})
    document = response.json()
    assert document["opt_level"] == 2
    assert any(r["rewrites"] for r in document["pass_reports"])


def test_script_endpoint_round_trips_the_log(client):
    session = make_session(client)
    drive(client, session["session_id"], three_tensor_actions())
    response = client.get(
        f"/api/sessions/{session['session_id']}/script")
    assert response.status_code == 200
    script = response.json()["script"]
    assert script_from_dict(script) == three_tensor_actions()


def test_stale_revision_conflicts_with_409(client):
    session = make_session(client)
    sid = session["session_id"]
    drive(client, sid, three_tensor_actions()[:2])
    response = client.post(
        f"/api/sessions/{sid}/actions",
        json={"revision": 0,
              "action": action_to_dict(three_tensor_actions()[2])})
    assert response.status_code == 409
    error = response.json()["error"]
    assert error["code"] == "stale_revision"
    assert error["expected"] == 2
    assert error["got"] == 0


def test_missing_revision_is_rejected(client):
    session = make_session(client)
    response = client.post(
        f"/api/sessions/{session['session_id']}/actions",
        json={"action": {"kind": "create_tensor", "position": [0, 0]}})
    assert response.status_code == 422
    response = client.post(
        f"/api/sessions/{session['session_id']}/actions",
        json={"revision": "0",
              "action": {"kind": "create_tensor", "position": [0, 0]}})
    assert response.status_code == 422


def test_malformed_and_invalid_actions_map_to_422(client):
    session = make_session(client)
    sid = session["session_id"]
    response = client.post(
        f"/api/sessions/{sid}/actions",
        json={"revision": 0, "action": {"kind": "warp"}})
    assert response.status_code == 422
    assert response.json()["error"]["code"] == "script_parse_error"
    response = client.post(
        f"/api/sessions/{sid}/actions",
        json={"revision": 0, "action": {"kind": "attach_leg", "tensor": 4}})
    assert response.status_code == 422
    assert response.json()["error"]["code"] == "unknown_entity"
    # Failed actions do not advance the revision.
    response = client.get(f"/api/sessions/{sid}/state")
    assert response.json()["revision"] == 0


def test_unknown_sessions_answer_404_everywhere(client):
    for method, path in [
        ("get", "/api/sessions/nope/state"),
        ("get", "/api/sessions/nope/code"),
        ("get", "/api/sessions/nope/dag"),
        ("get", "/api/sessions/nope/script"),
        ("delete", "/api/sessions/nope"),
    ]:
        response = getattr(client, method)(path)
        assert response.status_code == 404, path
        assert response.json()["error"]["code"] == "unknown_session"
    response = client.post(
        "/api/sessions/nope/actions",
        json={"revision": 3,
              "action": {"kind": "create_tensor", "position": [0, 0]}})
    assert response.status_code == 404


def test_delete_session_frees_the_id(client):
    session = make_session(client)
    sid = session["session_id"]
    response = client.delete(f"/api/sessions/{sid}")
    assert response.status_code == 204
    assert client.get(f"/api/sessions/{sid}/state").status_code == 404


def test_sessions_are_isolated(client):
    a = make_session(client)
    b = make_session(client)
    drive(client, a["session_id"], three_tensor_actions()[:5])
    response = client.get(f"/api/sessions/{b['session_id']}/state")
    assert response.json()["revision"] == 0
    assert response.json()["state"]["tensors"] == []


def test_frontend_directory_is_served_when_configured(tmp_path,
                                                      monkeypatch):
    (tmp_path / "index.html").write_text("<h1>network editor</h1>")
    monkeypatch.setenv("GUITENET_FRONTEND_DIR", str(tmp_path))
    client = TestClient(create_app())
    response = client.get("/")
    assert response.status_code == 200
    assert "network editor" in response.text
    # API routes still win over the static mount.
    assert client.get("/healthz").json() == {"status": "ok"}
