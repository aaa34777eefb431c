import json
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from ctxloco.ars import LinearPolicy
from ctxloco.embedding import ContextMode
from ctxloco.service import create_app, replay_journal
from ctxloco.terrain import PropertyLevel, PropertyLevels, levels_to_params

GRASSLAND_RAIN = "You are entering a grassland right after the rain"
CASE_F = "The spot is walking on a grassland under a drizzle."


def _policies():
    emb = LinearPolicy.zero(ContextMode.EMBEDDING)
    # level-dependent thrust bias so context swaps change behavior
    for j in range(20):
        emb.matrix[0:4, 16 + j] = 0.01 * (j % 5 + 1)
    return {
        "emb": emb,
        "noctx": LinearPolicy.zero(ContextMode.NO_CONTEXT),
        "idx": LinearPolicy.zero(ContextMode.INDEXING, n_scenarios=8),
    }


@pytest.fixture
def client(tmp_path):
    app = create_app(
        policies=_policies(),
        turbo=True,
        journal_dir=str(tmp_path / "journals"),
        heartbeat_seconds=0.1,
    )
    with TestClient(app) as tc:
        yield tc


def _create(client, policy="emb", **extra):
    body = {"policy": policy, "description": CASE_F, "seed": 3} | extra
    resp = client.post("/v1/sessions", json=body)
    assert resp.status_code == 200, resp.text
    return resp.json()


def _wait(client, session_id, predicate, timeout=5.0):
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        snap = client.get(f"/v1/sessions/{session_id}").json()
        if predicate(snap):
            return snap
        time.sleep(0.01)
    raise AssertionError("condition not reached in time")


class TestPolicies:
    def test_listing(self, client):
        listing = client.get("/v1/policies").json()
        ids = {p["id"]: p for p in listing}
        assert set(ids) == {"emb", "noctx", "idx"}
        assert ids["emb"]["method"] == "embedding"
        assert ids["emb"]["input_dim"] == 36


class TestCreate:
    def test_description_creates_paused_session_with_levels(self, client):
        snap = _create(client)
        assert snap["status"] == "paused"
        # case F oracle: grass -> stiffness LOW; drizzle -> friction LOW,
        # damping HIGH
        assert snap["levels"] == {
            "restitution": "MEDIUM", "friction": "LOW",
            "stiffness": "LOW", "damping": "HIGH",
        }
        expected_terrain = levels_to_params(PropertyLevels(
            PropertyLevel.MEDIUM, PropertyLevel.LOW, PropertyLevel.LOW, PropertyLevel.HIGH,
        ))
        assert snap["terrain"] == pytest.approx(expected_terrain.to_dict())
        assert sum(snap["embedding"]) == 4.0

    def test_unknown_policy_404(self, client):
        resp = client.post("/v1/sessions", json={"policy": "nope", "description": CASE_F})
        assert resp.status_code == 404
        assert resp.json()["code"] == "unknown_policy"

    def test_explicit_terrain_accepted_verbatim(self, client):
        terrain = {"restitution": 0.05, "lateral_friction": 0.8,
                   "rolling_friction": 5e4, "stiffness": 0.6, "damping": 0.1}
        resp = client.post("/v1/sessions", json={"policy": "noctx", "terrain": terrain})
        assert resp.status_code == 200
        assert resp.json()["terrain"] == pytest.approx(terrain)

    def test_bad_terrain_422(self, client):
        resp = client.post("/v1/sessions", json={
            "policy": "noctx",
            "terrain": {"restitution": 9.0, "lateral_friction": 0.5,
                        "rolling_friction": 5e4, "stiffness": 0.5, "damping": 0.1},
        })
        assert resp.status_code == 422

    def test_indexing_gets_zero_padding(self, client):
        snap = _create(client, policy="idx")
        assert snap["embedding"] == [0.0] * 8

    def test_missing_terrain_and_description_400(self, client):
        resp = client.post("/v1/sessions", json={"policy": "emb"})
        assert resp.status_code == 400


class TestControl:
    def test_pause_resume_reset_delete(self, client):
        snap = _create(client)
        sid = snap["id"]
        assert client.post(f"/v1/sessions/{sid}/control", json={"verb": "resume"}).json()["status"] == "running"
        _wait(client, sid, lambda s: s["t"] > 0)
        assert client.post(f"/v1/sessions/{sid}/control", json={"verb": "pause"}).json()["status"] == "paused"
        t_paused = client.get(f"/v1/sessions/{sid}").json()["t"]
        time.sleep(0.05)
        assert client.get(f"/v1/sessions/{sid}").json()["t"] == t_paused

        reset = client.post(f"/v1/sessions/{sid}/control", json={"verb": "reset"}).json()
        snap = client.get(f"/v1/sessions/{sid}").json()
        assert snap["t"] == 0 and snap["reward_cumulative"] == 0.0
        assert reset["seed"] == 4  # base seed 3 reseeded once

        assert client.post(f"/v1/sessions/{sid}/control", json={"verb": "delete"}).json()["status"] == "deleted"
        assert client.get(f"/v1/sessions/{sid}").status_code == 404

    def test_resume_done_session_409(self, client):
        snap = _create(client, policy="noctx", max_steps=None)
        sid = snap["id"]
        # run an entire episode in turbo mode
        client.post(f"/v1/sessions/{sid}/control", json={"verb": "resume"})
        _wait(client, sid, lambda s: s["status"] == "done", timeout=30.0)
        resp = client.post(f"/v1/sessions/{sid}/control", json={"verb": "resume"})
        assert resp.status_code == 409

    def test_bad_verb_400(self, client):
        sid = _create(client)["id"]
        assert client.post(f"/v1/sessions/{sid}/control", json={"verb": "warp"}).status_code == 400

    def test_lru_eviction(self, tmp_path):
        app = create_app(policies=_policies(), turbo=True, max_sessions=2)
        with TestClient(app) as tc:
            ids = [
                tc.post("/v1/sessions", json={"policy": "noctx", "description": CASE_F}).json()["id"]
                for _ in range(3)
            ]
            assert tc.get(f"/v1/sessions/{ids[0]}").status_code == 404
            assert tc.get(f"/v1/sessions/{ids[1]}").status_code == 200
            assert tc.get(f"/v1/sessions/{ids[2]}").status_code == 200


class TestContext:
    def test_apply_context_levels_and_next_step_embedding(self, client):
        sid = _create(client)["id"]
        client.post(f"/v1/sessions/{sid}/control", json={"verb": "resume"})
        _wait(client, sid, lambda s: s["t"] > 20)
        client.post(f"/v1/sessions/{sid}/control", json={"verb": "pause"})

        resp = client.post(f"/v1/sessions/{sid}/context", json={"description": GRASSLAND_RAIN})
        assert resp.status_code == 200
        payload = resp.json()
        assert payload["levels"]["friction"] == "LOW"
        assert payload["levels"]["damping"] == "HIGH"
        assert payload["changed"] in (True, False)
        snap = client.get(f"/v1/sessions/{sid}").json()
        assert snap["embedding"] == payload["embedding"]
        assert snap["last_description"] == GRASSLAND_RAIN

    def test_duplicate_apply_is_noop(self, client):
        sid = _create(client)["id"]
        first = client.post(f"/v1/sessions/{sid}/context",
                            json={"description": "a sheet of ice"}).json()
        second = client.post(f"/v1/sessions/{sid}/context",
                             json={"description": "a sheet of ice"}).json()
        assert first["embedding"] == second["embedding"]
        assert second["changed"] is False

    def test_no_context_policy_409(self, client):
        sid = _create(client, policy="noctx")["id"]
        resp = client.post(f"/v1/sessions/{sid}/context", json={"description": GRASSLAND_RAIN})
        assert resp.status_code == 409
        assert "no language context" in resp.json()["message"]

    def test_empty_description_422(self, client):
        sid = _create(client)["id"]
        resp = client.post(f"/v1/sessions/{sid}/context", json={"description": "  "})
        assert resp.status_code == 422


class TestEvents:
    def _read_events(self, client, sid, n, timeout=10.0):
        events = []
        with client.stream("GET", f"/v1/sessions/{sid}/events?max_events={n}") as resp:
            for line in resp.iter_lines():
                if line.startswith("data: "):
                    events.append(json.loads(line[6:]))
                    if len(events) >= n:
                        break
        return events

    def test_state_events_increase_in_t(self, client):
        sid = _create(client)["id"]
        client.post(f"/v1/sessions/{sid}/control", json={"verb": "resume"})
        events = self._read_events(client, sid, 8)
        states = [e for e in events if e.get("type") == "state"]
        ts = [e["t"] for e in states]
        assert len(ts) >= 2
        assert all(a < b for a, b in zip(ts, ts[1:]))
        assert all(len(e["embedding"]) == 20 for e in states)

    def test_paused_session_heartbeats(self, client):
        sid = _create(client)["id"]
        events = self._read_events(client, sid, 3)
        assert any(e.get("type") == "heartbeat" for e in events)
        assert all(e.get("type") != "state" for e in events)

    def test_two_subscribers_identical_sequences(self, client):
        sid = _create(client)["id"]
        collected = [[], []]

        import threading

        def reader(slot):
            collected[slot] = self._read_events(client, sid, 20)

        threads = [threading.Thread(target=reader, args=(i,)) for i in range(2)]
        for t in threads:
            t.start()
        time.sleep(0.3)
        client.post(f"/v1/sessions/{sid}/control", json={"verb": "resume"})
        for t in threads:
            t.join(timeout=15)
        # subscribers may join at different moments; on the overlap the
        # fan-out must deliver identical events
        a = {e["t"]: e for e in collected[0] if e.get("type") == "state"}
        b = {e["t"]: e for e in collected[1] if e.get("type") == "state"}
        common = sorted(set(a) & set(b))
        assert len(common) >= 2
        for t in common:
            assert a[t] == b[t]


class TestReplay:
    def test_journaled_session_replays_to_same_reward(self, client, tmp_path):
        snap = _create(client)
        sid = snap["id"]
        journal = snap["journal"]
        client.post(f"/v1/sessions/{sid}/control", json={"verb": "resume"})
        _wait(client, sid, lambda s: s["t"] > 100)
        client.post(f"/v1/sessions/{sid}/control", json={"verb": "pause"})
        client.post(f"/v1/sessions/{sid}/context", json={"description": GRASSLAND_RAIN})
        client.post(f"/v1/sessions/{sid}/control", json={"verb": "resume"})
        final = _wait(client, sid, lambda s: s["status"] == "done", timeout=60.0)

        replayed = replay_journal(_policies()["emb"], journal)
        assert replayed == pytest.approx(final["reward_cumulative"], abs=1e-9)
