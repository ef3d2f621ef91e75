"""HTTP service: session lifecycle, sizing queries, and error statuses.

A real server runs on an ephemeral port for the whole module; requests go
through the standard client so headers and bodies are exercised end to end.
"""

import json
import threading
import urllib.error
import urllib.request

import pytest

from gtseq.design import DesignParams, optimal_group_size
from gtseq.sequential import SequentialConfig, advance, initial_state
from gtseq.service import create_server


@pytest.fixture(scope="module")
def base_url():
    server = create_server(port=0)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    host, port = server.server_address[:2]
    yield f"http://{host}:{port}"
    server.shutdown()
    server.server_close()
    thread.join(timeout=5)


def request(base, method, path, body=None):
    data = None if body is None else json.dumps(body).encode()
    req = urllib.request.Request(base + path, data=data, method=method,
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req) as resp:
            return resp.status, json.loads(resp.read()), dict(resp.headers)
    except urllib.error.HTTPError as err:
        return err.code, json.loads(err.read()), dict(err.headers)


def test_design_auto(base_url):
    status, got, headers = request(base_url, "GET", "/design?p=0.3")
    plan = optimal_group_size(0.3, DesignParams())
    assert status == 200
    assert got == {"k": plan.k, "n_required": plan.n_required,
                   "n_ceil": plan.n_ceil}
    assert headers["Access-Control-Allow-Origin"] == "*"


def test_design_fixed_k_and_params(base_url):
    status, got, _ = request(base_url, "GET", "/design?p=0.3&k=5&gamma=0.2")
    from gtseq.design import n_star_group
    plan = n_star_group(0.3, 5, DesignParams(gamma=0.2))
    assert status == 200 and got["n_required"] == plan.n_required


def test_design_requires_p(base_url):
    status, got, _ = request(base_url, "GET", "/design")
    assert status == 400 and "p is required" in got["error"]


def test_design_rejects_bad_domain(base_url):
    status, got, _ = request(base_url, "GET", "/design?p=1.5")
    assert status == 400 and "error" in got


def test_session_matches_library_walkthrough(base_url):
    # the stopping step and every intermediate state must equal a direct
    # in-process drive of the same outcome sequence
    status, created, _ = request(base_url, "POST", "/session",
                                 {"k": 5, "m": 10, "gamma": 0.3})
    assert status == 200
    sid = created["id"]

    cfg = SequentialConfig(k=5, m=10, design=DesignParams(gamma=0.3))
    state = initial_state()
    pattern = [1, 1, 1, 1, 0] * 10
    for i, outcome in enumerate(pattern):
        state = advance(state, outcome, cfg)
        status, got, _ = request(base_url, "POST", f"/session/{sid}/result",
                                 {"positive": bool(outcome)})
        assert status == 200
        assert got["n"] == state.n and got["s"] == state.s
        assert got["stopped"] == state.stopped
        if state.threshold == float("inf"):
            assert got["threshold"] is None
        else:
            assert got["threshold"] == pytest.approx(state.threshold, rel=1e-12)
        if state.stopped:
            break
    assert state.stopped and state.n == 47
    assert got["p_hat"] == pytest.approx(state.p_hat, rel=1e-12)


def test_session_get_state(base_url):
    _, created, _ = request(base_url, "POST", "/session", {})
    sid = created["id"]
    status, got, _ = request(base_url, "GET", f"/session/{sid}")
    assert status == 200
    assert got == {"n": 0, "s": 0, "xbar": None, "p_hat": 0.0,
                   "threshold": None, "stopped": False}


def test_session_defaults(base_url):
    _, created, _ = request(base_url, "POST", "/session", None)
    status, got, _ = request(base_url, "GET", f"/session/{created['id']}")
    assert status == 200 and not got["stopped"]


def test_stopped_session_conflicts(base_url):
    _, created, _ = request(base_url, "POST", "/session",
                            {"k": 5, "m": 10, "gamma": 0.3})
    sid = created["id"]
    pattern = [1, 1, 1, 1, 0] * 10
    for outcome in pattern:
        status, got, _ = request(base_url, "POST", f"/session/{sid}/result",
                                 {"positive": bool(outcome)})
        if got["stopped"]:
            break
    status, got, _ = request(base_url, "POST", f"/session/{sid}/result",
                             {"positive": True})
    assert status == 409 and "already stopped" in got["error"]


def test_unknown_session_404(base_url):
    status, got, _ = request(base_url, "GET", "/session/deadbeef")
    assert status == 404
    status, got, _ = request(base_url, "POST", "/session/deadbeef/result",
                             {"positive": True})
    assert status == 404


def test_result_requires_boolean(base_url):
    _, created, _ = request(base_url, "POST", "/session", {})
    sid = created["id"]
    for bad in ({}, {"positive": 1}, {"positive": "yes"}):
        status, got, _ = request(base_url, "POST", f"/session/{sid}/result", bad)
        assert status == 400 and "boolean" in got["error"]


def test_malformed_body_400(base_url):
    req = urllib.request.Request(base_url + "/session", data=b"{not json",
                                 method="POST",
                                 headers={"Content-Type": "application/json"})
    with pytest.raises(urllib.error.HTTPError) as exc:
        urllib.request.urlopen(req)
    assert exc.value.code == 400


def test_bad_config_400(base_url):
    status, got, _ = request(base_url, "POST", "/session", {"k": 0})
    assert status == 400 and "error" in got


def test_unknown_route_404(base_url):
    status, got, _ = request(base_url, "GET", "/nope")
    assert status == 404
    status, got, _ = request(base_url, "POST", "/session/x/y")
    assert status == 404


def test_options_preflight(base_url):
    req = urllib.request.Request(base_url + "/session", method="OPTIONS")
    with urllib.request.urlopen(req) as resp:
        assert resp.status == 204
        assert resp.headers["Access-Control-Allow-Origin"] == "*"
        assert "POST" in resp.headers["Access-Control-Allow-Methods"]
