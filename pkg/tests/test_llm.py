from __future__ import annotations

import json

import httpx
import pytest

from conftest import make_state
from skillloop.craftworld import Action, observe
from skillloop.policy.base import PolicyContext, PolicyError
from skillloop.policy.llm import API_KEY_ENV, BASE_URL_ENV, MODEL_ENV, ChatClient, LlmEndpointConfig, LlmPolicy


def _reply(content: str) -> httpx.Response:
    return httpx.Response(200, json={"choices": [{"message": {"role": "assistant", "content": content}}]})


class Script:
    """A mock endpoint answering from a list of responses and recording requests."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.requests: list[httpx.Request] = []

    def __call__(self, request: httpx.Request) -> httpx.Response:
        self.requests.append(request)
        r = self.responses.pop(0)
        if isinstance(r, Exception):
            raise r
        return r


def _client(script, **cfg):
    sleeps = []
    client = ChatClient(LlmEndpointConfig(**cfg), transport=httpx.MockTransport(script), sleep=sleeps.append)
    return client, sleeps


def test_request_body_and_endpoint(monkeypatch):
    monkeypatch.setenv(API_KEY_ENV, "secret")
    script = Script([_reply("move_up")])
    client, _ = _client(script, base_url="http://x/v1/", model="m", temperature=0.7, max_tokens=8)
    assert client.complete([{"role": "user", "content": "hi"}]) == "move_up"
    req = script.requests[0]
    assert str(req.url) == "http://x/v1/chat/completions"
    assert req.headers["authorization"] == "Bearer secret"
    body = json.loads(req.content)
    assert body == {"model": "m", "temperature": 0.7, "max_tokens": 8,
                    "messages": [{"role": "user", "content": "hi"}]}


def test_retries_with_backoff_then_succeeds():
    script = Script([httpx.Response(503), httpx.ConnectError("down"), _reply("do")])
    client, sleeps = _client(script, retries=3, backoff=0.5)
    assert client.complete([]) == "do"
    assert sleeps == [0.5, 1.0]


def test_gives_up_after_retries():
    script = Script([httpx.Response(500)] * 3)
    client, sleeps = _client(script, retries=2)
    with pytest.raises(PolicyError) as err:
        client.complete([])
    assert err.value.status == 500 and len(script.requests) == 3


def test_client_errors_are_not_retried():
    script = Script([httpx.Response(401), _reply("do")])
    client, _ = _client(script, retries=3)
    with pytest.raises(PolicyError):
        client.complete([])
    assert len(script.requests) == 1


def test_malformed_response_is_an_error():
    client, _ = _client(Script([httpx.Response(200, json={"nope": 1})]))
    with pytest.raises(PolicyError, match="malformed"):
        client.complete([])


def test_policy_parses_and_falls_back_to_noop():
    script = Script([_reply("Action: place_table"), _reply("hmm, no idea")])
    pol = LlmPolicy(_client(script)[0])
    obs = observe(make_state())
    assert pol.decide(PolicyContext(goal="place table"), obs) is Action.PLACE_TABLE
    assert pol.decide(PolicyContext(), obs) is Action.NOOP
    assert pol.parse_failures == 1


def test_evaluate_template_carries_the_instruction():
    script = Script([_reply("do")])
    pol = LlmPolicy(_client(script, template_id="evaluate")[0])
    pol.decide(PolicyContext(goal="collect wood"), observe(make_state()))
    content = json.loads(script.requests[0].content)["messages"][0]["content"]
    assert "Task: collect wood" in content


def test_environment_overrides_url_and_model():
    cfg = LlmEndpointConfig.from_mapping({"model": "a", "unknown": 1},
                                         env={BASE_URL_ENV: "http://env/v1", MODEL_ENV: "b"})
    assert cfg.base_url == "http://env/v1" and cfg.model == "b"
    assert LlmEndpointConfig.from_mapping({"model": "a"}, env={}).model == "a"


def test_config_validation():
    with pytest.raises(ValueError):
        LlmEndpointConfig(template_id="other")
    with pytest.raises(ValueError):
        LlmEndpointConfig(max_in_flight=0)
    with pytest.raises(ValueError):
        LlmPolicy(_client(Script([]))[0], template_id="relabel")
