"""Chat-completion client and the policy that drives the agent through it."""
from __future__ import annotations

import logging
import os
import threading
import time
from dataclasses import asdict, dataclass, field, replace

import httpx

from ..craftworld import Action, Observation, WorldState, render_text
from .base import ParseFailure, PolicyContext, PolicyError, parse_action
from .prompts import TEMPLATE_IDS, render_evaluate_messages, render_explore_prompt

log = logging.getLogger(__name__)

API_KEY_ENV = "SKILLLOOP_API_KEY"
BASE_URL_ENV = "SKILLLOOP_BASE_URL"
MODEL_ENV = "SKILLLOOP_MODEL"
_RETRY_STATUS = frozenset({408, 409, 425, 429, 500, 502, 503, 504})


@dataclass(frozen=True)
class LlmEndpointConfig:
    base_url: str = "http://localhost:8000/v1"
    model: str = "default"
    temperature: float = 1.0
    max_tokens: int = 64
    retries: int = 3
    template_id: str = "explore"
    timeout: float = 60.0
    backoff: float = 0.5
    max_in_flight: int = 4
    api_key_env: str = API_KEY_ENV

    def __post_init__(self):
        if self.template_id not in TEMPLATE_IDS:
            raise ValueError(f"template id must be one of {TEMPLATE_IDS}, got {self.template_id!r}")
        if self.retries < 0 or self.max_in_flight < 1 or self.max_tokens < 1:
            raise ValueError("retries >= 0, max_in_flight >= 1 and max_tokens >= 1 are required")

    @classmethod
    def from_mapping(cls, d: dict | None, env=None) -> "LlmEndpointConfig":
        """Build from a config mapping; environment variables override URL and model."""
        env = os.environ if env is None else env
        known = {k: v for k, v in (d or {}).items() if k in cls.__dataclass_fields__}
        cfg = cls(**known)
        if env.get(BASE_URL_ENV):
            cfg = replace(cfg, base_url=env[BASE_URL_ENV])
        if env.get(MODEL_ENV):
            cfg = replace(cfg, model=env[MODEL_ENV])
        return cfg

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class ChatClient:
    """Minimal chat-completions client with retries, backoff and an in-flight cap."""

    config: LlmEndpointConfig
    transport: httpx.BaseTransport | None = None
    sleep: object = time.sleep
    _gate: threading.BoundedSemaphore = field(init=False, repr=False)

    def __post_init__(self):
        self._gate = threading.BoundedSemaphore(self.config.max_in_flight)

    def _headers(self) -> dict:
        key = os.environ.get(self.config.api_key_env)
        headers = {"Content-Type": "application/json"}
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def complete(self, messages: list[dict], temperature: float | None = None) -> str:
        body = {
            "model": self.config.model,
            "temperature": self.config.temperature if temperature is None else temperature,
            "max_tokens": self.config.max_tokens,
            "messages": messages,
        }
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        status = None
        last_error = "no attempt made"
        with self._gate, httpx.Client(transport=self.transport, timeout=self.config.timeout) as http:
            for attempt in range(self.config.retries + 1):
                if attempt:
                    self.sleep(self.config.backoff * 2 ** (attempt - 1))
                try:
                    resp = http.post(url, json=body, headers=self._headers())
                except httpx.HTTPError as exc:
                    status, last_error = None, f"{type(exc).__name__}: {exc}"
                    continue
                status = resp.status_code
                if status == 200:
                    try:
                        return resp.json()["choices"][0]["message"]["content"] or ""
                    except (ValueError, KeyError, IndexError, TypeError) as exc:
                        raise PolicyError(f"malformed completion response: {exc}", status) from exc
                last_error = f"HTTP {status}"
                if status not in _RETRY_STATUS:
                    break
        raise PolicyError(f"chat endpoint failed after retries: {last_error}", status)


def _feedback_text(feedback) -> str | None:
    if feedback is None:
        return None
    if isinstance(feedback, str):
        return feedback
    advice = getattr(feedback, "next_iteration_advice", None)
    return f"- {advice}" if advice else None


class LlmPolicy:
    """Renders the explore or evaluate prompt, calls the endpoint and parses an action.

    An unparseable reply becomes ``noop`` and is logged; transport failures
    propagate as :class:`PolicyError`.
    """

    def __init__(self, client: ChatClient, template_id: str | None = None, policy_id: str = "llm"):
        self.client = client
        self.template_id = template_id or client.config.template_id
        if self.template_id not in ("explore", "evaluate"):
            raise ValueError("an acting policy needs the explore or evaluate template")
        self.policy_id = policy_id
        self.parse_failures = 0

    def reset(self, episode_seed: int) -> None:
        pass

    def decide(self, context: PolicyContext, obs: Observation, state: WorldState | None = None) -> Action:
        text = render_text(obs)
        if self.template_id == "explore":
            messages = render_explore_prompt(text, context.history, _feedback_text(context.feedback),
                                             context.goal)
        else:
            messages = render_evaluate_messages(context.goal or "", text, context.history)
        reply = self.client.complete(messages)
        try:
            return parse_action(reply)
        except ParseFailure as exc:
            self.parse_failures += 1
            log.warning("parse failure, acting noop: %s", exc)
            return Action.NOOP
