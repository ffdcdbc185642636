"""Chat-completion backed policies: prompt scaffold, answer parser and HTTP client."""
from __future__ import annotations

import json
import logging
import os
import re
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol

import httpx

from .core import ActionAttempt, ArenaError, Event, Observation
from .substrates import get_substrate, passive_action
from .substrates.base import ActionGrammar, on_grid

log = logging.getLogger(__name__)

ENV_BASE_URL = "ARENA_LLM_BASE_URL"
ENV_API_KEY = "ARENA_LLM_API_KEY"
ENV_MODEL = "ARENA_LLM_MODEL"

DEFAULT_PERSONA = (
    "You are a participant in a multi-player game. Other players may be people "
    "or programs. Play to do well over the whole game."
)
ANSWER_FORMAT = "Reply with one short line containing only your answer."


# --------------------------------------------------------------------------
# transport


class TransportError(ArenaError):
    """Any failure to get a usable reply from the endpoint."""


class StatusError(TransportError):
    def __init__(self, status: int, body: str = ""):
        super().__init__(f"endpoint returned HTTP {status}")
        self.status = status
        self.body = body


class EndpointTimeout(TransportError):
    pass


class MalformedResponseError(TransportError):
    pass


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple[dict[str, str], ...]
    temperature: float = 0.0

    def to_json(self) -> dict:
        return {"model": self.model, "messages": [dict(m) for m in self.messages], "temperature": self.temperature}


@dataclass(frozen=True)
class ChatResponse:
    content: str
    prompt_tokens: int = 0
    completion_tokens: int = 0


@dataclass(frozen=True)
class ChatExchange:
    request: ChatRequest
    response: ChatResponse


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    api_key: str = ""
    model: str = ""
    timeout: float = 30.0

    @classmethod
    def from_env(cls, **overrides) -> "EndpointConfig":
        values = {
            "base_url": os.environ.get(ENV_BASE_URL, ""),
            "api_key": os.environ.get(ENV_API_KEY, ""),
            "model": os.environ.get(ENV_MODEL, ""),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def __repr__(self) -> str:
        return f"EndpointConfig(base_url={self.base_url!r}, api_key={'***' if self.api_key else ''!r}, model={self.model!r}, timeout={self.timeout})"


def _redact(text: str, secret: str) -> str:
    return text.replace(secret, "***") if secret else text


def _parse_response(data: Any) -> ChatResponse:
    try:
        content = data["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError):
        raise MalformedResponseError("response has no choices[0].message.content") from None
    if not isinstance(content, str):
        raise MalformedResponseError("message content is not text")
    usage = data.get("usage") or {}
    try:
        prompt = max(0, int(usage.get("prompt_tokens", 0) or 0))
        completion = max(0, int(usage.get("completion_tokens", 0) or 0))
    except (TypeError, ValueError, AttributeError):
        prompt = completion = 0
    return ChatResponse(content, prompt, completion)


def chat_call(request: ChatRequest, endpoint: EndpointConfig, client: httpx.Client | None = None) -> ChatResponse:
    """POST one chat-completions request and extract the reply text."""
    if not endpoint.base_url:
        raise TransportError(f"no endpoint configured (set {ENV_BASE_URL})")
    url = endpoint.base_url.rstrip("/") + "/chat/completions"
    headers = {"Content-Type": "application/json"}
    if endpoint.api_key:
        headers["Authorization"] = f"Bearer {endpoint.api_key}"
    body = request.to_json()
    log.debug("POST %s %s", url, _redact(json.dumps(body), endpoint.api_key))
    own = client is None
    client = client or httpx.Client()
    try:
        resp = client.post(url, json=body, headers=headers, timeout=endpoint.timeout)
    except httpx.TimeoutException as exc:
        raise EndpointTimeout(f"no reply within {endpoint.timeout}s") from exc
    except httpx.HTTPError as exc:
        raise TransportError(_redact(str(exc), endpoint.api_key)) from exc
    finally:
        if own:
            client.close()
    log.debug("reply %d %s", resp.status_code, _redact(resp.text[:2000], endpoint.api_key))
    if not 200 <= resp.status_code < 300:
        raise StatusError(resp.status_code, _redact(resp.text[:500], endpoint.api_key))
    try:
        data = resp.json()
    except ValueError:
        raise MalformedResponseError("reply is not JSON") from None
    return _parse_response(data)


class ChatClient(Protocol):
    def complete(self, request: ChatRequest) -> ChatResponse: ...


class HTTPChatClient:
    """Keeps one connection pool per policy; see ``chat_call`` for errors."""

    def __init__(self, endpoint: EndpointConfig):
        self.endpoint = endpoint
        self._client: httpx.Client | None = None

    def complete(self, request: ChatRequest) -> ChatResponse:
        if self._client is None:
            self._client = httpx.Client()
        return chat_call(request, self.endpoint, self._client)

    def close(self) -> None:
        if self._client is not None:
            self._client.close()
            self._client = None


# --------------------------------------------------------------------------
# scaffold


@dataclass(frozen=True)
class ScaffoldConfig:
    persona_preamble: str = DEFAULT_PERSONA
    memory_window: int = 40
    max_llm_calls_per_step: int = 3
    retry_limit: int = 2
    char_budget: int = 6000
    temperature: float = 0.0
    model: str = ""
    # Override for the substrate's own grammar, e.g. to narrow the answers.
    action_grammar: Callable[[Observation], ActionGrammar] | None = None

    def __post_init__(self):
        if self.max_llm_calls_per_step < 1:
            raise ValueError("max_llm_calls_per_step must be >= 1")
        if self.retry_limit < 0:
            raise ValueError("retry_limit must be >= 0")
        if self.memory_window < 0:
            raise ValueError("memory_window must be >= 0")

    def grammar(self, obs: Observation) -> ActionGrammar:
        if self.action_grammar is not None:
            return self.action_grammar(obs)
        return get_substrate(obs.substrate_id).grammar(obs)


def describe_event(event: Event) -> str:
    who = "game" if event.speaker is None else f"player {event.speaker}"
    payload = json.dumps(event.payload, sort_keys=True, default=str)
    return f"[round {event.round}] {who}: {event.kind} {payload}"


class MemoryStore:
    """The most recent ``window`` events seen by a policy, oldest first."""

    def __init__(self, window: int):
        self.window = window
        self._events: deque[Event] = deque(maxlen=max(window, 0))

    def extend(self, events) -> None:
        self._events.extend(events)

    def clear(self) -> None:
        self._events.clear()

    def events(self) -> list[Event]:
        return list(self._events)

    def __len__(self) -> int:
        return len(self._events)


def scaffold(observation: Observation, memory: MemoryStore, config: ScaffoldConfig) -> str:
    """Prompt text for one decision.

    Memory lines are dropped oldest first until the prompt fits the
    character budget; the fixed parts are never dropped.
    """
    grammar = config.grammar(observation)
    state = json.dumps(dict(observation.private_state), sort_keys=True, default=str)
    head = config.persona_preamble.strip()
    current = (
        f"Current situation: round {observation.round}, {observation.phase_label.value} phase. "
        f"You are player {observation.seat}.\nYour private information: {state}"
    )
    tail = f"{grammar.description}\n{ANSWER_FORMAT}"
    fixed = len(head) + len(current) + len(tail) + 6
    lines = [describe_event(e) for e in memory.events()]
    kept: list[str] = []
    used = len("Recent events:\n") if lines else 0
    for line in reversed(lines):
        if fixed + used + len(line) + 1 > config.char_budget:
            break
        kept.append(line)
        used += len(line) + 1
    parts = [head]
    if kept:
        parts.append("Recent events:\n" + "\n".join(reversed(kept)))
    parts += [current, tail]
    return "\n\n".join(parts)[: max(config.char_budget, 0)]


# --------------------------------------------------------------------------
# parsing


@dataclass(frozen=True)
class ParseFailure:
    reason: str
    text: str = ""


_NUMBER = re.compile(r"(?<![\w.])-?\d+(?:\.\d+)?(?![\w])")


def _number_ok(x: float, grammar: ActionGrammar) -> bool:
    lo, hi = grammar.numeric
    if not lo - 1e-9 <= x <= hi + 1e-9:
        return False
    if grammar.integer and x != int(x):
        return False
    if grammar.granularity and not on_grid(x, grammar.granularity):
        return False
    return True


def parse_action(text: str, grammar: ActionGrammar) -> ActionAttempt | ParseFailure:
    """First grammar-conforming word or number in ``text``, as an action.

    Words match case-insensitively as whole words. Text captured by
    ``extras`` patterns is removed before numbers are read.
    """
    if not isinstance(text, str) or not text.strip():
        return ParseFailure("empty reply", text if isinstance(text, str) else "")
    body = text
    extra_values = {}
    for key, pattern in grammar.extras.items():
        m = re.search(pattern, body, re.IGNORECASE)
        if m:
            extra_values[key] = int(m.group(1))
            body = body[: m.start()] + " " + body[m.end():]

    candidates: list[tuple[int, Any]] = []
    for word, payload in grammar.tokens.items():
        m = re.search(rf"(?<![\w']){re.escape(word)}(?![\w'])", body, re.IGNORECASE)
        if m:
            candidates.append((m.start(), ("token", payload)))
    if grammar.numeric is not None:
        for m in _NUMBER.finditer(body):
            x = float(m.group())
            if _number_ok(x, grammar):
                candidates.append((m.start(), ("number", int(x) if grammar.integer else x)))
                break
    if not candidates:
        return ParseFailure("no legal answer found", text)
    _, (kind, value) = min(candidates, key=lambda c: c[0])
    if kind == "number" and extra_values:
        value = {grammar.numeric_key: value, **extra_values}
    return ActionAttempt(grammar.kind, value)


# --------------------------------------------------------------------------
# acting


def corrective_suffix(grammar: ActionGrammar) -> str:
    return f"I could not read a legal answer in that reply. {grammar.description} {ANSWER_FORMAT}"


@dataclass
class StepUsage:
    calls: int = 0
    prompt_tokens: int = 0
    completion_tokens: int = 0
    errors: list[str] = field(default_factory=list)
    outcome: str = "default"

    def to_dict(self) -> dict:
        return {
            "calls": self.calls,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "errors": list(self.errors),
            "outcome": self.outcome,
        }


def llm_act(
    observation: Observation,
    memory: MemoryStore,
    config: ScaffoldConfig,
    client: ChatClient,
    usage: StepUsage | None = None,
) -> ActionAttempt:
    """Scaffold, call, parse; retry with a corrective message; fall back to the passive action.

    Never makes more than ``min(max_llm_calls_per_step, retry_limit + 1)`` calls.
    """
    usage = usage if usage is not None else StepUsage()
    grammar = config.grammar(observation)
    messages: list[dict[str, str]] = [{"role": "user", "content": scaffold(observation, memory, config)}]
    budget = min(config.max_llm_calls_per_step, config.retry_limit + 1)
    while usage.calls < budget:
        usage.calls += 1
        try:
            reply = client.complete(ChatRequest(config.model, tuple(messages), config.temperature))
        except TransportError as exc:
            usage.errors.append(f"{type(exc).__name__}: {exc}")
            continue
        usage.prompt_tokens += reply.prompt_tokens
        usage.completion_tokens += reply.completion_tokens
        parsed = parse_action(reply.content, grammar)
        if isinstance(parsed, ActionAttempt):
            usage.outcome = "parsed"
            return parsed
        usage.errors.append(f"parse: {parsed.reason}")
        messages += [{"role": "assistant", "content": reply.content},
                     {"role": "user", "content": corrective_suffix(grammar)}]
    return passive_action(observation)


class LLMPolicy:
    """Policy that asks a chat model for every decision it has to make."""

    def __init__(self, client: ChatClient, config: ScaffoldConfig | None = None, name: str = "llm"):
        self.client = client
        self.config = config or ScaffoldConfig()
        self.name = name
        self.memory = MemoryStore(self.config.memory_window)
        self._usage: list[dict] = []

    def reset(self, seed: int) -> None:
        # Sampling randomness lives in the endpoint; the seed is not forwarded.
        self.memory.clear()
        self._usage = []

    def act(self, observation: Observation) -> ActionAttempt:
        self.memory.extend(observation.public_events)
        view = observation.private_state
        if "to_move" in view and not view["to_move"]:
            return passive_action(observation)
        usage = StepUsage()
        action = llm_act(observation, self.memory, self.config, self.client, usage)
        self._usage.append(usage.to_dict())
        return action

    def drain_usage(self) -> list[dict]:
        out, self._usage = self._usage, []
        return out


def policy_from_options(name: str, substrate_id: str, options: dict) -> LLMPolicy:
    """Build an LLMPolicy from manifest options; the key only comes from the environment."""
    key_var = options.get("api_key_env", ENV_API_KEY)
    endpoint = EndpointConfig.from_env(
        base_url=options.get("base_url"),
        model=options.get("model"),
        timeout=float(options["timeout"]) if "timeout" in options else None,
        api_key=os.environ.get(key_var) if key_var != ENV_API_KEY else None,
    )
    config = ScaffoldConfig(
        persona_preamble=options.get("persona", DEFAULT_PERSONA),
        memory_window=int(options.get("memory_window", 40)),
        max_llm_calls_per_step=int(options.get("max_calls_per_step", 3)),
        retry_limit=int(options.get("retry_limit", 2)),
        char_budget=int(options.get("char_budget", 6000)),
        temperature=float(options.get("temperature", 0.0)),
        model=endpoint.model,
    )
    return LLMPolicy(HTTPChatClient(endpoint), config, name)
