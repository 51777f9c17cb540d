"""Chat-completions backend: tool-constrained generation over HTTP.

Speaks the de-facto chat-completions JSON shape against any compatible
endpoint. The request carries the assembled prompt as a user message and
the registry-derived tool schema; tool calls in the response decode to a
plan proposal. Plain-text responses become clarifications, and the literal
reply ``DONE`` signals goal completion.

No streaming; responses are consumed whole. Tests replay recorded wire
fixtures through an injected transport, never the network.
"""

from __future__ import annotations

import json
import logging

import httpx

from .errors import BackendUnavailableError, MalformedToolCallError
from .planner import (
    BackendConfig,
    PlannerRequest,
    RawProposal,
    assemble_prompt,
    derive_tool_schema,
)

log = logging.getLogger(__name__)


class RemoteBackend:
    def __init__(self, config: BackendConfig, transport: httpx.BaseTransport | None = None):
        self.config = config
        self._client = httpx.Client(timeout=config.timeout, transport=transport)

    def build_request_body(self, request: PlannerRequest, corrective: str | None) -> dict:
        messages = [{"role": "user", "content": assemble_prompt(request)}]
        if corrective:
            messages.append({"role": "user", "content": corrective})
        return {
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": messages,
            "tools": derive_tool_schema(request.api),
        }

    def propose(self, request: PlannerRequest, corrective: str | None) -> RawProposal:
        body = self.build_request_body(request, corrective)
        headers = {"Content-Type": "application/json"}
        credential = self.config.credential()
        if credential:
            headers["Authorization"] = f"Bearer {credential}"
        try:
            response = self._client.post(self.config.endpoint, json=body, headers=headers)
        except httpx.HTTPError as err:
            raise BackendUnavailableError(f"request failed: {err}") from err
        if response.status_code == 401:
            raise BackendUnavailableError(
                "endpoint rejected the credential (set PROVOX_API_KEY)")
        if response.status_code >= 400:
            raise BackendUnavailableError(
                f"endpoint returned HTTP {response.status_code}")
        try:
            payload = response.json()
        except ValueError as err:
            raise BackendUnavailableError("endpoint returned non-JSON body") from err
        return decode_completion(payload)


def decode_completion(payload: dict) -> RawProposal:
    """Chat-completion JSON → raw proposal (calls, text, or done)."""
    try:
        message = payload["choices"][0]["message"]
    except (KeyError, IndexError, TypeError) as err:
        raise MalformedToolCallError(f"unexpected completion shape: {err}") from err

    tool_calls = message.get("tool_calls") or []
    if not tool_calls:
        content = (message.get("content") or "").strip()
        if content.upper() == "DONE":
            return RawProposal("done")
        return RawProposal("text", text=content)

    calls: list[tuple[str, tuple[str, ...]]] = []
    for tc in tool_calls:
        fn = tc.get("function", {})
        name = fn.get("name", "")
        try:
            arguments = json.loads(fn.get("arguments") or "{}")
        except json.JSONDecodeError as err:
            raise MalformedToolCallError(f"bad tool arguments for {name}: {err}") from err
        if name == "submit_plan":
            items = arguments.get("calls")
            if not isinstance(items, list):
                raise MalformedToolCallError("submit_plan requires a calls array")
            for item in items:
                if not isinstance(item, dict) or "function" not in item:
                    raise MalformedToolCallError("submit_plan call items need a function")
                args = item.get("args", [])
                if not isinstance(args, list):
                    raise MalformedToolCallError("submit_plan args must be an array")
                calls.append((str(item["function"]), tuple(str(a) for a in args)))
        else:
            # Single-function tool call; argument order follows the schema's
            # declared parameter order, which json preserves.
            calls.append((name, tuple(str(v) for v in arguments.values())))
    return RawProposal("calls", tuple(calls))
