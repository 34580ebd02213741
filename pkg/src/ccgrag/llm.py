"""Completion client for OpenAI-compatible ``/completions`` endpoints.

Endpoints starting with ``mock:`` are served in-process by deterministic
models used for tests and dry runs:

``mock:echo``
    the last non-empty line of the prompt
``mock:copy-next-line``
    finds the context's last non-blank line inside the snippets (best
    first) and returns the line after it
``mock:fixed:<text>``
    always ``<text>``
"""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass

import httpx

from .errors import BudgetExceeded, EndpointError, Timeout
from .prompt import PromptBundle

log = logging.getLogger(__name__)

MOCK_PREFIX = "mock:"


@dataclass(frozen=True)
class LlmConfig:
    endpoint_url: str = "mock:echo"
    model_name: str = ""
    max_output_tokens: int = 100
    temperature: float = 0.0
    context_window_tokens: int = 4096
    auth_token_env_name: str = "CCGRAG_API_KEY"
    timeout_seconds: float = 60.0
    max_retries: int = 3
    backoff_seconds: float = 0.5

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be >= 1")
        if self.context_window_tokens < 1:
            raise ValueError("context_window_tokens must be >= 1")


def first_line(text: str) -> str:
    """First non-empty line, trailing whitespace removed."""
    for line in text.splitlines():
        if line.strip():
            return line.rstrip()
    return ""


def _last_nonblank(text: str) -> str:
    for line in reversed(text.splitlines()):
        if line.strip():
            return line
    return ""


def _copy_next_line(bundle: PromptBundle) -> str:
    last = _last_nonblank(bundle.context).strip()
    if not last:
        return ""
    for snippet in bundle.snippets:
        lines = snippet.text.split("\n")
        for i, line in enumerate(lines):
            if line.strip() == last:
                for nxt in lines[i + 1 :]:
                    if nxt.strip():
                        return nxt
                break
    return ""


def _mock_complete(bundle: PromptBundle, name: str) -> str:
    if name == "echo":
        return _last_nonblank(bundle.prompt_text)
    if name == "copy-next-line":
        return _copy_next_line(bundle)
    if name.startswith("fixed:"):
        return name[len("fixed:") :]
    raise EndpointError(None, f"unknown mock model {name!r}")


def _post(config: LlmConfig, prompt: str, client: httpx.Client | None) -> str:
    url = config.endpoint_url.rstrip("/") + "/completions"
    headers = {"Content-Type": "application/json"}
    token = os.environ.get(config.auth_token_env_name) if config.auth_token_env_name else None
    if token:
        headers["Authorization"] = f"Bearer {token}"
    body = {
        "model": config.model_name,
        "prompt": prompt,
        "max_tokens": config.max_output_tokens,
        "temperature": config.temperature,
    }
    own = client is None
    http = client or httpx.Client(timeout=config.timeout_seconds)
    try:
        attempt = 0
        while True:
            try:
                resp = http.post(url, json=body, headers=headers)
            except httpx.TimeoutException as exc:
                if attempt >= config.max_retries:
                    raise Timeout(f"request to {url} timed out") from exc
            except httpx.TransportError as exc:
                if attempt >= config.max_retries:
                    raise EndpointError(None, f"cannot reach {url}: {exc}") from exc
            else:
                if resp.status_code < 400:
                    try:
                        return resp.json()["choices"][0]["text"]
                    except (ValueError, KeyError, IndexError, TypeError) as exc:
                        raise EndpointError(resp.status_code, "malformed completion response") from exc
                if resp.status_code < 500 or attempt >= config.max_retries:
                    raise EndpointError(resp.status_code, resp.text[:200])
            delay = config.backoff_seconds * (2**attempt)
            log.info("retrying completion in %.2fs (attempt %d)", delay, attempt + 1)
            time.sleep(delay)
            attempt += 1
    finally:
        if own:
            http.close()


def complete(bundle: PromptBundle, config: LlmConfig, client: httpx.Client | None = None) -> str:
    """One-line completion for ``bundle``; 5xx and network errors are retried, 4xx are not."""
    if bundle.token_estimate > config.context_window_tokens:
        raise BudgetExceeded(
            f"prompt needs ~{bundle.token_estimate} tokens, window is {config.context_window_tokens}"
        )
    if config.endpoint_url.startswith(MOCK_PREFIX):
        text = _mock_complete(bundle, config.endpoint_url[len(MOCK_PREFIX) :])
    else:
        text = _post(config, bundle.prompt_text, client)
    return first_line(text)
