"""HTTP clients for chat-completion and embedding endpoints.

Both speak the common ``/chat/completions`` and ``/embeddings`` JSON shapes.
Images travel inline as base64 data URIs, audio as ``input_audio`` parts.
"""

from __future__ import annotations

import base64
import mimetypes
import os
from pathlib import Path
from typing import Optional

import httpx

from ..errors import ContextOverflow, ModelRefusal, TransportError
from .base import AudioPart, ChatRequest, EmbeddingRequest, ImagePart, TextPart

_OVERFLOW_MARKERS = ("context_length", "context length", "maximum context", "too many tokens", "too large")


def _b64(path: "str | Path") -> str:
    return base64.b64encode(Path(path).read_bytes()).decode("ascii")


def encode_parts(req: ChatRequest) -> list[dict]:
    content: list[dict] = []
    for part in req.user_parts:
        if isinstance(part, TextPart):
            content.append({"type": "text", "text": part.text})
        elif isinstance(part, ImagePart):
            mime = mimetypes.guess_type(part.path)[0] or "image/jpeg"
            content.append({"type": "image_url", "image_url": {"url": f"data:{mime};base64,{_b64(part.path)}"}})
        elif isinstance(part, AudioPart):
            fmt = Path(part.path).suffix.lstrip(".") or "mp3"
            content.append({"type": "input_audio", "input_audio": {"data": _b64(part.path), "format": fmt}})
    return content


def _classify_http_error(resp: httpx.Response) -> Exception:
    body = resp.text[:2000]
    lowered = body.lower()
    if resp.status_code in (400, 413) and any(m in lowered for m in _OVERFLOW_MARKERS):
        return ContextOverflow(body)
    if resp.status_code == 429 or resp.status_code >= 500:
        return TransportError(f"HTTP {resp.status_code}: {body}")
    return ModelRefusal(f"HTTP {resp.status_code}: {body}")


class _HttpBase:
    def __init__(
        self,
        base_url: str,
        api_key: Optional[str] = None,
        api_key_env: str = "OPENAI_API_KEY",
        timeout: float = 300.0,
        client: Optional[httpx.Client] = None,
    ):
        self.base_url = base_url.rstrip("/")
        key = api_key if api_key is not None else os.environ.get(api_key_env, "")
        headers = {"Authorization": f"Bearer {key}"} if key else {}
        self.client = client or httpx.Client(timeout=timeout, headers=headers)

    def _post(self, path: str, payload: dict) -> dict:
        try:
            resp = self.client.post(f"{self.base_url}{path}", json=payload)
        except httpx.HTTPError as exc:
            raise TransportError(str(exc)) from exc
        if resp.status_code != 200:
            raise _classify_http_error(resp)
        try:
            return resp.json()
        except ValueError as exc:
            raise TransportError(f"non-JSON response: {resp.text[:200]}") from exc


class OpenAICompatibleChat(_HttpBase):
    def chat(self, req: ChatRequest) -> str:
        messages = []
        if req.system:
            messages.append({"role": "system", "content": req.system})
        messages.append({"role": "user", "content": encode_parts(req)})
        data = self._post(
            "/chat/completions",
            {"model": req.model, "messages": messages, "temperature": req.temperature},
        )
        try:
            choice = data["choices"][0]
        except (KeyError, IndexError) as exc:
            raise TransportError(f"malformed completion: {str(data)[:200]}") from exc
        if choice.get("finish_reason") == "content_filter":
            raise ModelRefusal("response blocked by content filter")
        if choice.get("finish_reason") == "length" and not (choice.get("message") or {}).get("content"):
            raise ContextOverflow("model produced no content before hitting the length limit")
        content = (choice.get("message") or {}).get("content")
        if content is None:
            raise ModelRefusal((choice.get("message") or {}).get("refusal") or "empty response")
        return content


class OpenAICompatibleEmbedder(_HttpBase):
    """Posts text as-is and images as data URIs to ``/embeddings``."""

    def embed(self, req: EmbeddingRequest) -> list[float]:
        if isinstance(req.payload, TextPart):
            item = req.payload.text
        else:
            mime = mimetypes.guess_type(req.payload.path)[0] or "image/jpeg"
            item = f"data:{mime};base64,{_b64(req.payload.path)}"
        data = self._post("/embeddings", {"model": req.model, "input": [item]})
        try:
            return [float(x) for x in data["data"][0]["embedding"]]
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(f"malformed embedding response: {str(data)[:200]}") from exc
