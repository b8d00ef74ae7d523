"""Uniform vision-language-model interface: live HTTP, scripted transcript, caching proxy."""

from __future__ import annotations

import base64
import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import requests

from .errors import CacheCorrupt, HttpError, NoRuleMatched
from .image_io import decode_png_bytes, png_bytes

DEFAULT_MODEL = "gpt-4-vision-preview"
ENV_API_KEY = "VLM_API_KEY"
ENV_ENDPOINT = "VLM_ENDPOINT"


@dataclass
class ChatRequest:
    """One chat completion request: system text plus ordered text/image parts."""

    system_text: str
    user_parts: list  # str | np.ndarray (H, W, 3) uint8
    temperature: float = 0.0
    max_tokens: int = 1024
    model_name: str = DEFAULT_MODEL

    def __post_init__(self):
        if not self.user_parts:
            raise ValueError("request needs at least one user part")
        if not (0 <= self.temperature <= 2):
            raise ValueError("temperature must be in [0, 2]")

    @property
    def texts(self) -> list[str]:
        return [p for p in self.user_parts if isinstance(p, str)]

    @property
    def images(self) -> list[np.ndarray]:
        return [p for p in self.user_parts if not isinstance(p, str)]


@dataclass
class VlmReply:
    text: str
    backend_id: str = "unknown"
    token_usage: dict | None = None


@dataclass
class InlineImage:
    """PNG-encoded image ready to inline into a request body."""

    png: bytes
    base64_text: str
    media_type: str = "image/png"

    @property
    def data_uri(self) -> str:
        return f"data:{self.media_type};base64,{self.base64_text}"


def encode_image(image: np.ndarray) -> InlineImage:
    """Deterministically encode an RGB8 image; decode(encode(x)) == x pixelwise."""
    if image.size == 0:
        raise ValueError("cannot encode an empty image")
    data = png_bytes(image)
    return InlineImage(png=data, base64_text=base64.b64encode(data).decode("ascii"))


def decode_image(payload: InlineImage) -> np.ndarray:
    return decode_png_bytes(payload.png)


# ---------------------------------------------------------------------------
# Scripted backend


@dataclass
class TranscriptRule:
    contains: list[str]
    response: str
    min_images: int = 0

    def __post_init__(self):
        if any(not s for s in self.contains):
            raise ValueError("rule substrings must be non-empty")

    def matches(self, request: ChatRequest) -> bool:
        haystack = request.system_text + "\n" + "\n".join(request.texts)
        return (len(request.images) >= self.min_images
                and all(s in haystack for s in self.contains))


@dataclass
class ScriptedTranscript:
    """Ordered match rules standing in for a live model; pure and deterministic."""

    rules: list[TranscriptRule]
    strict: bool = False

    def __post_init__(self):
        if not self.rules:
            raise ValueError("transcript needs at least one rule")

    @classmethod
    def from_json(cls, data: dict) -> "ScriptedTranscript":
        rules = [
            TranscriptRule(
                contains=list(rule["match"].get("contains", [])),
                min_images=int(rule["match"].get("min_images", 0)),
                response=rule["response"],
            )
            for rule in data["rules"]
        ]
        return cls(rules=rules, strict=bool(data.get("strict", False)))

    @classmethod
    def load(cls, path: str | Path) -> "ScriptedTranscript":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def to_json(self) -> dict:
        return {
            "strict": self.strict,
            "rules": [
                {"match": {"contains": r.contains, "min_images": r.min_images},
                 "response": r.response}
                for r in self.rules
            ],
        }

    def save(self, path: str | Path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)


class ScriptedBackend:
    """Replays the first transcript rule whose conditions match the request."""

    def __init__(self, transcript: ScriptedTranscript):
        self.transcript = transcript

    def complete(self, request: ChatRequest) -> VlmReply:
        for rule in self.transcript.rules:
            if rule.matches(request):
                return VlmReply(text=rule.response, backend_id="scripted")
        if self.transcript.strict:
            raise NoRuleMatched(
                "no transcript rule matched request starting "
                f"{(request.texts[0] if request.texts else '')[:80]!r}")
        return VlmReply(text="", backend_id="scripted")


# ---------------------------------------------------------------------------
# HTTP backend


class HttpBackend:
    """Chat-completions-style JSON client with bounded retries.

    Retries up to max_retries times on transport errors, 5xx, and 429,
    honoring Retry-After when present and otherwise backing off 1/2/4 s.
    """

    def __init__(
        self,
        endpoint: str | None = None,
        api_key: str | None = None,
        timeout_s: float = 120.0,
        max_retries: int = 3,
        max_in_flight: int = 4,
        requests_per_minute: float | None = None,
        session=None,
    ):
        self.endpoint = endpoint or os.environ.get(ENV_ENDPOINT, "")
        if not self.endpoint:
            raise ValueError(f"no endpoint configured (set {ENV_ENDPOINT})")
        self.api_key = api_key if api_key is not None else os.environ.get(ENV_API_KEY, "")
        self.timeout_s = timeout_s
        self.max_retries = max_retries
        self._session = session or requests
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._rpm = requests_per_minute
        self._last_request = 0.0
        self._rate_lock = threading.Lock()

    def _body(self, request: ChatRequest) -> dict:
        content = []
        for part in request.user_parts:
            if isinstance(part, str):
                content.append({"type": "text", "text": part})
            else:
                content.append({
                    "type": "image_url",
                    "image_url": {"url": encode_image(part).data_uri},
                })
        messages = []
        if request.system_text:
            messages.append({"role": "system", "content": request.system_text})
        messages.append({"role": "user", "content": content})
        return {
            "model": request.model_name,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }

    def _throttle(self) -> None:
        if not self._rpm:
            return
        with self._rate_lock:
            wait = self._last_request + 60.0 / self._rpm - time.monotonic()
            if wait > 0:
                time.sleep(wait)
            self._last_request = time.monotonic()

    def complete(self, request: ChatRequest) -> VlmReply:
        body = self._body(request)
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_error: Exception | None = None
        with self._slots:
            for attempt in range(self.max_retries + 1):
                if attempt:
                    retry_after = getattr(last_error, "retry_after", None)
                    time.sleep(retry_after if retry_after else 2.0 ** (attempt - 1))
                self._throttle()
                try:
                    resp = self._session.post(
                        self.endpoint, json=body, headers=headers, timeout=self.timeout_s)
                except requests.RequestException as exc:
                    last_error = HttpError(f"transport error: {exc}")
                    continue
                if resp.status_code in (429,) or resp.status_code >= 500:
                    err = HttpError(f"HTTP {resp.status_code}", status=resp.status_code)
                    ra = resp.headers.get("Retry-After")
                    if ra:
                        try:
                            err.retry_after = float(ra)
                        except ValueError:
                            pass
                    last_error = err
                    continue
                if resp.status_code != 200:
                    raise HttpError(f"HTTP {resp.status_code}: {resp.text[:200]}",
                                    status=resp.status_code)
                try:
                    data = resp.json()
                    text = data["choices"][0]["message"]["content"]
                    usage = data.get("usage")
                except (ValueError, KeyError, IndexError, TypeError) as exc:
                    raise HttpError(f"malformed completion body: {exc}") from exc
                return VlmReply(text=text or "", backend_id="http", token_usage=usage)
        raise last_error if isinstance(last_error, HttpError) else HttpError(str(last_error))


# ---------------------------------------------------------------------------
# Caching proxy


class CacheBackend:
    """Content-addressed reply cache in front of another backend.

    The key hashes everything the model sees (system text, user texts, image
    bytes, temperature, model name), so any content change misses cleanly.
    """

    def __init__(self, delegate, cache_dir: str | Path):
        self.delegate = delegate
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    @staticmethod
    def request_key(request: ChatRequest) -> str:
        h = hashlib.sha256()
        h.update(request.system_text.encode("utf-8"))
        for part in request.user_parts:
            if isinstance(part, str):
                h.update(b"\x00text\x00" + part.encode("utf-8"))
            else:
                h.update(b"\x00image\x00" + png_bytes(part))
        h.update(f"\x00{request.temperature}\x00{request.model_name}".encode("utf-8"))
        return h.hexdigest()

    def _lock_for(self, key: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(key, threading.Lock())

    def complete(self, request: ChatRequest) -> VlmReply:
        key = self.request_key(request)
        path = self.cache_dir / f"{key}.json"
        with self._lock_for(key):
            if path.exists():
                try:
                    data = json.loads(path.read_text())
                    return VlmReply(text=data["text"],
                                    backend_id=data.get("backend_id", "cache"),
                                    token_usage=data.get("token_usage"))
                except (ValueError, KeyError) as exc:
                    raise CacheCorrupt(f"unreadable cache entry {path.name}: {exc}") from exc
            reply = self.delegate.complete(request)
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps({
                "text": reply.text,
                "backend_id": reply.backend_id,
                "token_usage": reply.token_usage,
            }, indent=2))
            tmp.replace(path)
            return reply


def complete(request: ChatRequest, backend) -> VlmReply:
    """Run one completion against any backend object exposing .complete()."""
    return backend.complete(request)
