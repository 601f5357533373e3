"""Query expansion: turn a shot description into web search queries.

The model is asked to imagine the full video that would contain the shot
and to answer with a ``search_videos`` tool call carrying M queries.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass

from .backends import ChatBackend, ChatRequest, TextPart
from .errors import ArityMismatch, InvalidValue, MalformedJson, NoToolCall, WrongToolName
from .model import ShotQuery
from .prompts import load

log = logging.getLogger(__name__)

PROMPT_FILE = "imagination.v1.txt"
TOOL_NAME = "search_videos"
DEFAULT_REASKS = 2

_THINK_RE = re.compile(r"<think>(.*?)</think>", re.S)
_TOOL_RE = re.compile(r"<tool_call>(.*?)(?:</tool_call>|\Z)", re.S)
_FENCE_RE = re.compile(r"^```(?:json)?\s*|\s*```$")

FORMAT_REMINDER = (
    "Your previous reply could not be used ({error}). Answer again with a <think>...</think> "
    'block followed by exactly one <tool_call>{{"name": "search_videos", "arguments": '
    '{{"query": [...]}}}}</tool_call> containing {m} distinct search phrases.'
)


@dataclass(frozen=True)
class ExpansionResult:
    think: str
    queries: tuple[str, ...]
    raw: str


def build_imagination_prompt(q: ShotQuery, m: int) -> str:
    if m < 1:
        raise InvalidValue("M must be at least 1")
    slots = ", ".join(f'"your search term{k}"' for k in range(1, m + 1))
    constraint = f" {q.constraint_text}" if q.constraint_text else ""
    return (
        load(PROMPT_FILE)
        .replace("{M}", str(m))
        .replace("{QUERY_SLOTS}", slots)
        .replace("{DESCRIPTION}", q.description)
        .replace("{CONSTRAINT}", constraint)
    )


def render_agent_output(think: str, queries) -> str:
    """Emit a reply in the agent format; ``parse_agent_output`` inverts it."""
    call = {"name": TOOL_NAME, "arguments": {"query": list(queries)}}
    return f"<think>{think}</think><tool_call>{json.dumps(call, ensure_ascii=False)}</tool_call>"


def parse_agent_output(raw: str, m: int) -> ExpansionResult:
    think_match = _THINK_RE.search(raw)
    think = think_match.group(1) if think_match else ""
    tool_match = _TOOL_RE.search(raw)
    if tool_match is None:
        raise NoToolCall("no <tool_call> block in agent output")
    body = _FENCE_RE.sub("", tool_match.group(1).strip())
    try:
        call = json.loads(body)
    except json.JSONDecodeError as exc:
        raise MalformedJson(f"tool call is not valid JSON: {exc}") from exc
    if not isinstance(call, dict):
        raise MalformedJson("tool call must be a JSON object")
    if call.get("name") != TOOL_NAME:
        raise WrongToolName(f"expected tool {TOOL_NAME!r}, got {call.get('name')!r}")
    args = call.get("arguments")
    if isinstance(args, str):
        # some models double-encode the arguments object
        try:
            args = json.loads(args)
        except json.JSONDecodeError as exc:
            raise MalformedJson("arguments is not a JSON object") from exc
    if not isinstance(args, dict) or "query" not in args:
        raise MalformedJson("arguments.query is missing")
    queries = args["query"]
    if isinstance(queries, str):
        queries = [queries]
    if not isinstance(queries, list) or not all(isinstance(x, str) and x.strip() for x in queries):
        raise MalformedJson("arguments.query must be a list of non-empty strings")
    if len(queries) != m:
        raise ArityMismatch(m, len(queries))
    return ExpansionResult(think, tuple(queries), raw)


def _dedupe(queries) -> tuple[str, ...]:
    seen: set[str] = set()
    out = []
    for x in queries:
        key = " ".join(x.casefold().split())
        if key not in seen:
            seen.add(key)
            out.append(x)
    return tuple(out)


def expand(
    q: ShotQuery,
    m: int,
    chat: ChatBackend,
    model: str = "generator",
    reasks: int = DEFAULT_REASKS,
    temperature: float = 0.0,
) -> ExpansionResult:
    """One chat round plus at most ``reasks`` re-asks on unusable output."""
    prompt = build_imagination_prompt(q, m)
    parts: tuple = (TextPart(prompt),)
    dup_reasked = False
    last_error: Exception | None = None
    for attempt in range(reasks + 1):
        raw = chat.chat(ChatRequest(parts, model=model, temperature=temperature))
        try:
            result = parse_agent_output(raw, m)
        except (NoToolCall, MalformedJson, WrongToolName, ArityMismatch) as exc:
            last_error = exc
        else:
            distinct = _dedupe(result.queries)
            if len(distinct) == m:
                return result
            last_error = ArityMismatch(m, len(distinct))
            if dup_reasked:
                break
            dup_reasked = True
        log.info("expansion attempt %d unusable: %s", attempt + 1, last_error)
        reminder = FORMAT_REMINDER.format(error=last_error, m=m)
        parts = (TextPart(prompt), TextPart(reminder))
    assert last_error is not None
    raise last_error
