"""Two-step record drafting: describe a bundle, then format the raw text as a record."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from ..backends import AudioPart, ChatBackend, ChatRequest, ImagePart, TextPart
from ..prompts import load
from .bundle import AssetBundle
from .validate import ValidationReport, validate_record

DESCRIBE_PROMPT = "describe.v1.txt"
FORMAT_PROMPT = "format_record.v1.txt"


@dataclass(frozen=True)
class Draft:
    record: Optional[dict]
    report: ValidationReport
    raw_description: str
    raw_record: str


def describe_bundle(bundle: AssetBundle, chat: ChatBackend, model: str = "describer") -> str:
    parts: list = [TextPart(load(DESCRIBE_PROMPT))]
    parts += [ImagePart(p) for p in bundle.chronological]
    if bundle.audio:
        parts.append(AudioPart(bundle.audio))
    return chat.chat(ChatRequest(tuple(parts), model=model, temperature=0.0))


def _extract_json(raw: str) -> str:
    m = re.search(r"\{.*\}", raw, flags=re.S)
    return m.group(0) if m else raw


def format_record(
    raw: str,
    chat: ChatBackend,
    *,
    record_id: str,
    video_link: str,
    category: str,
    timestamp: str,
    resolution: str,
    model: str = "formatter",
) -> str:
    text = (
        load(FORMAT_PROMPT)
        .replace("$ID$", record_id)
        .replace("$VIDEO_LINK$", video_link)
        .replace("$CATEGORY$", category)
        .replace("$TIMESTAMP$", timestamp)
        .replace("$RESOLUTION$", resolution)
        .replace("$RAW$", raw)
    )
    return chat.chat(ChatRequest((TextPart(text),), model=model, temperature=0.0))


def draft_record(
    bundle: AssetBundle,
    chat: ChatBackend,
    *,
    record_id: str,
    video_link: str,
    category: str,
    timestamp: str,
    bundle_dir: "str | Path | None" = None,
) -> Draft:
    """Describe, format and validate. The record is kept even when validation
    flags it so that a human can fix it rather than regenerate it."""
    raw = describe_bundle(bundle, chat)
    formatted = format_record(
        raw,
        chat,
        record_id=record_id,
        video_link=video_link,
        category=category,
        timestamp=timestamp,
        resolution=bundle.meta["resolution"],
    )
    report = validate_record(formatted)
    try:
        record = json.loads(_extract_json(formatted))
    except json.JSONDecodeError:
        return Draft(None, report, raw, formatted)
    if bundle_dir is not None:
        base = Path(bundle_dir)
        paths = bundle.meta["paths"]
        record["asset_paths"] = {
            "target_frame": str(base / paths["target_frame"]),
            "preceding_frames": [str(base / p) for p in paths["preceding_frames"]],
            "following_frames": [str(base / p) for p in paths["following_frames"]],
            "audio_clip": str(base / paths["audio_clip"]) if paths["audio_clip"] else None,
            "metadata": str(base / "metadata.json"),
        }
    return Draft(record, report, raw, formatted)
