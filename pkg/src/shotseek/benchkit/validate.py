"""Structural checks for benchmark records before they enter the dataset."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Mapping

from ..model import LANGUAGES, RESOLUTIONS, TOPICS

REQUIRED = (
    "id",
    "video_link",
    "video_source",
    "category",
    "timestamp",
    "resolution",
    *(f"{name}_description_{lang}" for name in ("segment", "context", "color", "style", "audio") for lang in LANGUAGES),
)
OPTIONAL = ("asset_paths",)

PASS_BAND = (240, 260)
WARN_BAND = (230, 270)


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def status(self) -> str:
        if self.errors:
            return "fail"
        return "warn" if self.warnings else "pass"

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict:
        return {"status": self.status, "errors": list(self.errors), "warnings": list(self.warnings)}


def length_band(n: int) -> str:
    if PASS_BAND[0] <= n <= PASS_BAND[1]:
        return "pass"
    if WARN_BAND[0] <= n <= WARN_BAND[1]:
        return "warn"
    return "fail"


def _has_fence(value: Any) -> bool:
    if isinstance(value, str):
        return "```" in value
    if isinstance(value, (list, tuple)):
        return any(_has_fence(v) for v in value)
    if isinstance(value, Mapping):
        return any(_has_fence(v) for v in value.values())
    return False


def validate_record(record: "str | bytes | Mapping[str, Any]") -> ValidationReport:
    """Check one record; every violation is reported, nothing is raised."""
    report = ValidationReport()
    if isinstance(record, (str, bytes)):
        text = record.decode("utf-8", "replace") if isinstance(record, bytes) else record
        if "```" in text:
            report.errors.append("markdown fence around or inside the record")
            text = text.strip().removeprefix("```json").removeprefix("```").removesuffix("```")
        try:
            record = json.loads(text)
        except json.JSONDecodeError as exc:
            report.errors.append(f"not valid JSON: {exc}")
            return report
    if not isinstance(record, Mapping):
        report.errors.append("record must be a JSON object")
        return report

    for key in REQUIRED:
        if key not in record:
            report.errors.append(f"missing field {key}")
    for key in record:
        if key not in REQUIRED and key not in OPTIONAL:
            report.errors.append(f"unknown field {key}")

    for key in REQUIRED:
        if key not in record:
            continue
        value = record[key]
        if key.startswith("context_description_"):
            if not isinstance(value, list) or len(value) != 2:
                n = len(value) if isinstance(value, list) else type(value).__name__
                report.errors.append(f"{key} must be an array of 2 elements, got {n}")
            elif not all(isinstance(v, str) and v.strip() for v in value):
                report.errors.append(f"{key} elements must be non-empty strings")
        elif not isinstance(value, str) or not value.strip():
            report.errors.append(f"{key} must be a non-empty string")

    if record.get("resolution") is not None and record.get("resolution") not in RESOLUTIONS:
        report.errors.append(f"resolution {record['resolution']!r} not in {RESOLUTIONS}")
    if record.get("category") is not None and record.get("category") not in TOPICS:
        report.errors.append(f"category {record['category']!r} is not a known topic")

    seg = record.get("segment_description_ch")
    if isinstance(seg, str):
        n = len(seg)
        band = length_band(n)
        if band == "warn":
            report.warnings.append(f"segment_description_ch has {n} characters, outside {PASS_BAND[0]}-{PASS_BAND[1]}")
        elif band == "fail":
            report.errors.append(f"segment_description_ch has {n} characters, outside {WARN_BAND[0]}-{WARN_BAND[1]}")

    for key, value in record.items():
        if _has_fence(value):
            report.errors.append(f"{key} contains a markdown fence")
    return report
