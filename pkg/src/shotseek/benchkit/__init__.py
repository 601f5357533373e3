from .build import Draft, describe_bundle, draft_record, format_record
from .bundle import (
    AssetBundle,
    Decision,
    diverse_bundle,
    diversity_gate,
    extract_bundle,
    pick_timestamp,
    resolution_label,
)
from .filters import LABELS, REJECTED, classify_audio, consensus_classify, normalize_label
from .quotas import TABLES, QuotaPlan, Subgroup, plan_quotas
from .validate import ValidationReport, length_band, validate_record

__all__ = [
    "AssetBundle",
    "Decision",
    "Draft",
    "LABELS",
    "QuotaPlan",
    "REJECTED",
    "Subgroup",
    "TABLES",
    "ValidationReport",
    "classify_audio",
    "consensus_classify",
    "describe_bundle",
    "diverse_bundle",
    "diversity_gate",
    "draft_record",
    "extract_bundle",
    "format_record",
    "length_band",
    "normalize_label",
    "pick_timestamp",
    "plan_quotas",
    "resolution_label",
    "validate_record",
]
