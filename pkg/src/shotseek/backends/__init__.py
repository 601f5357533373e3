from .base import (
    AudioPart,
    Backends,
    ChatBackend,
    ChatRequest,
    EmbeddingBackend,
    EmbeddingRequest,
    ImagePart,
    MediaExtractor,
    MediaInfo,
    RetryingChat,
    SearchBackend,
    SearchResult,
    TextPart,
    VideoFetcher,
    extract_frame,
    file_digest,
    request_hash,
    with_retry,
)
from .journal import Journal, recording, replaying

__all__ = [
    "AudioPart",
    "Backends",
    "ChatBackend",
    "ChatRequest",
    "EmbeddingBackend",
    "EmbeddingRequest",
    "ImagePart",
    "Journal",
    "MediaExtractor",
    "MediaInfo",
    "RetryingChat",
    "SearchBackend",
    "SearchResult",
    "TextPart",
    "VideoFetcher",
    "extract_frame",
    "file_digest",
    "recording",
    "replaying",
    "request_hash",
    "with_retry",
]
