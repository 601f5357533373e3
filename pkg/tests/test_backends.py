import json

import httpx
import pytest

from conftest import solid_jpeg
from shotseek.backends import (
    Backends,
    ChatRequest,
    EmbeddingRequest,
    ImagePart,
    Journal,
    RetryingChat,
    TextPart,
    recording,
    replaying,
    request_hash,
    with_retry,
)
from shotseek.backends.commands import with_suffix
from shotseek.backends.http import OpenAICompatibleChat, OpenAICompatibleEmbedder
from shotseek.backends.journal import ReplayChat, ReplayFetcher
from shotseek.backends.mock import EchoChat, HashEmbedder, LocalFetcher, ScriptedChat, StaticSearch
from shotseek.errors import (
    ContextOverflow,
    InvalidValue,
    MediaToolFailure,
    MissingFixture,
    ModelRefusal,
    TransportError,
    Unreachable,
)


def _req(text="ping", model="m"):
    return ChatRequest((TextPart(text),), model=model)


def test_replay_returns_recorded_value(tmp_path):
    j = Journal(tmp_path)
    h = request_hash("chat", _req())
    j.append("chat", h, "ok")
    assert ReplayChat(Journal(tmp_path)).chat(_req()) == "ok"


def test_replay_unrecorded_is_missing_fixture(tmp_path):
    with pytest.raises(MissingFixture) as exc:
        ReplayChat(Journal(tmp_path)).chat(_req("never seen"))
    assert isinstance(exc.value, TransportError)


def test_echo_mock_is_documented_mapping():
    assert EchoChat().chat(_req("ping")) == "echo: ping"


def test_request_hash_uses_file_content(tmp_path):
    a = solid_jpeg(tmp_path / "a.jpg", (10, 20, 30))
    moved = tmp_path / "sub"
    moved.mkdir()
    b = moved / "renamed.jpg"
    b.write_bytes(a.read_bytes())
    ra = ChatRequest((TextPart("x"), ImagePart(str(a))), "m")
    rb = ChatRequest((TextPart("x"), ImagePart(str(b))), "m")
    assert request_hash("chat", ra) == request_hash("chat", rb)
    assert request_hash("chat", ra) != request_hash("chat", _req("x"))
    assert request_hash("chat", _req("x", "m1")) != request_hash("chat", _req("x", "m2"))


def test_record_then_replay_round_trip(tmp_path):
    live = Backends(
        chat=ScriptedChat(["first", ContextOverflow("too long")]),
        embed=HashEmbedder(),
        search=StaticSearch({"q": ["https://a.org/1", "https://a.org/2"]}),
        fetcher=None,
        media=None,
    )
    j = Journal(tmp_path / "j")
    rec = recording(live, j)
    assert rec.chat.chat(_req("a")) == "first"
    with pytest.raises(ContextOverflow):
        rec.chat.chat(_req("b"))
    vec = rec.embed.embed(EmbeddingRequest(TextPart("hello"), "clip"))
    res = rec.search.search("q")
    assert j.total_live_calls == 4

    replay_j = Journal(tmp_path / "j")
    rp = replaying(replay_j)
    assert rp.chat.chat(_req("a")) == "first"
    with pytest.raises(ContextOverflow):
        rp.chat.chat(_req("b"))
    assert rp.embed.embed(EmbeddingRequest(TextPart("hello"), "clip")) == vec
    again = rp.search.search("q")
    assert again.urls == res.urls and again.outbound_query == "q youtube"
    assert replay_j.total_live_calls == 0 and sum(replay_j.misses.values()) == 0


def test_transient_errors_are_not_journaled(tmp_path):
    j = Journal(tmp_path)
    rec = recording(Backends(ScriptedChat([TransportError("503")]), None, None, None, None), j)
    with pytest.raises(TransportError):
        rec.chat.chat(_req())
    assert len(j) == 0


def test_journal_skips_torn_line(tmp_path):
    j = Journal(tmp_path)
    j.append("chat", "h1", "one")
    with open(j.path, "a") as fh:
        fh.write('{"request_hash": "h2", "kind": "ch')
    again = Journal(tmp_path)
    assert len(again) == 1 and again.lookup("chat", "h1") == "one"


def test_journal_lines_are_json_objects(tmp_path):
    j = Journal(tmp_path)
    j.append("search", "abc", {"urls": ["u"]})
    line = json.loads(j.path.read_text().splitlines()[0])
    assert set(line) == {"request_hash", "kind", "response"}


def test_replay_fetcher_needs_bytes_on_disk(tmp_path):
    j = Journal(tmp_path / "j")
    j.append("fetch", request_hash("fetch", "https://a.org/v"), {"file": "video.mp4"})
    j.append("fetch", request_hash("fetch", "https://a.org/dead"), {"__error__": "Unreachable", "url": "https://a.org/dead", "message": "gone"})
    f = ReplayFetcher(j)
    with pytest.raises(MissingFixture):
        f.fetch("https://a.org/v", tmp_path / "dest")
    (tmp_path / "dest").mkdir()
    (tmp_path / "dest" / "video.mp4").write_bytes(b"x")
    assert f.fetch("https://a.org/v", tmp_path / "dest").name == "video.mp4"
    with pytest.raises(Unreachable):
        f.fetch("https://a.org/dead", tmp_path / "dest")


def test_with_suffix():
    assert with_suffix("Y2K dance split screen leg warmers").endswith(" youtube")
    assert with_suffix("cats youtube") == "cats youtube"
    with pytest.raises(InvalidValue):
        with_suffix("")


def test_search_ranks_are_contiguous():
    res = StaticSearch({"q": ["u1", "u2", "u3"]}).search("q")
    assert [r for r, _ in res.ranked] == [0, 1, 2]


def test_retry_backs_off_then_succeeds():
    delays = []
    calls = iter([TransportError("a"), TransportError("b"), "ok"])

    def fn():
        x = next(calls)
        if isinstance(x, Exception):
            raise x
        return x

    assert with_retry(fn, sleep=delays.append) == "ok"
    assert delays == [1.0, 2.0]


def test_retry_gives_up_and_skips_non_transport():
    delays = []
    chat = RetryingChat(ScriptedChat([TransportError("x")]), sleep=delays.append)
    with pytest.raises(TransportError):
        chat.chat(_req())
    assert len(chat.inner.calls) == 3
    chat = RetryingChat(ScriptedChat([ModelRefusal("no")]), sleep=delays.append)
    with pytest.raises(ModelRefusal):
        chat.chat(_req())
    assert len(chat.inner.calls) == 1
    chat = RetryingChat(ScriptedChat([MissingFixture("chat", "h")]), sleep=delays.append)
    with pytest.raises(MissingFixture):
        chat.chat(_req())
    assert len(chat.inner.calls) == 1


def _http_chat(handler):
    client = httpx.Client(transport=httpx.MockTransport(handler))
    return OpenAICompatibleChat("https://llm.test/v1", api_key="k", client=client)


def test_http_chat_success_and_payload(tmp_path):
    seen = {}

    def handler(request):
        seen["body"] = json.loads(request.content)
        seen["url"] = str(request.url)
        return httpx.Response(200, json={"choices": [{"message": {"content": "hi"}, "finish_reason": "stop"}]})

    img = solid_jpeg(tmp_path / "a.jpg", (1, 2, 3))
    out = _http_chat(handler).chat(ChatRequest((TextPart("x"), ImagePart(str(img))), "gpt"))
    assert out == "hi"
    assert seen["url"].endswith("/chat/completions")
    content = seen["body"]["messages"][0]["content"]
    assert content[0] == {"type": "text", "text": "x"}
    assert content[1]["image_url"]["url"].startswith("data:image/jpeg;base64,")
    assert seen["body"]["temperature"] == 0.0


@pytest.mark.parametrize(
    "status,body,exc",
    [
        (400, "maximum context length exceeded", ContextOverflow),
        (429, "slow down", TransportError),
        (503, "unavailable", TransportError),
        (403, "policy", ModelRefusal),
    ],
)
def test_http_error_mapping(status, body, exc):
    with pytest.raises(exc):
        _http_chat(lambda r: httpx.Response(status, text=body)).chat(_req())


def test_http_content_filter_is_refusal():
    resp = {"choices": [{"message": {"content": None}, "finish_reason": "content_filter"}]}
    with pytest.raises(ModelRefusal):
        _http_chat(lambda r: httpx.Response(200, json=resp)).chat(_req())


def test_http_embedder():
    client = httpx.Client(transport=httpx.MockTransport(lambda r: httpx.Response(200, json={"data": [{"embedding": [0.1, 0.2]}]})))
    emb = OpenAICompatibleEmbedder("https://llm.test/v1", api_key="k", client=client)
    assert emb.embed(EmbeddingRequest(TextPart("cat"), "clip")) == [0.1, 0.2]


def test_hash_embedder_is_deterministic_and_bounded(tmp_path):
    a = solid_jpeg(tmp_path / "a.jpg", (200, 10, 10))
    e = HashEmbedder(8)
    v1 = e.embed(EmbeddingRequest(ImagePart(str(a)), "clip"))
    v2 = e.embed(EmbeddingRequest(ImagePart(str(a)), "clip"))
    assert v1 == v2 and len(v1) == 8 and all(-1 <= x <= 1 for x in v1)


def test_local_fetcher_failure_modes(tmp_path):
    src = tmp_path / "src.mp4"
    src.write_bytes(b"0123456789abcdef")
    f = LocalFetcher({"u1": str(src), "u2": "unreachable", "u3": "truncated", "u4": f"corrupt:{src}"})
    assert f.fetch("u1", tmp_path / "d1").read_bytes() == src.read_bytes()
    with pytest.raises(Unreachable):
        f.probe("u2")
    with pytest.raises(Unreachable):
        f.fetch("nope", tmp_path / "d")
    from shotseek.errors import Truncated

    with pytest.raises(Truncated):
        f.fetch("u3", tmp_path / "d3")
    assert len(f.fetch("u4", tmp_path / "d4").read_bytes()) == 2


def test_media_probe_and_corrupt(media, clip10, tmp_path):
    info = media.probe(clip10.local_path)
    assert abs(info.duration_s - 10.0) < 0.2
    assert (info.width, info.height) == (64, 36)
    assert info.has_audio and info.has_video
    bad = tmp_path / "bad.mp4"
    bad.write_bytes(b"not a video at all")
    with pytest.raises(MediaToolFailure):
        media.probe(bad)
