"""Scoring: query construction, reply parsing, retries, surrogate, caching."""

import base64
import threading

import numpy as np
import pytest

from promptfield.errors import (
    ConfigError,
    DegenerateWorld,
    DimensionMismatch,
    EvaluatorUnavailable,
    InvalidPrompt,
    NoScoreFound,
    ParseError,
    TransportError,
    UnparseableReply,
)
from promptfield.evaluate import (
    QUERY_TEMPLATE,
    CachedScorer,
    EvalContext,
    ScoreResult,
    SurrogateScorer,
    VlmConfig,
    VlmScorer,
    build_query,
    cached,
    parse_score,
    score_surrogate,
    score_vlm,
)
from promptfield.p2i import Architecture, init_genome, zero_field
from promptfield.render import RenderStyle, render_frame
from promptfield.rng import SplitMix64
from promptfield.swarm import PhysicsConfig, WorldState, init_world

# the exact evaluator question, built here from escapes so a typo in the
# package constant cannot hide behind a shared literal
_EXPECTED_TEMPLATE = (
    "Briefly describe the overall distribution of dots in this image.\n"
    "The original prompt was: “{prompt}.”\n"
    "On a scale from 0.0 to 1.0, how well does the image match the user’s goal?\n"
    "Return a numerical score."
)


def _world(positions, arena=100.0):
    pos = np.asarray(positions, dtype=np.float64)
    return WorldState(pos, np.zeros_like(pos), arena)


def _ctx(prompt="gather"):
    phys = PhysicsConfig(n_agents=4, arena=64.0, steps=0)
    world = init_world(phys, SplitMix64(3))
    arch = Architecture(embed_dim=8, grid=5)
    return EvalContext(
        prompt=prompt,
        genome=init_genome(arch, SplitMix64(1)),
        field=zero_field(5),
        world_start=world,
        world_final=world,
        raster=render_frame(world, RenderStyle()),
    )


def test_query_template_is_verbatim():
    assert QUERY_TEMPLATE == _EXPECTED_TEMPLATE


def test_build_query_substitutes_prompt():
    q = build_query("form a cluster")
    assert "“form a cluster.”" in q
    assert "{prompt}" not in q
    assert q == _EXPECTED_TEMPLATE.replace("{prompt}", "form a cluster")


def test_build_query_survives_braces_in_prompt():
    q = build_query("move {fast} to {0}")
    assert "“move {fast} to {0}.”" in q


def test_build_query_rejects_empty_prompt():
    with pytest.raises(InvalidPrompt):
        build_query("")


@pytest.mark.parametrize(
    "reply,expected",
    [
        ("Score: 0.8", 0.8),
        ("I'd rate this 0.3. Overall score: 0.75", 0.75),
        ("score 0.4 but final Score 0.6", 0.6),  # last occurrence wins
        ("Score: 3.5 out of 5, say 0.7", 0.7),  # skips out-of-range values
        ("SCORE=0.55", 0.55),  # case-insensitive
        ("score is 1", 1.0),
        ("score: .25", 0.25),
        ("the spread looks like 0.2 maybe 0.9", 0.9),  # no keyword: last in range
        ("around .35 total", 0.35),
        ("roughly -0.5 aligned", 0.5),  # sign is not part of the number
    ],
)
def test_parse_score(reply, expected):
    assert parse_score(reply) == expected


@pytest.mark.parametrize(
    "reply",
    [
        "no numbers at all",
        "score: none given",
        "values 2.5 and 7 only",
        "0.4 earlier, but score: pending",  # nothing usable after the keyword
    ],
)
def test_parse_score_failures(reply):
    with pytest.raises(NoScoreFound):
        parse_score(reply)


def test_score_result_validation():
    with pytest.raises(ValueError):
        ScoreResult(score=1.5, description=None, source="surrogate")
    with pytest.raises(ValueError):
        ScoreResult(score=0.5, description=None, source="vlm")  # vlm needs text
    with pytest.raises(ValueError):
        ScoreResult(score=0.5, description=None, source="oracle")


def test_vlm_config_validation():
    with pytest.raises(ConfigError):
        VlmConfig(base_url="http://v", model="m", max_retries=-1)
    with pytest.raises(ConfigError):
        VlmConfig(base_url="http://v", model="m", timeout=0)
    with pytest.raises(ConfigError):
        VlmConfig(base_url="http://v", model="m", max_inflight=0)


def _ok_reply(text):
    return 200, {"choices": [{"message": {"content": text}}]}


def test_score_vlm_request_shape(monkeypatch):
    monkeypatch.setenv("VLM_API_KEY", "sekrit")
    png = b"\x89PNG\r\n\x1a\n" + b"payload"
    seen = {}

    def transport(url, headers, body, timeout):
        seen.update(url=url, headers=headers, body=body, timeout=timeout)
        return _ok_reply("A tight blob. Score: 0.9")

    cfg = VlmConfig(base_url="http://vlm.test/v1/", model="vision-x", timeout=12.0)
    result = score_vlm(png, "form a cluster", cfg, transport=transport)

    assert result.score == 0.9
    assert result.source == "vlm"
    assert result.description == "A tight blob. Score: 0.9"
    assert seen["url"] == "http://vlm.test/v1/chat/completions"
    assert seen["headers"]["Authorization"] == "Bearer sekrit"
    assert seen["timeout"] == 12.0
    assert seen["body"]["model"] == "vision-x"
    assert seen["body"]["temperature"] == 0.0
    content = seen["body"]["messages"][0]["content"]
    assert seen["body"]["messages"][0]["role"] == "user"
    assert content[0] == {"type": "text", "text": build_query("form a cluster")}
    prefix = "data:image/png;base64,"
    encoded = content[1]["image_url"]["url"]
    assert encoded.startswith(prefix)
    assert base64.b64decode(encoded[len(prefix):]) == png


def test_score_vlm_omits_auth_without_key(monkeypatch):
    monkeypatch.delenv("VLM_API_KEY", raising=False)
    seen = {}

    def transport(url, headers, body, timeout):
        seen.update(headers=headers)
        return _ok_reply("score 0.5")

    cfg = VlmConfig(base_url="http://v", model="m")
    score_vlm(b"\x89PNG\r\n\x1a\n", "p", cfg, transport=transport)
    assert "Authorization" not in seen["headers"]


def test_score_vlm_rejects_non_png():
    cfg = VlmConfig(base_url="http://v", model="m")
    with pytest.raises(ValueError):
        score_vlm(b"GIF89a", "p", cfg, transport=lambda *a: _ok_reply("0.5"))


def test_score_vlm_retries_transport_failures():
    sleeps = []
    attempts = []

    def transport(url, headers, body, timeout):
        attempts.append(1)
        if len(attempts) < 3:
            raise TransportError("conn reset")
        return _ok_reply("score 0.4")

    cfg = VlmConfig(base_url="http://v", model="m", max_retries=3)
    result = score_vlm(b"\x89PNG\r\n\x1a\n", "p", cfg, transport=transport, sleep=sleeps.append)
    assert result.score == 0.4
    assert sleeps == [1.0, 2.0]


def test_score_vlm_unavailable_after_http_errors():
    sleeps = []
    cfg = VlmConfig(base_url="http://v", model="m", max_retries=3)
    with pytest.raises(EvaluatorUnavailable):
        score_vlm(
            b"\x89PNG\r\n\x1a\n", "p", cfg,
            transport=lambda *a: (503, {}),
            sleep=sleeps.append,
        )
    assert sleeps == [1.0, 2.0, 4.0]


def test_score_vlm_unparseable_when_parse_fails_last():
    cfg = VlmConfig(base_url="http://v", model="m", max_retries=1)
    with pytest.raises(UnparseableReply):
        score_vlm(
            b"\x89PNG\r\n\x1a\n", "p", cfg,
            transport=lambda *a: _ok_reply("words only"),
            sleep=lambda s: None,
        )


def test_score_vlm_malformed_payload_is_transport_class():
    cfg = VlmConfig(base_url="http://v", model="m", max_retries=0)
    with pytest.raises(EvaluatorUnavailable):
        score_vlm(b"\x89PNG\r\n\x1a\n", "p", cfg, transport=lambda *a: (200, {"weird": 1}))


def test_surrogate_cluster_scoring():
    start = _world([[0.0, 0.0], [10.0, 0.0]])
    final = _world([[0.0, 0.0], [5.0, 0.0]])
    assert score_surrogate(start, final, "cluster").score == pytest.approx(0.5)
    # dispersal clamps at zero
    worse = _world([[0.0, 0.0], [40.0, 0.0]])
    assert score_surrogate(start, worse, "cluster").score == 0.0
    result = score_surrogate(start, start, "cluster")
    assert result.score == 0.0 and result.source == "surrogate" and result.description is None


def test_surrogate_cluster_degenerate_start():
    start = _world([[5.0, 5.0], [5.0, 5.0]])
    assert score_surrogate(start, start, "cluster").score == 1.0
    spread = _world([[0.0, 0.0], [9.0, 0.0]])
    assert score_surrogate(start, spread, "cluster").score == 0.0


def test_surrogate_scatter_scoring():
    # arena 100 -> dispersal ceiling 52.14
    start = _world([[0.0, 0.0], [10.0, 0.0]])
    final = _world([[0.0, 0.0], [31.07, 0.0]])
    assert score_surrogate(start, final, "scatter").score == pytest.approx(0.5)
    assert score_surrogate(start, start, "scatter").score == 0.0
    huge = _world([[0.0, 0.0], [99.0, 0.0]])
    assert score_surrogate(start, huge, "scatter").score == 1.0  # clamped


def test_surrogate_scatter_saturated_start():
    start = _world([[0.0, 0.0], [60.0, 0.0]])  # already above the ceiling
    final = _world([[0.0, 0.0], [80.0, 0.0]])
    assert score_surrogate(start, final, "scatter").score == 0.0


def test_surrogate_validation():
    two = _world([[0.0, 0.0], [10.0, 0.0]])
    one = _world([[0.0, 0.0]])
    with pytest.raises(ConfigError):
        score_surrogate(two, two, "disperse")
    with pytest.raises(DimensionMismatch):
        score_surrogate(two, _world([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]), "cluster")
    with pytest.raises(DegenerateWorld):
        score_surrogate(one, one, "cluster")


def test_surrogate_scorer_uses_context():
    ctx = _ctx()
    result = SurrogateScorer("cluster")(ctx)
    assert result.score == score_surrogate(ctx.world_start, ctx.world_final, "cluster").score
    with pytest.raises(ConfigError):
        SurrogateScorer("explode")


def test_vlm_scorer_encodes_context_raster():
    bodies = []

    def transport(url, headers, body, timeout):
        bodies.append(body)
        return _ok_reply("score 0.6")

    cfg = VlmConfig(base_url="http://v", model="m")
    scorer = VlmScorer(cfg, transport=transport)
    ctx = _ctx("spread out")
    assert scorer(ctx).score == 0.6
    text = bodies[0]["messages"][0]["content"][0]["text"]
    assert text == build_query("spread out")


def test_cached_scorer_memoizes_and_persists(tmp_path):
    calls = []

    def counting(ctx):
        calls.append(ctx.prompt)
        return ScoreResult(score=0.5, description="desc", source="vlm")

    path = tmp_path / "scores.ndjson"
    scorer = CachedScorer(counting, path)
    ctx = _ctx()

    first = scorer(ctx)
    second = scorer(ctx)
    assert first.source == "vlm" and second.source == "cache"
    assert second.score == 0.5 and second.description == "desc"
    assert calls == ["gather"]

    # a different prompt is a different key
    scorer(_ctx("different"))
    assert len(calls) == 2

    # a fresh instance reloads from disk and never calls through
    reloaded = cached(counting, path)
    assert reloaded(ctx).source == "cache"
    assert len(calls) == 2


def test_cached_scorer_rejects_corrupt_cache(tmp_path):
    path = tmp_path / "scores.ndjson"
    path.write_text('{"digest": 1, "prompt": "a", "score": 0.5, "description": null}\n{broken\n')
    with pytest.raises(ParseError, match="line 2"):
        CachedScorer(lambda ctx: None, path)


def test_cached_scorer_single_flight():
    release = threading.Event()
    calls = []

    def slow(ctx):
        calls.append(1)
        release.wait(2.0)
        return ScoreResult(score=0.25, description=None, source="surrogate")

    scorer = CachedScorer(slow)
    ctx = _ctx()
    results = []
    threads = [threading.Thread(target=lambda: results.append(scorer(ctx))) for _ in range(4)]
    for t in threads:
        t.start()
    release.set()
    for t in threads:
        t.join()
    assert len(calls) == 1
    assert sorted(r.source for r in results) == ["cache", "cache", "cache", "surrogate"]


def test_cached_scorer_retries_after_failure():
    boom = [True]

    def flaky(ctx):
        if boom[0]:
            boom[0] = False
            raise NoScoreFound("first try fails")
        return ScoreResult(score=0.75, description=None, source="surrogate")

    scorer = CachedScorer(flaky)
    ctx = _ctx()
    with pytest.raises(NoScoreFound):
        scorer(ctx)
    assert scorer(ctx).score == 0.75
