import json

import numpy as np
import pytest

from motionchat.errors import ClientError, EmptyIndex, ParseError
from motionchat.fixtures import entry_transforms, fixture_motion_entries
from motionchat.motion import SkeletonSpec
from motionchat.synthesis import (EmbeddingIndex, HashedTfidfEmbedder,
                                  MockTextGen, Topic, build_index,
                                  consolidate_captions, decompose_pair_caption,
                                  generate_dialogue, ingest_topics,
                                  retrieve_motion)
from motionchat.template import CharacterProfile

from .conftest import small_skeleton

TEXTGEN = MockTextGen(seed=0)


@pytest.fixture(scope="module")
def db():
    entries = fixture_motion_entries(40, small_skeleton(), frames=16)
    for e in entries:
        e.consolidated_caption = consolidate_captions(e, TEXTGEN)
    return entries


@pytest.fixture(scope="module")
def embedder(db):
    return HashedTfidfEmbedder().fit([e.consolidated_caption for e in db])


@pytest.fixture(scope="module")
def index(db, embedder):
    return build_index(db, embedder)


def test_ingest_topics_dedup(tmp_path):
    a = tmp_path / "a.txt"
    b = tmp_path / "b.txt"
    a.write_text("daily\tmorning walks\nqa\twhy we wave\n")
    b.write_text("daily\tMorning  Walks\nnews\ta new park opened\n")
    topics = ingest_topics([a, b])
    assert len(topics) == 3
    assert topics[0].source == "daily"


def test_ingest_topics_empty_file(tmp_path):
    f = tmp_path / "empty.txt"
    f.write_text("")
    assert ingest_topics([f]) == []


def test_ingest_topics_malformed(tmp_path):
    f = tmp_path / "bad.txt"
    f.write_text("daily\tok\nnonsense line without tab\n")
    with pytest.raises(ParseError) as exc:
        ingest_topics([f])
    assert exc.value.line == 2


def test_consolidate_single_caption():
    from motionchat.motion import MotionTextEntry

    entry = MotionTextEntry(motion_id="x", clip=None, captions=["a person waves"])
    assert consolidate_captions(entry, TEXTGEN) == "a person waves"


def test_consolidate_join_deterministic():
    from motionchat.motion import MotionTextEntry

    entry = MotionTextEntry(motion_id="x", clip=None,
                            captions=["one", "two", "three"])
    out1 = consolidate_captions(entry, TEXTGEN)
    out2 = consolidate_captions(entry, TEXTGEN)
    assert out1 == out2 == "one; two; three"


def test_consolidate_client_error_propagates():
    class FailingClient:
        def complete(self, prompt):
            raise ClientError("gave up after 3 attempts")

    from motionchat.motion import MotionTextEntry

    entry = MotionTextEntry(motion_id="x", clip=None, captions=["a"])
    with pytest.raises(ClientError):
        consolidate_captions(entry, FailingClient())


def test_decompose_pair_caption():
    a, b, flagged = decompose_pair_caption("A bows; B waves", TEXTGEN)
    assert (a, b) == ("bows", "waves")
    assert not flagged


def test_decompose_without_delimiter_flagged():
    a, b, flagged = decompose_pair_caption("two people hug", TEXTGEN)
    assert a == b == "two people hug"
    assert flagged


def test_retrieval_self_consistency(db, embedder, index):
    for e in db:
        top = retrieve_motion(e.consolidated_caption, index, k=1,
                              embedder=embedder)
        assert top[0][0] == e.motion_id


def test_retrieval_matches_brute_force(db, embedder, index):
    rng = np.random.default_rng(0)
    queries = ["a person waves quickly", "someone bows", "jumping around",
               "a stretch overhead", "spinning in place"]
    for q in queries:
        got = retrieve_motion(q, index, k=3, embedder=embedder)
        qv = embedder.embed(q)
        scored = sorted(((mid, float(qv @ v)) for mid, v in index.entries.items()),
                        key=lambda p: (-p[1], p[0]))
        assert got == scored[:3]


def test_retrieval_empty_index(embedder):
    with pytest.raises(EmptyIndex):
        retrieve_motion("anything", EmbeddingIndex(dimension=512), 1, embedder)


def topic():
    return Topic(id="t0", text="morning greetings", source="daily")


def profile():
    return CharacterProfile(name="Nova", description="an android guide",
                            voice_id="voice_nova", motion_tags=["wave"])


def test_generate_dialogue_deterministic(db, embedder, index):
    kw = dict(profile=profile(), topic=topic(), task_type="common",
              strategy="auto", textgen=TEXTGEN, db_entries=db, index=index,
              embedder=embedder, rounds_target=3, seed=11)
    a = generate_dialogue(**kw)
    b = generate_dialogue(**kw)
    assert a == b


def test_generate_dialogue_alternates_roles(db, embedder, index):
    item = generate_dialogue(profile(), topic(), "common", "m1", TEXTGEN, db,
                             index, embedder, rounds_target=4, seed=3)
    assert len(item.rounds) == 8
    assert [r.role for r in item.rounds] == ["user", "character"] * 4
    assert all(r.motion_id for r in item.rounds)


def test_generate_dialogue_imitation_rule(db, embedder, index):
    item = generate_dialogue(profile(), topic(), "imitation", "m1", TEXTGEN, db,
                             index, embedder, rounds_target=3, seed=5)
    for u, c in zip(item.rounds[0::2], item.rounds[1::2]):
        assert c.motion_id == u.motion_id


def test_generate_dialogue_refinement_appends_motion_clause(db, embedder, index):
    item = generate_dialogue(profile(), topic(), "common", "m1", TEXTGEN, db,
                             index, embedder, rounds_target=2, seed=7)
    assert any(", as i " in r.speech_text for r in item.rounds)


def test_strategies_both_used_across_seeds(db, embedder, index):
    methods = set()
    for seed in range(8):
        item = generate_dialogue(profile(), topic(), "common", "auto", TEXTGEN,
                                 db, index, embedder, rounds_target=1, seed=seed)
        methods.add(item.strategy)
    assert methods == {"m1", "m2"}


def test_http_client_retries_then_fails():
    import httpx

    from motionchat.synthesis import HttpTextGen, RetryPolicy

    calls = {"n": 0}

    def handler(request):
        calls["n"] += 1
        return httpx.Response(500, text="boom")

    client = httpx.Client(transport=httpx.MockTransport(handler))
    gen = HttpTextGen("http://testserver/gen",
                      policy=RetryPolicy(attempts=3, base_delay=0.0),
                      client=client)
    with pytest.raises(ClientError):
        gen.complete("hi")
    assert calls["n"] == 3


def test_http_client_success():
    import httpx

    from motionchat.synthesis import HttpTextGen

    def handler(request):
        assert json.loads(request.content)["prompt"] == "hi"
        return httpx.Response(200, json={"text": "hello"})

    client = httpx.Client(transport=httpx.MockTransport(handler))
    gen = HttpTextGen("http://testserver/gen", client=client)
    assert gen.complete("hi") == "hello"
