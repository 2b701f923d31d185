from .captions import consolidate_captions, decompose_pair_caption
from .clients import (HttpEmbed, HttpTextGen, MockEmbed, MockTextGen,
                      RetryPolicy)
from .dialogue import DialogueItem, ScriptRound, generate_dialogue
from .embedding import (EmbeddingIndex, HashedTfidfEmbedder, build_index,
                        retrieve_motion)
from .finalize import (USER_VOICE, finalize_dataset, item_to_conversation,
                       verify_manifest)
from .topics import SOURCE_TAGS, Topic, ingest_topics

__all__ = [
    "consolidate_captions", "decompose_pair_caption",
    "HttpEmbed", "HttpTextGen", "MockEmbed", "MockTextGen", "RetryPolicy",
    "DialogueItem", "ScriptRound", "generate_dialogue",
    "EmbeddingIndex", "HashedTfidfEmbedder", "build_index", "retrieve_motion",
    "USER_VOICE", "finalize_dataset", "item_to_conversation", "verify_manifest",
    "SOURCE_TAGS", "Topic", "ingest_topics",
]
