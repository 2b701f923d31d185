from .codec import (MOTION_FAMILY, SPEECH_FAMILY, TASKS, motion_block,
                    parse_character_block, parse_interaction,
                    parse_pretrain_task, render_interaction,
                    render_pretrain_task, render_turn, render_with_spans,
                    speech_block, supervision_mask)
from .convo import TASK_TYPES, CharacterProfile, Conversation, Turn
from .interchange import (conversation_checksum, load_conversations,
                          parse_conversations, render_conversation_record,
                          save_conversations)
from .vocab import SPECIAL_NAMES, VocabLayout

__all__ = [
    "MOTION_FAMILY", "SPEECH_FAMILY", "TASKS", "motion_block",
    "parse_character_block", "parse_interaction", "parse_pretrain_task",
    "render_interaction", "render_pretrain_task", "render_turn",
    "render_with_spans", "speech_block", "supervision_mask",
    "TASK_TYPES", "CharacterProfile", "Conversation", "Turn",
    "conversation_checksum", "load_conversations", "parse_conversations",
    "render_conversation_record", "save_conversations",
    "SPECIAL_NAMES", "VocabLayout",
]
