from .plan import (Stage1Plan, Stage2Plan, Stage3Plan, StagePlan, load_plan,
                   save_plan)
from .stages import (audit_mask, evaluate_accuracy, evaluate_loss,
                     render_dialogues, run_stage1, run_stage2, run_stage3,
                     split_dataset)
from .tasks import (FamilyMixer, TaskItem, build_motion_task_items,
                    build_speech_task_items, caption_of, encode_entries)

__all__ = [
    "Stage1Plan", "Stage2Plan", "Stage3Plan", "StagePlan", "load_plan", "save_plan",
    "audit_mask", "evaluate_accuracy", "evaluate_loss", "render_dialogues",
    "run_stage1", "run_stage2", "run_stage3", "split_dataset",
    "FamilyMixer", "TaskItem", "build_motion_task_items",
    "build_speech_task_items", "caption_of", "encode_entries",
]
