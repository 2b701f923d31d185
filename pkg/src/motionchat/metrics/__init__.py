from .distribution import diversity, fid
from .features import FeatureSet, motion_feature_set
from .judge import MockJudge, TextGenJudge, judge_metrics
from .latency import LatencyRecord, iter_sse, latency_harness
from .pose_error import angle_error, mpjpe, pa_mpjpe
from .report import write_report
from .voice import vc_similarity

__all__ = [
    "diversity", "fid", "FeatureSet", "motion_feature_set",
    "MockJudge", "TextGenJudge", "judge_metrics",
    "LatencyRecord", "iter_sse", "latency_harness",
    "angle_error", "mpjpe", "pa_mpjpe", "write_report", "vc_similarity",
]
