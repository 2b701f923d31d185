"""Caption consolidation and two-person caption decomposition."""

from __future__ import annotations

from ..motion.clip import MotionTextEntry


def consolidate_captions(entry: MotionTextEntry, textgen) -> str:
    """One comprehensive caption from the entry's annotation list."""
    captions = entry.captions or [entry.motion_id]
    prompt = "CONSOLIDATE\n" + "\n".join(captions)
    out = textgen.complete(prompt).strip()
    return out or captions[0]


def decompose_pair_caption(two_person_caption: str, textgen
                           ) -> tuple[str, str, bool]:
    """Split a two-person action description into per-person captions.

    Returns (caption_a, caption_b, flagged); flagged marks outputs where the
    client could not find two parts and echoed the whole caption to both sides.
    """
    out = textgen.complete(f"DECOMPOSE\n{two_person_caption}")
    parts = [p.strip() for p in out.split("||")]
    flagged = len(parts) > 2 and parts[2] == "AMBIGUOUS"
    if len(parts) < 2 or not parts[0] or not parts[1]:
        return two_person_caption, two_person_caption, True
    return parts[0], parts[1], flagged
