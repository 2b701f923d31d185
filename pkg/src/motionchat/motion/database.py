"""Motion database file I/O.

Versioned line-oriented text container (`.mdb`) plus a binary sidecar holding
rotation/translation arrays as little-endian float32, row-major. The sidecar
starts with a one-line header stating the per-frame dims.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from ..errors import ParseError
from .clip import MotionClip, MotionTextEntry

MAGIC = "MOTIONDB v1"
SIDECAR_MAGIC = b"MCMOTBIN v1"


def _entry_floats(frames: int, body: int, hand: int) -> int:
    return frames * (body * 6 + hand * 6 + 3)


def save_motion_db(entries: list[MotionTextEntry], path):
    """Write entries to `path` (text) and `path`.bin (sidecar). Atomic."""
    path = Path(path)
    if not entries:
        raise ValueError("refusing to write an empty motion database")
    body = entries[0].clip.body_joints
    hand = entries[0].clip.hand_joints
    ids = set()
    for e in entries:
        if e.clip.body_joints != body or e.clip.hand_joints != hand:
            raise ValueError(f"entry {e.motion_id}: joint counts differ from the first entry")
        if e.motion_id in ids:
            raise ValueError(f"duplicate motion_id {e.motion_id!r}")
        ids.add(e.motion_id)
    for e in entries:
        if e.partner_id is not None and e.partner_id not in ids:
            raise ValueError(f"entry {e.motion_id}: partner_id {e.partner_id!r} not in database")

    sidecar = path.with_suffix(path.suffix + ".bin")
    header = SIDECAR_MAGIC + f" body={body} hand={hand}\n".encode()
    lines = [MAGIC, f"layout body={body} hand={hand} root=3", f"sidecar {sidecar.name}"]
    offset = len(header)
    blobs = []
    for e in entries:
        c = e.clip
        flat = np.concatenate([
            c.body_rot.astype("<f4").reshape(-1),
            c.hand_rot.astype("<f4").reshape(-1),
            c.root_transl.astype("<f4").reshape(-1),
        ])
        blob = flat.tobytes()
        lines.append(f"entry {e.motion_id}")
        lines.append(f"fps {c.fps:.8g}")
        lines.append(f"frames {c.frames}")
        lines.append(f"offset {offset}")
        for cap in e.captions:
            lines.append(f"caption {json.dumps(cap)}")
        if e.consolidated_caption is not None:
            lines.append(f"consolidated {json.dumps(e.consolidated_caption)}")
        if e.partner_id is not None:
            lines.append(f"partner {e.partner_id}")
        lines.append("end")
        blobs.append(blob)
        offset += len(blob)

    tmp_bin = sidecar.with_suffix(".bin.tmp")
    with open(tmp_bin, "wb") as f:
        f.write(header)
        for blob in blobs:
            f.write(blob)
    os.replace(tmp_bin, sidecar)
    tmp_txt = path.with_suffix(path.suffix + ".tmp")
    with open(tmp_txt, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    os.replace(tmp_txt, path)


def load_motion_db(path) -> list[MotionTextEntry]:
    """Load entries; raises ParseError with line diagnostics on malformed input."""
    path = Path(path)
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines or lines[0] != MAGIC:
        raise ParseError(f"{path}:1: bad magic header (expected {MAGIC!r})", line=1)

    def fail(lineno, msg):
        raise ParseError(f"{path}:{lineno}: {msg}", line=lineno)

    body = hand = None
    sidecar_name = None
    raw_entries = []
    cur = None
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        key, _, rest = line.partition(" ")
        if key == "layout":
            fields = dict(kv.split("=") for kv in rest.split())
            body, hand = int(fields["body"]), int(fields["hand"])
        elif key == "sidecar":
            sidecar_name = rest.strip()
        elif key == "entry":
            if cur is not None:
                fail(lineno, "entry started before previous `end`")
            cur = {"motion_id": rest.strip(), "captions": [], "consolidated": None,
                   "partner": None, "line": lineno}
        elif key == "end":
            if cur is None:
                fail(lineno, "`end` without an open entry")
            for req in ("fps", "frames", "offset"):
                if req not in cur:
                    fail(lineno, f"entry {cur['motion_id']!r} missing `{req}`")
            raw_entries.append(cur)
            cur = None
        elif cur is not None:
            try:
                if key == "fps":
                    cur["fps"] = float(rest)
                elif key == "frames":
                    cur["frames"] = int(rest)
                elif key == "offset":
                    cur["offset"] = int(rest)
                elif key == "caption":
                    cur["captions"].append(json.loads(rest))
                elif key == "consolidated":
                    cur["consolidated"] = json.loads(rest)
                elif key == "partner":
                    cur["partner"] = rest.strip()
                else:
                    fail(lineno, f"unknown field {key!r}")
            except (ValueError, json.JSONDecodeError) as e:
                fail(lineno, f"bad {key} value: {e}")
        else:
            fail(lineno, f"unexpected line outside entry: {line!r}")
    if cur is not None:
        fail(len(lines), f"unterminated entry {cur['motion_id']!r}")
    if body is None or sidecar_name is None:
        raise ParseError(f"{path}: missing layout/sidecar header lines", line=1)

    sidecar = path.parent / sidecar_name
    with open(sidecar, "rb") as f:
        blob = f.read()
    if not blob.startswith(SIDECAR_MAGIC):
        raise ParseError(f"{sidecar}: bad sidecar magic", position=0)
    ids = {r["motion_id"] for r in raw_entries}
    if len(ids) != len(raw_entries):
        raise ParseError(f"{path}: duplicate motion ids", line=1)
    entries = []
    for r in raw_entries:
        if r["partner"] is not None and r["partner"] not in ids:
            raise ParseError(
                f"{path}:{r['line']}: entry {r['motion_id']!r} references missing "
                f"partner_id {r['partner']!r}", line=r["line"])
        n = _entry_floats(r["frames"], body, hand)
        start, stop = r["offset"], r["offset"] + 4 * n
        if stop > len(blob):
            raise ParseError(
                f"{sidecar}: entry {r['motion_id']!r} overruns sidecar "
                f"(offset {start})", position=start)
        flat = np.frombuffer(blob[start:stop], dtype="<f4")
        fb = r["frames"] * body * 6
        fh = r["frames"] * hand * 6
        clip = MotionClip(
            fps=r["fps"],
            body_rot=flat[:fb].reshape(r["frames"], body, 6),
            hand_rot=flat[fb:fb + fh].reshape(r["frames"], hand, 6),
            root_transl=flat[fb + fh:].reshape(r["frames"], 3),
        )
        entries.append(MotionTextEntry(
            motion_id=r["motion_id"], clip=clip, captions=r["captions"],
            consolidated_caption=r["consolidated"], partner_id=r["partner"]))
    return entries
