import json

import numpy as np
import pytest
from click.testing import CliRunner

from motionchat.cli import main
from motionchat.fixtures import (FIXTURE_PROFILES, entry_transforms,
                                 fixture_motion_entries)
from motionchat.motion import load_motion_db, load_skeleton

from .conftest import small_skeleton


def test_fixture_entries_structure():
    entries = fixture_motion_entries(40, small_skeleton(), frames=16)
    assert len(entries) >= 40
    ids = {e.motion_id for e in entries}
    assert len(ids) == len(entries)
    paired = [e for e in entries if e.partner_id]
    assert paired, "two-person families must produce partner links"
    for e in paired:
        assert e.partner_id in ids
    rels = entry_transforms(entries)
    assert set(rels) == ids
    for e in entries:
        assert len(e.captions) >= 2
        e.clip.validate()


def test_fixture_clips_deterministic():
    a = fixture_motion_entries(10, small_skeleton(), frames=8)
    b = fixture_motion_entries(10, small_skeleton(), frames=8)
    for x, y in zip(a, b):
        assert x.motion_id == y.motion_id
        assert np.array_equal(x.clip.body_rot, y.clip.body_rot)


def test_make_fixtures_tree(tmp_path):
    runner = CliRunner()
    result = runner.invoke(main, ["make-fixtures", "--out", str(tmp_path / "d"),
                                  "--clips", "20", "--frames", "16"])
    assert result.exit_code == 0, result.output
    entries = load_motion_db(tmp_path / "d" / "motion.mdb")
    assert len(entries) >= 20
    sk = load_skeleton(tmp_path / "d" / "skeleton.txt")
    assert sk.joint_count == 52 and sk.body_joints == 22
    profiles = json.loads((tmp_path / "d" / "profiles.json").read_text())
    assert {p["name"] for p in profiles} == {p["name"] for p in FIXTURE_PROFILES}
    assert (tmp_path / "d" / "sentences.txt").exists()
    assert (tmp_path / "d" / "s2s.txt").exists()
    assert list((tmp_path / "d").glob("topics_*.txt"))
    for p in FIXTURE_PROFILES:
        assert (tmp_path / "d" / "prompts" / f"{p['voice_id']}.wav").exists()


def test_cli_version():
    result = CliRunner().invoke(main, ["--version"])
    assert result.exit_code == 0
    assert "data-format" in result.output


def test_cli_dry_run_bad_path_exit_code():
    result = CliRunner().invoke(main, ["pretrain", "--data", "/nope",
                                       "--checkpoints", "/tmp/x", "--dry-run"])
    assert result.exit_code == 2
    assert "ConfigError" in result.output


def test_cli_self_test():
    result = CliRunner().invoke(main, ["evaluate", "--self-test"])
    assert result.exit_code == 0, result.output


def test_cli_make_fixtures_rejects_zero_clips(tmp_path):
    result = CliRunner().invoke(main, ["make-fixtures", "--out",
                                       str(tmp_path / "x"), "--clips", "0"])
    assert result.exit_code == 2
