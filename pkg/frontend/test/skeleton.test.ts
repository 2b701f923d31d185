import { describe, expect, it } from "vitest";

import {
  ClipPlayer,
  drawFrame,
  project,
  RecordingContext,
  type Viewport,
} from "../src/skeleton.js";
import { loadRecording } from "./replay-server.js";

const view: Viewport = { width: 480, height: 420, scale: 140 };

describe("stick figure renderer", () => {
  it("projects meters to pixels around the canvas center", () => {
    const p = project([0, 0, 0], view);
    expect(p.x).toBe(240);
    const up = project([0, 1, 0], view);
    expect(up.y).toBeLessThan(p.y);
  });

  it("draws one bone per non-root joint plus one dot per joint", () => {
    const rec = loadRecording();
    const skeleton = rec.skeleton as { parents: number[] };
    const detail = rec.motions[rec.idle.ids[0]] as {
      joints: number[][][];
    };
    const ctx = new RecordingContext();
    drawFrame(ctx, detail.joints[0], skeleton.parents, view);
    const strokes = ctx.ops.filter((o) => o === "stroke").length;
    const fills = ctx.ops.filter((o) => o === "fill").length;
    const roots = skeleton.parents.filter((p) => p < 0).length;
    expect(strokes).toBe(skeleton.parents.length - roots);
    expect(fills).toBe(detail.joints[0].length);
  });

  it("is pure: replaying the same clip yields identical operations", () => {
    const rec = loadRecording();
    const skeleton = rec.skeleton as { parents: number[] };
    const detail = rec.motions[rec.idle.ids[0]] as {
      joints: number[][][];
      fps: number;
    };
    const a = new RecordingContext();
    const b = new RecordingContext();
    const drawnA = new ClipPlayer(detail.joints, detail.fps).renderAll(
      a,
      skeleton.parents,
      view,
    );
    const drawnB = new ClipPlayer(detail.joints, detail.fps).renderAll(
      b,
      skeleton.parents,
      view,
    );
    expect(drawnA).toBe(detail.joints.length);
    expect(a.ops).toEqual(b.ops);
    expect(drawnA).toBe(drawnB);
  });
});
