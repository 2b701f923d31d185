// End-to-end against the recorded mock server: the full client path
// (fetch + SSE + store + renderer) driven over real sockets with the
// recording's original timing.

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import {
  parseConversations,
  renderConversationRecord,
  sha256Hex,
} from "../src/interchange.js";
import { PoseSequencer } from "../src/recorder.js";
import { ClipPlayer, RecordingContext, type Viewport } from "../src/skeleton.js";
import { SessionStore } from "../src/state.js";
import type { FinalFrame, TurnRequest } from "../src/types.js";
import { loadRecording, ReplayServer } from "./replay-server.js";

const view: Viewport = { width: 480, height: 420, scale: 140 };
const recording = loadRecording();
let server: ReplayServer;

beforeAll(async () => {
  server = new ReplayServer(recording);
  await server.start();
});

afterAll(async () => {
  await server.stop();
});

describe("web client end-to-end (recorded server)", () => {
  it("runs the full 10-turn scripted session", async () => {
    const api = new ApiClient(server.baseUrl);
    const store = new SessionStore();
    const profiles = await api.profiles();
    const sessionId = await api.createSession(
      profiles[0].profile_id,
      "end_to_end",
    );
    await store.dispatch({
      type: "session_created",
      sessionId,
      character: profiles[0],
    });
    const skeleton = await api.skeleton();

    let turnsWithMotion = 0;
    for (const turn of recording.turns) {
      await store.dispatch({ type: "turn_sent", atMs: performance.now() });
      let final: FinalFrame | null = null;
      for await (const ev of api.postTurn(
        sessionId,
        turn.request as TurnRequest,
      )) {
        await store.dispatch({
          type: "stream",
          event: ev,
          atMs: performance.now(),
        });
        if (ev.kind === "final") final = ev.data;
      }
      expect(final).not.toBeNull();

      // latency panel vs server counters: same-host transport, +-50 ms
      const l = store.state.latency;
      expect(l.clientFullMs).not.toBeNull();
      expect(Math.abs(l.clientFullMs! - l.serverFullMs!)).toBeLessThan(50);
      expect(Math.abs(l.clientFirstMs! - l.serverFirstMs!)).toBeLessThan(50);

      // rendering: exactly the served frame count (response or idle clip)
      let joints = final!.joints;
      if (!joints && final!.idle && final!.idle_motion_id) {
        const detail = await api.motionDetail(final!.idle_motion_id);
        joints = detail.joints;
      }
      expect(joints).not.toBeNull();
      const ctx = new RecordingContext();
      const drawn = new ClipPlayer(joints!, final!.fps).renderAll(
        ctx,
        skeleton.parents,
        view,
      );
      expect(drawn).toBe(joints!.length);
      if (final!.joints) turnsWithMotion += 1;

      // single source of truth: local checksum equals server checksum
      const history = await api.history(sessionId);
      await store.dispatch({ type: "history", history });
      await store.flush();
      expect(store.state.checksumOk).toBe(true);
      expect(store.state.localChecksum).toBe(history.checksum);
      expect(store.state.conversation?.turns.length).toBe(history.turns);
    }
    expect(turnsWithMotion).toBeGreaterThan(0);

    // exported history validates against the interchange schema
    const exported = renderConversationRecord(store.state.conversation!);
    const parsed = parseConversations(exported);
    expect(parsed).toHaveLength(1);
    expect(await sha256Hex(renderConversationRecord(parsed[0]))).toBe(
      store.state.serverChecksum,
    );
    await api.closeSession(sessionId);
  }, 30_000);

  it("searches the motion library for the composer", async () => {
    const api = new ApiClient(server.baseUrl);
    const hits = await api.searchMotions(recording.search.q, 4);
    expect(hits.length).toBeGreaterThan(0);
    expect(hits[0].motion_id).toBeTypeOf("string");
  });

  it("pose sequencer builds single and multi keyframe requests", () => {
    const seq = new PoseSequencer(16);
    expect(seq.empty).toBe(true);
    seq.add("wave_000");
    expect(seq.toRequestMotion()).toEqual({ motion_id: "wave_000" });
    seq.add("bow_000", 32);
    expect(seq.toRequestMotion()).toEqual({
      keyframes: [
        { motion_id: "wave_000", frames: 16 },
        { motion_id: "bow_000", frames: 32 },
      ],
    });
    seq.clear();
    expect(() => seq.toRequestMotion()).toThrow();
  });
});
