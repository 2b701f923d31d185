// Browser entry point: character picker, turn composer, streamed response
// rendering, latency panel, and history browser with export.

import { ApiClient, wavUrl } from "./api.js";
import { SessionStore } from "./state.js";
import { ClipPlayer, drawFrame, type Viewport } from "./skeleton.js";
import { PoseSequencer } from "./recorder.js";
import type {
  FinalFrame,
  Method,
  ProfileInfo,
  SkeletonInfo,
  TurnRequest,
} from "./types.js";

const $ = <T extends HTMLElement>(id: string): T =>
  document.getElementById(id) as T;

interface ReplayEntry {
  label: string;
  joints: number[][][] | null;
  fps: number;
  wav: string | null;
}

class App {
  api = new ApiClient(location.origin.replace(/\/$/, ""));
  store = new SessionStore();
  skeleton: SkeletonInfo | null = null;
  idleIds: string[] = [];
  idleAt = 0;
  sequencer = new PoseSequencer();
  pickedMotion: string | null = null;
  replays: ReplayEntry[] = [];
  player: ClipPlayer | null = null;
  timer: ReturnType<typeof setInterval> | null = null;

  view: Viewport = { width: 480, height: 420, scale: 140 };

  async start(): Promise<void> {
    this.skeleton = await this.api.skeleton();
    this.idleIds = (await this.api.idleMotions()).ids;
    const profiles = await this.api.profiles();
    const picker = $<HTMLSelectElement>("profile");
    for (const p of profiles) {
      const opt = document.createElement("option");
      opt.value = p.profile_id;
      opt.textContent = `${p.name} - ${p.description}`;
      picker.appendChild(opt);
    }
    $<HTMLButtonElement>("connect").onclick = () =>
      this.connect(profiles).catch((e) => this.fault(e));
    $<HTMLButtonElement>("send").onclick = () =>
      this.sendTurn().catch((e) => this.fault(e));
    $<HTMLButtonElement>("search").onclick = () =>
      this.search().catch((e) => this.fault(e));
    $<HTMLButtonElement>("export").onclick = () => this.exportHistory();
    this.store.subscribe(() => this.renderPanels());
    await this.playIdle();
  }

  fault(e: unknown): void {
    void this.store.dispatch({ type: "fault", message: String(e) });
  }

  async connect(profiles: ProfileInfo[]): Promise<void> {
    const profileId = $<HTMLSelectElement>("profile").value;
    const method = $<HTMLSelectElement>("method").value as Method;
    this.store = new SessionStore(method);
    this.store.subscribe(() => this.renderPanels());
    const sessionId = await this.api.createSession(profileId, method);
    const character = profiles.find((p) => p.profile_id === profileId)!;
    await this.store.dispatch({ type: "session_created", sessionId, character });
    this.replays = [];
    await this.playIdle();
  }

  composeRequest(): TurnRequest {
    const text = $<HTMLInputElement>("speech").value.trim();
    const request: TurnRequest = {};
    if (text) request.speech = { text };
    if (!this.sequencer.empty) {
      request.motion = this.sequencer.toRequestMotion();
    } else if (this.pickedMotion) {
      request.motion = { motion_id: this.pickedMotion };
    }
    if (!request.speech && !request.motion) {
      throw new Error("compose a message or pick a motion first");
    }
    return request;
  }

  async sendTurn(): Promise<void> {
    const sid = this.store.state.sessionId;
    if (!sid) throw new Error("connect first");
    const request = this.composeRequest();
    await this.store.dispatch({ type: "turn_sent", atMs: performance.now() });
    let final: FinalFrame | null = null;
    for await (const ev of this.api.postTurn(sid, request)) {
      await this.store.dispatch({
        type: "stream",
        event: ev,
        atMs: performance.now(),
      });
      if (ev.kind === "final") final = ev.data;
    }
    const history = await this.api.history(sid);
    await this.store.dispatch({ type: "history", history });
    this.sequencer.clear();
    this.pickedMotion = null;
    $<HTMLInputElement>("speech").value = "";
    if (final) await this.showFinal(final);
    this.renderHistory();
  }

  async showFinal(final: FinalFrame): Promise<void> {
    let joints = final.joints;
    let fps = final.fps;
    if (!joints && final.idle && final.idle_motion_id) {
      const detail = await this.api.motionDetail(final.idle_motion_id);
      joints = detail.joints;
      fps = detail.fps;
    }
    const wav = wavUrl(this.api.baseUrl, final);
    this.replays.push({
      label: `turn ${this.replays.length + 1}: ` +
        (final.turn.text ?? "(multimodal)"),
      joints,
      fps,
      wav,
    });
    if (joints) this.animate(joints, fps);
    if (wav) void new Audio(wav).play().catch(() => undefined);
  }

  animate(frames: number[][][], fps: number): void {
    if (this.timer) clearInterval(this.timer);
    const ctx = $<HTMLCanvasElement>("stage").getContext("2d")!;
    this.player = new ClipPlayer(frames, fps);
    this.timer = setInterval(() => {
      if (!this.player!.step(ctx, this.skeleton!.parents, this.view)) {
        clearInterval(this.timer!);
        void this.playIdle();
      }
    }, 1000 / fps);
  }

  async playIdle(): Promise<void> {
    if (!this.idleIds.length || !this.skeleton) return;
    const id = this.idleIds[this.idleAt % this.idleIds.length];
    this.idleAt += 1;
    const detail = await this.api.motionDetail(id);
    const ctx = $<HTMLCanvasElement>("stage").getContext("2d")!;
    if (this.timer) clearInterval(this.timer);
    let frame = 0;
    this.timer = setInterval(() => {
      drawFrame(ctx, detail.joints[frame % detail.frames], this.skeleton!.parents,
        this.view);
      frame += 1;
    }, 1000 / detail.fps);
  }

  async search(): Promise<void> {
    const q = $<HTMLInputElement>("query").value.trim();
    if (!q) return;
    const hits = await this.api.searchMotions(q, 6);
    const list = $<HTMLUListElement>("hits");
    list.innerHTML = "";
    for (const hit of hits) {
      const li = document.createElement("li");
      const pick = document.createElement("button");
      pick.textContent = "pick";
      pick.onclick = () => {
        this.pickedMotion = hit.motion_id;
        $<HTMLSpanElement>("picked").textContent = hit.motion_id;
      };
      const add = document.createElement("button");
      add.textContent = "+seq";
      add.onclick = () => {
        this.sequencer.add(hit.motion_id);
        $<HTMLSpanElement>("picked").textContent =
          `sequence of ${this.sequencer.keyframes.length}`;
      };
      li.append(pick, add, ` ${hit.motion_id} - ${hit.caption}`);
      list.appendChild(li);
    }
  }

  renderPanels(): void {
    const s = this.store.state;
    $<HTMLSpanElement>("status").textContent = s.error
      ? `error: ${s.error}`
      : s.streaming
        ? "streaming..."
        : s.sessionId
          ? `session ${s.sessionId}`
          : "disconnected";
    const l = s.latency;
    $<HTMLSpanElement>("latency").textContent =
      l.clientFullMs === null
        ? "-"
        : `first ${l.clientFirstMs?.toFixed(0)} ms / full ` +
          `${l.clientFullMs.toFixed(0)} ms (server ` +
          `${l.serverFirstMs?.toFixed(0)}/${l.serverFullMs?.toFixed(0)} ms)`;
    $<HTMLSpanElement>("checksum").textContent =
      s.checksumOk === null ? "-" : s.checksumOk ? "in sync" : "MISMATCH";
    $<HTMLSpanElement>("live").textContent =
      `${s.liveMotionTokens.length} motion / ${s.liveSpeechTokens.length} ` +
      `speech tokens`;
  }

  renderHistory(): void {
    const list = $<HTMLUListElement>("history");
    list.innerHTML = "";
    this.replays.forEach((entry) => {
      const li = document.createElement("li");
      const replay = document.createElement("button");
      replay.textContent = "replay";
      replay.onclick = () => {
        if (entry.joints) this.animate(entry.joints, entry.fps);
        if (entry.wav) void new Audio(entry.wav).play().catch(() => undefined);
      };
      li.append(replay, ` ${entry.label}`);
      list.appendChild(li);
    });
  }

  exportHistory(): void {
    const conv = this.store.state.conversation;
    if (!conv) return;
    import("./interchange.js").then(({ renderConversationRecord }) => {
      const blob = new Blob([renderConversationRecord(conv)],
        { type: "text/plain" });
      const a = document.createElement("a");
      a.href = URL.createObjectURL(blob);
      a.download = "conversation.txt";
      a.click();
    });
  }
}

new App().start().catch((e) => {
  document.body.textContent = `failed to start: ${e}`;
});
