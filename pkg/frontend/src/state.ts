// Session view-model: every state transition derives from a server response.
// The client never invents conversation state; after each completed turn the
// turn list is re-parsed from the server's interchange payload and the
// checksum is recomputed locally and compared.

import {
  conversationChecksum,
  parseConversations,
  type ConversationRecord,
} from "./interchange.js";
import type {
  FinalFrame,
  HistoryResponse,
  Method,
  ProfileInfo,
  StreamEvent,
} from "./types.js";

export interface LatencyPanel {
  clientFirstMs: number | null;
  clientFullMs: number | null;
  serverFirstMs: number | null;
  serverFullMs: number | null;
}

export interface UiSessionState {
  sessionId: string | null;
  character: ProfileInfo | null;
  method: Method;
  conversation: ConversationRecord | null;
  serverChecksum: string | null;
  localChecksum: string | null;
  checksumOk: boolean | null;
  streaming: boolean;
  liveMotionTokens: number[];
  liveSpeechTokens: number[];
  lastFinal: FinalFrame | null;
  latency: LatencyPanel;
  degradedTurns: number;
  error: string | null;
}

export function initialState(method: Method = "end_to_end"): UiSessionState {
  return {
    sessionId: null,
    character: null,
    method,
    conversation: null,
    serverChecksum: null,
    localChecksum: null,
    checksumOk: null,
    streaming: false,
    liveMotionTokens: [],
    liveSpeechTokens: [],
    lastFinal: null,
    latency: {
      clientFirstMs: null,
      clientFullMs: null,
      serverFirstMs: null,
      serverFullMs: null,
    },
    degradedTurns: 0,
    error: null,
  };
}

export type UiEvent =
  | { type: "session_created"; sessionId: string; character: ProfileInfo }
  | { type: "turn_sent"; atMs: number }
  | { type: "stream"; event: StreamEvent; atMs: number }
  | { type: "history"; history: HistoryResponse }
  | { type: "reset"; method: Method }
  | { type: "fault"; message: string };

interface Scratch {
  sentAtMs: number | null;
  firstChunkAtMs: number | null;
}

export class SessionStore {
  state: UiSessionState;
  private scratch: Scratch = { sentAtMs: null, firstChunkAtMs: null };
  private queue: Promise<void> = Promise.resolve();
  private listeners: ((s: UiSessionState) => void)[] = [];

  constructor(method: Method = "end_to_end") {
    this.state = initialState(method);
  }

  subscribe(fn: (s: UiSessionState) => void): void {
    this.listeners.push(fn);
  }

  // events are applied strictly in order through one queue
  dispatch(event: UiEvent): Promise<void> {
    this.queue = this.queue.then(async () => {
      this.state = await reduce(this.state, this.scratch, event);
      for (const fn of this.listeners) fn(this.state);
    });
    return this.queue;
  }

  flush(): Promise<void> {
    return this.queue;
  }
}

async function reduce(
  state: UiSessionState,
  scratch: Scratch,
  event: UiEvent,
): Promise<UiSessionState> {
  switch (event.type) {
    case "reset":
      return initialState(event.method);
    case "session_created":
      return {
        ...initialState(state.method),
        sessionId: event.sessionId,
        character: event.character,
      };
    case "turn_sent":
      scratch.sentAtMs = event.atMs;
      scratch.firstChunkAtMs = null;
      return {
        ...state,
        streaming: true,
        liveMotionTokens: [],
        liveSpeechTokens: [],
        error: null,
      };
    case "fault":
      return { ...state, streaming: false, error: event.message };
    case "stream":
      return applyStream(state, scratch, event.event, event.atMs);
    case "history": {
      const convs = parseConversations(event.history.interchange);
      const conversation = convs[convs.length - 1] ?? null;
      const localChecksum = conversation
        ? await conversationChecksum(conversation)
        : null;
      return {
        ...state,
        conversation,
        serverChecksum: event.history.checksum,
        localChecksum,
        checksumOk: localChecksum === event.history.checksum,
      };
    }
  }
}

function applyStream(
  state: UiSessionState,
  scratch: Scratch,
  ev: StreamEvent,
  atMs: number,
): UiSessionState {
  if (ev.kind === "motion_chunk" || ev.kind === "speech_chunk") {
    if (scratch.firstChunkAtMs === null) scratch.firstChunkAtMs = atMs;
    const key = ev.kind === "motion_chunk" ? "liveMotionTokens" : "liveSpeechTokens";
    return { ...state, [key]: [...state[key], ...ev.data.tokens] };
  }
  if (ev.kind === "error") {
    return {
      ...state,
      streaming: false,
      error: `${ev.data.error}: ${ev.data.message}`,
    };
  }
  // final
  const sent = scratch.sentAtMs ?? atMs;
  const first = scratch.firstChunkAtMs ?? atMs;
  return {
    ...state,
    streaming: false,
    lastFinal: ev.data,
    degradedTurns: state.degradedTurns + (ev.data.degraded ? 1 : 0),
    latency: {
      clientFirstMs: first - sent,
      clientFullMs: atMs - sent,
      serverFirstMs: ev.data.timings.first_token_ms,
      serverFullMs: ev.data.timings.full_ms,
    },
  };
}
