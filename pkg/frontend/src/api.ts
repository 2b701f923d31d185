// Thin HTTP client for the interaction server.

import { streamSse } from "./sse.js";
import type {
  FinalFrame,
  HistoryResponse,
  Method,
  MotionDetail,
  ProfileInfo,
  SearchHit,
  SkeletonInfo,
  StreamEvent,
  TurnRequest,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, public body: string) {
    super(`HTTP ${status}: ${body}`);
  }
}

export class ApiClient {
  constructor(public baseUrl: string) {}

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(this.baseUrl + path, init);
    if (!resp.ok) throw new ApiError(resp.status, await resp.text());
    return (await resp.json()) as T;
  }

  health(): Promise<{ status: string; version: string }> {
    return this.json("/health");
  }

  profiles(): Promise<ProfileInfo[]> {
    return this.json("/profiles");
  }

  skeleton(): Promise<SkeletonInfo> {
    return this.json("/skeleton");
  }

  idleMotions(): Promise<{ ids: string[] }> {
    return this.json("/idle-motions");
  }

  searchMotions(q: string, k = 8): Promise<SearchHit[]> {
    const params = new URLSearchParams({ q, k: String(k) });
    return this.json(`/motions/search?${params}`);
  }

  motionDetail(motionId: string): Promise<MotionDetail> {
    return this.json(`/motions/${encodeURIComponent(motionId)}`);
  }

  async createSession(profileId: string, method: Method): Promise<string> {
    const out = await this.json<{ session_id: string }>("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ profile_id: profileId, method }),
    });
    return out.session_id;
  }

  async closeSession(sessionId: string): Promise<void> {
    await this.json(`/sessions/${sessionId}`, { method: "DELETE" });
  }

  history(sessionId: string): Promise<HistoryResponse> {
    return this.json(`/sessions/${sessionId}/history`);
  }

  async *postTurn(
    sessionId: string,
    request: TurnRequest,
  ): AsyncGenerator<StreamEvent> {
    const resp = await fetch(`${this.baseUrl}/sessions/${sessionId}/turn`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(request),
    });
    if (!resp.ok || !resp.body) {
      throw new ApiError(resp.status, await resp.text());
    }
    for await (const ev of streamSse(resp.body)) {
      const data = JSON.parse(ev.data || "{}");
      yield { kind: ev.event, data } as StreamEvent;
      if (ev.event === "final" || ev.event === "error") return;
    }
  }
}

export function wavUrl(baseUrl: string, final: FinalFrame): string | null {
  return final.wav ? baseUrl + final.wav : null;
}
