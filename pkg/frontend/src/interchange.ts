// Conversation interchange codec: byte-compatible with the server's format,
// so client-side checksums can be compared against server history checksums.

import type { MotionTokensWire } from "./types.js";

export interface ProfileRecord {
  name: string;
  voice_id: string;
  description: string;
  motion_tags: string[];
}

export interface TurnRecord {
  role: "user" | "character";
  motion: MotionTokensWire;
  speech: number[];
  text: string | null;
}

export interface ConversationRecord {
  profile: ProfileRecord;
  topic: string;
  task_type: string;
  turns: TurnRecord[];
}

export const MAGIC = "CONVO v1";

function ints(values: number[]): string {
  return values.length ? values.join(",") : "-";
}

function parseInts(text: string): number[] {
  return text === "-" ? [] : text.split(",").map((v) => parseInt(v, 10));
}

export function renderConversationRecord(conv: ConversationRecord): string {
  const lines: string[] = [MAGIC];
  lines.push(
    "profile " +
      JSON.stringify([
        conv.profile.name,
        conv.profile.voice_id,
        conv.profile.description,
        conv.profile.motion_tags,
      ]),
  );
  lines.push("topic " + JSON.stringify(conv.topic));
  lines.push("task " + conv.task_type);
  for (const turn of conv.turns) {
    lines.push(`turn ${turn.role}`);
    const t = turn.motion.transform;
    lines.push(
      `motion body=${ints(turn.motion.body)} hand=${ints(turn.motion.hand)} ` +
        `transform=${t === null || t === undefined ? "-" : t}`,
    );
    lines.push("speech " + ints(turn.speech));
    if (turn.text !== null && turn.text !== undefined) {
      lines.push("text " + JSON.stringify(turn.text));
    }
    lines.push("endturn");
  }
  lines.push("endconvo");
  return lines.join("\n") + "\n";
}

export class InterchangeError extends Error {
  constructor(message: string, public line: number) {
    super(`line ${line}: ${message}`);
  }
}

export function parseConversations(text: string): ConversationRecord[] {
  const convs: ConversationRecord[] = [];
  let cur: ConversationRecord | null = null;
  let turn: TurnRecord | null = null;
  const lines = text.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i];
    if (!line.trim()) continue;
    const lineno = i + 1;
    if (line === MAGIC) {
      if (cur) throw new InterchangeError("record before endconvo", lineno);
      cur = {
        profile: { name: "?", voice_id: "", description: "", motion_tags: [] },
        topic: "",
        task_type: "common",
        turns: [],
      };
      continue;
    }
    if (!cur) throw new InterchangeError(`unexpected line: ${line}`, lineno);
    const sep = line.indexOf(" ");
    const key = sep < 0 ? line : line.slice(0, sep);
    const rest = sep < 0 ? "" : line.slice(sep + 1);
    switch (key) {
      case "profile": {
        const [name, voice_id, description, motion_tags] = JSON.parse(rest);
        cur.profile = { name, voice_id, description, motion_tags };
        break;
      }
      case "topic":
        cur.topic = JSON.parse(rest);
        break;
      case "task":
        cur.task_type = rest.trim();
        break;
      case "turn":
        if (turn) throw new InterchangeError("turn before endturn", lineno);
        turn = {
          role: rest.trim() as "user" | "character",
          motion: { body: [], hand: [], transform: null },
          speech: [],
          text: null,
        };
        break;
      case "motion": {
        if (!turn) throw new InterchangeError("motion outside turn", lineno);
        const fields = new Map(
          rest.split(" ").map((kv) => {
            const eq = kv.indexOf("=");
            return [kv.slice(0, eq), kv.slice(eq + 1)] as [string, string];
          }),
        );
        const t = fields.get("transform")!;
        turn.motion = {
          body: parseInts(fields.get("body")!),
          hand: parseInts(fields.get("hand")!),
          transform: t === "-" ? null : parseInt(t, 10),
        };
        break;
      }
      case "speech":
        if (!turn) throw new InterchangeError("speech outside turn", lineno);
        turn.speech = parseInts(rest);
        break;
      case "text":
        if (!turn) throw new InterchangeError("text outside turn", lineno);
        turn.text = JSON.parse(rest);
        break;
      case "endturn":
        if (!turn) throw new InterchangeError("endturn without turn", lineno);
        cur.turns.push(turn);
        turn = null;
        break;
      case "endconvo":
        validate(cur, lineno);
        convs.push(cur);
        cur = null;
        break;
      default:
        throw new InterchangeError(`unknown field ${key}`, lineno);
    }
  }
  if (cur) throw new InterchangeError("unterminated record", lines.length);
  return convs;
}

function validate(conv: ConversationRecord, lineno: number): void {
  conv.turns.forEach((turn, i) => {
    const expected = i % 2 === 0 ? "user" : "character";
    if (turn.role !== expected) {
      throw new InterchangeError(
        `turn ${i} role ${turn.role}: roles must alternate starting with user`,
        lineno,
      );
    }
    if (turn.motion.body.length !== turn.motion.hand.length) {
      throw new InterchangeError(`turn ${i}: body/hand lengths differ`, lineno);
    }
    const empty =
      turn.motion.body.length === 0 && turn.motion.transform === null;
    if (empty && turn.speech.length === 0) {
      throw new InterchangeError(`turn ${i}: needs motion or speech`, lineno);
    }
  });
}

export async function sha256Hex(text: string): Promise<string> {
  const data = new TextEncoder().encode(text);
  const digest = await crypto.subtle.digest("SHA-256", data);
  return Array.from(new Uint8Array(digest))
    .map((b) => b.toString(16).padStart(2, "0"))
    .join("");
}

export async function conversationChecksum(
  conv: ConversationRecord,
): Promise<string> {
  return sha256Hex(renderConversationRecord(conv));
}
