// Server protocol payloads (mirrors the backend's documented schemas).

export type Method = "end_to_end" | "modular" | "speech_only";

export interface ProfileInfo {
  profile_id: string;
  name: string;
  description: string;
  voice_id: string;
  motion_tags: string[];
}

export interface SkeletonInfo {
  joint_names: string[];
  parents: number[];
  offsets: number[][];
  body_joints: number;
}

export interface MotionTokensWire {
  body: number[];
  hand: number[];
  transform: number | null;
}

export interface TurnWire {
  motion: MotionTokensWire;
  speech: number[];
  text: string | null;
}

export interface Timings {
  first_token_ms: number;
  full_ms: number;
}

export interface FinalFrame {
  turn: TurnWire;
  wav: string | null;
  joints: number[][][] | null;
  fps: number;
  idle: boolean;
  idle_motion_id: string | null;
  degraded: boolean;
  evicted_turns: number;
  timings: Timings;
  status: string;
}

export interface ChunkFrame {
  tokens: number[];
  t_ns: number;
}

export type StreamEvent =
  | { kind: "motion_chunk"; data: ChunkFrame }
  | { kind: "speech_chunk"; data: ChunkFrame }
  | { kind: "final"; data: FinalFrame }
  | { kind: "error"; data: { error: string; message: string } };

export interface HistoryResponse {
  interchange: string;
  checksum: string;
  turns: number;
}

export interface SearchHit {
  motion_id: string;
  score: number;
  caption: string;
}

export interface MotionDetail {
  motion_id: string;
  caption: string;
  fps: number;
  frames: number;
  joints: number[][][];
  tokens: MotionTokensWire;
}

export interface TurnRequest {
  speech?: { text: string } | { tokens: number[] };
  motion?:
    | { motion_id: string }
    | { tokens: MotionTokensWire }
    | { keyframes: { motion_id: string; frames: number }[] };
}
