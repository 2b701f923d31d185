// Pose-keyframe sequencer: builds a motion request from palette picks.

import type { TurnRequest } from "./types.js";

export interface Keyframe {
  motion_id: string;
  frames: number;
}

export class PoseSequencer {
  keyframes: Keyframe[] = [];

  constructor(public defaultFrames = 16, public maxKeyframes = 8) {}

  add(motionId: string, frames?: number): void {
    if (this.keyframes.length >= this.maxKeyframes) {
      throw new Error(`at most ${this.maxKeyframes} keyframes`);
    }
    this.keyframes.push({
      motion_id: motionId,
      frames: frames ?? this.defaultFrames,
    });
  }

  removeLast(): void {
    this.keyframes.pop();
  }

  clear(): void {
    this.keyframes = [];
  }

  get empty(): boolean {
    return this.keyframes.length === 0;
  }

  toRequestMotion(): TurnRequest["motion"] {
    if (this.keyframes.length === 0) {
      throw new Error("no keyframes recorded");
    }
    if (this.keyframes.length === 1) {
      return { motion_id: this.keyframes[0].motion_id };
    }
    return { keyframes: [...this.keyframes] };
  }
}
