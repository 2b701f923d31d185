// Stick-figure rendering from server-decoded joint positions. Pure with
// respect to the streamed data: the same frames always produce the same
// draw operations, which tests capture through the Canvas2dLike interface.

export interface Canvas2dLike {
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  clearRect(x: number, y: number, w: number, h: number): void;
  lineWidth: number;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  fillStyle: string | CanvasGradient | CanvasPattern;
}

export interface Viewport {
  width: number;
  height: number;
  scale: number; // pixels per meter
}

export function project(
  joint: number[],
  view: Viewport,
): { x: number; y: number } {
  // orthographic front view: x right, y up; z ignored
  return {
    x: view.width / 2 + joint[0] * view.scale,
    y: view.height / 2 - joint[1] * view.scale + view.height * 0.25,
  };
}

export function drawFrame(
  ctx: Canvas2dLike,
  joints: number[][],
  parents: number[],
  view: Viewport,
): void {
  ctx.clearRect(0, 0, view.width, view.height);
  ctx.lineWidth = 2;
  ctx.strokeStyle = "#2dd4bf";
  ctx.fillStyle = "#f0f9ff";
  for (let j = 1; j < parents.length && j < joints.length; j++) {
    const p = parents[j];
    if (p < 0) continue;
    const a = project(joints[p], view);
    const b = project(joints[j], view);
    ctx.beginPath();
    ctx.moveTo(a.x, a.y);
    ctx.lineTo(b.x, b.y);
    ctx.stroke();
  }
  for (let j = 0; j < joints.length; j++) {
    const p = project(joints[j], view);
    ctx.beginPath();
    ctx.arc(p.x, p.y, j === 0 ? 4 : 2.5, 0, 2 * Math.PI);
    ctx.fill();
  }
}

export class ClipPlayer {
  frame = 0;
  constructor(
    public frames: number[][][],
    public fps: number,
  ) {}

  // advances and draws one frame; returns false once the clip is exhausted
  step(ctx: Canvas2dLike, parents: number[], view: Viewport): boolean {
    if (this.frame >= this.frames.length) return false;
    drawFrame(ctx, this.frames[this.frame], parents, view);
    this.frame += 1;
    return this.frame < this.frames.length;
  }

  renderAll(ctx: Canvas2dLike, parents: number[], view: Viewport): number {
    let drawn = 0;
    this.frame = 0;
    while (this.frame < this.frames.length) {
      drawFrame(ctx, this.frames[this.frame], parents, view);
      this.frame += 1;
      drawn += 1;
    }
    return drawn;
  }
}

export class RecordingContext implements Canvas2dLike {
  ops: string[] = [];
  lineWidth = 1;
  strokeStyle: string | CanvasGradient | CanvasPattern = "";
  fillStyle: string | CanvasGradient | CanvasPattern = "";

  beginPath(): void {
    this.ops.push("beginPath");
  }
  moveTo(x: number, y: number): void {
    this.ops.push(`moveTo ${x.toFixed(3)} ${y.toFixed(3)}`);
  }
  lineTo(x: number, y: number): void {
    this.ops.push(`lineTo ${x.toFixed(3)} ${y.toFixed(3)}`);
  }
  stroke(): void {
    this.ops.push("stroke");
  }
  arc(x: number, y: number, r: number, a0: number, a1: number): void {
    this.ops.push(`arc ${x.toFixed(3)} ${y.toFixed(3)} ${r}`);
  }
  fill(): void {
    this.ops.push("fill");
  }
  clearRect(): void {
    this.ops.push("clearRect");
  }
}
