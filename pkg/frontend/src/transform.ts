// World-to-canvas transform: uniform scale (aspect preserved), y axis
// flipped so world +y points up on screen.

export interface Bounds {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export function boundsFromArray(arr: [number, number, number, number]): Bounds {
  return { x0: arr[0], y0: arr[1], x1: arr[2], y1: arr[3] };
}

export class WorldTransform {
  readonly scale: number;
  private readonly offsetX: number;
  private readonly offsetY: number;

  constructor(
    readonly bounds: Bounds,
    readonly width: number,
    readonly height: number,
    readonly margin = 12,
  ) {
    const worldW = bounds.x1 - bounds.x0;
    const worldH = bounds.y1 - bounds.y0;
    this.scale = Math.min((width - 2 * margin) / worldW, (height - 2 * margin) / worldH);
    // center the scene in the viewport
    this.offsetX = (width - worldW * this.scale) / 2;
    this.offsetY = (height - worldH * this.scale) / 2;
  }

  toScreen(x: number, y: number): [number, number] {
    return [
      this.offsetX + (x - this.bounds.x0) * this.scale,
      this.height - this.offsetY - (y - this.bounds.y0) * this.scale,
    ];
  }

  toWorld(sx: number, sy: number): [number, number] {
    return [
      this.bounds.x0 + (sx - this.offsetX) / this.scale,
      this.bounds.y0 + (this.height - this.offsetY - sy) / this.scale,
    ];
  }
}
