// Keyboard and gamepad state mapped to normalized drive axes, then scaled by
// the active robot's limits. The UI never synthesizes motion: every cmd is
// inputToCmd of the sampled input state.

export interface Axes {
  forward: number; // -1..1, + drives ahead
  turn: number; // -1..1, + turns counter-clockwise
}

export interface VelocityLimits {
  v_max: number;
  w_max: number;
}

const FORWARD_KEYS = new Set(["KeyW", "ArrowUp"]);
const BACKWARD_KEYS = new Set(["KeyS", "ArrowDown"]);
const LEFT_KEYS = new Set(["KeyA", "ArrowLeft"]);
const RIGHT_KEYS = new Set(["KeyD", "ArrowRight"]);

export const GAMEPAD_DEADZONE = 0.15;

export class KeyboardState {
  private down = new Set<string>();

  press(code: string): void {
    this.down.add(code);
  }

  release(code: string): void {
    this.down.delete(code);
  }

  /** Releasing focus must zero the command within one input frame. */
  clear(): void {
    this.down.clear();
  }

  private any(codes: ReadonlySet<string>): boolean {
    for (const code of codes) {
      if (this.down.has(code)) return true;
    }
    return false;
  }

  axes(): Axes {
    const forward = (this.any(FORWARD_KEYS) ? 1 : 0) - (this.any(BACKWARD_KEYS) ? 1 : 0);
    const turn = (this.any(LEFT_KEYS) ? 1 : 0) - (this.any(RIGHT_KEYS) ? 1 : 0);
    return { forward, turn };
  }
}

/** Left stick: up is forward (axis 1 is inverted), left is +turn. */
export function gamepadAxes(pad: { axes: ReadonlyArray<number> } | null | undefined): Axes {
  if (!pad || pad.axes.length < 2) {
    return { forward: 0, turn: 0 };
  }
  const dz = (v: number) => (Math.abs(v) < GAMEPAD_DEADZONE ? 0 : v);
  return {
    forward: clamp(-dz(pad.axes[1]), -1, 1) + 0, // + 0 folds -0 into 0
    turn: clamp(-dz(pad.axes[0]), -1, 1) + 0,
  };
}

export function combineAxes(a: Axes, b: Axes): Axes {
  return {
    forward: clamp(a.forward + b.forward, -1, 1),
    turn: clamp(a.turn + b.turn, -1, 1),
  };
}

export function inputToCmd(axes: Axes, limits: VelocityLimits): { v: number; w: number } {
  return { v: axes.forward * limits.v_max, w: axes.turn * limits.w_max };
}

function clamp(v: number, lo: number, hi: number): number {
  return Math.min(Math.max(v, lo), hi);
}
