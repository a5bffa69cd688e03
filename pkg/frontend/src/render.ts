// Top-down canvas rendering of the latest protocol state: obstacles, robot
// with heading marker, pedestrians, goal, scan points, staleness veil.

import { ViewState } from "./client.js";
import { boundsFromArray, WorldTransform } from "./transform.js";

const COLORS = {
  background: "#10141a",
  bounds: "#2c3440",
  obstacle: "#4a5568",
  robot: "#4fc3f7",
  heading: "#e3f2fd",
  pedestrian: "#ffb74d",
  goal: "#81c784",
  scan: "rgba(244, 114, 114, 0.5)",
  stale: "rgba(16, 20, 26, 0.55)",
};

export function makeTransform(view: ViewState, width: number, height: number): WorldTransform | null {
  if (!view.scene) return null;
  return new WorldTransform(boundsFromArray(view.scene.bounds), width, height);
}

export function renderFrame(
  ctx: CanvasRenderingContext2D,
  view: ViewState,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = COLORS.background;
  ctx.fillRect(0, 0, width, height);
  const tf = makeTransform(view, width, height);
  if (!tf || !view.scene) return;
  const scene = view.scene;

  // walkable bounds
  const [bx0, by0] = tf.toScreen(scene.bounds[0], scene.bounds[3]);
  const [bx1, by1] = tf.toScreen(scene.bounds[2], scene.bounds[1]);
  ctx.strokeStyle = COLORS.bounds;
  ctx.lineWidth = 2;
  ctx.strokeRect(bx0, by0, bx1 - bx0, by1 - by0);

  ctx.fillStyle = COLORS.obstacle;
  for (const poly of scene.obstacles) {
    ctx.beginPath();
    poly.forEach(([x, y], i) => {
      const [sx, sy] = tf.toScreen(x, y);
      if (i === 0) ctx.moveTo(sx, sy);
      else ctx.lineTo(sx, sy);
    });
    ctx.closePath();
    ctx.fill();
  }

  const obs = view.obs;
  if (!obs) return;

  // scan points (beam k at theta + k * 2*pi/N, the server's default ring)
  ctx.fillStyle = COLORS.scan;
  const [rx, ry, rtheta] = obs.pose;
  const n = obs.scan.length;
  for (let k = 0; k < n; k += 1) {
    const angle = rtheta + (k * 2 * Math.PI) / n;
    const r = obs.scan[k];
    const [sx, sy] = tf.toScreen(rx + r * Math.cos(angle), ry + r * Math.sin(angle));
    ctx.fillRect(sx - 1, sy - 1, 2, 2);
  }

  // goal
  const [gx, gy] = tf.toScreen(obs.goal[0], obs.goal[1]);
  ctx.strokeStyle = COLORS.goal;
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.arc(gx, gy, 0.5 * tf.scale, 0, 2 * Math.PI);
  ctx.stroke();
  ctx.beginPath();
  ctx.arc(gx, gy, 3, 0, 2 * Math.PI);
  ctx.fillStyle = COLORS.goal;
  ctx.fill();

  // pedestrians
  ctx.fillStyle = COLORS.pedestrian;
  for (const [, px, py] of obs.pedestrians ?? []) {
    const [sx, sy] = tf.toScreen(px, py);
    ctx.beginPath();
    ctx.arc(sx, sy, Math.max(2, 0.25 * tf.scale), 0, 2 * Math.PI);
    ctx.fill();
  }

  // robot + heading marker
  const radius = view.episode?.robot_spec.footprint_radius ?? 0.25;
  const [sx, sy] = tf.toScreen(rx, ry);
  ctx.fillStyle = COLORS.robot;
  ctx.beginPath();
  ctx.arc(sx, sy, Math.max(3, radius * tf.scale), 0, 2 * Math.PI);
  ctx.fill();
  const [hx, hy] = tf.toScreen(rx + radius * 1.8 * Math.cos(rtheta), ry + radius * 1.8 * Math.sin(rtheta));
  ctx.strokeStyle = COLORS.heading;
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(sx, sy);
  ctx.lineTo(hx, hy);
  ctx.stroke();

  // staleness veil when no fresh obs arrived for a while
  if (view.framesSinceObs > 30) {
    ctx.fillStyle = COLORS.stale;
    ctx.fillRect(0, 0, width, height);
  }
}
