// HUD text: every displayed value is the most recent protocol value, never a
// client-side recomputation.

import { ViewState } from "./client.js";

export function fmt(value: number | null | undefined, digits = 2): string {
  if (value === null || value === undefined) return "n/a";
  return value.toFixed(digits);
}

export function hudLines(view: ViewState): string[] {
  const lines: string[] = [];
  lines.push(`status: ${view.status}`);
  if (view.episode) {
    lines.push(`episode ${view.episode.episode_id} (${view.episode.robot_spec.name})`);
  }
  const metrics = view.obs?.metrics;
  if (metrics) {
    lines.push(`elapsed: ${fmt(metrics.elapsed, 1)} s`);
    lines.push(`goal dist: ${fmt(metrics.goal_distance)} m`);
    lines.push(`ped dist: ${fmt(view.obs?.nearest_ped_distance ?? null)} m`);
    lines.push(`collisions: ped ${metrics.ped_collisions} / static ${metrics.static_collisions}`);
  }
  if (view.lastEpisodeEnd) {
    const m = view.lastEpisodeEnd;
    lines.push(
      `last episode: ${m.completed ? "completed" : "timed out"} in ${fmt(m.elapsed, 1)} s, ` +
        `final ${fmt(m.final_distance)} m`,
    );
  }
  if (view.report) {
    lines.push(`trial finished: ${(view.report.completion_rate as number) ?? 0}% complete`);
  }
  if (view.lastError) {
    lines.push(`server error: ${view.lastError.reason}${view.lastError.detail ? " - " + view.lastError.detail : ""}`);
  }
  return lines;
}
