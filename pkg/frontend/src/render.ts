/**
 * SVG markup for a network state.  Pure string building so the renderer
 * is testable without a DOM: the page assigns the result to innerHTML.
 */

import type { StateDoc } from "./types.js";
import { legTip, TENSOR_RADIUS } from "./model.js";

export interface ViewState {
  selection: ReadonlySet<number>;
  pendingLeg: number | null;
}

const COLORS = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1", "#76b7b2"];

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function renderNetwork(state: StateDoc, view: ViewState): string {
  const parts: string[] = [];
  const tipOf = new Map<number, [number, number]>();
  for (const tensor of state.tensors) {
    for (let index = 0; index < tensor.legs.length; index++) {
      tipOf.set(tensor.legs[index]!, legTip(tensor, index));
    }
  }

  // Junctions first so legs and tensors draw on top of the hull lines.
  for (const junction of state.junctions) {
    const tips = junction.members
      .map((leg) => tipOf.get(leg))
      .filter((tip): tip is [number, number] => tip !== undefined);
    if (tips.length === 0) {
      continue;
    }
    const cx = tips.reduce((s, t) => s + t[0], 0) / tips.length;
    const cy = tips.reduce((s, t) => s + t[1], 0) / tips.length;
    for (const [tx, ty] of tips) {
      parts.push(
        `<line class="junction-link" x1="${tx.toFixed(1)}" y1="${ty.toFixed(1)}" ` +
          `x2="${cx.toFixed(1)}" y2="${cy.toFixed(1)}"></line>`,
      );
    }
    parts.push(
      `<circle class="junction" data-junction="${junction.id}" ` +
        `cx="${cx.toFixed(1)}" cy="${cy.toFixed(1)}" r="4"></circle>`,
    );
  }

  for (const tensor of state.tensors) {
    const [x, y] = tensor.position;
    for (let index = 0; index < tensor.legs.length; index++) {
      const leg = tensor.legs[index]!;
      const [tx, ty] = legTip(tensor, index);
      const pending = view.pendingLeg === leg ? " pending" : "";
      parts.push(
        `<line class="leg${pending}" data-leg="${leg}" data-owner="${tensor.id}" ` +
          `x1="${x.toFixed(1)}" y1="${y.toFixed(1)}" ` +
          `x2="${tx.toFixed(1)}" y2="${ty.toFixed(1)}"></line>`,
      );
      parts.push(
        `<circle class="leg-tip${pending}" data-leg="${leg}" ` +
          `cx="${tx.toFixed(1)}" cy="${ty.toFixed(1)}" r="5"></circle>`,
      );
      parts.push(
        `<text class="leg-index" x="${(x + (tx - x) * 0.62).toFixed(1)}" ` +
          `y="${(y + (ty - y) * 0.62 - 3).toFixed(1)}">${index}</text>`,
      );
    }
    const selected = view.selection.has(tensor.id) ? " selected" : "";
    const fill = COLORS[tensor.id % COLORS.length];
    parts.push(
      `<circle class="tensor${selected}" data-tensor="${tensor.id}" ` +
        `cx="${x.toFixed(1)}" cy="${y.toFixed(1)}" r="${TENSOR_RADIUS}" ` +
        `fill="${fill}"></circle>`,
    );
    parts.push(
      `<text class="tensor-label" x="${x.toFixed(1)}" y="${(y + 4).toFixed(1)}">` +
        `${esc(`T${tensor.id}`)}</text>`,
    );
  }
  return parts.join("\n");
}

/** Leg count per tensor id as drawn — handy for tests and the sidebar. */
export function legCounts(markup: string): Map<number, number> {
  const counts = new Map<number, number>();
  const pattern = /class="leg[" ].*?data-owner="(\d+)"/g;
  for (const match of markup.matchAll(pattern)) {
    const owner = Number(match[1]);
    counts.set(owner, (counts.get(owner) ?? 0) + 1);
  }
  return counts;
}
