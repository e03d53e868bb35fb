/**
 * Pure editor logic: geometry of the diagram, hit-testing, selection and
 * the gesture state machine.  Every completed gesture is turned into one
 * Action for the server; the canvas itself always re-renders from the
 * server's authoritative state, so nothing here mutates the network.
 */

import type { Action, StateDoc, TensorDoc } from "./types.js";
import { emptyState } from "./types.js";

export const TENSOR_RADIUS = 16;
export const LEG_LENGTH = 34;
export const LEG_HIT_RADIUS = 12;

export function legAngle(index: number, rank: number): number {
  return -Math.PI / 2 + (2 * Math.PI * index) / Math.max(rank, 1);
}

/** Coordinates of the free end of one leg. */
export function legTip(tensor: TensorDoc, index: number): [number, number] {
  const angle = legAngle(index, tensor.legs.length);
  const reach = TENSOR_RADIUS + LEG_LENGTH;
  return [
    tensor.position[0] + Math.cos(angle) * reach,
    tensor.position[1] + Math.sin(angle) * reach,
  ];
}

export interface LegHit {
  leg: number;
  owner: number;
  index: number;
}

/** The leg tip within LEG_HIT_RADIUS of (x, y), closest first. */
export function hitLeg(state: StateDoc, x: number, y: number): LegHit | null {
  let best: LegHit | null = null;
  let bestDist = LEG_HIT_RADIUS;
  for (const tensor of state.tensors) {
    for (let index = 0; index < tensor.legs.length; index++) {
      const [tx, ty] = legTip(tensor, index);
      const dist = Math.hypot(tx - x, ty - y);
      if (dist <= bestDist) {
        bestDist = dist;
        best = { leg: tensor.legs[index]!, owner: tensor.id, index };
      }
    }
  }
  return best;
}

export function hitTensor(state: StateDoc, x: number, y: number): number | null {
  for (let i = state.tensors.length - 1; i >= 0; i--) {
    const tensor = state.tensors[i]!;
    const dist = Math.hypot(tensor.position[0] - x, tensor.position[1] - y);
    if (dist <= TENSOR_RADIUS) {
      return tensor.id;
    }
  }
  return null;
}

export interface SplitRequest {
  tensor: number;
  rows: number[];
  cols: number[];
  kind: "qr" | "svd";
  cutoff?: number;
  maxBond?: number | null;
}

interface DragState {
  tensor: number;
  moved: boolean;
}

/**
 * Tracks what the user is in the middle of doing.  Methods return the
 * Action to send when a gesture completes, or null when the gesture only
 * changed local UI state (selection, pending connection, drag).
 */
export class EditorModel {
  state: StateDoc = emptyState();
  selection = new Set<number>();
  /** First leg of a pending connection, armed by clicking a leg tip. */
  pendingLeg: number | null = null;
  private drag: DragState | null = null;

  setState(state: StateDoc): void {
    this.state = state;
    const alive = new Set(state.tensors.map((t) => t.id));
    for (const id of [...this.selection]) {
      if (!alive.has(id)) {
        this.selection.delete(id);
      }
    }
    const legs = new Set(state.legs.map((l) => l.id));
    if (this.pendingLeg !== null && !legs.has(this.pendingLeg)) {
      this.pendingLeg = null;
    }
  }

  tensor(id: number): TensorDoc | undefined {
    return this.state.tensors.find((t) => t.id === id);
  }

  // -- gestures -----------------------------------------------------------

  createAt(x: number, y: number): Action {
    return { kind: "create_tensor", position: [x, y] };
  }

  clickTensor(id: number, additive: boolean): null {
    if (!additive) {
      this.selection.clear();
      this.selection.add(id);
    } else if (this.selection.has(id)) {
      this.selection.delete(id);
    } else {
      this.selection.add(id);
    }
    this.pendingLeg = null;
    return null;
  }

  clickCanvas(): null {
    this.selection.clear();
    this.pendingLeg = null;
    return null;
  }

  /** First click arms the connection, second click completes it. */
  clickLeg(leg: number): Action | null {
    if (this.pendingLeg === null) {
      this.pendingLeg = leg;
      return null;
    }
    if (this.pendingLeg === leg) {
      this.pendingLeg = null;
      return null;
    }
    const action: Action = {
      kind: "connect_legs",
      leg_a: this.pendingLeg,
      leg_b: leg,
    };
    this.pendingLeg = null;
    return action;
  }

  /** Alt-click pulls a leg out of its junction; a free leg is left alone. */
  altClickLeg(leg: number): Action | null {
    const doc = this.state.legs.find((l) => l.id === leg);
    if (!doc || doc.junction === null) {
      return null;
    }
    return { kind: "disconnect_leg", leg };
  }

  requestAttach(): Action | null {
    if (this.selection.size !== 1) {
      return null;
    }
    const [tensor] = this.selection;
    return { kind: "attach_leg", tensor: tensor! };
  }

  requestContract(): Action | null {
    if (this.selection.size === 0) {
      return null;
    }
    return { kind: "contract", tensors: [...this.selection].sort((a, b) => a - b) };
  }

  requestSplit(req: SplitRequest): Action {
    const action: Action = {
      kind: "split",
      tensor: req.tensor,
      row_dims: req.rows,
      col_dims: req.cols,
      split_kind: req.kind,
    };
    if (req.kind === "svd") {
      action.sv_cutoff_abs = req.cutoff ?? 0.0;
      action.max_bond = req.maxBond ?? null;
    }
    return action;
  }

  beginDrag(tensor: number): void {
    this.drag = { tensor, moved: false };
  }

  dragTo(x: number, y: number): void {
    if (!this.drag) {
      return;
    }
    this.drag.moved = true;
    const tensor = this.tensor(this.drag.tensor);
    if (tensor) {
      // Local echo only; the move action is sent when the drag ends.
      tensor.position = [x, y];
    }
  }

  endDrag(): Action | null {
    const drag = this.drag;
    this.drag = null;
    if (!drag || !drag.moved) {
      return null;
    }
    const tensor = this.tensor(drag.tensor);
    if (!tensor) {
      return null;
    }
    return {
      kind: "move_tensor",
      tensor: drag.tensor,
      position: [tensor.position[0], tensor.position[1]],
    };
  }

  get dragging(): boolean {
    return this.drag !== null;
  }
}

/**
 * Parse a split dialog's dimension list ("3, 0" or "3 0") into positions.
 * Returns null when the text holds anything but distinct non-negative
 * integers; the server still validates the partition itself.
 */
export function parseDims(text: string): number[] | null {
  const parts = text.split(/[\s,]+/).filter((p) => p.length > 0);
  const dims: number[] = [];
  for (const part of parts) {
    if (!/^\d+$/.test(part)) {
      return null;
    }
    dims.push(Number(part));
  }
  if (new Set(dims).size !== dims.length) {
    return null;
  }
  return dims;
}
