/**
 * Wire types shared with the session service.  These mirror the JSON the
 * HTTP API emits and accepts; nothing here is invented on the client.
 */

export type Action =
  | { kind: "create_tensor"; position: [number, number] }
  | { kind: "attach_leg"; tensor: number }
  | { kind: "connect_legs"; leg_a: number; leg_b: number }
  | { kind: "disconnect_leg"; leg: number }
  | { kind: "contract"; tensors: number[] }
  | {
      kind: "split";
      tensor: number;
      row_dims: number[];
      col_dims: number[];
      split_kind: "qr" | "svd";
      sv_cutoff_abs?: number;
      max_bond?: number | null;
    }
  | { kind: "move_tensor"; tensor: number; position: [number, number] };

export interface TensorDoc {
  id: number;
  position: [number, number];
  legs: number[];
}

export interface LegDoc {
  id: number;
  owner: number;
  position_in_owner: number;
  junction: number | null;
}

export interface JunctionDoc {
  id: number;
  members: number[];
}

export interface StateDoc {
  tensors: TensorDoc[];
  legs: LegDoc[];
  junctions: JunctionDoc[];
  next_tensor_id: number;
  next_leg_id: number;
  next_junction_id: number;
}

export interface SessionDoc {
  session_id: string;
  revision: number;
  opt_level: number;
  target: string;
  state: StateDoc;
  code?: string;
}

export interface ScriptDoc {
  version: number;
  actions: Action[];
}

export function emptyState(): StateDoc {
  return {
    tensors: [],
    legs: [],
    junctions: [],
    next_tensor_id: 0,
    next_leg_id: 0,
    next_junction_id: 0,
  };
}
