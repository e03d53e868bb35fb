"""Editable tensor-network graph and the user actions that mutate it.

A tensor is a node with an ordered list of legs (one per dimension).  Legs
are joined by *junctions*: hyperedges with >= 2 member legs, possibly on the
same tensor (a trace) and possibly spanning more than two tensors.  Entity
ids count up monotonically and are never reused, so an id identifies the
same object for the whole life of a session.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Iterable, Union

from .errors import (
    ContractNotSingleComponent,
    InvalidSplitPartition,
    InvalidSplitParams,
    LegAlreadyConnected,
    UnknownEntity,
)

Position = tuple[float, float]

# Canvas offsets for tensors produced by Split actions (display only).
_SPLIT_DX = 60.0


@dataclass
class Leg:
    id: int
    owner: int
    position_in_owner: int
    junction: int | None = None


@dataclass
class TensorNode:
    id: int
    legs: list[int] = field(default_factory=list)  # leg ids, position order
    display_position: Position = (0.0, 0.0)

    @property
    def rank(self) -> int:
        return len(self.legs)


@dataclass
class Junction:
    id: int
    members: set[int] = field(default_factory=set)  # leg ids


@dataclass
class NetworkState:
    tensors: dict[int, TensorNode] = field(default_factory=dict)
    legs: dict[int, Leg] = field(default_factory=dict)
    junctions: dict[int, Junction] = field(default_factory=dict)
    next_tensor_id: int = 0
    next_leg_id: int = 0
    next_junction_id: int = 0

    def copy(self) -> "NetworkState":
        return copy.deepcopy(self)

    def tensor(self, tensor_id: int) -> TensorNode:
        try:
            return self.tensors[tensor_id]
        except KeyError:
            raise UnknownEntity(f"unknown tensor {tensor_id}") from None

    def leg(self, leg_id: int) -> Leg:
        try:
            return self.legs[leg_id]
        except KeyError:
            raise UnknownEntity(f"unknown leg {leg_id}") from None

    def leg_at(self, tensor_id: int, position: int) -> Leg:
        node = self.tensor(tensor_id)
        if not 0 <= position < node.rank:
            raise UnknownEntity(
                f"tensor {tensor_id} has no leg at position {position}"
            )
        return self.legs[node.legs[position]]


# ---------------------------------------------------------------------------
# User actions

@dataclass(frozen=True)
class CreateTensor:
    position: Position = (0.0, 0.0)


@dataclass(frozen=True)
class AttachLeg:
    tensor: int


@dataclass(frozen=True)
class ConnectLegs:
    leg_a: int
    leg_b: int


@dataclass(frozen=True)
class DisconnectLeg:
    leg: int


@dataclass(frozen=True)
class Contract:
    tensors: tuple[int, ...]  # treated as a set; stored sorted


@dataclass(frozen=True)
class Split:
    tensor: int
    row_dims: tuple[int, ...]
    col_dims: tuple[int, ...]
    kind: str = "qr"  # "qr" | "svd"
    sv_cutoff_abs: float = 0.0
    max_bond: int | None = None


@dataclass(frozen=True)
class MoveTensor:
    tensor: int
    position: Position


UserAction = Union[
    CreateTensor, AttachLeg, ConnectLegs, DisconnectLeg, Contract, Split,
    MoveTensor,
]


# ---------------------------------------------------------------------------
# Effects: structural summary of what an action did, consumed by lowering.

@dataclass(frozen=True)
class CreatedTensor:
    tensor: int


@dataclass(frozen=True)
class AttachedLeg:
    tensor: int
    leg: int
    position_in_owner: int


@dataclass(frozen=True)
class ContractedSelection:
    selection: tuple[int, ...]      # ascending tensor ids
    new_tensor: int


@dataclass(frozen=True)
class SplitTensor:
    tensor: int
    kind: str
    temp_id: int | None             # id consumed by the reordering step
    output_ids: tuple[int, ...]     # (Q, R) or (U, S, V)


Effect = Union[CreatedTensor, AttachedLeg, ContractedSelection, SplitTensor]


# ---------------------------------------------------------------------------
# Queries

def connected_components(state: NetworkState,
                         tensor_ids: Iterable[int]) -> list[list[int]]:
    """Partition ``tensor_ids`` by junction connectivity.

    Two tensors are linked when some junction has member legs on both.
    Components are returned sorted by smallest member, members ascending.
    """
    ids = sorted(set(tensor_ids))
    for tid in ids:
        state.tensor(tid)
    parent = {tid: tid for tid in ids}

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    in_sel = set(ids)
    for junction in state.junctions.values():
        owners = {state.legs[m].owner for m in junction.members}
        owners &= in_sel
        owners = sorted(owners)
        for other in owners[1:]:
            union(owners[0], other)

    groups: dict[int, list[int]] = {}
    for tid in ids:
        groups.setdefault(find(tid), []).append(tid)
    return [sorted(g) for _, g in sorted(groups.items())]


@dataclass(frozen=True)
class ContractPlan:
    """Resolved structure of a Contract action against a concrete state."""

    selection: tuple[int, ...]                    # ascending ids
    # (owner, position, junction or None) for every leg of the selection,
    # scanned owner-ascending then position-ascending.
    legs: tuple[tuple[int, int, int | None], ...]
    open_legs: tuple[tuple[int, int], ...]        # canonical order
    new_tensor: int


def contract_plan(state: NetworkState,
                  selection: Iterable[int]) -> ContractPlan | None:
    """Validate a Contract selection and describe its structure.

    Returns None for the degenerate identity case: a single tensor that
    touches no junction, where contracting sums nothing and the network is
    left unchanged.
    """
    ids = sorted(set(selection))
    if not ids:
        raise ContractNotSingleComponent("empty selection")
    for tid in ids:
        state.tensor(tid)
    in_sel = set(ids)

    touched = []
    for junction in sorted(state.junctions.values(), key=lambda j: j.id):
        owners = {state.legs[m].owner for m in junction.members}
        if owners & in_sel:
            if not owners <= in_sel:
                outside = sorted(owners - in_sel)
                raise ContractNotSingleComponent(
                    f"junction {junction.id} extends outside the selection "
                    f"(tensors {outside})"
                )
            touched.append(junction)

    if not touched:
        if len(ids) == 1:
            return None  # nothing summed: contracting is the identity
        raise ContractNotSingleComponent(
            f"tensors {ids} share no junction"
        )
    components = connected_components(state, ids)
    if len(components) != 1:
        raise ContractNotSingleComponent(
            f"selection splits into {len(components)} components: "
            f"{components}"
        )

    legs = []
    open_legs = []
    for tid in ids:
        node = state.tensors[tid]
        for pos, leg_id in enumerate(node.legs):
            leg = state.legs[leg_id]
            legs.append((tid, pos, leg.junction))
            if leg.junction is None:
                open_legs.append((tid, pos))
    return ContractPlan(
        selection=tuple(ids),
        legs=tuple(legs),
        open_legs=tuple(open_legs),
        new_tensor=state.next_tensor_id,
    )


@dataclass(frozen=True)
class SplitPlan:
    """Resolved structure of a Split action against a concrete state."""

    tensor: int
    perm: tuple[int, ...]           # row_dims ++ col_dims
    leading: int                    # len(row_dims)
    needs_transpose: bool           # perm is not the identity
    temp_id: int | None
    output_ids: tuple[int, ...]     # (Q, R) or (U, S, V)


def split_plan(state: NetworkState, action: Split) -> SplitPlan:
    node = state.tensor(action.tensor)
    rows = tuple(action.row_dims)
    cols = tuple(action.col_dims)
    perm = rows + cols
    if (not rows or not cols
            or sorted(perm) != list(range(node.rank))):
        raise InvalidSplitPartition(
            f"row dims {list(rows)} and column dims {list(cols)} do not "
            f"partition the {node.rank} dimensions of tensor {node.id} "
            f"into two non-empty groups"
        )
    if action.kind not in ("qr", "svd"):
        raise InvalidSplitParams(f"unknown split kind {action.kind!r}")
    if action.kind == "svd":
        if action.sv_cutoff_abs < 0:
            raise InvalidSplitParams("sv_cutoff_abs must be >= 0")
        if action.max_bond is not None and action.max_bond < 1:
            raise InvalidSplitParams("max_bond must be >= 1")

    needs_transpose = perm != tuple(range(node.rank))
    next_id = state.next_tensor_id
    temp_id = None
    if needs_transpose:
        temp_id = next_id
        next_id += 1
    n_out = 2 if action.kind == "qr" else 3
    output_ids = tuple(range(next_id, next_id + n_out))
    return SplitPlan(
        tensor=node.id,
        perm=perm,
        leading=len(rows),
        needs_transpose=needs_transpose,
        temp_id=temp_id,
        output_ids=output_ids,
    )


# ---------------------------------------------------------------------------
# Mutation

def apply_action(state: NetworkState,
                 action: UserAction) -> tuple[NetworkState, list[Effect]]:
    """Apply one user action, returning the mutated state and effects.

    The input state is mutated in place and returned for convenience.  All
    validation happens before the first mutation, so a raised error leaves
    the state untouched.
    """
    if isinstance(action, CreateTensor):
        tid = state.next_tensor_id
        state.next_tensor_id += 1
        state.tensors[tid] = TensorNode(
            id=tid, legs=[], display_position=tuple(action.position))
        return state, [CreatedTensor(tid)]

    if isinstance(action, AttachLeg):
        node = state.tensor(action.tensor)
        leg_id = state.next_leg_id
        state.next_leg_id += 1
        position = node.rank
        state.legs[leg_id] = Leg(
            id=leg_id, owner=node.id, position_in_owner=position)
        node.legs.append(leg_id)
        return state, [AttachedLeg(node.id, leg_id, position)]

    if isinstance(action, ConnectLegs):
        leg_a = state.leg(action.leg_a)
        leg_b = state.leg(action.leg_b)
        if leg_a.id == leg_b.id:
            raise LegAlreadyConnected(
                f"cannot connect leg {leg_a.id} to itself")
        if (leg_a.junction is not None
                and leg_a.junction == leg_b.junction):
            raise LegAlreadyConnected(
                f"legs {leg_a.id} and {leg_b.id} already share "
                f"junction {leg_a.junction}")
        if leg_a.junction is None and leg_b.junction is None:
            jid = state.next_junction_id
            state.next_junction_id += 1
            state.junctions[jid] = Junction(id=jid,
                                            members={leg_a.id, leg_b.id})
            leg_a.junction = jid
            leg_b.junction = jid
        elif leg_a.junction is None or leg_b.junction is None:
            bare, joined = ((leg_a, leg_b) if leg_a.junction is None
                            else (leg_b, leg_a))
            junction = state.junctions[joined.junction]
            junction.members.add(bare.id)
            bare.junction = junction.id
        else:
            # Joining two junctions merges them; the smaller id survives.
            keep_id = min(leg_a.junction, leg_b.junction)
            drop_id = max(leg_a.junction, leg_b.junction)
            keep = state.junctions[keep_id]
            drop = state.junctions.pop(drop_id)
            for member in drop.members:
                state.legs[member].junction = keep_id
            keep.members |= drop.members
        return state, []

    if isinstance(action, DisconnectLeg):
        leg = state.leg(action.leg)
        if leg.junction is None:
            return state, []  # already free
        junction = state.junctions[leg.junction]
        junction.members.discard(leg.id)
        leg.junction = None
        if len(junction.members) < 2:
            for member in junction.members:
                state.legs[member].junction = None
            del state.junctions[junction.id]
        return state, []

    if isinstance(action, Contract):
        plan = contract_plan(state, action.tensors)
        if plan is None:
            return state, []
        positions = [state.tensors[tid].display_position
                     for tid in plan.selection]
        centroid = (
            sum(p[0] for p in positions) / len(positions),
            sum(p[1] for p in positions) / len(positions),
        )
        junction_ids = {j for *_ , j in plan.legs if j is not None}
        for tid in plan.selection:
            node = state.tensors.pop(tid)
            for leg_id in node.legs:
                del state.legs[leg_id]
        for jid in junction_ids:
            del state.junctions[jid]
        new_id = state.next_tensor_id
        state.next_tensor_id += 1
        assert new_id == plan.new_tensor
        new_node = TensorNode(id=new_id, legs=[], display_position=centroid)
        state.tensors[new_id] = new_node
        for _ in plan.open_legs:
            leg_id = state.next_leg_id
            state.next_leg_id += 1
            state.legs[leg_id] = Leg(
                id=leg_id, owner=new_id, position_in_owner=len(new_node.legs))
            new_node.legs.append(leg_id)
        return state, [ContractedSelection(plan.selection, new_id)]

    if isinstance(action, Split):
        plan = split_plan(state, action)
        node = state.tensors.pop(plan.tensor)
        old_legs = [state.legs.pop(leg_id) for leg_id in node.legs]
        if plan.temp_id is not None:
            state.next_tensor_id += 1  # consumed by the reordering step

        x, y = node.display_position
        if action.kind == "qr":
            offsets = (-_SPLIT_DX, _SPLIT_DX)
        else:
            offsets = (-_SPLIT_DX, 0.0, _SPLIT_DX)
        out_nodes = []
        for offset in offsets:
            tid = state.next_tensor_id
            state.next_tensor_id += 1
            out_node = TensorNode(id=tid, legs=[],
                                  display_position=(x + offset, y))
            state.tensors[tid] = out_node
            out_nodes.append(out_node)
        assert tuple(n.id for n in out_nodes) == plan.output_ids

        def grow_leg(owner: TensorNode, junction: int | None) -> Leg:
            leg_id = state.next_leg_id
            state.next_leg_id += 1
            leg = Leg(id=leg_id, owner=owner.id,
                      position_in_owner=len(owner.legs), junction=junction)
            state.legs[leg_id] = leg
            owner.legs.append(leg_id)
            return leg

        def transfer(owner: TensorNode, old: Leg) -> None:
            # The dimension keeps its junction when it moves to a factor.
            leg = grow_leg(owner, old.junction)
            if old.junction is not None:
                junction = state.junctions[old.junction]
                junction.members.discard(old.id)
                junction.members.add(leg.id)

        leading = plan.leading
        if action.kind == "qr":
            q_node, r_node = out_nodes
            for dim in plan.perm[:leading]:
                transfer(q_node, old_legs[dim])
            bond_q = grow_leg(q_node, None)
            bond_r = grow_leg(r_node, None)
            for dim in plan.perm[leading:]:
                transfer(r_node, old_legs[dim])
            bond_members = [bond_q, bond_r]
        else:
            u_node, s_node, v_node = out_nodes
            for dim in plan.perm[:leading]:
                transfer(u_node, old_legs[dim])
            bond_u = grow_leg(u_node, None)
            bond_s = grow_leg(s_node, None)
            bond_v = grow_leg(v_node, None)
            for dim in plan.perm[leading:]:
                transfer(v_node, old_legs[dim])
            bond_members = [bond_u, bond_s, bond_v]

        jid = state.next_junction_id
        state.next_junction_id += 1
        state.junctions[jid] = Junction(
            id=jid, members={leg.id for leg in bond_members})
        for leg in bond_members:
            leg.junction = jid

        return state, [SplitTensor(plan.tensor, action.kind,
                                   plan.temp_id, plan.output_ids)]

    if isinstance(action, MoveTensor):
        node = state.tensor(action.tensor)
        node.display_position = tuple(action.position)
        return state, []

    raise TypeError(f"not a user action: {action!r}")


# ---------------------------------------------------------------------------
# Serialization (canonical dict form; field names are part of the schema)

def state_to_dict(state: NetworkState) -> dict:
    return {
        "tensors": [
            {
                "id": t.id,
                "position": [t.display_position[0], t.display_position[1]],
                "legs": list(t.legs),
            }
            for t in sorted(state.tensors.values(), key=lambda t: t.id)
        ],
        "legs": [
            {
                "id": leg.id,
                "owner": leg.owner,
                "position_in_owner": leg.position_in_owner,
                "junction": leg.junction,
            }
            for leg in sorted(state.legs.values(), key=lambda l: l.id)
        ],
        "junctions": [
            {"id": j.id, "members": sorted(j.members)}
            for j in sorted(state.junctions.values(), key=lambda j: j.id)
        ],
        "next_tensor_id": state.next_tensor_id,
        "next_leg_id": state.next_leg_id,
        "next_junction_id": state.next_junction_id,
    }


def state_from_dict(data: dict) -> NetworkState:
    state = NetworkState(
        next_tensor_id=data["next_tensor_id"],
        next_leg_id=data["next_leg_id"],
        next_junction_id=data["next_junction_id"],
    )
    for t in data["tensors"]:
        state.tensors[t["id"]] = TensorNode(
            id=t["id"], legs=list(t["legs"]),
            display_position=(t["position"][0], t["position"][1]))
    for l in data["legs"]:
        state.legs[l["id"]] = Leg(
            id=l["id"], owner=l["owner"],
            position_in_owner=l["position_in_owner"],
            junction=l["junction"])
    for j in data["junctions"]:
        state.junctions[j["id"]] = Junction(
            id=j["id"], members=set(j["members"]))
    check_integrity(state)
    return state


def check_integrity(state: NetworkState) -> None:
    """Assert the structural invariants of a network state."""
    for t in state.tensors.values():
        assert t.id < state.next_tensor_id
        for pos, leg_id in enumerate(t.legs):
            leg = state.legs[leg_id]
            assert leg.owner == t.id and leg.position_in_owner == pos
    for leg in state.legs.values():
        assert leg.id < state.next_leg_id
        assert state.tensors[leg.owner].legs[leg.position_in_owner] == leg.id
        if leg.junction is not None:
            assert leg.id in state.junctions[leg.junction].members
    for j in state.junctions.values():
        assert j.id < state.next_junction_id
        assert len(j.members) >= 2
        for member in j.members:
            assert state.legs[member].junction == j.id
