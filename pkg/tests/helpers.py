"""Shared builders for the test suite."""

import numpy as np

from guitenet.interpreter import DenseTensor
from guitenet.network import (
    AttachLeg,
    ConnectLegs,
    Contract,
    CreateTensor,
    NetworkState,
    Split,
    apply_action,
)


def three_tensor_actions(split_kind="qr"):
    """Three tensors sharing two pairwise junctions, contracted and split.

    Tensor 0 has legs 0,1,2; tensor 1 has legs 3,4; tensor 2 has legs
    5,6,7.  Leg 2 joins leg 4 and leg 0 joins leg 5, so the contraction
    produces a rank-4 tensor (labels (0,1,2)/(3,2)/(0,4,5) -> (1,3,4,5))
    that is then split with rows (3,0) and columns (2,1).
    """
    actions = [
        CreateTensor(position=(-120.0, 0.0)),
        AttachLeg(0), AttachLeg(0), AttachLeg(0),
        CreateTensor(position=(0.0, 80.0)),
        AttachLeg(1), AttachLeg(1),
        CreateTensor(position=(120.0, 0.0)),
        AttachLeg(2), AttachLeg(2), AttachLeg(2),
        ConnectLegs(2, 4),
        ConnectLegs(0, 5),
        Contract((0, 1, 2)),
        Split(3, (3, 0), (2, 1), kind=split_kind),
    ]
    return actions


def hyperedge_actions():
    """Four tensors with one three-member junction.

    Tensors 0 and 1 have rank 3, tensors 2 and 3 have rank 2.  One
    junction spans legs of tensors 0, 1 and 2; pairwise junctions tie
    tensors 0-1 and 2-3.  Contracting everything yields labels
    (0,1,2)/(0,1,3)/(0,4)/(4,5) -> output (2,3,5).
    """
    return [
        CreateTensor(), AttachLeg(0), AttachLeg(0), AttachLeg(0),
        CreateTensor(), AttachLeg(1), AttachLeg(1), AttachLeg(1),
        CreateTensor(), AttachLeg(2), AttachLeg(2),
        CreateTensor(), AttachLeg(3), AttachLeg(3),
        ConnectLegs(0, 3),
        ConnectLegs(0, 6),
        ConnectLegs(1, 4),
        ConnectLegs(7, 8),
        Contract((0, 1, 2, 3)),
    ]


def build_state(actions):
    state = NetworkState()
    for action in actions:
        apply_action(state, action)
    return state


def dense(shape, seed=0):
    rng = np.random.default_rng(seed)
    return DenseTensor.from_ndarray(rng.standard_normal(shape))


def random_inputs(dag, seed=0, dim=3):
    """Random DenseTensor per input node, every dimension equal to dim."""
    from guitenet.ir import InputNode

    rng = np.random.default_rng(seed)
    inputs = {}
    for nid in sorted(dag.nodes):
        node = dag.nodes[nid]
        if isinstance(node, InputNode):
            shape = (dim,) * node.rank
            inputs[nid] = DenseTensor.from_ndarray(
                rng.standard_normal(shape))
    return inputs
