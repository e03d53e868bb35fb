"""Sessions, action scripts and their JSON forms.

The action log is the source of truth: network state, operation dag and
emitted code are all reproducible by replaying the log into a fresh
session, and the serialized forms are canonical (sorted keys, no
whitespace) so replays compare byte-for-byte.  Optimistic concurrency uses
a revision counter: a mutation must quote the revision it saw, and loses
with a stale-revision error when the session has moved on.

Script schema (version 1)::

    {"version": 1, "actions": [<action>, ...]}

Action objects, by "kind":

    {"kind": "create_tensor", "position": [x, y]}
    {"kind": "attach_leg", "tensor": t}
    {"kind": "connect_legs", "leg_a": a, "leg_b": b}
    {"kind": "disconnect_leg", "leg": l}
    {"kind": "contract", "tensors": [t, ...]}
    {"kind": "split", "tensor": t, "row_dims": [...], "col_dims": [...],
     "split_kind": "qr"}
    {"kind": "split", "tensor": t, "row_dims": [...], "col_dims": [...],
     "split_kind": "svd", "sv_cutoff_abs": x, "max_bond": n-or-null}
    {"kind": "move_tensor", "tensor": t, "position": [x, y]}

All field names are lower_snake_case; ids are non-negative integers.
"""

from __future__ import annotations

import json
import threading
import time
import uuid

from . import network as nw
from .codegen import emit, emit_module
from .errors import GuiteNetError, ScriptParseError
from .ir import dag_to_dict, topo_levels
from .lowering import LoweringContext
from .optimizer import report_to_dict, run_pipeline

SCRIPT_SCHEMA_VERSION = 1
DEFAULT_TTL_SECONDS = 24 * 3600


class UnknownSession(GuiteNetError):
    """No session with the given id (it may have expired)."""

    code = "unknown_session"


class StaleRevision(GuiteNetError):
    """The mutation quoted a revision older than the session's."""

    code = "stale_revision"

    def __init__(self, expected: int, got: int):
        self.expected = expected
        self.got = got
        super().__init__(f"session is at revision {expected}, "
                         f"request quoted {got}")


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------------------
# Action (de)serialization

def action_to_dict(action: nw.UserAction) -> dict:
    if isinstance(action, nw.CreateTensor):
        return {"kind": "create_tensor",
                "position": [action.position[0], action.position[1]]}
    if isinstance(action, nw.AttachLeg):
        return {"kind": "attach_leg", "tensor": action.tensor}
    if isinstance(action, nw.ConnectLegs):
        return {"kind": "connect_legs",
                "leg_a": action.leg_a, "leg_b": action.leg_b}
    if isinstance(action, nw.DisconnectLeg):
        return {"kind": "disconnect_leg", "leg": action.leg}
    if isinstance(action, nw.Contract):
        return {"kind": "contract", "tensors": sorted(set(action.tensors))}
    if isinstance(action, nw.Split):
        data = {
            "kind": "split",
            "tensor": action.tensor,
            "row_dims": list(action.row_dims),
            "col_dims": list(action.col_dims),
            "split_kind": action.kind,
        }
        if action.kind == "svd":
            data["sv_cutoff_abs"] = action.sv_cutoff_abs
            data["max_bond"] = action.max_bond
        return data
    if isinstance(action, nw.MoveTensor):
        return {"kind": "move_tensor", "tensor": action.tensor,
                "position": [action.position[0], action.position[1]]}
    raise TypeError(f"not a user action: {action!r}")


def _need(data: dict, key: str, kinds, what: str):
    if key not in data:
        raise ScriptParseError(f"missing field {key!r} in {what}")
    value = data[key]
    if not isinstance(value, kinds) or isinstance(value, bool):
        raise ScriptParseError(f"field {key!r} of {what} must be {kinds}")
    return value


def _need_id(data: dict, key: str, what: str) -> int:
    value = _need(data, key, int, what)
    if value < 0:
        raise ScriptParseError(f"field {key!r} of {what} must be >= 0")
    return value


def _need_position(data: dict, what: str) -> tuple[float, float]:
    value = _need(data, "position", list, what)
    if (len(value) != 2
            or not all(isinstance(c, (int, float))
                       and not isinstance(c, bool) for c in value)):
        raise ScriptParseError(f"field 'position' of {what} must be [x, y]")
    return (float(value[0]), float(value[1]))


def _need_id_list(data: dict, key: str, what: str) -> tuple[int, ...]:
    value = _need(data, key, list, what)
    out = []
    for element in value:
        if not isinstance(element, int) or isinstance(element, bool) \
                or element < 0:
            raise ScriptParseError(
                f"field {key!r} of {what} must hold ids >= 0")
        out.append(element)
    return tuple(out)


def action_from_dict(data) -> nw.UserAction:
    if not isinstance(data, dict):
        raise ScriptParseError("action must be an object")
    kind = data.get("kind")
    what = f"action {kind!r}"
    if kind == "create_tensor":
        return nw.CreateTensor(position=_need_position(data, what))
    if kind == "attach_leg":
        return nw.AttachLeg(tensor=_need_id(data, "tensor", what))
    if kind == "connect_legs":
        return nw.ConnectLegs(leg_a=_need_id(data, "leg_a", what),
                              leg_b=_need_id(data, "leg_b", what))
    if kind == "disconnect_leg":
        return nw.DisconnectLeg(leg=_need_id(data, "leg", what))
    if kind == "contract":
        tensors = _need_id_list(data, "tensors", what)
        if not tensors:
            raise ScriptParseError("contract needs a non-empty selection")
        return nw.Contract(tensors=tuple(sorted(set(tensors))))
    if kind == "split":
        split_kind = _need(data, "split_kind", str, what)
        if split_kind not in ("qr", "svd"):
            raise ScriptParseError(
                f"split_kind must be 'qr' or 'svd', got {split_kind!r}")
        cutoff = 0.0
        max_bond = None
        if split_kind == "svd":
            if "sv_cutoff_abs" in data:
                raw = data["sv_cutoff_abs"]
                if not isinstance(raw, (int, float)) \
                        or isinstance(raw, bool):
                    raise ScriptParseError("sv_cutoff_abs must be a number")
                cutoff = float(raw)
            if data.get("max_bond") is not None:
                max_bond = _need_id(data, "max_bond", what)
        return nw.Split(
            tensor=_need_id(data, "tensor", what),
            row_dims=_need_id_list(data, "row_dims", what),
            col_dims=_need_id_list(data, "col_dims", what),
            kind=split_kind,
            sv_cutoff_abs=cutoff,
            max_bond=max_bond,
        )
    if kind == "move_tensor":
        return nw.MoveTensor(tensor=_need_id(data, "tensor", what),
                             position=_need_position(data, what))
    raise ScriptParseError(f"unknown action kind {kind!r}")


def script_to_dict(actions) -> dict:
    return {
        "version": SCRIPT_SCHEMA_VERSION,
        "actions": [action_to_dict(a) for a in actions],
    }


def script_from_dict(data) -> list[nw.UserAction]:
    if not isinstance(data, dict):
        raise ScriptParseError("script must be an object")
    if data.get("version") != SCRIPT_SCHEMA_VERSION:
        raise ScriptParseError(
            f"unsupported script version {data.get('version')!r}")
    raw = data.get("actions")
    if not isinstance(raw, list):
        raise ScriptParseError("field 'actions' must be a list")
    actions = []
    for index, entry in enumerate(raw):
        try:
            actions.append(action_from_dict(entry))
        except ScriptParseError as exc:
            raise ScriptParseError(str(exc), action_index=index) from None
    return actions


def load_script(text: str) -> list[nw.UserAction]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScriptParseError(f"not valid JSON: {exc}") from None
    return script_from_dict(data)


# ---------------------------------------------------------------------------
# Sessions

class Session:
    """One editing session: log, network state and dag move in lockstep."""

    def __init__(self, session_id: str | None = None, opt_level: int = 0,
                 target: str = "numpy"):
        self.id = session_id or uuid.uuid4().hex
        self.opt_level = opt_level
        self.target = target
        self.revision = 0
        self.log: list[nw.UserAction] = []
        self.ctx = LoweringContext()
        self.last_used = time.time()

    @property
    def state(self) -> nw.NetworkState:
        return self.ctx.state

    def apply(self, action: nw.UserAction) -> list[int]:
        """Apply one action; returns ids of the dag nodes it introduced.
        On error nothing changes (state, dag, log and revision)."""
        added = self.ctx.apply(action)
        self.log.append(action)
        self.revision += 1
        return [node.id for node in added]

    def code(self, opt_level: int | None = None) -> str:
        level = self.opt_level if opt_level is None else level_check(opt_level)
        dag, _ = run_pipeline(self.ctx.snapshot_dag(), level)
        return emit_module(emit(dag, target=self.target))

    def dag_document(self, opt_level: int | None = None) -> dict:
        level = self.opt_level if opt_level is None else level_check(opt_level)
        dag, reports = run_pipeline(self.ctx.snapshot_dag(), level)
        return {
            "opt_level": level,
            "dag": dag_to_dict(dag),
            "schedule": {"levels": topo_levels(dag)},
            "pass_reports": [report_to_dict(r) for r in reports],
        }

    def state_dict(self) -> dict:
        return nw.state_to_dict(self.ctx.state)

    def to_document(self) -> dict:
        return {
            "session_id": self.id,
            "revision": self.revision,
            "opt_level": self.opt_level,
            "target": self.target,
            "log": script_to_dict(self.log),
            "state": self.state_dict(),
            "dag": dag_to_dict(self.ctx.snapshot_dag()),
        }

    @staticmethod
    def replay(actions, opt_level: int = 0,
               target: str = "numpy") -> "Session":
        session = Session(opt_level=opt_level, target=target)
        for action in actions:
            session.apply(action)
        return session


def level_check(level) -> int:
    if level not in (0, 1, 2):
        raise ScriptParseError(f"opt_level must be 0, 1 or 2, got {level!r}")
    return level


class SessionStore:
    """In-memory session registry with idle expiry."""

    def __init__(self, ttl_seconds: float = DEFAULT_TTL_SECONDS):
        self.ttl_seconds = ttl_seconds
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def _sweep(self, now: float) -> None:
        dead = [sid for sid, s in self._sessions.items()
                if now - s.last_used > self.ttl_seconds]
        for sid in dead:
            del self._sessions[sid]

    def create(self, opt_level: int = 0, target: str = "numpy") -> Session:
        session = Session(opt_level=opt_level, target=target)
        with self._lock:
            self._sweep(time.time())
            self._sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
            now = time.time()
            if session is not None and now - session.last_used \
                    > self.ttl_seconds:
                del self._sessions[session_id]
                session = None
            if session is None:
                raise UnknownSession(f"unknown session {session_id!r}")
            session.last_used = now
            return session

    def delete(self, session_id: str) -> None:
        with self._lock:
            if session_id not in self._sessions:
                raise UnknownSession(f"unknown session {session_id!r}")
            del self._sessions[session_id]

    def apply(self, session_id: str, revision: int,
              action: nw.UserAction) -> Session:
        """Revision-checked mutation; check and apply are atomic."""
        with self._lock:
            session = self._sessions.get(session_id)
            if session is None:
                raise UnknownSession(f"unknown session {session_id!r}")
            if revision != session.revision:
                raise StaleRevision(expected=session.revision, got=revision)
            session.apply(action)
            session.last_used = time.time()
            return session
