/**
 * Page wiring: pointer gestures on the SVG canvas become actions sent to
 * the session service; every server response repaints the canvas and the
 * code panel from the authoritative state.
 */

import { SessionClient, StaleRevisionError, ApiError } from "./api.js";
import { EditorModel, hitLeg, hitTensor, parseDims } from "./model.js";
import { renderNetwork } from "./render.js";
import type { Action, SessionDoc } from "./types.js";

const $ = <T extends HTMLElement>(selector: string): T => {
  const el = document.querySelector(selector);
  if (!el) {
    throw new Error(`missing element: ${selector}`);
  }
  return el as T;
};

const canvas = $("#canvas") as unknown as SVGSVGElement;
const scene = $("#scene") as unknown as SVGGElement;
const codePanel = $("#code");
const statusLine = $("#status");
const errorLine = $("#error");
const optSelect = $("#opt-level") as HTMLSelectElement;
const splitForm = $("#split-form");
const splitTarget = $("#split-target");
const rowsInput = $("#split-rows") as HTMLInputElement;
const colsInput = $("#split-cols") as HTMLInputElement;
const kindSelect = $("#split-kind") as HTMLSelectElement;
const cutoffInput = $("#split-cutoff") as HTMLInputElement;
const bondInput = $("#split-bond") as HTMLInputElement;

const client = new SessionClient("");
const model = new EditorModel();

let sessionId = "";
let revision = 0;
let splitTensor: number | null = null;

function setStatus(text: string): void {
  statusLine.textContent = text;
}

function setError(text: string): void {
  errorLine.textContent = text;
}

function repaint(): void {
  scene.innerHTML = renderNetwork(model.state, {
    selection: model.selection,
    pendingLeg: model.pendingLeg,
  });
  setStatus(
    `session ${sessionId.slice(0, 8)} · revision ${revision} · ` +
      `${model.state.tensors.length} tensors`,
  );
}

function absorb(doc: SessionDoc & { code?: string }): void {
  revision = doc.revision;
  model.setState(doc.state);
  if (doc.code !== undefined) {
    codePanel.textContent = doc.code;
  }
  repaint();
}

async function refreshCode(): Promise<void> {
  const level = Number(optSelect.value);
  const doc = await client.code(sessionId, level);
  codePanel.textContent = doc.code;
}

async function send(action: Action): Promise<void> {
  setError("");
  try {
    const doc = await client.apply(sessionId, revision, action);
    absorb(doc);
    if (Number(optSelect.value) !== doc.opt_level) {
      await refreshCode();
    }
  } catch (err) {
    if (err instanceof StaleRevisionError) {
      const doc = await client.state(sessionId);
      absorb(doc);
      await refreshCode();
      setError("another client touched this session; state reloaded");
    } else if (err instanceof ApiError) {
      setError(`[${err.code}] ${err.message}`);
    } else {
      setError(String(err));
    }
  }
}

function canvasPoint(event: MouseEvent): [number, number] {
  const rect = canvas.getBoundingClientRect();
  return [
    event.clientX - rect.left - rect.width / 2,
    event.clientY - rect.top - rect.height / 2,
  ];
}

function openSplitForm(tensor: number): void {
  splitTensor = tensor;
  const doc = model.tensor(tensor);
  splitTarget.textContent = `T${tensor} (rank ${doc ? doc.legs.length : "?"})`;
  splitForm.classList.remove("hidden");
}

canvas.addEventListener("pointerdown", (event) => {
  const [x, y] = canvasPoint(event);
  const leg = hitLeg(model.state, x, y);
  if (leg) {
    const action = event.altKey ? model.altClickLeg(leg.leg) : model.clickLeg(leg.leg);
    repaint();
    if (action) {
      void send(action);
    }
    return;
  }
  const tensor = hitTensor(model.state, x, y);
  if (tensor !== null) {
    if (event.button === 0) {
      model.clickTensor(tensor, event.shiftKey);
      model.beginDrag(tensor);
      repaint();
    }
    return;
  }
  model.clickCanvas();
  repaint();
});

canvas.addEventListener("pointermove", (event) => {
  if (!model.dragging) {
    return;
  }
  const [x, y] = canvasPoint(event);
  model.dragTo(x, y);
  repaint();
});

canvas.addEventListener("pointerup", () => {
  const action = model.endDrag();
  if (action) {
    void send(action);
  }
});

canvas.addEventListener("dblclick", (event) => {
  const [x, y] = canvasPoint(event);
  if (hitTensor(model.state, x, y) === null && hitLeg(model.state, x, y) === null) {
    void send(model.createAt(x, y));
  }
});

canvas.addEventListener("contextmenu", (event) => {
  const [x, y] = canvasPoint(event);
  const tensor = hitTensor(model.state, x, y);
  if (tensor !== null) {
    event.preventDefault();
    openSplitForm(tensor);
  }
});

$("#attach").addEventListener("click", () => {
  const action = model.requestAttach();
  if (action) {
    void send(action);
  } else {
    setError("select exactly one tensor to attach a leg");
  }
});

$("#contract").addEventListener("click", () => {
  const action = model.requestContract();
  if (action) {
    void send(action);
  } else {
    setError("select the tensors to contract first");
  }
});

$("#split-apply").addEventListener("click", () => {
  if (splitTensor === null) {
    return;
  }
  const rows = parseDims(rowsInput.value);
  const cols = parseDims(colsInput.value);
  if (!rows || !cols) {
    setError("row and column lists must be distinct dimension indices");
    return;
  }
  const kind = kindSelect.value === "svd" ? "svd" : "qr";
  const action = model.requestSplit({
    tensor: splitTensor,
    rows,
    cols,
    kind,
    cutoff: cutoffInput.value ? Number(cutoffInput.value) : 0.0,
    maxBond: bondInput.value ? Number(bondInput.value) : null,
  });
  splitForm.classList.add("hidden");
  splitTensor = null;
  void send(action);
});

$("#split-cancel").addEventListener("click", () => {
  splitForm.classList.add("hidden");
  splitTensor = null;
});

optSelect.addEventListener("change", () => {
  void refreshCode().catch((err) => setError(String(err)));
});

$("#export").addEventListener("click", () => {
  void (async () => {
    const doc = await client.script(sessionId);
    const blob = new Blob([JSON.stringify(doc.script, null, 2) + "\n"], {
      type: "application/json",
    });
    const url = URL.createObjectURL(blob);
    const link = document.createElement("a");
    link.href = url;
    link.download = `network-${sessionId.slice(0, 8)}.json`;
    link.click();
    URL.revokeObjectURL(url);
  })().catch((err) => setError(String(err)));
});

$("#reset").addEventListener("click", () => {
  void (async () => {
    if (sessionId) {
      await client.remove(sessionId).catch(() => undefined);
    }
    await boot();
  })();
});

async function boot(): Promise<void> {
  const doc = await client.create(0);
  sessionId = doc.session_id;
  absorb(doc);
  setError("");
}

void boot().catch((err) => setError(`cannot reach the session service: ${err}`));
