/** DOM bootstrap: wires the view model to a viewer pane, measurement
 * panel, toolbar and keyboard shortcuts. */

import { CaseApi } from "./api.js";
import { ReviewApp } from "./app.js";

const baseUrl =
  new URLSearchParams(location.search).get("service") ?? "http://127.0.0.1:8000";
const api = new CaseApi(baseUrl);

const viewer = document.getElementById("viewer") as HTMLDivElement;
const image = document.getElementById("radiograph") as HTMLImageElement;
const markerLayer = document.getElementById("markers") as HTMLDivElement;
const panel = document.getElementById("panel") as HTMLTableSectionElement;
const missingList = document.getElementById("missing") as HTMLUListElement;
const banner = document.getElementById("banner") as HTMLDivElement;
const toast = document.getElementById("toast") as HTMLDivElement;
const dirtyBadge = document.getElementById("dirty") as HTMLSpanElement;
const caseInput = document.getElementById("case-id") as HTMLInputElement;
const openButton = document.getElementById("open") as HTMLButtonElement;
const exportButton = document.getElementById("export") as HTMLButtonElement;
const filePicker = document.getElementById("file") as HTMLInputElement;
const spacingInput = document.getElementById("spacing") as HTMLInputElement;

let toastTimer: number | undefined;

const app = new ReviewApp(api, {
  onRender: render,
  onToast(message) {
    toast.textContent = message;
    toast.hidden = false;
    window.clearTimeout(toastTimer);
    toastTimer = window.setTimeout(() => (toast.hidden = true), 4000);
  },
});

function render(): void {
  const { transform } = app.state;
  image.style.transform = `translate(${transform.panX}px, ${transform.panY}px) scale(${transform.zoom})`;
  banner.hidden = app.state.banner === null;
  banner.textContent = app.state.banner ?? "";
  dirtyBadge.hidden = !app.state.dirty;
  exportButton.disabled = !app.exportEnabled;

  markerLayer.replaceChildren(
    ...[...app.state.landmarks.keys()].map((id) => {
      const p = app.markerScreenPosition(id)!;
      const el = document.createElement("div");
      el.className = "marker";
      el.dataset.landmark = id;
      el.dataset.provenance = app.state.landmarks.get(id)!.provenance;
      if (app.state.selectedLandmark === id) el.classList.add("selected");
      el.style.left = `${p.x}px`;
      el.style.top = `${p.y}px`;
      el.textContent = id;
      el.addEventListener("pointerdown", (event) => {
        event.preventDefault();
        el.setPointerCapture(event.pointerId);
        app.beginDrag(id);
      });
      return el;
    }),
  );

  panel.replaceChildren(
    ...app.state.measurements.map((m) => {
      const row = document.createElement("tr");
      row.dataset.measurement = m.id;
      if (m.inputs_manual) row.classList.add("manual");
      row.innerHTML = "<td></td><td></td><td></td><td></td>";
      const cells = row.children;
      cells[0]!.textContent = m.id;
      cells[1]!.textContent = m.value === null ? "—" : m.value.toFixed(2);
      cells[2]!.textContent = m.units;
      cells[3]!.textContent = m.status;
      return row;
    }),
  );

  missingList.replaceChildren(
    ...app.state.missing.map((id) => {
      const li = document.createElement("li");
      li.textContent = id;
      return li;
    }),
  );
}

function viewerPoint(event: PointerEvent | WheelEvent): { x: number; y: number } {
  const rect = viewer.getBoundingClientRect();
  return { x: event.clientX - rect.left, y: event.clientY - rect.top };
}

viewer.addEventListener("pointermove", (event) => {
  app.previewDrag(viewerPoint(event));
});
viewer.addEventListener("pointerup", (event) => {
  void app.dropDrag(viewerPoint(event));
});
viewer.addEventListener(
  "wheel",
  (event) => {
    event.preventDefault();
    app.zoomAt(viewerPoint(event), event.deltaY < 0 ? 1.2 : 1 / 1.2);
  },
  { passive: false },
);

window.addEventListener("keydown", (event) => {
  const steps: Record<string, [-1 | 0 | 1, -1 | 0 | 1]> = {
    ArrowLeft: [-1, 0],
    ArrowRight: [1, 0],
    ArrowUp: [0, -1],
    ArrowDown: [0, 1],
  };
  const step = steps[event.key];
  if (step) {
    event.preventDefault();
    void app.nudge(step[0], step[1], event.shiftKey);
  } else if (event.key === "Escape") {
    app.cancelDrag();
  }
});

openButton.addEventListener("click", () => {
  const caseId = caseInput.value.trim();
  if (!caseId) return;
  image.src = api.overlayUrl(caseId);
  void app.openCase(caseId);
});

image.addEventListener("load", () => {
  app.setImageSize(image.naturalWidth, image.naturalHeight);
});

filePicker.addEventListener("change", async () => {
  const file = filePicker.files?.[0];
  if (!file) return;
  try {
    const spacing = spacingInput.value ? Number(spacingInput.value) : undefined;
    const caseId = await api.createCase(file, file.name, spacing);
    await api.decodeCase(caseId);
    caseInput.value = caseId;
    image.src = api.overlayUrl(caseId);
    await app.openCase(caseId);
  } catch (reason) {
    app.state.banner = `upload failed: ${String(reason)}`;
    render();
  }
});

exportButton.addEventListener("click", async () => {
  const csv = await app.exportCsv();
  const blob = new Blob([csv], { type: "text/csv" });
  const link = document.createElement("a");
  link.href = URL.createObjectURL(blob);
  link.download = `${app.state.caseId}.report.csv`;
  link.click();
  URL.revokeObjectURL(link.href);
});

render();
