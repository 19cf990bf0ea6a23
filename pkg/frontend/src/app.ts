/** View model for the review screen.
 *
 * Holds the single-tab ViewState and orchestrates the open -> drag ->
 * save -> export cycle against the case service. Every measurement value
 * shown comes verbatim from a service response; nothing is computed
 * locally. Rendering is delegated to callbacks so the model is testable
 * without a DOM.
 */

import { ApiError, CaseApi, Landmark, Measurement } from "./api.js";
import { Point, ViewTransform } from "./transform.js";
import { PutQueue } from "./queue.js";

export interface ViewState {
  caseId: string | null;
  transform: ViewTransform;
  selectedLandmark: string | null;
  landmarks: Map<string, Landmark>;
  missing: string[];
  measurements: Measurement[];
  /** Unsaved drag in flight; false after every acknowledged save. */
  dirty: boolean;
  banner: string | null;
  imageWidth: number;
  imageHeight: number;
}

export interface AppEvents {
  onRender?: () => void;
  onToast?: (message: string) => void;
}

interface DragSession {
  landmarkId: string;
  origin: Point; // image coordinates before the drag
  preview: Point; // live marker position, image coordinates
}

const NUDGE_PX = 1;
const FINE_NUDGE_PX = 0.1;

export class ReviewApp {
  readonly state: ViewState = {
    caseId: null,
    transform: new ViewTransform(),
    selectedLandmark: null,
    landmarks: new Map(),
    missing: [],
    measurements: [],
    dirty: false,
    banner: null,
    imageWidth: 0,
    imageHeight: 0,
  };

  private drag: DragSession | null = null;
  private readonly queue: PutQueue<{ measurements: Measurement[] }>;

  constructor(
    private readonly api: CaseApi,
    private readonly events: AppEvents = {},
  ) {
    this.queue = new PutQueue((landmarkId, x, y) =>
      this.api.putLandmark(this.requireCase(), landmarkId, x, y),
    );
  }

  private requireCase(): string {
    if (!this.state.caseId) throw new Error("no case open");
    return this.state.caseId;
  }

  private render(): void {
    this.state.dirty = this.queue.dirty;
    this.events.onRender?.();
  }

  private toast(message: string): void {
    this.events.onToast?.(message);
  }

  setImageSize(width: number, height: number): void {
    this.state.imageWidth = width;
    this.state.imageHeight = height;
    this.render();
  }

  async openCase(caseId: string): Promise<void> {
    try {
      const report = await this.api.getReportJson(caseId);
      this.state.caseId = caseId;
      this.state.landmarks = new Map(report.landmarks.map((lm) => [lm.id, lm]));
      this.state.missing = [...report.missing];
      this.state.measurements = report.measurements;
      this.state.banner = null;
    } catch (reason) {
      this.state.banner =
        reason instanceof ApiError
          ? `case ${caseId}: ${reason.message} (HTTP ${reason.status})`
          : `service unreachable: ${String(reason)}`;
    }
    this.render();
  }

  async retry(): Promise<void> {
    if (this.state.caseId) await this.openCase(this.state.caseId);
  }

  selectLandmark(landmarkId: string | null): void {
    this.state.selectedLandmark = landmarkId;
    this.render();
  }

  /** Current marker position in image coordinates (live preview while
   * the landmark is being dragged). */
  markerPosition(landmarkId: string): Point | null {
    if (this.drag?.landmarkId === landmarkId) return this.drag.preview;
    const lm = this.state.landmarks.get(landmarkId);
    return lm ? { x: lm.x, y: lm.y } : null;
  }

  markerScreenPosition(landmarkId: string): Point | null {
    const p = this.markerPosition(landmarkId);
    return p ? this.state.transform.imageToScreen(p) : null;
  }

  beginDrag(landmarkId: string): void {
    const lm = this.state.landmarks.get(landmarkId);
    if (!lm) return;
    this.state.selectedLandmark = landmarkId;
    this.drag = {
      landmarkId,
      origin: { x: lm.x, y: lm.y },
      preview: { x: lm.x, y: lm.y },
    };
    this.render();
  }

  /** Live preview: moves only the marker, no network traffic. */
  previewDrag(screen: Point): void {
    if (!this.drag) return;
    this.drag.preview = this.state.transform.screenToImage(screen);
    this.render();
  }

  private insideImage(p: Point): boolean {
    return (
      p.x >= 0 && p.y >= 0 && p.x < this.state.imageWidth && p.y < this.state.imageHeight
    );
  }

  /** Commit the drag: convert the drop point through the inverse view
   * transform and PUT it; the response replaces the measurement panel. */
  async dropDrag(screen: Point): Promise<void> {
    if (!this.drag) return;
    const session = this.drag;
    this.drag = null;
    const target = this.state.transform.screenToImage(screen);
    if (!this.insideImage(target)) {
      this.render(); // snap back, no state change
      return;
    }
    await this.moveLandmark(session.landmarkId, target, session.origin);
  }

  cancelDrag(): void {
    this.drag = null;
    this.render();
  }

  /** Arrow-key nudge of the selected landmark: 1 image px, 0.1 with shift. */
  async nudge(dx: -1 | 0 | 1, dy: -1 | 0 | 1, fine = false): Promise<void> {
    const landmarkId = this.state.selectedLandmark;
    if (!landmarkId) return;
    const lm = this.state.landmarks.get(landmarkId);
    if (!lm) return;
    const step = fine ? FINE_NUDGE_PX : NUDGE_PX;
    const target = { x: lm.x + dx * step, y: lm.y + dy * step };
    if (!this.insideImage(target)) return;
    await this.moveLandmark(landmarkId, target, { x: lm.x, y: lm.y });
  }

  private async moveLandmark(landmarkId: string, target: Point, origin: Point): Promise<void> {
    const previous = this.state.landmarks.get(landmarkId);
    // optimistic marker move; the panel only updates from the ack
    this.state.landmarks.set(landmarkId, {
      id: landmarkId,
      x: target.x,
      y: target.y,
      confidence: null,
      provenance: "manual",
    });
    this.state.missing = this.state.missing.filter((id) => id !== landmarkId);
    this.render();
    try {
      const ack = await this.queue.submit(landmarkId, target.x, target.y);
      this.state.measurements = ack.measurements;
    } catch (reason) {
      // snap back on rejection (e.g. 422 out of bounds)
      if (previous) this.state.landmarks.set(landmarkId, previous);
      else {
        this.state.landmarks.delete(landmarkId);
        this.state.missing = [...this.state.missing, landmarkId];
      }
      this.toast(
        reason instanceof ApiError
          ? `correction rejected: ${reason.message}`
          : `save failed: ${String(reason)}`,
      );
      void origin;
    }
    this.render();
  }

  zoomAt(cursor: Point, factor: number): void {
    this.state.transform = this.state.transform.zoomAt(cursor, factor);
    this.render();
  }

  panBy(dx: number, dy: number): void {
    this.state.transform = this.state.transform.panBy(dx, dy);
    this.render();
  }

  get exportEnabled(): boolean {
    return this.state.caseId !== null && this.state.landmarks.size > 0;
  }

  /** Verbatim CSV pass-through from the service. */
  async exportCsv(): Promise<string> {
    try {
      return await this.api.getReportCsv(this.requireCase());
    } catch (reason) {
      this.toast(`export failed: ${String(reason)}`);
      throw reason;
    }
  }
}
