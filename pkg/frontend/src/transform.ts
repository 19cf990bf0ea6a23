/** Screen <-> image coordinate transform for the zoom/pan viewer.
 *
 * screen = image * zoom + pan. Zoom is clamped to [MIN_ZOOM, MAX_ZOOM];
 * the transform is invertible at every zoom in that range.
 */

export interface Point {
  x: number;
  y: number;
}

export const MIN_ZOOM = 0.25;
export const MAX_ZOOM = 8;

export function clampZoom(zoom: number): number {
  return Math.min(MAX_ZOOM, Math.max(MIN_ZOOM, zoom));
}

export class ViewTransform {
  readonly zoom: number;
  readonly panX: number;
  readonly panY: number;

  constructor(zoom = 1, panX = 0, panY = 0) {
    this.zoom = clampZoom(zoom);
    this.panX = panX;
    this.panY = panY;
  }

  imageToScreen(p: Point): Point {
    return { x: p.x * this.zoom + this.panX, y: p.y * this.zoom + this.panY };
  }

  screenToImage(p: Point): Point {
    return { x: (p.x - this.panX) / this.zoom, y: (p.y - this.panY) / this.zoom };
  }

  /** New transform zoomed by `factor`, keeping the image point under the
   * screen-space `cursor` fixed. */
  zoomAt(cursor: Point, factor: number): ViewTransform {
    const next = clampZoom(this.zoom * factor);
    const anchor = this.screenToImage(cursor);
    return new ViewTransform(
      next,
      cursor.x - anchor.x * next,
      cursor.y - anchor.y * next,
    );
  }

  panBy(dx: number, dy: number): ViewTransform {
    return new ViewTransform(this.zoom, this.panX + dx, this.panY + dy);
  }
}
