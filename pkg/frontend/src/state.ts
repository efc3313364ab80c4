import { pixelToWorld, worldToPixel, onSlice } from "./frame.js";
import type { ApiClient } from "./api.js";
import type { FrameMeta, Label, PolylineDoc, Vec3 } from "./types.js";

export type DrawMode = "positive" | "negative" | "erase";

export interface PixelPoint {
  x: number;
  y: number;
}

const ERASE_RADIUS_PX = 5;

/**
 * Annotation state for one session: the current slice, the polyline being
 * drawn on it, and the committed polylines mirrored from the service.
 * Every mutation of committed state goes through the API client.
 */
export class ViewState {
  axisId = 0;
  index = 0;
  zoom = 1;
  panX = 0;
  panY = 0;
  drawMode: DrawMode = "positive";
  frame: FrameMeta | null = null;
  inProgress: PixelPoint[] = [];
  polylines: PolylineDoc[] = [];

  constructor(
    public readonly sessionId: string,
    private readonly api: ApiClient,
  ) {}

  setFrame(meta: FrameMeta, axisId: number, index: number): void {
    this.frame = meta;
    this.axisId = axisId;
    this.index = index;
    this.inProgress = [];
  }

  async refreshPolylines(): Promise<void> {
    this.polylines = await this.api.getPolylines(this.sessionId);
  }

  addPoint(p: PixelPoint): void {
    if (this.drawMode === "erase" || !this.frame) return;
    this.inProgress.push(p);
  }

  get canCommit(): boolean {
    return this.drawMode !== "erase" && this.inProgress.length >= 2 && this.frame !== null;
  }

  /** Convert the in-progress pixel points to world mm and PUT the full list. */
  async commitPolyline(): Promise<PolylineDoc | null> {
    if (!this.canCommit || !this.frame) return null;
    const points_mm = this.inProgress.map((p) => pixelToWorld(this.frame!, p.x, p.y));
    const poly: PolylineDoc = { label: this.drawMode as Label, points_mm };
    const next = [...this.polylines, poly];
    await this.api.putPolylines(this.sessionId, next);
    this.polylines = next;
    this.inProgress = [];
    return poly;
  }

  /** Polyline vertices that lie on the current slice, in pixel coordinates. */
  visibleVertices(): { polyIndex: number; x: number; y: number }[] {
    return this.visibleVerticesInternal();
  }

  private visibleVerticesInternal(): { polyIndex: number; x: number; y: number }[] {
    if (!this.frame) return [];
    const out: { polyIndex: number; x: number; y: number }[] = [];
    this.polylines.forEach((poly, i) => {
      for (const p of poly.points_mm) {
        if (onSlice(this.frame!, p as Vec3)) {
          const { x, y } = worldToPixel(this.frame!, p as Vec3);
          out.push({ polyIndex: i, x, y });
        }
      }
    });
    return out;
  }

  /** Erase gesture: remove the polyline owning a vertex within 5 px. */
  async eraseAt(p: PixelPoint): Promise<boolean> {
    if (this.drawMode !== "erase" || !this.frame) return false;
    let hit: number | null = null;
    let best = ERASE_RADIUS_PX;
    for (const v of this.visibleVerticesInternal()) {
      const dist = Math.hypot(v.x - p.x, v.y - p.y);
      if (dist <= best) {
        best = dist;
        hit = v.polyIndex;
      }
    }
    if (hit === null) return false;
    const next = this.polylines.filter((_, i) => i !== hit);
    await this.api.putPolylines(this.sessionId, next);
    this.polylines = next;
    return true;
  }

  get hasPositive(): boolean {
    return this.polylines.some((p) => p.label === "positive");
  }
}
