export type Vec3 = [number, number, number];

/** Geometry of one slice, as served in the X-Frame-Meta header. */
export interface FrameMeta {
  normal: Vec3;
  u: Vec3;
  v: Vec3;
  d: number;
  origin2d: Vec3;
  pitch: number;
  width: number;
  height: number;
  axis_id: number;
  frame_count?: number;
}

export type Label = "positive" | "negative";

export interface PolylineDoc {
  label: Label;
  points_mm: Vec3[];
}

export interface RunConfigDoc {
  k?: number;
  stride_voxels?: number;
  backend?: string;
  min_axes?: number | null;
  seed?: number;
  largest_component?: boolean;
  closing_radius?: number;
}

export type JobState = "queued" | "running" | "done" | "failed";

export interface JobStatus {
  state: JobState;
  progress: number;
  stats: Record<string, unknown> | null;
  error: string | null;
}

export interface VolumeInfo {
  id: string;
  dims: [number, number, number];
  spacing: [number, number, number];
}
