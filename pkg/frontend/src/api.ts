import type { FrameMeta, JobStatus, PolylineDoc, RunConfigDoc, VolumeInfo } from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    detail: string,
  ) {
    super(detail);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/**
 * Typed client for the segmentation service. All segmentation state lives
 * server-side; this class is the only place the UI issues requests from.
 */
export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (i, init) => fetch(i, init),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const resp = await this.fetchImpl(this.base + path, init);
    if (!resp.ok) {
      let detail = `HTTP ${resp.status}`;
      try {
        const doc = await resp.json();
        if (doc && typeof doc.detail === "string") detail = doc.detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(resp.status, detail);
    }
    return resp;
  }

  async uploadVolume(body: ArrayBuffer | Uint8Array): Promise<VolumeInfo> {
    const resp = await this.request("/api/volumes", {
      method: "POST",
      body: body as BodyInit,
    });
    return resp.json();
  }

  sliceUrl(sid: string, axisId: number, index: number, k: number, stride: number): string {
    return `${this.base}/api/volumes/${sid}/slice?axis_id=${axisId}&index=${index}&k=${k}&stride=${stride}`;
  }

  async fetchSlice(
    sid: string,
    axisId: number,
    index: number,
    k: number,
    stride: number,
  ): Promise<{ png: Blob; meta: FrameMeta }> {
    const resp = await this.request(this.sliceUrl(sid, axisId, index, k, stride));
    const metaHeader = resp.headers.get("X-Frame-Meta");
    if (!metaHeader) throw new ApiError(502, "slice reply is missing X-Frame-Meta");
    return { png: await resp.blob(), meta: JSON.parse(metaHeader) as FrameMeta };
  }

  async getPolylines(sid: string): Promise<PolylineDoc[]> {
    const resp = await this.request(`/api/sessions/${sid}/polylines`);
    const doc = await resp.json();
    return doc.polylines as PolylineDoc[];
  }

  async putPolylines(sid: string, polylines: PolylineDoc[]): Promise<void> {
    await this.request(`/api/sessions/${sid}/polylines`, {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ polylines }),
    });
  }

  async startSegment(sid: string, config: RunConfigDoc): Promise<string> {
    const resp = await this.request(`/api/sessions/${sid}/segment`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(config),
    });
    const doc = await resp.json();
    return doc.job_id as string;
  }

  async jobStatus(jobId: string): Promise<JobStatus> {
    const resp = await this.request(`/api/jobs/${jobId}`);
    return resp.json();
  }

  maskSliceUrl(sid: string, axisId: number, index: number): string {
    return `${this.base}/api/sessions/${sid}/mask/slice?axis_id=${axisId}&index=${index}`;
  }

  maskUrl(sid: string): string {
    return `${this.base}/api/sessions/${sid}/mask`;
  }

  meshUrl(sid: string): string {
    return `${this.base}/api/sessions/${sid}/mesh`;
  }
}
