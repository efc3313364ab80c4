import { ApiClient, ApiError } from "./api.js";
import type { JobStatus, RunConfigDoc } from "./types.js";

export type RunPhase = "idle" | "submitting" | "polling" | "done" | "failed";

export interface Notice {
  kind: "job-running" | "backend-unreachable" | "error";
  message: string;
}

export interface RunView {
  phase: RunPhase;
  progress: number;
  notice: Notice | null;
  overlayAvailable: boolean;
}

const POLL_INTERVAL_MS = 500;

const sleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

/**
 * Drives one segmentation run: submit, poll to completion, flip the
 * overlay on. Config changes re-enable submission after a finished run.
 */
export class RunController {
  phase: RunPhase = "idle";
  progress = 0;
  notice: Notice | null = null;
  overlayAvailable = false;
  private listeners: ((v: RunView) => void)[] = [];

  constructor(
    private readonly api: ApiClient,
    private readonly sessionId: string,
    private readonly pollIntervalMs: number = POLL_INTERVAL_MS,
  ) {}

  onChange(fn: (v: RunView) => void): void {
    this.listeners.push(fn);
  }

  private emit(): void {
    const view: RunView = {
      phase: this.phase,
      progress: this.progress,
      notice: this.notice,
      overlayAvailable: this.overlayAvailable,
    };
    for (const fn of this.listeners) fn(view);
  }

  get canRun(): boolean {
    return this.phase === "idle" || this.phase === "done" || this.phase === "failed";
  }

  /** A config edit after a finished run re-arms the run button. */
  configChanged(): void {
    if (this.phase === "done" || this.phase === "failed") {
      this.phase = "idle";
      this.notice = null;
      this.emit();
    }
  }

  async run(config: RunConfigDoc): Promise<JobStatus | null> {
    if (!this.canRun) return null;
    this.phase = "submitting";
    this.notice = null;
    this.progress = 0;
    this.emit();
    let jobId: string;
    try {
      jobId = await this.api.startSegment(this.sessionId, config);
    } catch (err) {
      this.phase = "failed";
      if (err instanceof ApiError && err.status === 409) {
        this.notice = { kind: "job-running", message: "a segmentation job is already running" };
      } else if (err instanceof ApiError && err.status === 503) {
        this.notice = { kind: "backend-unreachable", message: "segmentation backend unreachable" };
      } else {
        this.notice = { kind: "error", message: err instanceof Error ? err.message : String(err) };
      }
      this.emit();
      return null;
    }
    this.phase = "polling";
    this.emit();
    while (true) {
      const status = await this.api.jobStatus(jobId);
      this.progress = status.progress;
      this.emit();
      if (status.state === "done") {
        this.phase = "done";
        this.overlayAvailable = true;
        this.emit();
        return status;
      }
      if (status.state === "failed") {
        this.phase = "failed";
        this.notice = { kind: "error", message: status.error ?? "segmentation failed" };
        this.emit();
        return status;
      }
      await sleep(this.pollIntervalMs);
    }
  }
}
