"""End-to-end orchestration: resample, slice, segment, vote, mesh.

``run_pipeline`` is deterministic for fixed inputs, config, and seed,
independent of the worker count: vote accumulation is commutative integer
arithmetic and all per-task randomness is keyed by task identity.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field, replace

import numpy as np

from .backends import BackendSpec, build_backend, segment2d
from .errors import BackendUnavailable, NoPositivePrompts, ProtocolError
from .geometry import AxisSet, Polyline, axis_set
from .metrics import dice
from .recompose import (
    Mesh,
    VoteGrid,
    marching_cubes,
    mask_to_points,
    postprocess,
    threshold_votes,
)
from .slicing import SliceTask, schedule
from .volume import (
    MaskVolume,
    NormalizedVolume,
    Volume,
    mask_resample_nearest,
    resample_isotropic,
    window_normalize,
)


@dataclass(frozen=True)
class RunConfig:
    k: int = 3
    stride_voxels: int = 1
    backend: BackendSpec = field(default_factory=lambda: BackendSpec(kind="flood", tau=128))
    min_axes: int | None = None  # default: strict majority ceil(k/2)
    min_hits: int = 1
    window: tuple[float, float] = (0.5, 99.5)
    largest_component: bool = False
    closing_radius: int = 0
    seed: int = 0
    workers: int | None = None  # default: logical cores
    resample_to_input: bool = False  # nearest-neighbor mask back to input grid

    def __post_init__(self):
        if self.k not in (3, 4, 6, 10):
            raise ValueError(f"k must be one of 3, 4, 6, 10, got {self.k}")
        if self.stride_voxels < 1:
            raise ValueError("stride_voxels must be >= 1")
        if self.min_axes is not None and not 1 <= self.min_axes <= self.k:
            raise ValueError(f"min_axes must be in [1, {self.k}]")

    @property
    def effective_min_axes(self) -> int:
        return self.min_axes if self.min_axes is not None else math.ceil(self.k / 2)

    def seeded_backend(self) -> BackendSpec:
        """Offset fault seeds by the run seed so reruns can vary together."""
        spec = self.backend
        if spec.kind == "fault":
            return replace(spec, seed=spec.seed + self.seed)
        return spec


@dataclass
class RunResult:
    mask: MaskVolume
    mesh: Mesh | None
    stats: dict


def segment_votes(
    v: Volume, prompts: list[Polyline], cfg: RunConfig, progress_cb=None
) -> tuple[VoteGrid, NormalizedVolume, dict]:
    """Run the pipeline through vote accumulation (no thresholding yet)."""
    if not any(p.positive for p in prompts):
        raise NoPositivePrompts("at least one positive polyline is required")
    stats: dict = {"wall_time": {}}
    t0 = time.perf_counter()
    iso = resample_isotropic(v)
    stats["wall_time"]["resample"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    nv = window_normalize(iso, *cfg.window)
    stats["wall_time"]["normalize"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    axes = axis_set(cfg.k)
    tasks = schedule(nv, axes, prompts, cfg.stride_voxels)
    stats["wall_time"]["schedule"] = time.perf_counter() - t0
    stats["tasks_total"] = len(tasks)

    backend = build_backend(cfg.seeded_backend())
    grid = VoteGrid(nv)
    failed = 0
    done = 0
    t0 = time.perf_counter()
    workers = cfg.workers or os.cpu_count() or 1
    if workers == 1:
        results = ((task, _try_segment(backend, task)) for task in tasks)
    else:
        executor = ThreadPoolExecutor(max_workers=workers)
        futures = {executor.submit(_try_segment, backend, task): task for task in tasks}
        results = ((futures[f], f.result()) for f in as_completed(futures))
    for task, mask in results:
        done += 1
        if mask is None:
            failed += 1
        else:
            grid.accumulate(mask_to_points(mask, task.frame))
        if progress_cb is not None:
            progress_cb(done, len(tasks))
    if workers != 1:
        executor.shutdown()
    stats["wall_time"]["segment"] = time.perf_counter() - t0
    stats["tasks_failed"] = failed
    stats["points_total"] = grid.points_total
    stats["points_dropped"] = grid.points_dropped
    if tasks and failed * 2 > len(tasks):
        raise BackendUnavailable(f"{failed} of {len(tasks)} slice tasks failed")
    return grid, nv, stats


def _try_segment(backend, task: SliceTask):
    try:
        return segment2d(backend, task)
    except (BackendUnavailable, ProtocolError):
        return None


def run_pipeline(
    v: Volume, prompts: list[Polyline], cfg: RunConfig, progress_cb=None
) -> RunResult:
    """Full run: returns the voxel mask, its surface mesh, and run stats."""
    grid, nv, stats = segment_votes(v, prompts, cfg, progress_cb=progress_cb)

    t0 = time.perf_counter()
    mask = threshold_votes(grid, cfg.effective_min_axes, cfg.min_hits)
    mask = postprocess(
        mask, largest_component=cfg.largest_component, closing_radius=cfg.closing_radius
    )
    stats["wall_time"]["vote_and_postprocess"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    mesh = marching_cubes(mask) if mask.data.any() else None
    stats["wall_time"]["mesh"] = time.perf_counter() - t0
    stats["mask_voxels"] = mask.count()

    if cfg.resample_to_input:
        mask = mask_resample_nearest(mask, v)
    return RunResult(mask=mask, mesh=mesh, stats=stats)


def experiment_transforms(
    v: Volume,
    prompts: list[Polyline],
    base_cfg: RunConfig,
    ks: list[int],
    gt: MaskVolume,
) -> list[dict]:
    """Accuracy/cost table over axis counts, scored against a ground truth."""
    rows = []
    for k in ks:
        cfg = replace(base_cfg, k=k, min_axes=None)
        t0 = time.perf_counter()
        result = run_pipeline(v, prompts, cfg)
        wall = time.perf_counter() - t0
        rows.append(
            {
                "k": k,
                "dice": dice(result.mask, gt),
                "tasks": result.stats["tasks_total"],
                "wall_time": wall,
            }
        )
    return rows


def experiment_rows_to_csv(rows: list[dict]) -> str:
    lines = ["k,dice,tasks,wall_time"]
    for r in rows:
        lines.append(f"{r['k']},{r['dice']:.6f},{r['tasks']},{r['wall_time']:.3f}")
    return "\n".join(lines) + "\n"
