"""Machine-readable run reports.

Every figure is recomputed from engine instrumentation collected during
the run, never copied from the configuration; the config itself appears
only under the separate "config" echo. JSON is emitted with sorted keys
so reports are byte-stable, apart from the wall-clock timings.
"""

from __future__ import annotations

import json

from .cascade import StageResult
from .errors import ContractViolationError


def stage_report(result: StageResult) -> dict:
    stats = result.stats
    if stats.max_patch_area > stats.configured_patch_area:
        raise ContractViolationError(
            f"stage {result.index}: denoiser saw patch area {stats.max_patch_area} "
            f"above configured {stats.configured_patch_area}")
    counts = stats.patches_per_step
    return {
        "index": result.index,
        "height": result.spec.height,
        "width": result.spec.width,
        "latent_channels": result.latent_shape[0],
        "latent_height": result.latent_shape[1],
        "latent_width": result.latent_shape[2],
        "seed": result.seed,
        "patches_per_step": {
            "min": min(counts),
            "mean": round(sum(counts) / len(counts), 6),
            "max": max(counts),
        },
        "denoiser_calls": stats.denoiser_calls,
        "max_patch_area": stats.max_patch_area,
        "configured_patch_area": stats.configured_patch_area,
        "wall_time_s": round(stats.wall_time_s, 6),
    }


def build_report(config_echo: dict, results: list[StageResult],
                 engine_version: str) -> dict:
    return {
        "engine_version": engine_version,
        "config": config_echo,
        "stages": [stage_report(r) for r in results],
    }


def report_text(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def normalized_report_text(text: str) -> str:
    """Report text with wall-clock fields zeroed, for byte comparisons."""
    data = json.loads(text)
    for stage in data.get("stages", []):
        stage["wall_time_s"] = 0.0
    return report_text(data)
