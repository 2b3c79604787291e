"""Trajectory-matching metric, toy trajectory extraction and pixel metrics."""

from .extract import extract_trajectories_toy
from .hungarian import Matching, hungarian
from .metrics import psnr, psnr_for_json, ssim
from .mtem import (
    DetectionRecord,
    MtemScore,
    cost_matrix,
    fill_gaps,
    ingest_detections,
    mtem_score,
    read_detections_csv,
    traj_distance,
    trajset_to_detections,
    write_detections_csv,
)

__all__ = [
    "DetectionRecord",
    "Matching",
    "MtemScore",
    "cost_matrix",
    "extract_trajectories_toy",
    "fill_gaps",
    "hungarian",
    "ingest_detections",
    "mtem_score",
    "psnr",
    "psnr_for_json",
    "read_detections_csv",
    "ssim",
    "traj_distance",
    "trajset_to_detections",
    "write_detections_csv",
]
