"""Topology-quality and grounding-accuracy bounds for object-centric navigation."""

from .geometry import OrientedBox, calibrate_offset, distort_dims, perturb_box, self_translation_iou, voxel_iou_oracle
from .scene import Episode, Scene, SceneParams, default_scene_set, generate_scene, load_scene, save_scene, validate_scene
from .sim import DegradationConfig, compute_metrics, run_fast_episode, run_slow_episode, run_sweep
from .skills import SkillError, SkillParams, approach_target, project_to_viewpoint, through_target
from .stats import bucket_sr, curve_by_grid, pearson
from .topograph import TopoGraph, matching_score, retained_count, truncate

__version__ = "0.1.0"
