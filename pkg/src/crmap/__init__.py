"""Confidence-rich occupancy grid mapping with a Log-Odds baseline."""

from .belief import MapBelief, VoxelBelief, init_bernoulli_prior, init_prior, midpoint_support
from .crm_filter import alpha_beta, map_scans, update_ray, update_scan
from .grid import GridSpec, Ray, RayTrace, trace_ray, voxel_center, world_to_voxel
from .logodds import IsmParams, LogOddsMap, ism_lookup, ism_sweep_grid, logodds_update
from .metrics import EvalReport, evaluate, inconsistency
from .sensor_model import NO_RETURN, RangingModel, cause_prior, sensor_cause_model
from .sim import GroundTruthMap, SensorRig, corridor_map, corridor_trajectory, simulate_scan

__version__ = "0.1.0"
