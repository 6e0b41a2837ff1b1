"""graspdet: 7-DoF parallel-jaw grasp detection and evaluation.

Orientation candidates come from an angle-view heatmap (predicted, ground
truth, or random); an analytic search against the depth point cloud solves
opening width and approach depth; detections are deduplicated with pose NMS
and scored with a force-closure average-precision metric.
"""

from .avh import (
    AngleViewHeatmap,
    GraspAnnotation,
    ImageGrasp,
    extract_candidates,
    ground_truth_avh,
    random_avh,
    read_avh,
    write_avh,
)
from .camera import (
    DEFAULT_INTRINSICS,
    DepthImage,
    GridMap,
    Intrinsics,
    backproject,
    load_depth_pgm,
    point_of_grid,
    save_depth_pgm,
)
from .errors import DimensionMismatch, FormatError
from .fas import (
    DEFAULT_GRIPPER,
    FASConfig,
    GraspPose,
    GripperConfig,
    check_rules,
    detect,
    search,
)
from .geometry import OrientationTable, nearest_class, orientation_from, sample_angles, sample_views
from .kernels import DEFAULT_BACKEND, HAVE_COMPILED
from .metrics import (
    DEFAULT_FRICTIONS,
    APReport,
    ContactPair,
    compute_ap,
    estimate_contacts,
    force_closure,
    label_grasps,
    surface_normals,
)
from .nms import NMSConfig, gpnms
from .scenegen import (
    SyntheticScene,
    oracle_grasps,
    random_scene,
    render_depth,
    sample_surface_cloud,
)
from .spatial import OrientedBox, SpatialIndex, build_index, points_in_box

__version__ = "0.1.0"
