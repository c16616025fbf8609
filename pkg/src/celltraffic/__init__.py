"""celltraffic: spatial cellular traffic with tunable heterogeneity and
station correlation.

Generate user point patterns whose normalized coefficient of variation
(C, clustering) and station-correlation coefficient (rho, cell-center vs
cell-edge affinity) can be dialed in, measure those statistics on arbitrary
patterns, calibrate and invert the generator's parameter maps, and evaluate
downlink rate/coverage impact by Monte Carlo.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .association import (
    DEFAULT_CHANNEL,
    BaseStation,
    GeometryChannel,
    LayoutSpec,
    NetworkLayout,
    boundary_distance,
    cell_potential_integral,
    correlation_coefficient,
    potential,
    potentials,
    read_layout_json,
    serving_station,
    serving_stations,
    write_layout_json,
)
from .calibration import (
    CalibrationConfig,
    CalibrationTable,
    FeasibleRegion,
    build_calibration,
    feasible,
    invert,
)
from .errors import (
    CellTrafficError,
    DegenerateInput,
    EmptyAttractorSet,
    EmptyPattern,
    Infeasible,
    NumericalNonConvergence,
    TooFewPoints,
)
from .geom import (
    PointPattern,
    Triangulation,
    VoronoiDiagram,
    Window,
    delaunay,
    natural_neighbors,
    read_pattern_csv,
    voronoi,
    write_pattern_csv,
)
from .measures import (
    MEASURES,
    PPP_COV_2D,
    measure_samples,
    normalized_cov,
    summarize,
)
from .netsim import (
    ChannelModel,
    DropResult,
    kpi_over_drops,
    los_probability,
    path_loss,
    run_drop,
    sinr,
    sweep,
)
from .pointgen import RandomStream, generate_lattice, generate_ppp, perturb, substream
from .traffic import (
    TGIP,
    TrafficStats,
    generate_traffic,
    measure_traffic,
    move_attractors,
    move_ues,
    sigma_beta,
)

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "__version__",
    # geom
    "Window",
    "PointPattern",
    "Triangulation",
    "VoronoiDiagram",
    "delaunay",
    "voronoi",
    "natural_neighbors",
    "read_pattern_csv",
    "write_pattern_csv",
    # pointgen
    "RandomStream",
    "substream",
    "generate_ppp",
    "generate_lattice",
    "perturb",
    # measures
    "MEASURES",
    "PPP_COV_2D",
    "measure_samples",
    "summarize",
    "normalized_cov",
    # association
    "GeometryChannel",
    "DEFAULT_CHANNEL",
    "BaseStation",
    "NetworkLayout",
    "LayoutSpec",
    "serving_station",
    "serving_stations",
    "boundary_distance",
    "potential",
    "potentials",
    "correlation_coefficient",
    "cell_potential_integral",
    "read_layout_json",
    "write_layout_json",
    # traffic
    "TGIP",
    "TrafficStats",
    "sigma_beta",
    "move_attractors",
    "move_ues",
    "generate_traffic",
    "measure_traffic",
    # calibration
    "CalibrationConfig",
    "CalibrationTable",
    "FeasibleRegion",
    "build_calibration",
    "feasible",
    "invert",
    # netsim
    "ChannelModel",
    "DropResult",
    "path_loss",
    "los_probability",
    "sinr",
    "run_drop",
    "kpi_over_drops",
    "sweep",
    # errors
    "CellTrafficError",
    "DegenerateInput",
    "TooFewPoints",
    "EmptyPattern",
    "EmptyAttractorSet",
    "NumericalNonConvergence",
    "Infeasible",
]
