"""Reeb graph models of an agent's daily GPS routine.

Typical use::

    from lifereeb import ReebAnomalyDetector, generate_case_study

    cs = generate_case_study(seed=0)
    detector = ReebAnomalyDetector(eps=0.0005).fit(cs.train)
    scores = detector.score_samples(list(cs.tests.values()))
"""
from .anomaly import AnomalyReport, HourDistance, iterative_detect, reeb_distance
from .estimators import ReebAnomalyDetector, ReebGraphBuilder
from .events import EventKind, EventRecord, PairEventMap, find_all_events, find_boundary_events, find_pair_events
from .reeb import (
    Bundle,
    BundlePartition,
    DynamicGraph,
    MalformedEventStreamError,
    ReebEdge,
    ReebGraph,
    ReebNode,
    connected_components,
    construct_reeb,
    partition_bundles,
    replay_events,
)
from .synthgen import generate_case_study, generate_day
from .trajectory import (
    DEFAULT_EPS,
    DEFAULT_M,
    GpsPoint,
    Trajectory,
    TrajectorySet,
    ValidationError,
    downsample,
    gps_distance,
    validate_set,
)

__version__ = "0.1.0"
