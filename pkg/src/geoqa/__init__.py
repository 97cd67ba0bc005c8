"""geoqa: accessible geovisualization question answering.

Loads regional boundary/attribute datasets, answers natural-language
analytical and geospatial questions through a staged classification pipeline
(with a deterministic offline fallback), computes spatial autocorrelation
statistics, and drives a synchronized keyboard-navigable map service.
"""

from .analytics import AnalyticsEngine, FilterCondition, Scope, SortSpec
from .answers import Answer, AnswerSource, MapDirective, capability_list
from .engine import Engine, build_engine
from .geodata import (
    GeoDataset,
    Level,
    MetricDefinition,
    Region,
    load_dataset,
    schema_summary,
)
from .navigation import (
    Direction,
    FocusState,
    NavigationGraph,
    build_navigation_graph,
    move,
    zoom_in,
    zoom_out,
)
from .pipeline import QueryClass, RefinedQuery, UserInput, refine_query, run_pipeline
from .session import SessionState
from .spatial_stats import (
    LisaLabel,
    LisaResult,
    MoranResult,
    SpatialWeights,
    build_queen_weights,
    global_morans_i,
    lisa,
    row_standardize,
    standardize_field,
    summarize_pattern,
)

__version__ = "0.1.0"
