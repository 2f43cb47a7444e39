"""Request-trace analysis, IRM/shot-noise synthesis, LRU cache evaluation."""

from .analysis import (
    ClassSummary,
    ContentStats,
    DensityMap,
    RankDistribution,
    class_summary,
    classify_contents,
    content_stats,
    density_map,
    fit_zipf,
    sliced_popularity,
)
from .cachesim import (
    LruResult,
    compare_required_sizes,
    hit_curve,
    reuse_distances,
    simulate_lru,
    size_for_hit_prob,
)
from .generators import (
    ContentShot,
    IrmConfig,
    PopularityShape,
    SnmClassConfig,
    SnmConfig,
    SnmEventStream,
    daynight_factor,
    generate_irm,
    generate_snm,
    generate_snm_from_config,
    lifespan_to_L,
    modulated_shot_requests,
    parse_snm_config,
    sample_shot_requests,
    write_snm_config,
    zipf_probabilities,
)
from .shuffle import slice_shuffle
from .trace import RequestEvent, Trace, TraceFormatError, Violation, read_trace, validate, write_trace

__version__ = "0.1.0"
