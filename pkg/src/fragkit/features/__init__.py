from .advanced import (
    GistParams,
    audio_patterns,
    bicoherence,
    chaotic_features,
    gist_features,
    kolmogorov_complexity,
    lz76_complexity,
    ngram_features,
    video_patterns,
)
from .basic import (
    autocorrelation,
    basic_stats,
    bfd,
    bfd_features,
    binary_ratio,
    byte_concentration,
    entropy_features,
    frequency_domain_stats,
    higher_order_stats,
    longest_streak,
    roc_features,
    window_stats,
)
from .config import CATEGORIES, EXAMPLE_566, FeatureConfig, sanitize_name, sanitize_names
from .similarity import (
    CentroidModel,
    RepresentativeSet,
    build_centroid,
    centroid_features,
    lcs_features,
    select_representatives,
)
