"""driftscope: lexical semantic change from masked-token substitutes.

Represents each term, per time period, by the distribution of its top-k
masked substitutes; change is the base-2 Jensen-Shannon divergence
between the two distributions, rescaled to a quantile among background
terms of similar frequency. Includes substitute-graph sense induction
and an evaluation harness against gold human ratings.
"""

from .align import (
    AlignmentConfig,
    AlignmentMap,
    align_document,
    build_alignment,
    filter_aligned_tokens,
    map_term_indices,
)
from .backends import (
    FixedRankingBackend,
    StdioSubstituter,
    SyntheticSubstituter,
    TcpSubstituter,
    synthetic_substituter,
)
from .config import CorpusSpec, RunConfig, load_config
from .corpus import (
    Corpus,
    Document,
    FrequencyTable,
    Occurrence,
    OccurrenceIndex,
    build_index,
    load_corpus,
    sample_occurrences,
    select_background_terms,
    term_frequencies,
    vocabulary_frequencies,
)
from .errors import (
    BackendError,
    ConfigError,
    DataError,
    DriftscopeError,
    ProtocolError,
)
from .evaluation import (
    EvalResult,
    GoldRatings,
    aggregate,
    apply_exclusions,
    average_annotations,
    pearson,
    spearman,
)
from .gateway import (
    MaskedContext,
    SubstituteSet,
    SubstituterConfig,
    extract_context_window,
    filter_substitutes,
    request_substitutes,
)
from .metric import (
    ChangeScore,
    ReplacementDistribution,
    count_replacements,
    frequency_window,
    jsd,
    scaled_score,
    score_all,
)
from .senses import (
    MentionAssignment,
    SensePartition,
    SenseProfile,
    SubstituteGraph,
    assign_mentions,
    build_cooccurrence_graph,
    louvain_partition,
    sense_profile,
)

__version__ = "0.1.0"
