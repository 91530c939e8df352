"""Evolve prompt-conditioned force fields that steer a simulated swarm.

A text prompt becomes an embedding, a small convolutional decoder turns
the embedding into a force field over the arena, the field steers damped
circular agents, and a vision-language evaluator (or a geometric
surrogate) scores how well the final frame matches the prompt. A
(mu + lambda) evolution strategy climbs that score.
"""

from .embedding import (
    CacheProvider,
    EmbeddingCache,
    PromptEmbedding,
    RemoteProvider,
    StubProvider,
    cosine_similarity_matrix,
    embed,
    stub_embed,
)
from .errors import PromptFieldError
from .evaluate import (
    EvalContext,
    ScoreResult,
    SurrogateScorer,
    VlmConfig,
    VlmScorer,
    build_query,
    cached,
    parse_score,
    score_surrogate,
    score_vlm,
)
from .evolve import EvoConfig, GenerationRecord, evolve, mutate, recombine
from .p2i import (
    Architecture,
    Checkpoint,
    Genome,
    VectorField,
    decode_field,
    genome_len,
    init_genome,
    load_checkpoint,
    save_checkpoint,
    zero_field,
)
from .render import Raster, RenderStyle, encode_png, raster_digest, render_frame
from .rng import SplitMix64, fnv1a64, mix64
from .stats import (
    Summary,
    TestResult,
    mean_pairwise_distance,
    summarize,
    wilcoxon_one_sample,
    wilcoxon_signed_rank,
)
from .swarm import (
    PhysicsConfig,
    WorldState,
    frame_record,
    init_world,
    repulsion_force,
    run,
    sample_field,
    step,
    trace_writer,
)

__version__ = "0.1.0"
