"""(mu + lambda) evolution over decoder genomes with a pluggable scorer.

Parents stay in the candidate pool, so under a scorer that is a fixed
function of the genome the best fitness per generation never decreases.
Every stochastic choice runs off streams derived from (master seed,
generation, candidate index), which makes results independent of
evaluation order and therefore of the worker count.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .embedding import PromptEmbedding
from .errors import (
    ConfigError,
    DimensionMismatch,
    EvaluatorUnavailable,
    EvolutionAborted,
    IncompatibleGenomes,
    NoScoreFound,
    UnparseableReply,
)
from .evaluate import EvalContext, Scorer
from .p2i import Architecture, Genome, decode_field, init_genome
from .render import RenderStyle, render_frame
from .rng import SplitMix64, mix64
from .stats import summarize
from .swarm import PhysicsConfig, init_world, run

log = logging.getLogger(__name__)

# stream index reserved for breeding draws; far above any candidate index
_BREED_STREAM = 1 << 32


@dataclass(frozen=True)
class EvoConfig:
    mu: int = 5
    lam: int = 15
    generations: int = 50
    sigma: float = 0.1
    seed: int = 0
    crossover_rate: float = 0.5

    def __post_init__(self):
        if self.mu < 1 or self.lam < 1:
            raise ConfigError("mu and lam must be >= 1")
        if self.generations < 1:
            raise ConfigError("generations must be >= 1")
        if self.sigma < 0:
            raise ConfigError("sigma must be >= 0")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ConfigError("crossover_rate must be in [0, 1]")


@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    best: float
    mean: float
    std: float
    evaluations: int
    wall_time: float


LogSink = Callable[[GenerationRecord], None]


def recombine(g1: Genome, g2: Genome, rng: SplitMix64, rate: float = 0.5) -> Genome:
    """Uniform per-gene crossover: take from g1 with probability rate."""
    if g1.arch != g2.arch:
        raise IncompatibleGenomes(f"{g1.arch} != {g2.arch}")
    mask = rng.uniforms(len(g1)) < rate
    return Genome(np.where(mask, g1.weights, g2.weights), g1.arch)


def mutate(genome: Genome, sigma: float, rng: SplitMix64) -> Genome:
    """Add i.i.d. Gaussian noise with standard deviation sigma to every gene."""
    if sigma < 0:
        raise ConfigError("sigma must be >= 0")
    return Genome(genome.weights + sigma * rng.normals(len(genome)), genome.arch)


def _evaluate_candidate(
    genome: Genome,
    embedding: PromptEmbedding,
    prompt: str,
    scorer: Scorer,
    physics: PhysicsConfig,
    world_seed: int,
    style: RenderStyle,
) -> float:
    field = decode_field(genome, embedding)
    world_start = init_world(physics, SplitMix64(world_seed))
    world_final = run(world_start, field, physics)
    raster = render_frame(world_final, style)
    ctx = EvalContext(
        prompt=prompt,
        genome=genome,
        field=field,
        world_start=world_start,
        world_final=world_final,
        raster=raster,
    )
    try:
        return scorer(ctx).score
    except (EvaluatorUnavailable, UnparseableReply, NoScoreFound) as exc:
        log.warning("candidate evaluation failed, assigning fitness 0.0: %s", exc)
        return 0.0


def evolve(
    arch: Architecture,
    embedding: PromptEmbedding,
    scorer: Scorer,
    physics: PhysicsConfig,
    evo: EvoConfig,
    prompt: str = "",
    log_sink: LogSink | None = None,
    workers: int = 1,
    initial_population: list[Genome] | None = None,
) -> tuple[Genome, list[GenerationRecord]]:
    """Run the full loop and return (best-ever genome, per-generation records).

    Candidate c of generation g is evaluated on a world seeded with
    mix64(seed, g, c); generation 0 seeds the initial population. Failed
    evaluations score 0.0; non-evaluation errors abort the run.
    """
    if embedding.dim != arch.embed_dim:
        raise DimensionMismatch(
            f"embedding dim {embedding.dim} != architecture embed_dim {arch.embed_dim}"
        )
    if workers < 1:
        raise ConfigError("workers must be >= 1")

    if initial_population is None:
        population = [
            init_genome(arch, SplitMix64(mix64(evo.seed, 0, i))) for i in range(evo.mu)
        ]
    else:
        if len(initial_population) != evo.mu:
            raise ConfigError(f"initial population must hold exactly mu={evo.mu} genomes")
        for g in initial_population:
            if g.arch != arch:
                raise IncompatibleGenomes(f"{g.arch} != {arch}")
        population = list(initial_population)

    style = RenderStyle(dot_radius=physics.radius)
    best_genome: Genome | None = None
    best_fitness = -np.inf
    records: list[GenerationRecord] = []

    for gen in range(1, evo.generations + 1):
        breed = SplitMix64(mix64(evo.seed, gen, _BREED_STREAM))
        candidates = list(population)
        for _ in range(evo.lam):
            a = breed.next_below(evo.mu)
            if evo.mu > 1:
                b = breed.next_below(evo.mu - 1)
                if b >= a:
                    b += 1
            else:
                b = a
            child = recombine(population[a], population[b], breed, evo.crossover_rate)
            candidates.append(mutate(child, evo.sigma, breed))

        started = time.perf_counter()
        seeds = [mix64(evo.seed, gen, c) for c in range(len(candidates))]

        def score_one(pair: tuple[Genome, int]) -> float:
            genome, world_seed = pair
            return _evaluate_candidate(
                genome, embedding, prompt, scorer, physics, world_seed, style
            )

        try:
            if workers == 1:
                fitness = [score_one(p) for p in zip(candidates, seeds)]
            else:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    fitness = list(pool.map(score_one, zip(candidates, seeds)))
        except Exception as exc:
            raise EvolutionAborted(f"generation {gen} failed: {exc}") from exc
        wall = time.perf_counter() - started

        order = sorted(range(len(candidates)), key=lambda i: (-fitness[i], i))
        population = [candidates[i] for i in order[: evo.mu]]
        if fitness[order[0]] > best_fitness:
            best_fitness = fitness[order[0]]
            best_genome = candidates[order[0]]

        stats = summarize(fitness)
        record = GenerationRecord(
            generation=gen,
            best=fitness[order[0]],
            mean=stats.mean,
            std=stats.std,
            evaluations=len(candidates),
            wall_time=wall,
        )
        records.append(record)
        if log_sink is not None:
            log_sink(record)

    assert best_genome is not None
    return best_genome, records
