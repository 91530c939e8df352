"""Experiment orchestration behind the CLI: training runs, single
simulations, batch evaluation, and run-log statistics.

Artifacts land under <out>/<grid>/<seed>/ and are byte-identical across
re-runs of the same seed and config, except for wall-time fields.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embedding import (
    CacheProvider,
    Provider,
    RemoteProvider,
    StubProvider,
    embed,
)
from .errors import AllZeroDifferences, ConfigError, ParseError
from .evaluate import (
    EvalContext,
    Scorer,
    SurrogateScorer,
    VlmConfig,
    VlmScorer,
    cached,
)
from .evolve import EvoConfig, GenerationRecord, evolve
from .p2i import (
    Architecture,
    Checkpoint,
    decode_field,
    load_checkpoint,
    save_checkpoint,
)
from .render import RenderStyle, encode_png, render_frame
from .rng import SplitMix64, mix64
from .stats import TestResult, mean_pairwise_distance, summarize, wilcoxon_one_sample, wilcoxon_signed_rank
from .swarm import PhysicsConfig, init_world, run, trace_writer

log = logging.getLogger(__name__)

SUPPORTED_GRIDS = (2, 5, 10)


@dataclass(frozen=True)
class ScorerSpec:
    kind: str = "surrogate"  # "surrogate" | "vlm"
    intent: str = "cluster"  # "cluster" | "scatter"
    vlm: VlmConfig | None = None
    cache_path: str | None = None

    def __post_init__(self):
        if self.kind not in ("surrogate", "vlm"):
            raise ConfigError("scorer must be surrogate or vlm")
        if self.kind == "vlm" and self.vlm is None:
            raise ConfigError("vlm scorer needs a VlmConfig")


@dataclass(frozen=True)
class EmbedderSpec:
    kind: str = "stub"  # "stub" | "cache" | "remote"
    path: str | None = None  # cache file
    url: str | None = None  # remote endpoint

    def __post_init__(self):
        if self.kind not in ("stub", "cache", "remote"):
            raise ConfigError("embedder must be stub, cache, or remote")
        if self.kind == "cache" and not self.path:
            raise ConfigError("cache embedder needs a file path")
        if self.kind == "remote" and not self.url:
            raise ConfigError("remote embedder needs an endpoint URL")


def build_provider(spec: EmbedderSpec, dim: int) -> Provider:
    if spec.kind == "stub":
        return StubProvider(dim=dim)
    if spec.kind == "cache":
        return CacheProvider(spec.path)
    return RemoteProvider(spec.url)


def build_scorer(spec: ScorerSpec) -> Scorer:
    base: Scorer
    if spec.kind == "surrogate":
        base = SurrogateScorer(spec.intent)
    else:
        base = VlmScorer(spec.vlm)
    if spec.cache_path:
        return cached(base, spec.cache_path)
    return base


@dataclass(frozen=True)
class RunConfig:
    prompt: str
    out_dir: str
    grid: int = 5
    embed_dim: int = 384
    seeds: tuple[int, ...] = (0,)
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    evo: EvoConfig = field(default_factory=EvoConfig)
    scorer: ScorerSpec = field(default_factory=ScorerSpec)
    embedder: EmbedderSpec = field(default_factory=EmbedderSpec)
    workers: int = 1

    def __post_init__(self):
        if not self.prompt:
            raise ConfigError("prompt must be non-empty")
        if self.grid not in SUPPORTED_GRIDS:
            raise ConfigError(f"grid must be one of {SUPPORTED_GRIDS}, got {self.grid}")
        if not self.seeds:
            raise ConfigError("need at least one seed")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be unique")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")


def _config_document(cfg: RunConfig) -> dict:
    """Every effective setting, defaults included, for provenance."""
    return {
        "prompt": cfg.prompt,
        "grid": cfg.grid,
        "embed_dim": cfg.embed_dim,
        "seeds": list(cfg.seeds),
        "physics": dataclasses.asdict(cfg.physics),
        "evo": dataclasses.asdict(cfg.evo),
        "scorer": {
            "kind": cfg.scorer.kind,
            "intent": cfg.scorer.intent,
            "vlm": dataclasses.asdict(cfg.scorer.vlm) if cfg.scorer.vlm else None,
            "cache_path": cfg.scorer.cache_path,
        },
        "embedder": dataclasses.asdict(cfg.embedder),
        "workers": cfg.workers,
    }


@dataclass(frozen=True)
class SeedOutcome:
    seed: int
    best_fitness: float
    checkpoint: str
    run_log: str


@dataclass(frozen=True)
class TrainSummary:
    prompt: str
    grid: int
    outcomes: tuple[SeedOutcome, ...]
    best_seed: int
    worst_seed: int


def _record_line(rec: GenerationRecord) -> str:
    return json.dumps(
        {
            "generation": rec.generation,
            "best": rec.best,
            "mean": rec.mean,
            "std": rec.std,
            "evaluations": rec.evaluations,
            "wall_time": rec.wall_time,
        }
    )


def cmd_train(cfg: RunConfig) -> TrainSummary:
    """Train one run per seed; write checkpoint, run log, and final frame each."""
    arch = Architecture(embed_dim=cfg.embed_dim, grid=cfg.grid)
    provider = build_provider(cfg.embedder, cfg.embed_dim)
    embedding = embed(cfg.prompt, provider)
    scorer = build_scorer(cfg.scorer)

    grid_dir = Path(cfg.out_dir) / str(cfg.grid)
    grid_dir.mkdir(parents=True, exist_ok=True)
    (grid_dir / "config.json").write_text(
        json.dumps(_config_document(cfg), indent=2) + "\n", encoding="utf-8"
    )

    outcomes = []
    for seed in cfg.seeds:
        seed_dir = grid_dir / str(seed)
        seed_dir.mkdir(parents=True, exist_ok=True)
        log_path = seed_dir / "run_log.jsonl"
        ckpt_path = seed_dir / "checkpoint.json"

        with open(log_path, "w", encoding="utf-8") as fh:
            best, records = evolve(
                arch,
                embedding,
                scorer,
                cfg.physics,
                dataclasses.replace(cfg.evo, seed=seed),
                prompt=cfg.prompt,
                log_sink=lambda rec: fh.write(_record_line(rec) + "\n"),
                workers=cfg.workers,
            )
        best_fitness = max(rec.best for rec in records)
        save_checkpoint(
            Checkpoint(
                arch=arch,
                prompt=cfg.prompt,
                seed=seed,
                generation=cfg.evo.generations,
                best_fitness=best_fitness,
                genome=best,
            ),
            ckpt_path,
        )

        # one demo rollout of the winning genome for quick visual inspection
        field_vec = decode_field(best, embedding)
        world = init_world(cfg.physics, SplitMix64(mix64(seed, 0, 0)))
        final = run(world, field_vec, cfg.physics)
        frame = render_frame(final, RenderStyle(dot_radius=cfg.physics.radius))
        (seed_dir / "final.png").write_bytes(encode_png(frame))

        outcomes.append(
            SeedOutcome(
                seed=seed,
                best_fitness=best_fitness,
                checkpoint=str(ckpt_path),
                run_log=str(log_path),
            )
        )
        log.info("seed %d finished, best fitness %.4f", seed, best_fitness)

    ranked = sorted(outcomes, key=lambda o: (-o.best_fitness, o.seed))
    summary = TrainSummary(
        prompt=cfg.prompt,
        grid=cfg.grid,
        outcomes=tuple(outcomes),
        best_seed=ranked[0].seed,
        worst_seed=ranked[-1].seed,
    )
    (grid_dir / "summary.json").write_text(
        json.dumps(
            {
                "prompt": summary.prompt,
                "grid": summary.grid,
                "seeds": [
                    {
                        "seed": o.seed,
                        "best_fitness": o.best_fitness,
                        "checkpoint": o.checkpoint,
                    }
                    for o in summary.outcomes
                ],
                "best_seed": summary.best_seed,
                "worst_seed": summary.worst_seed,
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    return summary


@dataclass(frozen=True)
class SimulateResult:
    pwd_initial: float
    pwd_final: float
    steps: int


def cmd_simulate(
    checkpoint_path: str,
    out_png: str,
    out_trace: str | None = None,
    seed: int = 0,
    physics: PhysicsConfig | None = None,
    embedder: EmbedderSpec = EmbedderSpec(),
    prompt: str | None = None,
) -> SimulateResult:
    """Roll one world under a checkpoint's field; write final frame and trace."""
    ckpt = load_checkpoint(checkpoint_path)
    physics = physics or PhysicsConfig()
    text = prompt if prompt is not None else ckpt.prompt
    embedding = embed(text, build_provider(embedder, ckpt.arch.embed_dim))
    field_vec = decode_field(ckpt.genome, embedding)

    world = init_world(physics, SplitMix64(seed))
    pwd_initial = mean_pairwise_distance(world.positions)
    if out_trace:
        with open(out_trace, "w", encoding="utf-8") as fh:
            final = run(world, field_vec, physics, trace=trace_writer(fh))
    else:
        final = run(world, field_vec, physics)
    pwd_final = mean_pairwise_distance(final.positions)

    frame = render_frame(final, RenderStyle(dot_radius=physics.radius))
    Path(out_png).write_bytes(encode_png(frame))
    return SimulateResult(pwd_initial=pwd_initial, pwd_final=pwd_final, steps=physics.steps)


@dataclass(frozen=True)
class PromptReport:
    prompt: str
    intent: str
    trials: int
    score_mean: float
    score_std: float
    score_w: float | None
    score_p: float | None  # one-sided vs 0.5, greater
    pwd_initial_mean: float
    pwd_final_mean: float
    pwd_w: float | None
    pwd_p: float | None  # one-sided in the intent's direction
    pwd_moved_trials: int  # trials where PWD moved in the intent's direction


@dataclass(frozen=True)
class EvalReport:
    checkpoint: str
    trials: int
    rows: tuple[PromptReport, ...]


def _guarded_test(fn) -> TestResult | None:
    try:
        return fn()
    except AllZeroDifferences:
        return None


def load_prompt_specs(path: str) -> list[tuple[str, str]]:
    """Read NDJSON lines {"prompt": ..., "intent": "cluster"|"scatter"}."""
    specs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                prompt, intent = rec["prompt"], rec["intent"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ParseError(f"bad prompt spec: {exc}", line=lineno) from exc
            if intent not in ("cluster", "scatter"):
                raise ParseError(f"intent must be cluster or scatter, got {intent!r}", line=lineno)
            specs.append((prompt, intent))
    if not specs:
        raise ConfigError(f"no prompts in {path}")
    return specs


def cmd_eval(
    checkpoint_path: str,
    prompts: list[tuple[str, str]],
    trials: int,
    scorer_spec: ScorerSpec | None = None,
    physics: PhysicsConfig | None = None,
    embedder: EmbedderSpec = EmbedderSpec(),
    base_seed: int = 0,
) -> EvalReport:
    """Score a checkpoint over unseen prompts with fresh worlds per trial."""
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    ckpt = load_checkpoint(checkpoint_path)
    physics = physics or PhysicsConfig()
    provider = build_provider(embedder, ckpt.arch.embed_dim)

    rows = []
    for pi, (prompt, intent) in enumerate(prompts):
        spec = scorer_spec or ScorerSpec(kind="surrogate", intent=intent)
        if spec.kind == "surrogate":
            spec = dataclasses.replace(spec, intent=intent)
        scorer = build_scorer(spec)
        embedding = embed(prompt, provider)
        field_vec = decode_field(ckpt.genome, embedding)

        scores = []
        pwd_initial = []
        pwd_final = []
        for trial in range(trials):
            world = init_world(physics, SplitMix64(mix64(base_seed, pi, trial)))
            final = run(world, field_vec, physics)
            raster = render_frame(final, RenderStyle(dot_radius=physics.radius))
            ctx = EvalContext(
                prompt=prompt,
                genome=ckpt.genome,
                field=field_vec,
                world_start=world,
                world_final=final,
                raster=raster,
            )
            scores.append(scorer(ctx).score)
            pwd_initial.append(mean_pairwise_distance(world.positions))
            pwd_final.append(mean_pairwise_distance(final.positions))

        stats = summarize(scores)
        score_test = _guarded_test(lambda: wilcoxon_one_sample(scores, 0.5, "greater"))
        direction = "less" if intent == "cluster" else "greater"
        pwd_test = _guarded_test(
            lambda: wilcoxon_signed_rank(pwd_final, pwd_initial, direction)
        )
        deltas = np.asarray(pwd_final) - np.asarray(pwd_initial)
        moved = int((deltas < 0).sum() if intent == "cluster" else (deltas > 0).sum())
        rows.append(
            PromptReport(
                prompt=prompt,
                intent=intent,
                trials=trials,
                score_mean=stats.mean,
                score_std=stats.std,
                score_w=score_test.statistic if score_test else None,
                score_p=score_test.p_value if score_test else None,
                pwd_initial_mean=float(np.mean(pwd_initial)),
                pwd_final_mean=float(np.mean(pwd_final)),
                pwd_w=pwd_test.statistic if pwd_test else None,
                pwd_p=pwd_test.p_value if pwd_test else None,
                pwd_moved_trials=moved,
            )
        )
    return EvalReport(checkpoint=str(checkpoint_path), trials=trials, rows=tuple(rows))


def eval_report_to_json(report: EvalReport) -> str:
    return json.dumps(
        {
            "checkpoint": report.checkpoint,
            "trials": report.trials,
            "rows": [dataclasses.asdict(r) for r in report.rows],
        },
        indent=2,
    )


def eval_report_from_json(text: str) -> EvalReport:
    doc = json.loads(text)
    return EvalReport(
        checkpoint=doc["checkpoint"],
        trials=doc["trials"],
        rows=tuple(PromptReport(**row) for row in doc["rows"]),
    )


@dataclass(frozen=True)
class GenerationAggregate:
    generation: int
    best_mean: float
    best_std: float
    mean_mean: float


@dataclass(frozen=True)
class StatsReport:
    n_runs: int
    table: tuple[GenerationAggregate, ...]
    delta: float | None  # mean(best at last gen - best at gen 1)
    mean_delta: float | None  # gain of the per-generation mean-fitness curve
    w: float | None
    p_value: float | None  # one-sided, improvement


def load_run_log(path: str) -> list[GenerationRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
                records.append(
                    GenerationRecord(
                        generation=int(doc["generation"]),
                        best=float(doc["best"]),
                        mean=float(doc["mean"]),
                        std=float(doc["std"]),
                        evaluations=int(doc["evaluations"]),
                        wall_time=float(doc["wall_time"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"{path}: bad generation record: {exc}", line=lineno) from exc
    if not records:
        raise ParseError(f"{path}: no records")
    return records


def cmd_stats(log_paths: list[str]) -> StatsReport:
    """Aggregate run logs across seeds and test gen-1 vs final-gen best fitness."""
    if not log_paths:
        raise ConfigError("need at least one run log")
    runs = [load_run_log(p) for p in log_paths]
    generations = [rec.generation for rec in runs[0]]
    for path, records in zip(log_paths, runs):
        if [rec.generation for rec in records] != generations:
            raise ConfigError(f"{path}: generation sequence differs between logs")

    table = []
    for gi, gen in enumerate(generations):
        bests = [records[gi].best for records in runs]
        means = [records[gi].mean for records in runs]
        s = summarize(bests)
        table.append(
            GenerationAggregate(
                generation=gen,
                best_mean=s.mean,
                best_std=s.std,
                mean_mean=float(np.mean(means)),
            )
        )

    first = [records[0].best for records in runs]
    last = [records[-1].best for records in runs]
    delta = float(np.mean(last) - np.mean(first))
    mean_delta = float(
        np.mean([records[-1].mean for records in runs])
        - np.mean([records[0].mean for records in runs])
    )
    test = _guarded_test(lambda: wilcoxon_signed_rank(last, first, "greater"))
    return StatsReport(
        n_runs=len(runs),
        table=tuple(table),
        delta=delta,
        mean_delta=mean_delta,
        w=test.statistic if test else None,
        p_value=test.p_value if test else None,
    )
