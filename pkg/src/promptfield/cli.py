"""Command line entry point: train, simulate, eval, stats, serve."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import PromptFieldError
from .evaluate import VlmConfig
from .evolve import EvoConfig
from .runner import (
    EmbedderSpec,
    RunConfig,
    ScorerSpec,
    cmd_eval,
    cmd_simulate,
    cmd_stats,
    cmd_train,
    eval_report_to_json,
    load_prompt_specs,
)
from .swarm import PhysicsConfig


def _add_embedder_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--embedder", choices=("stub", "cache", "remote"), default="stub")
    p.add_argument("--embed-cache", help="NDJSON embedding cache file (cache embedder)")
    p.add_argument("--embed-url", help="remote embedding endpoint (remote embedder)")


def _add_scorer_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scorer", choices=("surrogate", "vlm"), default="surrogate")
    p.add_argument("--intent", choices=("cluster", "scatter"), default="cluster")
    p.add_argument("--vlm-url", help="chat-completions base URL (vlm scorer)")
    p.add_argument("--vlm-model", help="model name (vlm scorer)")
    p.add_argument("--vlm-key-env", default="VLM_API_KEY", help="env var holding the API key")
    p.add_argument("--score-cache", help="NDJSON score cache file")


def _add_physics_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--steps", type=int, default=500, help="simulation steps per rollout")
    p.add_argument("--agents", type=int, default=50)
    p.add_argument("--arena", type=float, default=500.0)


def _embedder_spec(args: argparse.Namespace) -> EmbedderSpec:
    return EmbedderSpec(kind=args.embedder, path=args.embed_cache, url=args.embed_url)


def _scorer_spec(args: argparse.Namespace) -> ScorerSpec:
    vlm = None
    if args.scorer == "vlm":
        if not args.vlm_url or not args.vlm_model:
            raise PromptFieldError("vlm scorer needs --vlm-url and --vlm-model")
        vlm = VlmConfig(base_url=args.vlm_url, model=args.vlm_model, api_key_env=args.vlm_key_env)
    return ScorerSpec(
        kind=args.scorer, intent=args.intent, vlm=vlm, cache_path=args.score_cache
    )


def _physics(args: argparse.Namespace) -> PhysicsConfig:
    return PhysicsConfig(n_agents=args.agents, arena=args.arena, steps=args.steps)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="promptfield",
        description="Evolve prompt-conditioned force fields steering a simulated swarm.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="evolve a controller for one prompt")
    train.add_argument("--prompt", required=True)
    train.add_argument("--grid", type=int, choices=(2, 5, 10), default=5)
    train.add_argument("--embed-dim", type=int, default=384)
    train.add_argument("--mu", type=int, default=5)
    train.add_argument("--lambda", dest="lam", type=int, default=15)
    train.add_argument("--generations", type=int, default=50)
    train.add_argument("--sigma", type=float, default=0.1)
    train.add_argument("--seeds", type=int, nargs="+", default=[0])
    train.add_argument("--workers", type=int, default=1, help="parallel candidate evaluations")
    train.add_argument("--out", required=True, help="output directory root")
    _add_physics_flags(train)
    _add_scorer_flags(train)
    _add_embedder_flags(train)

    sim = sub.add_parser("simulate", help="roll one world under a trained checkpoint")
    sim.add_argument("--checkpoint", required=True)
    sim.add_argument("--prompt", help="override the checkpoint's training prompt")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, help="final frame PNG path")
    sim.add_argument("--trace", help="NDJSON trajectory path")
    _add_physics_flags(sim)
    _add_embedder_flags(sim)

    ev = sub.add_parser("eval", help="score a checkpoint over a prompt list")
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--prompts", required=True, help="NDJSON file of {prompt, intent}")
    ev.add_argument("--trials", type=int, default=30)
    ev.add_argument("--seed", type=int, default=0)
    ev.add_argument("--out", help="write the report JSON here")
    _add_physics_flags(ev)
    _add_scorer_flags(ev)
    _add_embedder_flags(ev)

    st = sub.add_parser("stats", help="aggregate run logs and test improvement")
    st.add_argument("logs", nargs="+", help="run_log.jsonl paths (one per seed)")
    st.add_argument("--out", help="write the aggregate JSON here")

    sv = sub.add_parser("serve", help="HTTP steering service")
    sv.add_argument("--checkpoint")
    sv.add_argument("--grid", type=int, choices=(2, 5, 10), default=5)
    sv.add_argument("--embed-dim", type=int, default=384)
    sv.add_argument("--seed", type=int, default=0)
    sv.add_argument("--host", default="127.0.0.1")
    sv.add_argument("--port", type=int, default=8000)
    sv.add_argument("--frame-rate", type=float, default=30.0)
    _add_physics_flags(sv)
    _add_scorer_flags(sv)
    _add_embedder_flags(sv)

    return parser


def _run_train(args: argparse.Namespace) -> int:
    cfg = RunConfig(
        prompt=args.prompt,
        out_dir=args.out,
        grid=args.grid,
        embed_dim=args.embed_dim,
        seeds=tuple(args.seeds),
        physics=_physics(args),
        evo=EvoConfig(
            mu=args.mu, lam=args.lam, generations=args.generations, sigma=args.sigma
        ),
        scorer=_scorer_spec(args),
        embedder=_embedder_spec(args),
        workers=args.workers,
    )
    summary = cmd_train(cfg)
    for outcome in summary.outcomes:
        print(f"seed {outcome.seed}: best fitness {outcome.best_fitness:.4f}")
    print(f"best seed {summary.best_seed}, worst seed {summary.worst_seed}")
    return 0


def _run_simulate(args: argparse.Namespace) -> int:
    result = cmd_simulate(
        args.checkpoint,
        out_png=args.out,
        out_trace=args.trace,
        seed=args.seed,
        physics=_physics(args),
        embedder=_embedder_spec(args),
        prompt=args.prompt,
    )
    print(
        f"steps {result.steps}: mean pairwise distance "
        f"{result.pwd_initial:.3f} -> {result.pwd_final:.3f}"
    )
    return 0


def _run_eval(args: argparse.Namespace) -> int:
    report = cmd_eval(
        args.checkpoint,
        prompts=load_prompt_specs(args.prompts),
        trials=args.trials,
        scorer_spec=_scorer_spec(args),
        physics=_physics(args),
        embedder=_embedder_spec(args),
        base_seed=args.seed,
    )
    for row in report.rows:
        p = "n/a" if row.score_p is None else f"{row.score_p:.3g}"
        print(
            f"{row.prompt!r} [{row.intent}]: score {row.score_mean:.3f} +/- {row.score_std:.3f}"
            f" (p vs 0.5: {p}), PWD {row.pwd_initial_mean:.1f} -> {row.pwd_final_mean:.1f}"
        )
    if args.out:
        Path(args.out).write_text(eval_report_to_json(report) + "\n", encoding="utf-8")
    return 0


def _run_stats(args: argparse.Namespace) -> int:
    report = cmd_stats(args.logs)
    print(f"runs: {report.n_runs}")
    for row in report.table:
        print(
            f"gen {row.generation:3d}: best {row.best_mean:.4f} +/- {row.best_std:.4f}"
            f" (mean {row.mean_mean:.4f})"
        )
    if report.p_value is not None:
        print(f"gen 1 vs gen {report.table[-1].generation}: delta {report.delta:.4f}, "
              f"mean delta {report.mean_delta:.4f}, W {report.w}, p {report.p_value:.3g}")
    if args.out:
        doc = {
            "n_runs": report.n_runs,
            "table": [
                {
                    "generation": r.generation,
                    "best_mean": r.best_mean,
                    "best_std": r.best_std,
                    "mean_mean": r.mean_mean,
                }
                for r in report.table
            ],
            "delta": report.delta,
            "mean_delta": report.mean_delta,
            "w": report.w,
            "p_value": report.p_value,
        }
        Path(args.out).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return 0


def _run_serve(args: argparse.Namespace) -> int:
    from .service import ServiceConfig, serve

    cfg = ServiceConfig(
        checkpoint_path=args.checkpoint,
        grid=args.grid,
        embed_dim=args.embed_dim,
        seed=args.seed,
        physics=_physics(args),
        scorer=_scorer_spec(args),
        embedder=_embedder_spec(args),
        frame_rate=args.frame_rate,
    )
    serve(cfg, host=args.host, port=args.port)
    return 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "train": _run_train,
        "simulate": _run_simulate,
        "eval": _run_eval,
        "stats": _run_stats,
        "serve": _run_serve,
    }
    try:
        return handlers[args.command](args)
    except (PromptFieldError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
