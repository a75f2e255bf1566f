"""Experiment runner and command-line interface.

``bench`` reproduces the synthetic-function comparisons (per-mode regret
curves aggregated over seeded repeats, written as CSV), ``audio-sim`` runs
the simulated-listener personalization scenes, ``serve`` hosts live
sessions, and ``profile-check`` validates hearing-profile files.  Repeats
use seeds base_seed + index, so two invocations of the same config produce
byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import personalize
from .audio import ProfileFormatError, load_profile
from .dms import DmsConfig
from .objectives import OBJECTIVE_IDS, ObjectiveAdapter, make_objective
from .optimizer import MODE_ALEBO_PLAIN, MODES, RegretTrace, RunConfig, run


class ConfigError(ValueError):
    """Bad experiment configuration (CLI exit code 2)."""


@dataclass(frozen=True)
class ExperimentConfig:
    objective: str
    n_high: int = 100
    n_low: int = 4
    f_evals: int = 50
    r_init: int = 5
    q: int = 5
    n_mc: int = 256
    n_raw: int = 512
    sigma: float = 1.0
    l_count: int = 5
    l_selection: str | tuple[int, ...] = "random"
    modes: tuple[str, ...] = ("oraclebo", "alebo_l", "alebo_plain")
    n_repeats: int = 10
    base_seed: int = 0
    rosenbrock_dims: int = 4
    noise_variance: float = 1e-6
    mle_restarts: int = 1
    fact_noise_std: float = 0.0
    out_name: str = "regret.csv"

    def __post_init__(self):
        if self.objective not in OBJECTIVE_IDS:
            raise ConfigError(f"unknown objective {self.objective!r}; expected one of {OBJECTIVE_IDS}")
        if self.n_repeats < 1:
            raise ConfigError("n_repeats must be >= 1")
        for mode in self.modes:
            if mode not in MODES:
                raise ConfigError(f"unknown mode {mode!r}; expected one of {MODES}")


def experiment_config_from_dict(raw: dict) -> ExperimentConfig:
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "objective" not in raw:
        raise ConfigError("config must name an objective")
    raw = dict(raw)
    if isinstance(raw.get("modes"), list):
        raw["modes"] = tuple(raw["modes"])
    if isinstance(raw.get("l_selection"), list):
        raw["l_selection"] = tuple(raw["l_selection"])
    try:
        return ExperimentConfig(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def mode_run_config(cfg: ExperimentConfig, mode: str, seed: int) -> RunConfig:
    """Per-mode engine config at equal total budget.

    The plain baseline has no dimension queries, so it spends the whole
    budget on filter queries; the hybrid and reduced-space modes split it.
    """
    l_count = 0 if mode == MODE_ALEBO_PLAIN else cfg.l_count
    f_evals = cfg.f_evals + (cfg.l_count if mode == MODE_ALEBO_PLAIN else 0)
    return RunConfig(
        n_high=cfg.n_high,
        n_low=cfg.n_low,
        f_evals=f_evals,
        r_init=cfg.r_init,
        q=cfg.q,
        n_mc=cfg.n_mc,
        n_raw=cfg.n_raw,
        dms=DmsConfig(sigma=cfg.sigma),
        l_count=l_count,
        l_selection=cfg.l_selection,
        seed=seed,
        mode=mode,
        total_budget=cfg.l_count + cfg.f_evals,
        noise_variance=cfg.noise_variance,
        mle_restarts=cfg.mle_restarts,
        fact_noise_std=cfg.fact_noise_std,
    )


@dataclass
class ModeAggregate:
    mode: str
    iterations: list[int]
    median_regret: list[float]
    mean_regret: list[float]
    q25: list[float]
    q75: list[float]
    qf_used: list[int]
    qd_used: list[int]
    final_regrets: list[float]
    failures: int = 0


@dataclass
class AggregateResult:
    config: ExperimentConfig
    modes: list[ModeAggregate] = field(default_factory=list)

    def mode(self, name: str) -> ModeAggregate:
        for m in self.modes:
            if m.mode == name:
                return m
        raise KeyError(name)


def _run_job(args) -> tuple[str, int, RegretTrace | str]:
    cfg, mode, rep = args
    objective = ObjectiveAdapter(make_objective(cfg.objective, cfg.n_high, cfg.rosenbrock_dims))
    try:
        trace = run(objective, objective, mode_run_config(cfg, mode, cfg.base_seed + rep))
        return mode, rep, trace
    except Exception as exc:
        return mode, rep, f"{type(exc).__name__}: {exc}"


def _max_workers() -> int:
    raw = os.environ.get("ORACLEBO_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_experiment(cfg: ExperimentConfig) -> AggregateResult:
    jobs = [(cfg, mode, rep) for mode in cfg.modes for rep in range(cfg.n_repeats)]
    workers = _max_workers()
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_job, jobs))
    else:
        outcomes = [_run_job(j) for j in jobs]

    by_mode: dict[str, dict[int, RegretTrace]] = {m: {} for m in cfg.modes}
    failures: dict[str, int] = {m: 0 for m in cfg.modes}
    for mode, rep, outcome in outcomes:
        if isinstance(outcome, str):
            failures[mode] += 1
        else:
            by_mode[mode][rep] = outcome
            if outcome.error is not None:
                failures[mode] += 1

    result = AggregateResult(cfg)
    for mode in cfg.modes:
        traces = [by_mode[mode][rep] for rep in sorted(by_mode[mode])]
        n_iters = max((len(t.records) for t in traces), default=0)
        agg = ModeAggregate(mode, [], [], [], [], [], [], [], [], failures[mode])
        for i in range(n_iters):
            rows = [t.records[i] for t in traces if len(t.records) > i]
            regrets = np.array([r.regret for r in rows], dtype=float)
            agg.iterations.append(i + 1)
            agg.median_regret.append(float(np.median(regrets)))
            agg.mean_regret.append(float(np.mean(regrets)))
            agg.q25.append(float(np.percentile(regrets, 25)))
            agg.q75.append(float(np.percentile(regrets, 75)))
            agg.qf_used.append(rows[0].filter_queries_used)
            agg.qd_used.append(rows[0].dimension_queries_used)
        agg.final_regrets = [t.records[-1].regret for t in traces if t.records]
        result.modes.append(agg)
    return result


CSV_HEADER = "iteration,mode,median_regret,mean_regret,q25,q75,qf_used,qd_used"


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def emit_csv(result: AggregateResult, destination) -> None:
    """Write the aggregate as CSV (LF endings, 6 significant digits)."""
    lines = [CSV_HEADER]
    n_iters = max((len(m.iterations) for m in result.modes), default=0)
    for i in range(n_iters):
        for m in result.modes:
            if i >= len(m.iterations):
                continue
            lines.append(
                ",".join(
                    [
                        str(m.iterations[i]),
                        m.mode,
                        _fmt(m.median_regret[i]),
                        _fmt(m.mean_regret[i]),
                        _fmt(m.q25[i]),
                        _fmt(m.q75[i]),
                        str(m.qf_used[i]),
                        str(m.qd_used[i]),
                    ]
                )
            )
    payload = "\n".join(lines) + "\n"
    if isinstance(destination, (str, Path)):
        with open(destination, "w", newline="") as fh:
            fh.write(payload)
    else:
        destination.write(payload)


# ---------------------------------------------------------------- audio sim


@dataclass(frozen=True)
class AudioSimConfig:
    scene: personalize.SceneConfig = field(default_factory=personalize.SceneConfig)
    n_repeats: int = 5
    base_seed: int = 0

    def __post_init__(self):
        if self.n_repeats < 1:
            raise ConfigError("n_repeats must be >= 1")


def audio_sim_config_from_dict(raw: dict) -> AudioSimConfig:
    raw = dict(raw)
    scene_raw = raw.pop("scene", {})
    unknown = set(raw) - {"n_repeats", "base_seed"}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    scene_known = set(personalize.SceneConfig.__dataclass_fields__)
    scene_unknown = set(scene_raw) - scene_known
    if scene_unknown:
        raise ConfigError(f"unknown scene keys: {sorted(scene_unknown)}")
    try:
        cfg = AudioSimConfig(scene=personalize.SceneConfig(**scene_raw), **raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.scene.corruption_kind == "profile" and not Path(cfg.scene.profile_path).exists():
        raise ConfigError(f"profile file not found: {cfg.scene.profile_path}")
    return cfg


def run_audio_sim(cfg: AudioSimConfig) -> dict:
    """Seeded repeats of a personalization scene vs the audiogram baseline."""
    per_seed = []
    for rep in range(cfg.n_repeats):
        seed = cfg.base_seed + rep
        scene = replace(cfg.scene, seed=seed, corruption_seed=cfg.scene.corruption_seed + rep)
        listener = personalize.build_listener(scene)
        trace = personalize.run_scripted_session(scene, listener)
        per_seed.append(
            {
                "seed": seed,
                "corruption_seed": scene.corruption_seed,
                "oraclebo": trace.best_score,
                "baseline": personalize.baseline_score(scene, listener),
                "corrupted": personalize.corrupted_score(scene, listener),
                "scores": [s.score for s in trace.steps],
            }
        )
    return {
        "per_seed": per_seed,
        "median_oraclebo": float(np.median([r["oraclebo"] for r in per_seed])),
        "median_baseline": float(np.median([r["baseline"] for r in per_seed])),
        "median_corrupted": float(np.median([r["corrupted"] for r in per_seed])),
    }


def emit_replay_fixture(scene: personalize.SceneConfig, destination) -> dict:
    """Scripted-session fixture for driving the HTTP API from another client."""
    listener = personalize.build_listener(scene)
    trace = personalize.run_scripted_session(scene, listener)
    fixture = {
        "scene": {k: getattr(scene, k) for k in personalize.SceneConfig.__dataclass_fields__},
        "facts": [[f.index, f.value] for f in trace.facts],
        "scores": [s.score for s in trace.steps],
        "steps": [
            {
                "iteration": s.iteration,
                "score": s.score,
                "best_score": s.best_score,
                "qf": s.filter_queries_used,
                "qd": s.dimension_queries_used,
            }
            for s in trace.steps
        ],
        "best_score": trace.best_score,
        "best_gains_db": None if trace.best_gains_db is None else list(trace.best_gains_db),
    }
    if destination is not None:
        Path(destination).write_text(json.dumps(fixture, indent=2) + "\n")
    return fixture


# ------------------------------------------------------------------- CLI


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oraclebo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", help="run a synthetic-function experiment")
    bench.add_argument("--config", required=True)
    bench.add_argument("--seed", type=int, default=None)
    bench.add_argument("--out-dir", default=".")
    bench.add_argument("--repeats", type=int, default=None)
    bench.add_argument("--mode", action="append", default=None)

    sim = sub.add_parser("audio-sim", help="simulated-listener personalization")
    sim.add_argument("--config", required=True)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--out-dir", default=".")
    sim.add_argument("--repeats", type=int, default=None)
    sim.add_argument("--emit-replay", default=None, metavar="PATH")

    serve = sub.add_parser("serve", help="start the live session service")
    serve.add_argument("--listen", default="127.0.0.1:8080")
    serve.add_argument("--storage-dir", default="sessions")

    check = sub.add_parser("profile-check", help="validate a hearing-profile file")
    check.add_argument("path")
    return parser


def cli_main(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if args.command == "bench":
            raw = _load_json(args.config)
            if args.seed is not None:
                raw["base_seed"] = args.seed
            if args.repeats is not None:
                raw["n_repeats"] = args.repeats
            if args.mode:
                raw["modes"] = args.mode
            cfg = experiment_config_from_dict(raw)
            out_dir = Path(args.out_dir)
            out_dir.mkdir(parents=True, exist_ok=True)
            result = run_experiment(cfg)
            emit_csv(result, out_dir / cfg.out_name)
            print(f"wrote {out_dir / cfg.out_name}")
            return 0

        if args.command == "audio-sim":
            raw = _load_json(args.config)
            if args.seed is not None:
                raw["base_seed"] = args.seed
            if args.repeats is not None:
                raw["n_repeats"] = args.repeats
            cfg = audio_sim_config_from_dict(raw)
            if args.emit_replay:
                scene = replace(
                    cfg.scene,
                    seed=cfg.base_seed,
                    corruption_seed=cfg.scene.corruption_seed,
                )
                emit_replay_fixture(scene, args.emit_replay)
                print(f"wrote {args.emit_replay}")
                return 0
            out_dir = Path(args.out_dir)
            out_dir.mkdir(parents=True, exist_ok=True)
            results = run_audio_sim(cfg)
            out_path = out_dir / "audio_sim.json"
            out_path.write_text(json.dumps(results, indent=2) + "\n")
            csv_path = out_dir / "audio_sim.csv"
            rows = ["seed,oraclebo,baseline,corrupted"] + [
                f"{r['seed']},{_fmt(r['oraclebo'])},{_fmt(r['baseline'])},{_fmt(r['corrupted'])}"
                for r in results["per_seed"]
            ]
            csv_path.write_text("\n".join(rows) + "\n")
            print(f"wrote {out_path} and {csv_path}")
            return 0

        if args.command == "serve":
            from .service import serve_forever

            host, _, port = args.listen.rpartition(":")
            serve_forever(host or "127.0.0.1", int(port), Path(args.storage_dir))
            return 0

        if args.command == "profile-check":
            try:
                load_profile(args.path)
            except FileNotFoundError:
                print(f"profile file not found: {args.path}", file=sys.stderr)
                return 2
            except ProfileFormatError as exc:
                print(f"invalid profile: {exc}", file=sys.stderr)
                return 2
            print("profile ok")
            return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 2


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
