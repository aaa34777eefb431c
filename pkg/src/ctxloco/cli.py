"""Command-line entry: train / eval / translate / serve / demo.

Exit codes: 0 ok, 2 usage or config problem, 3 I/O failure, 4 backend
(chat-completion) failure. A JSON config file supplies defaults; flags
override individual values.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import core
from .ars import ArsConfig, LinearPolicy, train, write_curve
from .embedding import ContextMode, embed
from .errors import BackendError, ConfigError, TranslationError
from .evaluation import builtin_cases, run_study
from .translator import BackendConfig, HttpBackend, MockBackend, TranslationCache, translate

CONFIG_FORMAT_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_BACKEND = 4


def load_run_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    version = data.get("format_version")
    if version != CONFIG_FORMAT_VERSION:
        raise ConfigError(f"unsupported config format_version: {version!r}")
    return data


def _ars_config(file_cfg: dict, args) -> ArsConfig:
    cfg = dict(file_cfg.get("ars", {}))
    if getattr(args, "steps", None) is not None:
        cfg["max_env_steps"] = args.steps
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    if getattr(args, "episode_cap", None) is not None:
        cfg["episode_cap"] = args.episode_cap
    if getattr(args, "noise", None) is not None:
        cfg["noise"] = args.noise
    return ArsConfig.from_dict(cfg)


def _translator_backend(file_cfg: dict, name: str):
    if name == "mock":
        return MockBackend()
    if name == "llm":
        raw = dict(file_cfg.get("translator", {}))
        raw.pop("mock", None)
        if "base_url" not in raw or "model_name" not in raw:
            raise ConfigError("llm backend requires translator.base_url and model_name in the config file")
        return HttpBackend(BackendConfig(**raw))
    raise ConfigError(f"unknown translator backend {name!r}")


def _cache(file_cfg: dict, args) -> TranslationCache:
    path = getattr(args, "cache", None) or file_cfg.get("paths", {}).get("cache_file")
    return TranslationCache(path)


def cmd_train(args) -> int:
    file_cfg = load_run_config(args.config)
    config = _ars_config(file_cfg, args)
    method = ContextMode(args.method)
    policy, records = train(method, config, jobs=args.jobs)
    policy.save(args.out)
    if args.curve:
        write_curve(records, args.curve)
    final = records[-1].mean_reward if records else float("nan")
    print(f"trained {method.value}: {len(records)} iterations, "
          f"{policy.env_steps} env steps, final mean reward {final:.4f}")
    print(f"policy written to {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    file_cfg = load_run_config(args.config)
    backend = _translator_backend(file_cfg, args.translator)
    cache = _cache(file_cfg, args)
    policies = {}
    for mode in ContextMode:
        path = os.path.join(args.policies, f"{mode.value}.json")
        if os.path.exists(path):
            policies[mode] = LinearPolicy.load(path)
    if not policies:
        raise ConfigError(f"no policy files (<method>.json) found in {args.policies}")
    cases = builtin_cases(args.cases)
    report = run_study(
        policies,
        backend,
        seed=args.seed,
        out_dir=args.out,
        cases=cases,
        n_episodes=args.episodes,
        cache=cache,
    )
    header = f"{'method':<12}" + "".join(f"{c.id:>10}" for c in cases)
    print(header)
    for mode in ContextMode:
        if mode not in policies:
            continue
        row = f"{mode.value:<12}"
        for case in cases:
            cell = report.cell(mode.value, case.id)
            row += f"{cell.mean:>10.2f}" if cell.error is None else f"{'ERR':>10}"
        print(row)
    if args.out:
        print(f"report written to {args.out}/report.csv and report.json")
    return EXIT_OK


def cmd_translate(args) -> int:
    file_cfg = load_run_config(args.config)
    if not args.description or not args.description.strip():
        raise ConfigError("--description must be non-empty")
    backend = _translator_backend(file_cfg, args.backend)
    cache = _cache(file_cfg, args)
    result = translate(args.description, backend, cache)
    payload = {
        "levels": result.levels.to_dict(),
        "embedding": embed(result.levels).to_list(),
        "backend": result.backend,
        "cached": result.cached,
    }
    print(json.dumps(payload, indent=1))
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    file_cfg = load_run_config(args.config)
    serve_cfg = file_cfg.get("serve", {})
    port = args.port or serve_cfg.get("port", 8720)
    bind = args.bind or serve_cfg.get("bind", "127.0.0.1")
    console_dir = args.console_dir or serve_cfg.get("console_dir")
    if console_dir is None and os.path.isdir("frontend/dist"):
        console_dir = "frontend/dist"
    app = create_app(
        policies_dir=args.policies,
        turbo=args.turbo,
        journal_dir=args.journal_dir,
        static_dir=console_dir,
    )
    print(f"serving on http://{bind}:{port} (policies from {args.policies})")
    uvicorn.run(app, host=bind, port=port, log_level="warning")
    return EXIT_OK


def cmd_demo(args) -> int:
    """Miniature end-to-end run: tiny training, tiny study, printed table."""
    config = ArsConfig(
        max_env_steps=30_000, episode_cap=100, noise=0.02, seed=args.seed
    )
    backend = MockBackend()
    policies = {}
    for mode in (ContextMode.NO_CONTEXT, ContextMode.EMBEDDING):
        print(f"training {mode.value} ({config.max_env_steps} env steps)...")
        policies[mode], _ = train(mode, config)
    report = run_study(policies, backend, seed=args.seed, n_episodes=4, episode_cap=500)
    print(f"{'case':<6}{'no_context':>12}{'embedding':>12}")
    for case in builtin_cases():
        nc = report.cell(ContextMode.NO_CONTEXT.value, case.id).mean
        em = report.cell(ContextMode.EMBEDDING.value, case.id).mean
        print(f"{case.id:<6}{nc:>12.2f}{em:>12.2f}")
    print(f"grand mean: no_context {report.grand_mean('no_context'):.2f}, "
          f"embedding {report.grand_mean('embedding'):.2f}")
    print(f"(kernel backend: {core.backend_name()})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ctxloco",
        description="Context-aware locomotion: ARS linear policies on a "
        "terrain-parameterized surrogate, with language-described contexts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one method's policy")
    p.add_argument("--config", help="JSON run config")
    p.add_argument("--method", required=True,
                   choices=[m.value for m in ContextMode])
    p.add_argument("--steps", type=int, help="env-step budget")
    p.add_argument("--episode-cap", type=int, dest="episode_cap")
    p.add_argument("--noise", type=float, help="exploration noise scale")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=1, help="parallel rollout workers")
    p.add_argument("--out", required=True, help="policy JSON output path")
    p.add_argument("--curve", help="training-curve CSV output path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="run the method-by-case study")
    p.add_argument("--config", help="JSON run config")
    p.add_argument("--policies", required=True,
                   help="directory holding <method>.json policy files")
    p.add_argument("--cases", default="all", choices=["all", "low", "high"])
    p.add_argument("--translator", default="mock", choices=["mock", "llm"])
    p.add_argument("--episodes", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cache", help="translation cache file")
    p.add_argument("--out", help="report output directory")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("translate", help="translate one description")
    p.add_argument("--config", help="JSON run config")
    p.add_argument("--description", required=True)
    p.add_argument("--backend", default="mock", choices=["mock", "llm"])
    p.add_argument("--cache", help="translation cache file")
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("serve", help="run the live session service")
    p.add_argument("--config", help="JSON run config")
    p.add_argument("--policies", required=True,
                   help="directory holding policy JSON files")
    p.add_argument("--port", type=int)
    p.add_argument("--bind")
    p.add_argument("--turbo", action="store_true",
                   help="run sessions unpaced (tests)")
    p.add_argument("--journal-dir", dest="journal_dir",
                   help="directory for per-session context journals")
    p.add_argument("--console-dir", dest="console_dir",
                   help="built web console assets to serve at /")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("demo", help="tiny end-to-end train + eval")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_demo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except TranslationError as exc:
        print(f"translation error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
