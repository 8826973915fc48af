"""Batch command-line entry points.

Subcommands: infer (one-shot solve), replay (records -> metrics CSV),
eval (compare two metrics CSVs with significance tests), synth (generate
labelled synthetic records), extract (transcript -> constraint document via
a chat-completion endpoint), serve (run the HTTP service).

Exit codes: 0 success, 2 input error, 3 infeasible, 4 endpoint failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import evaluation, ingestion, solver
from .grammar import (
    ParseError,
    constraint_set_to_document,
    parse_game_config,
    serialize_constraint_set,
    settings_from_document,
    world_from_document,
)
from .ingestion import IngestionError
from .model import ConstraintSet, EngineError, GameKind, Preset, SolverSettings
from .solver import InfeasibleError
from .views import build_view, parse_view_spec

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_ENDPOINT = 4


def _settings_from_args(args) -> SolverSettings:
    doc = {}
    for flag, key in (
        ("assertion_weight", "assertion_weight"),
        ("w_strong", "w_strong"),
        ("w_mid", "w_mid"),
        ("w_low", "w_low"),
        ("ig_scale", "ig_scale"),
        ("scale", "global_scale"),
    ):
        value = getattr(args, flag, None)
        if value is not None:
            doc[key] = value
    if getattr(args, "preset", None):
        doc["preset"] = args.preset
    return settings_from_document(doc)


def _load_config(path: str):
    return parse_game_config(Path(path).read_bytes())


def _load_constraints(path: str, config) -> ConstraintSet:
    p = Path(path)
    if p.is_dir():
        rounds = ingestion.load_constraint_rounds(p, config)
        return ConstraintSet.merge(*rounds) if rounds else ConstraintSet()
    from .grammar import parse_constraint_document

    return parse_constraint_document(p.read_bytes(), config)


def _print_marginal_table(config, post):
    roles = config.role_names
    width = max(len(p) for p in config.players)
    header = " " * (width + 2) + "  ".join(f"{r:>9}" for r in roles)
    print(header)
    for i, player in enumerate(config.players):
        cells = "  ".join(f"{post.marginals[i, j]:9.4f}" for j in range(len(roles)))
        print(f"{player:<{width}}  {cells}")
    map_str = ", ".join(f"{p}={post.map_world.role_of(p)}" for p in config.players)
    print(f"MAP: {map_str}")
    print(f"entropy: {post.entropy_bits:.4f} bits   feasible worlds: {post.feasible_count}")


def cmd_infer(args) -> int:
    try:
        config = _load_config(args.game)
        settings = _settings_from_args(args)
        constraints = _load_constraints(args.constraints, config)
        role, viewer = parse_view_spec(args.view)
        if role is not None:
            if not args.truth:
                print("error: a role view needs --truth", file=sys.stderr)
                return EXIT_INPUT
            truth = world_from_document(
                json.loads(Path(args.truth).read_text(encoding="utf-8")), config
            )
            view = build_view(config, truth, role, viewer)
        else:
            view = build_view(config)
        if args.knowledge:
            from .grammar import parse_constraint_document

            extra = parse_constraint_document(Path(args.knowledge).read_bytes(), config)
            constraints = ConstraintSet.merge(constraints, extra)
    except (EngineError, OSError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT

    try:
        post = solver.posterior(config, constraints, settings, view=view)
    except InfeasibleError as err:
        print(f"infeasible: {err}", file=sys.stderr)
        return EXIT_INFEASIBLE

    _print_marginal_table(config, post)
    if args.out:
        result = {
            "marginals": {
                "players": list(config.players),
                "roles": list(config.role_names),
                "matrix": [[float(x) for x in row] for row in post.marginals],
            },
            "map_world": post.map_world.as_dict,
            "entropy_bits": post.entropy_bits,
            "feasible_count": post.feasible_count,
            "top_worlds": [
                {"world": w.as_dict, "score": s, "probability": p}
                for w, s, p in post.top_worlds(args.topk)
            ],
        }
        Path(args.out).write_text(json.dumps(result, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_replay(args) -> int:
    records_dir = Path(args.records)
    if not records_dir.is_dir():
        print(f"error: {records_dir} is not a directory", file=sys.stderr)
        return EXIT_INPUT
    try:
        records = ingestion.read_game_records(records_dir)
    except EngineError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    if not records:
        print("error: no record files found", file=sys.stderr)
        return EXIT_INPUT
    try:
        settings = _settings_from_args(args)
        presets = [Preset(p.strip().upper()) for p in args.presets.split(",") if p.strip()]
        views = [v.strip() for v in args.views.split(",") if v.strip()]
    except (ValueError, ParseError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    rows, failures = evaluation.replay_records(
        records, presets, views, settings,
        sample_one_round=args.sample_one_round, seed=args.seed,
    )
    evaluation.write_metrics_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    for game_id, preset, view, err in failures:
        print(f"skipped {game_id} [{preset}/{view}]: {err}", file=sys.stderr)
    return EXIT_OK if not failures else 1


def cmd_eval(args) -> int:
    try:
        baseline = evaluation.read_metrics_csv(args.baseline)
        candidate = evaluation.read_metrics_csv(args.candidate)
    except (EngineError, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT

    for label, rows in (("baseline", baseline), ("candidate", candidate)):
        print(f"== {label} aggregates ==")
        for agg in evaluation.aggregate(rows):
            print(
                f"  preset={agg.preset} view={agg.view} cond={agg.condition or '-'} "
                f"games={agg.n_games} ma={agg.mean_marginal:.4f}±{agg.sd_marginal:.4f} "
                f"map={agg.mean_map:.4f}±{agg.sd_map:.4f}"
            )
    try:
        report = evaluation.significance_report(baseline, candidate)
    except EngineError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    print("== significance (candidate vs baseline, two-sided) ==")
    print(f"{'view':<20} {'metric':<9} {'p_wilcoxon':>12} {'p_ttest':>12}  sig")
    for row in report:
        pw = f"{row.p_wilcoxon:.3e}" if row.p_wilcoxon is not None else "-"
        pt = f"{row.p_ttest:.3e}" if row.p_ttest is not None else "-"
        mark = "*" if row.significant else ""
        note = f"  ({row.note})" if row.note else ""
        print(f"{row.view:<20} {row.metric:<9} {pw:>12} {pt:>12}  {mark}{note}")
    return EXIT_OK


def cmd_synth(args) -> int:
    try:
        if args.game:
            config = _load_config(args.game)
        elif args.kind == "mafia":
            config = evaluation.default_mafia_config(args.players, args.mafia)
        else:
            config = evaluation.default_avalon_config(args.players)
        condition = ingestion.Condition(args.condition.upper())
    except (EngineError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    records = evaluation.synth_games(config, args.count, args.seed, condition)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for record in records:
        ingestion.write_game_record(record, out_dir / f"{record.game_id}.json")
    print(f"wrote {len(records)} records to {out_dir}")
    return EXIT_OK


def cmd_extract(args) -> int:
    try:
        config = _load_config(args.game)
        transcript = Path(args.transcript).read_text(encoding="utf-8")
        template = GameKind(args.template.upper())
    except (EngineError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    client = ingestion.HttpChatCompletionClient(args.endpoint, model=args.model)
    try:
        cset = ingestion.extract_via_llm(
            transcript, template, client, config,
            round_index=args.round, retries=args.retries,
        )
    except IngestionError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ENDPOINT
    payload = serialize_constraint_set(cset)
    if args.out:
        Path(args.out).write_bytes(payload + b"\n")
        print(f"wrote {args.out}")
    else:
        print(payload.decode("utf-8"))
    return EXIT_OK


def cmd_serve(args) -> int:
    from . import service

    host, port = args.host, args.port
    if port == 0:
        import socket

        with socket.socket() as probe:
            probe.bind((host, 0))
            port = probe.getsockname()[1]
    app = service.create_app(snapshot_dir=args.snapshot_dir)
    print(f"listening on http://{host}:{port}")
    service.serve_app(app, host=host, port=port)
    return EXIT_OK


def _add_settings_flags(parser):
    parser.add_argument("--preset", default=None, help="strict|assert|hyp_ig|hyp_m|turn_ig")
    parser.add_argument("--assertion-weight", dest="assertion_weight", type=float, default=None)
    parser.add_argument("--w-strong", dest="w_strong", type=float, default=None)
    parser.add_argument("--w-mid", dest="w_mid", type=float, default=None)
    parser.add_argument("--w-low", dest="w_low", type=float, default=None)
    parser.add_argument("--ig-scale", dest="ig_scale", type=float, default=None)
    parser.add_argument("--scale", dest="scale", type=float, default=None,
                        help="global multiplier applied to every soft weight")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="roleinfer")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("infer", help="solve one constraint set and print marginals")
    p.add_argument("--game", required=True, help="game config JSON file")
    p.add_argument("--constraints", required=True, help="constraint document file or round dir")
    p.add_argument("--view", default="objective", help="objective or <role>[:<viewer>]")
    p.add_argument("--truth", default=None, help="truth world JSON (role views only)")
    p.add_argument("--knowledge", default=None, help="extra evidence document to inject")
    p.add_argument("--out", default=None)
    p.add_argument("--topk", type=int, default=5)
    _add_settings_flags(p)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("replay", help="replay records into a metrics CSV")
    p.add_argument("--records", required=True)
    p.add_argument("--presets", default="STRICT")
    p.add_argument("--views", default="objective")
    p.add_argument("--out", required=True)
    p.add_argument("--sample-one-round", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    _add_settings_flags(p)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("eval", help="aggregate and compare two metrics CSVs")
    p.add_argument("--baseline", required=True)
    p.add_argument("--candidate", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate synthetic labelled game records")
    p.add_argument("--kind", choices=("avalon", "mafia"), default="avalon")
    p.add_argument("--game", default=None, help="custom config JSON instead of --kind")
    p.add_argument("--players", type=int, default=6)
    p.add_argument("--mafia", type=int, default=1)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--condition", default="TRUTH", help="TRUTH or LIE")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", help="extract constraints from a transcript via an LLM endpoint")
    p.add_argument("--game", required=True)
    p.add_argument("--transcript", required=True)
    p.add_argument("--template", choices=("avalon", "mafia"), required=True)
    p.add_argument("--endpoint", required=True, help="chat-completion base URL")
    p.add_argument("--model", default="gpt-4.1-mini")
    p.add_argument("--round", type=int, default=0)
    p.add_argument("--retries", type=int, default=4)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("serve", help="run the live decision-support service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--snapshot-dir", default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
