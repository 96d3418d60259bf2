"""Command line: ``actionre {compile,score,gen,eval}``.

Exit codes: 0 success, 1 runtime error, 2 usage or pattern error.  Every
flag may also come from a ``key = value`` config file given with
``--config`` or the ``ACTIONRE_CONFIG`` environment variable; command-line
flags win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .automata import compile_pattern, export_dot, to_json
from .detscore import Video
from .eval import (
    HyperGrid,
    QueryResult,
    UndefinedMetricError,
    dumps_report,
    format_table,
    grid_search,
    map_over_queries,
    mean_auc,
    mean_std,
)
from .experiment import DEFAULT_HYPERS, KINDS, make_scorer
from .io import FormatError, read_videos, read_vocabulary, write_videos
from .pattern import PatternError, Vocabulary, format_pattern, parse
from .synth import Dataset, ExprParams, LabeledClip, Query, SynthesisError, make_dataset

CONFIG_ENV = "ACTIONRE_CONFIG"
SCORER_ALIASES = {"det": "deterministic", "prob": "probabilistic"}
MANIFEST = "manifest.json"
VIDEOS = "videos.jsonl"


class UsageError(Exception):
    pass


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _floats(text: str) -> list[float]:
    return [float(t) for t in str(text).split(",") if t.strip()]


def _scorer(text: str) -> str:
    kind = SCORER_ALIASES.get(text, text)
    if kind not in KINDS:
        raise argparse.ArgumentTypeError(f"scorer must be one of det, prob, {', '.join(KINDS)}")
    return kind


# --------------------------------------------------------------------------
# compile
# --------------------------------------------------------------------------


def _vocabulary(args) -> Vocabulary:
    if getattr(args, "vocab", None):
        return read_vocabulary(args.vocab)
    if getattr(args, "actions", None):
        return Vocabulary(a.strip() for a in args.actions.split(","))
    raise UsageError("a vocabulary is required (--vocab FILE or --actions a,b,c)")


def _pattern_text(args) -> str:
    if args.pattern_file:
        return Path(args.pattern_file).read_text().strip()
    if args.pattern:
        return args.pattern
    raise UsageError("a pattern is required (positional PATTERN or --pattern-file)")


def cmd_compile(args, out) -> int:
    vocab = _vocabulary(args)
    pattern = parse(_pattern_text(args), vocab)
    dfa = compile_pattern(pattern, untrimmed=args.untrimmed)
    dump = {
        "config": {"pattern": format_pattern(pattern, vocab), "untrimmed": args.untrimmed,
                   "vocab": list(vocab.names)},
        "automaton": to_json(dfa, vocab),
    }
    if args.json:
        Path(args.json).write_text(json.dumps(dump, indent=2) + "\n")
    if args.dot:
        Path(args.dot).write_text(export_dot(dfa, vocab))
    reject = "none" if dfa.reject is None else str(dfa.reject)
    print(f"states: {dfa.state_count}  support: {len(dfa.support)}  "
          f"finals: {len(dfa.finals)}  reject: {reject}", file=out)
    return 0


# --------------------------------------------------------------------------
# score
# --------------------------------------------------------------------------


def _hypers(args, kind: str) -> dict:
    if kind == "deterministic":
        return {"tau": args.tau}
    return {"alpha": args.alpha, "gamma": args.gamma}


def cmd_score(args, out) -> int:
    vocab = read_vocabulary(args.vocab) if args.vocab else None
    file_vocab, videos = read_videos(args.videos, vocab)
    vocab = file_vocab
    pattern = parse(_pattern_text(args), vocab)
    dfa = compile_pattern(pattern, untrimmed=args.untrimmed)
    hypers = _hypers(args, args.scorer)
    scores = make_scorer(args.scorer, dfa, hypers).score_many(videos)
    config = {"pattern": format_pattern(pattern, vocab), "scorer": args.scorer,
              "untrimmed": args.untrimmed, **hypers}
    lines = ["# config " + json.dumps(config, sort_keys=True)]
    lines += [f"{v.id}\t{_fmt(s)}" for v, s in zip(videos, scores)]
    text = "\n".join(lines) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        out.write(text)
    return 0


# --------------------------------------------------------------------------
# gen
# --------------------------------------------------------------------------


def _dataset_record(ds: Dataset, rep: int, split: str, prefix: str) -> tuple[dict, list[Video]]:
    vocab = ds.vocab
    exprs = [{"id": q.expr_id, "pattern": format_pattern(q.pattern, vocab)} for q in ds.queries]
    clips = []
    videos = []
    for q in ds.queries:
        for clip, v in zip(q.clips, q.videos):
            vid = f"{prefix}_{v.id}"
            clips.append({
                "id": vid,
                "expr_id": q.expr_id,
                "label": bool(clip.label),
                "source_expr": clip.source_expr,
                "symbols": [vocab.symbol_names(s) for s in clip.symbols],
            })
            videos.append(Video(vid, v.frames))
    return {"rep": rep, "split": split, "seed": ds.seed, "expressions": exprs, "clips": clips}, videos


def generate(params: ExprParams, n_expressions: int, n_positive: int, n_negative: int,
             noise: float, repetitions: int, seed: int, validation: bool, pad_factor: int = 1):
    """Datasets for every repetition (and validation split); yields records."""
    for rep, child in enumerate(np.random.SeedSequence(seed).spawn(repetitions)):
        test_seed, val_seed = (int(s.generate_state(1)[0]) for s in child.spawn(2))
        splits = [("test", test_seed)] + ([("val", val_seed)] if validation else [])
        for split, s in splits:
            ds = make_dataset(params, n_expressions, n_positive, n_negative, noise, s, pad_factor)
            yield _dataset_record(ds, rep, split, f"r{rep:02d}_{split}")


def cmd_gen(args, out) -> int:
    params = ExprParams(args.symbol_size, args.n, args.d, args.s, args.frames, args.vocab_size)
    n_negative = args.positives if args.negatives is None else args.negatives
    config = {
        "params": asdict(params),
        "expressions": args.expressions,
        "positives": args.positives,
        "negatives": n_negative,
        "noise": args.noise,
        "repetitions": args.repetitions,
        "validation": args.validation,
        "pad_factor": args.pad_factor,
        "seed": args.seed,
    }
    datasets = []
    videos = []
    for record, vids in generate(params, args.expressions, args.positives, n_negative, args.noise,
                                 args.repetitions, args.seed, args.validation, args.pad_factor):
        datasets.append(record)
        videos.extend(vids)
    vocab = Vocabulary(str(i) for i in range(params.vocab_size))
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = {"config": config, "vocab": list(vocab.names), "videos": VIDEOS, "datasets": datasets}
    (outdir / MANIFEST).write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    write_videos(outdir / VIDEOS, vocab, videos)
    print(f"wrote {len(datasets)} dataset(s), {len(videos)} videos to {outdir}", file=out)
    return 0


# --------------------------------------------------------------------------
# eval
# --------------------------------------------------------------------------


def load_datasets(path) -> tuple[dict, dict]:
    """Read a ``gen`` output directory into ``{(rep, split): Dataset}``."""
    path = Path(path)
    manifest_path = path / MANIFEST if path.is_dir() else path
    manifest = json.loads(manifest_path.read_text())
    vocab, videos = read_videos(manifest_path.parent / manifest.get("videos", VIDEOS))
    if list(vocab.names) != manifest["vocab"]:
        raise FormatError("manifest and video file vocabularies differ")
    by_id = {v.id: v for v in videos}
    cfg = manifest["config"]
    params = ExprParams(**cfg["params"])
    out = {}
    for rec in manifest["datasets"]:
        queries = {e["id"]: Query(e["id"], parse(e["pattern"], vocab)) for e in rec["expressions"]}
        for c in rec["clips"]:
            if c["id"] not in by_id:
                raise FormatError(f"video {c['id']!r} missing from {manifest.get('videos', VIDEOS)}")
            q = queries[c["expr_id"]]
            symbols = tuple(vocab.symbol(names) for names in c["symbols"])
            q.clips.append(LabeledClip(symbols, bool(c["label"]), c["expr_id"], c.get("source_expr")))
            q.videos.append(by_id[c["id"]])
        out[(rec["rep"], rec["split"])] = Dataset(vocab, params, cfg["noise"], rec["seed"],
                                                  list(queries.values()))
    return manifest, out


def _score_queries(ds: Dataset, dfas, kind: str, hypers: dict) -> list[QueryResult]:
    results = []
    for q, dfa in zip(ds.queries, dfas):
        scores = make_scorer(kind, dfa, hypers).score_many(q.videos)
        results.append(QueryResult(q.expr_id, [v.id for v in q.videos], scores, q.labels))
    return results


def cmd_eval(args, out) -> int:
    manifest, datasets = load_datasets(args.dataset)
    kinds = list(KINDS) if args.compare else [args.scorer]
    grid = HyperGrid(_floats(args.taus), _floats(args.alphas), _floats(args.gammas)) if args.grid else None
    reps = sorted({rep for rep, _ in datasets})
    per_kind = {k: [] for k in kinds}
    for rep in reps:
        test = datasets[(rep, "test")]
        dfas = [compile_pattern(q.pattern, untrimmed=args.untrimmed) for q in test.queries]
        val = datasets.get((rep, "val"))
        val_dfas = None
        if grid is not None:
            if val is None:
                raise UsageError("--grid needs a dataset generated with --validation")
            val_dfas = [compile_pattern(q.pattern, untrimmed=args.untrimmed) for q in val.queries]
        for kind in kinds:
            hypers = dict(DEFAULT_HYPERS[kind])
            hypers.update(_hypers(args, kind))
            if grid is not None:
                best, _ = grid_search(
                    grid, lambda p: map_over_queries(_score_queries(val, val_dfas, kind, p)), kind
                )
                hypers = best
            results = _score_queries(test, dfas, kind, hypers)
            per_kind[kind].append({
                "rep": rep,
                "hypers": hypers,
                "auc": mean_auc(results),
                "map": map_over_queries(results),
                "queries": [{"expr_id": r.expr_id, "auc": r.auc, "ap": r.ap} for r in results],
            })

    summary = {}
    rows = []
    for kind, runs in per_kind.items():
        auc_m, auc_s = mean_std([r["auc"] for r in runs])
        map_m, map_s = mean_std([r["map"] for r in runs])
        summary[kind] = {"auc_mean": auc_m, "auc_std": auc_s, "map_mean": map_m, "map_std": map_s,
                         "repetitions": runs}
        rows.append({"scorer": kind, "reps": len(runs), "auc_mean": auc_m, "auc_std": auc_s,
                     "map_mean": map_m, "map_std": map_s})
    report = {
        "config": {
            "dataset": manifest["config"],
            "scorers": kinds,
            "grid": None if grid is None else asdict(grid),
            "untrimmed": args.untrimmed,
            "fixed_hypers": {k: _hypers(args, k) for k in kinds} if grid is None else None,
        },
        "results": summary,
    }
    table = format_table(rows, ["scorer", "reps", "auc_mean", "auc_std", "map_mean", "map_std"])
    if args.output:
        Path(args.output).write_text(dumps_report(report))
    if args.table:
        Path(args.table).write_text(table)
    out.write(table)
    return 0


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="actionre", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help=f"key = value defaults file (env {CONFIG_ENV})")
    sub = parser.add_subparsers(dest="command", required=True)

    def pattern_args(p):
        p.add_argument("pattern", nargs="?", help="pattern text, e.g. '{a} ({b,c}|{d})+'")
        p.add_argument("--pattern-file")
        p.add_argument("--untrimmed", action="store_true", help="match anywhere: .* PATTERN .*")

    def hyper_args(p):
        p.add_argument("--scorer", type=_scorer, default="probabilistic",
                       help="det|prob (default prob)")
        p.add_argument("--tau", type=float, default=0.5, help="threshold for det")
        p.add_argument("--alpha", type=float, default=1e-3, help="smoothing for prob")
        p.add_argument("--gamma", type=float, default=1.0, help="emission exponent for prob")

    p = sub.add_parser("compile", help="compile a pattern and dump the automaton")
    pattern_args(p)
    p.add_argument("--vocab", help="vocabulary file")
    p.add_argument("--actions", help="comma-separated vocabulary")
    p.add_argument("--json", help="write automaton JSON here")
    p.add_argument("--dot", help="write Graphviz text here")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("score", help="score videos against a pattern")
    pattern_args(p)
    hyper_args(p)
    p.add_argument("--videos", required=False, help="frame-probability JSON Lines file")
    p.add_argument("--vocab", help="vocabulary file (must match the videos file)")
    p.add_argument("--output", help="scores file (default stdout)")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("gen", help="generate a synthetic dataset")
    p.add_argument("--out", required=False, help="output directory")
    p.add_argument("--symbol-size", type=int, default=3)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--s", type=int, default=2)
    p.add_argument("--frames", type=int, default=32)
    p.add_argument("--vocab-size", type=int, default=10)
    p.add_argument("--expressions", type=int, default=20)
    p.add_argument("--positives", type=int, default=10)
    p.add_argument("--negatives", type=int, default=None)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--repetitions", type=int, default=1)
    p.add_argument("--validation", action="store_true", help="also write a validation split")
    p.add_argument("--pad-factor", type=int, default=1, help="untrimmed padding factor")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("eval", help="evaluate scorers on a generated dataset")
    p.add_argument("dataset", nargs="?", help="gen output directory")
    hyper_args(p)
    p.add_argument("--compare", action="store_true", help="evaluate both scorers")
    p.add_argument("--grid", action="store_true", help="select hyperparameters on the val split")
    p.add_argument("--taus", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")
    p.add_argument("--alphas", default="1e-6,1e-4,1e-3,1e-2,1e-1")
    p.add_argument("--gammas", default="0.25,0.5,1,2")
    p.add_argument("--untrimmed", action="store_true")
    p.add_argument("--output", help="JSON report path")
    p.add_argument("--table", help="text table path")
    p.set_defaults(func=cmd_eval)
    return parser


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off", ""}


def read_config(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment; keys use - or _."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (t.strip() for t in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _apply_config(parser: argparse.ArgumentParser, values: dict) -> None:
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    known = set()
    for sp in subparsers.choices.values():
        defaults = {}
        for action in sp._actions:
            if action.dest in values:
                v = values[action.dest]
                if isinstance(action, argparse._StoreTrueAction):
                    if v.lower() not in _TRUE | _FALSE:
                        raise UsageError(f"config key {action.dest}: expected a boolean")
                    v = v.lower() in _TRUE
                elif action.type is not None:
                    try:
                        v = action.type(v)
                    except (ValueError, argparse.ArgumentTypeError) as exc:
                        raise UsageError(f"config key {action.dest}: {exc}") from None
                defaults[action.dest] = v
                known.add(action.dest)
        sp.set_defaults(**defaults)
    unknown = set(values) - known
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("--config")
        known, _ = pre.parse_known_args(argv)
        config_path = known.config or os.environ.get(CONFIG_ENV)
        if config_path:
            _apply_config(parser, read_config(config_path))
    except (UsageError, OSError) as exc:
        print(f"actionre: error: {exc}", file=err)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    required = {"score": ("videos",), "gen": ("out",), "eval": ("dataset",)}
    for name in required.get(args.command, ()):
        if getattr(args, name) is None:
            print(f"actionre {args.command}: error: missing {name}", file=err)
            return 2
    try:
        return args.func(args, out)
    except (UsageError, PatternError) as exc:
        print(f"actionre {args.command}: error: {exc}", file=err)
        return 2
    except (FormatError, SynthesisError, UndefinedMetricError, OSError, ValueError, KeyError) as exc:
        print(f"actionre {args.command}: error: {exc}", file=err)
        return 1


if __name__ == "__main__":
    sys.exit(main())
