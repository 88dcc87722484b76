"""Command-line entry point: ``volleygraph <command> ...``.

Exit codes: 0 success, 1 data or validation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import checkpoint as ckpt_io
from . import records
from .encoding import Task, dump_graphs, encode_dataset, encode_hit_graph, encode_outcome_graph, encode_set_graph
from .layers import GraphBatch
from .models import DEFAULT_HEADS, Architecture, ModelSpec, build_model, model_grad_check
from .rally import validate_rally
from .synth import generate, load_profile
from .training import TrainConfig, evaluate, format_table, split_dataset, train

log = logging.getLogger("volleygraph")


class DataError(Exception):
    """Bad input data; maps to exit code 1."""


def _read_valid(path: str):
    try:
        result = records.read(path)
    except (OSError, records.FormatError) as exc:
        raise DataError(str(exc)) from None
    for d in result.diagnostics:
        print(d, file=sys.stderr)
    bad = [(i, rep) for i, r in enumerate(result.rallies) if not (rep := validate_rally(r))]
    if bad:
        i, rep = bad[0]
        raise DataError(f"{len(bad)} invalid rallies; first is record {i}: {rep.violations[0]}")
    if not result.rallies:
        raise DataError(f"{path}: no rallies")
    return result.rallies


def cmd_generate(args) -> int:
    try:
        profile = load_profile(args.profile)
    except (OSError, ValueError, TypeError) as exc:
        raise DataError(f"cannot load profile {args.profile!r}: {exc}") from None
    rallies = generate(profile, args.count, args.seed)
    records.write(args.out, rallies, source=f"synthetic:{profile.level.value}:seed={args.seed}")
    print(f"wrote {len(rallies)} rallies to {args.out}")
    return 0


def cmd_validate(args) -> int:
    try:
        result = records.read(args.file)
    except (OSError, records.FormatError) as exc:
        raise DataError(str(exc)) from None
    problems = list(result.diagnostics)
    for lineno, rally in zip(result.lines, result.rallies):
        problems += [records.Diagnostic(lineno, str(v)) for v in validate_rally(rally)]
    problems.sort(key=lambda d: d.line)
    for d in problems:
        print(d)
    print(f"{len(result.rallies)} rallies, {len(problems)} problems", file=sys.stderr)
    return 1 if problems else 0


def cmd_encode(args) -> int:
    rallies = _read_valid(args.file)
    ds = encode_dataset(rallies, args.task, args.include_blocked)
    os.makedirs(args.out, exist_ok=True)
    dump_graphs(os.path.join(args.out, "graphs.txt"), ds.graphs)
    summary = {
        "task": ds.task.value,
        "include_blocked": ds.include_blocked,
        "graphs": len(ds),
        "class_counts": {str(k): v for k, v in ds.class_counts.items()},
    }
    with open(os.path.join(args.out, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"encoded {len(ds)} {ds.task.value} graphs into {args.out}")
    return 0


def _parse_ratios(text: str):
    try:
        ratios = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad split {text!r}") from None
    if len(ratios) != 3:
        raise argparse.ArgumentTypeError("split needs three comma-separated ratios")
    return ratios


def _config(args) -> TrainConfig:
    overrides = {"task": args.task, "architecture": args.arch}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.include_blocked:
        overrides["include_blocked"] = True
    try:
        d = {"include_blocked": False}
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                d.update(json.load(fh))
        d.update(overrides)
        return TrainConfig.from_dict(d)
    except (OSError, ValueError, TypeError) as exc:
        raise DataError(f"bad training config: {exc}") from None


def cmd_train(args) -> int:
    config = _config(args)
    rallies = _read_valid(args.data)
    try:
        tr, va, _ = split_dataset(rallies, args.split, config.seed)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    enc = lambda rs: encode_dataset(rs, config.task, config.include_blocked).graphs
    train_graphs, val_graphs = enc(tr), enc(va)
    if not train_graphs or not val_graphs:
        raise DataError("no graphs in the training or validation split")
    ckpt, history = train(config, train_graphs, val_graphs)
    ckpt.config["split"] = list(args.split)
    ckpt_io.save(ckpt, args.out)
    best = next((h for h in history if h["epoch"] == ckpt.best_epoch), None)
    msg = f"best epoch {ckpt.best_epoch}, val loss {best['val_loss']:.5f}" if best else "no epochs run"
    print(f"trained {config.architecture} on {len(train_graphs)} graphs; {msg}; saved {args.out}")
    return 0


def cmd_eval(args) -> int:
    try:
        ckpt = ckpt_io.load(args.ckpt)
    except (OSError, ValueError, KeyError) as exc:
        raise DataError(f"cannot load checkpoint: {exc}") from None
    rallies = _read_valid(args.data)
    if args.subset == "test":
        ratios = tuple(ckpt.config.get("split", (0.8, 0.1, 0.1)))
        _, _, rallies = split_dataset(rallies, ratios, ckpt.config.get("seed", ckpt.seed))
    graphs = encode_dataset(rallies, ckpt.task, ckpt.include_blocked).graphs
    if not graphs:
        raise DataError("no graphs to evaluate")
    reports = evaluate(ckpt, graphs, group_by=args.group_by)
    print(format_table(reports))
    if args.json_out:
        with open(args.json_out, "w", encoding="utf-8") as fh:
            json.dump([r.to_dict() for r in reports], fh, indent=1, sort_keys=True)
            fh.write("\n")
    return 0


def gradcheck_error(arch: str, seed: int = 0, task: str = "outcome") -> float:
    """Finite-difference check of a small model on a fixed 4-node path graph."""
    from .rally import Block, Hit, HitType, Level, Pass, Rally, Round, ServeType, Set, Team

    rally = Rally(
        "gradcheck",
        Level.COLLEGE,
        "gradcheck-1",
        (
            Round(Team.A, 1, (Pass(6, 2, ServeType.JUMP), Set(2, 3, 4), Hit(4, HitType.POWER), Block(2, True))),
            Round(Team.B, 2, (Pass(5, 3), Set(3, 2, 3), Hit(3, HitType.TIP), Block(1, False))),
        ),
        Team.A,
    )
    graph = {
        "outcome": lambda: encode_outcome_graph(rally, 0),
        "set": lambda: encode_set_graph(rally, 1),
        "hit": lambda: encode_hit_graph(rally, 1),
    }[task]()
    # narrow everywhere: the check costs two forward passes per parameter
    widths = (8,) * len(DEFAULT_HEADS[Architecture(arch)])
    spec = ModelSpec.for_task(arch, task, hidden_dim=8, attention_heads=2, head_layout=widths)
    model = build_model(spec, seed)
    # nudge parameters off zero so bias-dependent paths are exercised
    rng = np.random.default_rng(seed + 1)
    for t in model.params.values():
        t.value = t.value + 0.1 * rng.standard_normal(t.shape)
    return model_grad_check(model, GraphBatch.from_graphs([graph]))


def cmd_gradcheck(args) -> int:
    archs = [a.value for a in Architecture] if args.arch == "all" else [args.arch]
    worst = 0.0
    for arch in archs:
        errs = []
        for task in ("outcome", "set", "hit"):
            errs.append(gradcheck_error(arch, args.seed, task))
            log.info("%s %s: %.3e", arch, task, errs[-1])
        print(f"{arch}: max relative error {max(errs):.3e}")
        worst = max(worst, *errs)
    return 0 if worst < args.tol else 1


def cmd_predict(args) -> int:
    try:
        ckpt = ckpt_io.load(args.ckpt)
    except (OSError, ValueError, KeyError) as exc:
        raise DataError(f"cannot load checkpoint: {exc}") from None
    try:
        rally = records.rally_from_dict(json.loads(args.rally_json))
    except (json.JSONDecodeError, records.RecordError) as exc:
        raise DataError(f"bad rally record: {exc}") from None
    report = validate_rally(rally)
    if not report:
        raise DataError(f"invalid rally: {report.violations[0]}")
    graphs = encode_dataset([rally], ckpt.task, ckpt.include_blocked).graphs
    if not graphs:
        raise DataError(f"no round of this rally yields a {ckpt.task} graph")
    probs = ckpt.model().predict(GraphBatch.from_graphs(graphs))
    for g, p in zip(graphs, probs):
        vec = np.atleast_1d(p)
        print(f"round {g.round_number}: " + " ".join(f"{v:.4f}" for v in vec))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="volleygraph", description="Graph models for volleyball rally prediction.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write synthetic rallies")
    p.add_argument("--profile", default="college", help="college, professional, or a profile JSON file")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("validate", help="check a .vrr file")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("encode", help="dump task graphs as text")
    p.add_argument("--task", choices=[t.value for t in Task], required=True)
    p.add_argument("--include-blocked", action="store_true")
    p.add_argument("file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--task", choices=[t.value for t in Task], required=True)
    p.add_argument("--arch", choices=[a.value for a in Architecture], required=True)
    p.add_argument("--config", help="TrainConfig JSON file")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--include-blocked", action="store_true")
    p.add_argument("--split", type=_parse_ratios, default=(0.8, 0.1, 0.1), help="train,val,test ratios")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--group-by", choices=["level"], default=None)
    p.add_argument("--subset", choices=["all", "test"], default="all", help="'test' re-derives the held-out split used in training")
    p.add_argument("--json-out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference gradient check")
    p.add_argument("--arch", choices=[a.value for a in Architecture] + ["all"], default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("predict", help="predict for one rally record")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--rally-json", required=True, help="one rally object in .vrr record syntax")
    p.set_defaults(func=cmd_predict)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
