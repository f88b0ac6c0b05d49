"""Command-line entry point: ``nag <subcommand> ...``.

Config precedence is flag > ``--config`` file > built-in default. Every
subcommand that writes files also writes the resolved configuration next
to them.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from nag import __version__

_TASKS = (
    "node-count",
    "edge-count",
    "cycle-check",
    "triangle-count",
    "node-degree",
    "connected-nodes",
    "reachability",
    "edge-existence",
    "shortest-path",
)


class CliError(Exception):
    """A user-facing failure; mapped to exit status 1."""


def _csv(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _write_resolved(path: Path, args: argparse.Namespace) -> None:
    resolved = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config")}
    path.write_text(json.dumps(resolved, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")


def _set_threads(n: int | None) -> None:
    if n:
        import torch

        torch.set_num_threads(n)


# -- gen-data ------------------------------------------------------------------


def cmd_gen_data(args) -> int:
    from nag.synth import DatasetConfig, generate_dataset, write_dataset

    cfg = DatasetConfig(
        tasks=args.tasks,
        per_task=args.per_task,
        min_nodes=args.min_nodes,
        max_nodes=args.max_nodes,
        balance_boolean=not args.no_balance,
        allow_disconnected_paths=args.allow_disconnected_paths,
    )
    splits = generate_dataset(cfg, seed=args.seed, workers=args.threads or 1)
    write_dataset(splits, args.out, cfg, args.seed)
    print(" ".join(f"{name}={len(splits[name])}" for name in ("train", "val", "test")))
    return 0


# -- inspect / inspect-mask -------------------------------------------------------


def _load_graph(path: str):
    from nag.graph import parse_graph_json

    return parse_graph_json(Path(path).read_bytes())


def _vocab_for(args, texts: Sequence[str]):
    from nag.flatten import Vocabulary

    if getattr(args, "vocab", None):
        return Vocabulary.from_json(Path(args.vocab).read_text(encoding="utf-8"))
    return Vocabulary.build(texts)


def _flatten_from_args(args):
    from nag.flatten import flatten
    from nag.graph import unified_elements

    g = _load_graph(args.graph)
    vocab = _vocab_for(args, [n.text for n in g.nodes] + [e.text for e in g.edges] + [args.query])
    elements = unified_elements(g, args.order, seed=args.order_seed)
    return g, vocab, flatten(g, elements, args.query, vocab)


def cmd_inspect(args) -> int:
    from nag.flatten import layout_table
    from nag.positions import assign_positions

    _, vocab, seq = _flatten_from_args(args)
    pos = assign_positions(seq, args.positions).ids
    rows = layout_table(seq, vocab, pos)
    if args.json:
        print(json.dumps(rows, ensure_ascii=False))
        return 0
    print(f"{'index':>5}  {'token':<16} {'element':<12} {'hub':<4} {'position':>8}")
    for r in rows:
        print(f"{r['index']:>5}  {r['token']:<16} {r['element']:<12} {'*' if r['hub'] else '':<4} {r['position']:>8}")
    return 0


def cmd_inspect_mask(args) -> int:
    from nag.mask import compose_mask

    g, _, seq = _flatten_from_args(args)
    mask = compose_mask(seq, g, args.mode, sees_graph_hub=args.query_sees_graph_hub)
    out = Path(args.out)
    if out.suffix not in (".pgm", ".bits"):
        raise CliError(f"--out must end in .pgm or .bits, got {out.name!r}")
    out.parent.mkdir(parents=True, exist_ok=True)
    mask.save(out)
    _write_resolved(out.with_name(out.name + ".run.json"), args)
    print(f"{out} {mask.size}x{mask.size}")
    return 0


# -- train / eval ----------------------------------------------------------------


def _model_config(args, vocab_size: int):
    from nag.model import ModelConfig

    return ModelConfig(
        layers=args.layers,
        heads=args.heads,
        head_dim=args.head_dim,
        model_dim=args.heads * args.head_dim,
        ffn_dim=args.ffn_dim or 4 * args.heads * args.head_dim,
        rope_base=args.rope_base,
        vocab_size=vocab_size,
        variant=args.variant,
        adapter_rank=args.adapter_rank,
        lora_rank=args.lora_rank,
        lora_alpha=args.lora_alpha,
        query_mode=args.query_mode,
        position_scheme=args.positions,
        query_sees_graph_hub=args.query_sees_graph_hub,
    )


def cmd_train(args) -> int:
    from nag.checkpoint import load_checkpoint, save_checkpoint
    from nag.encode import SampleEncoder, build_vocab
    from nag.model import NAGModel
    from nag.synth import load_split
    from nag.train import TrainConfig, train

    _set_threads(args.threads)
    samples = load_split(args.data, "train")
    if args.tasks:
        samples = [s for s in samples if s.task.value in args.tasks]
    if args.init:
        base, vocab, _ = load_checkpoint(args.init)
        model = NAGModel.from_backbone(
            base,
            args.variant,
            seed=args.seed,
            query_mode=args.query_mode,
            position_scheme=args.positions,
            query_sees_graph_hub=args.query_sees_graph_hub,
            lora_rank=args.lora_rank,
            lora_alpha=args.lora_alpha,
            adapter_rank=args.adapter_rank,
        )
    else:
        vocab = build_vocab(samples)
        model = NAGModel(_model_config(args, len(vocab)), seed=args.seed)
    encoder = SampleEncoder.for_model(vocab, model.config, args.input_format)
    tcfg = TrainConfig(
        steps=args.steps,
        batch_size=args.batch_size,
        lr=args.lr,
        warmup=args.warmup,
        decay=args.decay,
        grad_clip=args.grad_clip,
        seed=args.seed,
        log_every=args.log_every,
    )
    result = train(model, samples, encoder, tcfg)
    out = Path(args.out)
    save_checkpoint(out, model, vocab, meta={"input_format": args.input_format, "train": tcfg.to_dict()})
    with open(out / "metrics.jsonl", "w", encoding="utf-8") as fh:
        for rec in result.log:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    _write_resolved(out / "run_config.json", args)
    print(f"loss {result.initial_loss:.4f} -> {result.final_loss:.4f}; checkpoint {out}")
    return 0


def cmd_eval(args) -> int:
    from nag.checkpoint import load_checkpoint
    from nag.evaluate import evaluate
    from nag.synth import load_split

    _set_threads(args.threads)
    model, vocab, meta = load_checkpoint(args.ckpt)
    samples = load_split(args.data, args.split)
    report, _ = evaluate(
        model,
        vocab,
        samples,
        split=args.split,
        checkpoint=str(args.ckpt),
        input_format=meta.get("input_format", "graph"),
        seed=args.seed,
        max_tokens=args.max_tokens,
        batch_size=args.batch_size,
        allow_unknown=args.allow_unknown,
    )
    out = Path(args.report)
    out.parent.mkdir(parents=True, exist_ok=True)
    report.save(out)
    _write_resolved(out.with_name(out.name + ".run.json"), args)
    for task, m in report.per_task.items():
        extra = "".join(f" {k}={m[k]:.4f}" for k in ("abs_err", "f1") if m.get(k) is not None)
        print(f"{task}: n={m['n']} acc={m['acc']:.4f}{extra}")
    return 0


def cmd_plot(args) -> int:
    from nag.evaluate import EvalReport, plot_reports

    reports = [EvalReport.load(p) for p in args.report]
    for p in plot_reports(reports, args.out, args.labels):
        print(p)
    _write_resolved(Path(args.out) / "plot.run.json", args)
    return 0


# -- export ----------------------------------------------------------------------


def cmd_export(args) -> int:
    import numpy as np
    import torch

    from nag.checkpoint import load_checkpoint, save_tensors
    from nag.decode import order_seed
    from nag.encode import SampleEncoder, build_vocab, collate
    from nag.linearize import linearize_prompt
    from nag.model import ModelConfig
    from nag.synth import load_split

    samples = load_split(args.data, args.split)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.format == "prompts":
        with open(out / f"{args.split}.{args.template}.jsonl", "w", encoding="utf-8", newline="\n") as fh:
            for s in samples:
                record = {"id": s.id, "task": s.task.value, "prompt": linearize_prompt(s, args.template), "answer": s.answer}
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
    else:
        if args.ckpt:
            _, vocab, _ = load_checkpoint(args.ckpt)
        else:
            vocab = build_vocab(samples)
        config = ModelConfig(
            vocab_size=len(vocab),
            query_mode=args.query_mode,
            position_scheme=args.positions,
            query_sees_graph_hub=args.query_sees_graph_hub,
        )
        encoder = SampleEncoder.for_model(vocab, config, element_order=args.order)
        encoded = [encoder.encode(s, order_seed(s, args.seed)) for s in samples]
        batch = collate(encoded)
        answer_start = [-1 if e.answer_start is None else e.answer_start for e in encoded]
        save_tensors(
            out,
            {
                "ids": batch.ids,
                "mask": batch.mask.to(torch.uint8),
                "positions": batch.positions,
                "lengths": batch.lengths,
                "answer_start": torch.from_numpy(np.asarray(answer_start, dtype=np.int64)),
            },
            {"sample_ids": [s.id for s in samples], "split": args.split},
        )
        (out / "vocab.json").write_text(vocab.to_json() + "\n", encoding="utf-8")
    _write_resolved(out / "export.run.json", args)
    print(out)
    return 0


# -- parser ------------------------------------------------------------------------


def _add_graph_input(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", required=True, help="graph JSON file")
    p.add_argument("--query", required=True)
    p.add_argument("--vocab", help="vocabulary JSON (default: built from the graph and query)")
    p.add_argument("--order", default="as-given", choices=("as-given", "random", "bfs"))
    p.add_argument("--order-seed", type=int, default=0)


def _add_layout_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--query-mode", default="sparse", choices=("sparse", "full"))
    p.add_argument("--positions", default="recalibrated", choices=("recalibrated", "sequential"))
    p.add_argument("--query-sees-graph-hub", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file of flag defaults (flags still win)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=0, help="cap worker/thread counts (0: library default)")

    parser = argparse.ArgumentParser(prog="nag", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"nag {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", parents=[common], help="generate the synthetic benchmark")
    p.add_argument("--tasks", type=_csv, default=list(_TASKS), help="comma-separated task kinds")
    p.add_argument("--per-task", type=int, default=100)
    p.add_argument("--min-nodes", type=int, default=5)
    p.add_argument("--max-nodes", type=int, default=20)
    p.add_argument("--no-balance", action="store_true", help="do not balance yes/no answers")
    p.add_argument("--allow-disconnected-paths", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("inspect", parents=[common], help="print the token layout table")
    _add_graph_input(p)
    p.add_argument("--positions", default="recalibrated", choices=("recalibrated", "sequential"))
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("inspect-mask", parents=[common], help="export the attention mask (.pgm or .bits)")
    _add_graph_input(p)
    p.add_argument("--mode", default="sparse", choices=("sparse", "full"))
    p.add_argument("--query-sees-graph-hub", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_inspect_mask)

    p = sub.add_parser("train", parents=[common], help="train a checkpoint")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--variant", default="nag-lora", choices=("backbone", "nag-zero", "nag-lora"))
    _add_layout_flags(p)
    p.add_argument("--input-format", default="graph", choices=("graph", "linearized"))
    p.add_argument("--init", help="checkpoint whose backbone weights and vocabulary to start from")
    p.add_argument("--tasks", type=_csv, default=None, help="train only on these tasks")
    p.add_argument("--layers", type=int, default=4)
    p.add_argument("--heads", type=int, default=4)
    p.add_argument("--head-dim", type=int, default=32)
    p.add_argument("--ffn-dim", type=int, default=0, help="0: four times the model width")
    p.add_argument("--rope-base", type=float, default=10000.0)
    p.add_argument("--adapter-rank", type=int, default=32)
    p.add_argument("--lora-rank", type=int, default=8)
    p.add_argument("--lora-alpha", type=float, default=16.0)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--warmup", type=int, default=100)
    p.add_argument("--decay", default="cosine", choices=("cosine", "linear", "none"))
    p.add_argument("--grad-clip", type=float, default=1.0)
    p.add_argument("--log-every", type=int, default=50)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="score a checkpoint on a split")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="test", choices=("train", "val", "test"))
    p.add_argument("--report", required=True)
    p.add_argument("--max-tokens", type=int, default=32)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--allow-unknown", action="store_true", help="score data with words outside the vocabulary")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plot", parents=[common], help="bar charts per task from eval reports")
    p.add_argument("--report", action="append", required=True)
    p.add_argument("--labels", type=_csv, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("export", parents=[common], help="export model inputs or linearized prompts")
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="train", choices=("train", "val", "test"))
    p.add_argument("--format", default="tensors", choices=("tensors", "prompts"))
    p.add_argument("--template", default="tuple", choices=("tuple", "csv"))
    p.add_argument("--ckpt", help="take the vocabulary from this checkpoint")
    p.add_argument("--order", default="random", choices=("as-given", "random", "bfs"))
    _add_layout_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)
    return parser


def _config_path(argv: Sequence[str]) -> str | None:
    for k, tok in enumerate(argv):
        if tok == "--config" and k + 1 < len(argv):
            return argv[k + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    path = _config_path(argv)
    command = next((tok for tok in argv if not tok.startswith("-")), None)
    subparsers = parser._subparsers._group_actions[0].choices
    if path and command in subparsers:
        try:
            values = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(values, dict):
            raise CliError(f"config {path} must hold a JSON object")
        sub = subparsers[command]
        values = {k.replace("-", "_"): v for k, v in values.items() if k not in ("command", "config")}
        actions = {a.dest: a for a in sub._actions}
        unknown = sorted(set(values) - set(actions))
        if unknown:
            sub.error(f"unknown config keys: {', '.join(unknown)}")
        for dest in values:
            actions[dest].required = False
        sub.set_defaults(**values)
    return parser.parse_args(argv)


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
