"""Command-line interface: build trees, generate corpora, export regexes.

Every command that writes files also writes a manifest echoing its inputs,
configuration and output checksums; re-running with the same manifest
inputs reproduces the outputs byte for byte. Files are written atomically
(temp file + rename).
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import os
import re
import sys
import tempfile
from collections import Counter
from pathlib import Path

from . import __version__
from .builder import BuilderConfig, build, entity_occurrence
from .corpus import Dataset, EntityLexicon, build_dataset, parse_conll, parse_records
from .east import East, deserialize, entity_slots, iter_nodes, serialize, validate
from .embeddings import load_embeddings
from .errors import EastgenError, MissingLexiconError, TreeValidationError
from .generator import (
    GenerationConfig,
    GenerationStats,
    OUTPUT_FORMATS,
    emit,
    generate_batch,
)
from .regex_export import dump_bundle, export_regex

TREE_SUFFIX = ".east.json"
LEXICON_FILENAME = "lexicon.json"


def _threshold(value: str) -> float:
    t = float(value)
    if not 0 < t < 1:
        raise argparse.ArgumentTypeError(f"threshold must be in (0, 1), got {value}")
    return t


def _positive_int(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return n


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(
    manifest_path: Path, command: str, inputs: dict, config: dict, outputs: list[Path]
) -> None:
    doc = {
        "command": command,
        "version": __version__,
        "inputs": inputs,
        "config": config,
        "outputs": {p.name: f"sha256:{_sha256(p)}" for p in outputs},
    }
    _atomic_write(manifest_path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _read_corpus(path: str, fmt: str, synthetic_intent: str | None) -> Dataset:
    text = Path(path).read_text(encoding="utf-8")
    sentences = parse_conll(text) if fmt == "conll" else parse_records(text)
    return build_dataset(sentences, synthetic_intent=synthetic_intent)


def _intent_filename(intent: str, used: set[str]) -> str:
    base = re.sub(r"[^A-Za-z0-9._-]+", "_", intent).strip("_") or "intent"
    name = base
    counter = 2
    while name in used:
        name = f"{base}_{counter}"
        counter += 1
    used.add(name)
    return name


def _load_trees(path: str) -> dict[str, East]:
    root = Path(path)
    files = sorted(root.glob(f"*{TREE_SUFFIX}")) if root.is_dir() else [root]
    if not files:
        raise EastgenError(f"no {TREE_SUFFIX} documents under {path}")
    trees: dict[str, East] = {}
    for file in files:
        tree = deserialize(file.read_text(encoding="utf-8"))
        if tree.intent in trees:
            raise EastgenError(
                f"duplicate tree for intent {tree.intent!r} in {file.name}"
            )
        trees[tree.intent] = tree
    return trees


def _load_lexicon(path: str) -> EntityLexicon:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(doc, dict):
        raise EastgenError("lexicon file must be an object of {label: {form: count}}")
    lexicon = EntityLexicon()
    for label, forms in doc.items():
        for form, count in forms.items():
            lexicon.add(label, form, int(count))
    return lexicon


def _dump_lexicon(lexicon: EntityLexicon) -> str:
    doc = {label: dict(counter) for label, counter in lexicon.entries.items()}
    return json.dumps(doc, indent=2, ensure_ascii=False, sort_keys=True) + "\n"


def _check_lexicon_coverage(trees: dict[str, East], lexicon: EntityLexicon) -> None:
    for intent, tree in trees.items():
        for slot in sorted(entity_slots(tree)):
            if not lexicon.forms(slot):
                raise MissingLexiconError(slot)


# --- commands ---------------------------------------------------------------


def cmd_build(args: argparse.Namespace) -> int:
    dataset = _read_corpus(args.corpus, args.format, args.synthetic_intent)
    config = BuilderConfig(
        main_entity_threshold=args.threshold, singleton_main=args.singleton_main
    )
    trees = build(dataset, config)

    out = Path(args.out)
    outputs: list[Path] = []
    used: set[str] = set()
    for intent, tree in trees.items():
        violations = validate(tree)
        if violations:
            for violation in violations:
                print(f"{intent}: {violation}", file=sys.stderr)
            return 1
        path = out / f"{_intent_filename(intent, used)}{TREE_SUFFIX}"
        _atomic_write(path, serialize(tree))
        outputs.append(path)
    lexicon_path = out / LEXICON_FILENAME
    _atomic_write(lexicon_path, _dump_lexicon(dataset.lexicon))
    outputs.append(lexicon_path)

    _write_manifest(
        out / "manifest.json",
        "build",
        inputs={"corpus": args.corpus, "format": args.format},
        config={
            "threshold": args.threshold,
            "singleton_main": args.singleton_main,
            "synthetic_intent": args.synthetic_intent,
        },
        outputs=outputs,
    )
    print(f"built {len(trees)} tree(s) under {out}")
    return 0


def cmd_generate(args: argparse.Namespace) -> int:
    trees = _load_trees(args.trees)
    dataset: Dataset | None = None
    if args.corpus:
        dataset = _read_corpus(args.corpus, args.format, args.synthetic_intent)
        lexicon = dataset.lexicon
    else:
        lexicon = _load_lexicon(args.lexicon)
    _check_lexicon_coverage(trees, lexicon)

    table = None
    if not args.no_embeddings:
        if not args.embeddings:
            raise EastgenError("an embedding file is required unless --no-embeddings")
        table = load_embeddings(Path(args.embeddings).read_text(encoding="utf-8"))

    if dataset is None and args.count is None:
        raise EastgenError("--count is required when only a lexicon is given")
    config = GenerationConfig(
        seed=args.seed,
        k=args.k,
        factor=args.factor,
        count=args.count,
        use_embeddings=not args.no_embeddings,
        apply_dropout=not args.no_dropout,
        weighted_lexicon=args.weighted_lexicon,
        neighbors_within_lexicon=args.neighbors_from_lexicon,
    )
    stats = GenerationStats()
    sentences = generate_batch(
        trees, dataset, config, table, lexicon=lexicon, stats=stats
    )

    sink = io.StringIO()
    emit(sentences, sink, args.format)
    out = Path(args.out)
    _atomic_write(out, sink.getvalue())
    stats_path = out.with_name(out.name + ".stats.json")
    _atomic_write(
        stats_path, json.dumps(stats.to_dict(), indent=2, sort_keys=True) + "\n"
    )

    _write_manifest(
        out.with_name(out.name + ".manifest.json"),
        "generate",
        inputs={
            "trees": args.trees,
            "lexicon": args.lexicon,
            "corpus": args.corpus,
            "embeddings": args.embeddings,
        },
        config={
            "seed": args.seed,
            "k": args.k,
            "factor": args.factor,
            "count": args.count,
            "format": args.format,
            "no_embeddings": args.no_embeddings,
            "no_dropout": args.no_dropout,
            "weighted_lexicon": args.weighted_lexicon,
            "neighbors_from_lexicon": args.neighbors_from_lexicon,
        },
        outputs=[out, stats_path],
    )
    print(f"generated {len(sentences)} sentence(s) -> {out}")
    return 0


def cmd_export_regex(args: argparse.Namespace) -> int:
    trees = _load_trees(args.trees)
    lexicon = _load_lexicon(args.lexicon)
    _check_lexicon_coverage(trees, lexicon)

    out = Path(args.out)
    outputs: list[Path] = []
    used: set[str] = set()
    for intent, tree in trees.items():
        bundle = export_regex(tree, lexicon)
        path = out / f"{_intent_filename(intent, used)}.regex.txt"
        _atomic_write(path, dump_bundle(bundle))
        outputs.append(path)

    _write_manifest(
        out / "manifest.json",
        "export-regex",
        inputs={"trees": args.trees, "lexicon": args.lexicon},
        config={},
        outputs=outputs,
    )
    print(f"exported {len(outputs)} bundle(s) under {out}")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    problems = 0
    if args.trees:
        root = Path(args.trees)
        files = sorted(root.glob(f"*{TREE_SUFFIX}")) if root.is_dir() else [root]
        seen_intents: set[str] = set()
        for file in files:
            try:
                tree = deserialize(file.read_text(encoding="utf-8"))
            except TreeValidationError as exc:
                for violation in exc.violations:
                    print(f"{file.name}: {violation}")
                problems += len(exc.violations)
                continue
            except EastgenError as exc:
                print(f"{file.name}: {exc}")
                problems += 1
                continue
            if tree.intent in seen_intents:
                print(f"{file.name}: duplicate tree for intent {tree.intent!r}")
                problems += 1
            seen_intents.add(tree.intent)
    else:
        try:
            _read_corpus(args.corpus, args.format, synthetic_intent="ALL")
        except EastgenError as exc:
            print(f"{args.corpus}: {exc}")
            problems += 1

    if problems:
        print(f"{problems} violation(s)")
        return 1
    print("ok")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    if args.corpus:
        dataset = _read_corpus(args.corpus, args.format, synthetic_intent="ALL")
        tokens = Counter()
        lengths = []
        for sentence in dataset.sentences:
            tokens.update(sentence.tokens)
            lengths.append(len(sentence.tokens))
        slot_labels = set(dataset.lexicon.labels())
        print(f"sentences: {len(dataset.sentences)}")
        print(f"vocab size: {len(tokens)}")
        print(f"average sentence length: {sum(lengths) / len(lengths):.2f}")
        print(f"intents: {len(dataset.by_intent)}")
        print(f"slot labels: {len(slot_labels)}")
        for intent, templates in dataset.by_intent.items():
            print(f"intent {intent!r}:")
            occ = entity_occurrence(templates)
            for label in sorted(occ, key=lambda l: (-occ[l], l)):
                print(f"  {label}: {int(occ[label] * 100)}%")
    else:
        trees = _load_trees(args.trees)
        for intent, tree in trees.items():
            kinds = Counter(node.kind for _, node in iter_nodes(tree))
            slots = sorted(entity_slots(tree))
            summary = ", ".join(f"{k}={v}" for k, v in sorted(kinds.items()))
            print(f"intent {intent!r}: {summary}; slots: {', '.join(slots)}")
    return 0


# --- parser -----------------------------------------------------------------


def _add_format(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--format", choices=OUTPUT_FORMATS, default="conll", help="corpus format"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eastgen",
        description="Induce entity-aware syntax trees and generate labeled corpora.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="induce one tree per intent from a corpus")
    p.add_argument("corpus")
    _add_format(p)
    p.add_argument("--threshold", type=_threshold, default=0.5,
                   help="main entity occurrence threshold in (0, 1)")
    p.add_argument("--singleton-main", action="store_true",
                   help="keep only the most frequent main entity")
    p.add_argument("--synthetic-intent", default=None,
                   help="intent assigned to sentences without one (NER corpora)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("generate", help="sample labeled sentences from trees")
    p.add_argument("--trees", required=True, help="tree document or directory")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--lexicon", help="lexicon JSON file")
    src.add_argument("--corpus", help="training corpus (lexicon and sizes)")
    p.add_argument("--embeddings", help="word vector file")
    p.add_argument("--no-embeddings", action="store_true",
                   help="skip nearest-neighbor entity substitution")
    p.add_argument("--k", type=_positive_int, default=5,
                   help="neighbors per entity candidate")
    amount = p.add_mutually_exclusive_group()
    amount.add_argument("--factor", type=_positive_int, default=2,
                        help="output multiple of each intent's training size")
    amount.add_argument("--count", type=_positive_int, default=None,
                        help="absolute sentence count per intent")
    p.add_argument("--seed", type=int, required=True, help="generation seed")
    p.add_argument("--no-dropout", action="store_true")
    p.add_argument("--weighted-lexicon", action="store_true",
                   help="draw entity candidates by training frequency")
    p.add_argument("--neighbors-from-lexicon", action="store_true",
                   help="restrict neighbor search to the slot's lexicon")
    p.add_argument("--synthetic-intent", default=None)
    _add_format(p)
    p.add_argument("--out", required=True, help="output corpus file")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("export-regex", help="lower trees to regex bundles")
    p.add_argument("--trees", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_export_regex)

    p = sub.add_parser("validate", help="check trees or a corpus; exit 0 iff clean")
    target = p.add_mutually_exclusive_group(required=True)
    target.add_argument("--trees")
    target.add_argument("--corpus")
    _add_format(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stats", help="summarize a corpus or trees")
    target = p.add_mutually_exclusive_group(required=True)
    target.add_argument("--corpus")
    target.add_argument("--trees")
    _add_format(p)
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EastgenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
