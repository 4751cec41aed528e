"""Command-line front end.

Subcommands: ``select`` (write a selection), ``evaluate`` (multi-run
accuracy table with baselines and significance), ``sweep`` (training-size
curve data), and ``generate`` (synthetic corpora). Configuration comes from
an optional plain-text ``key = value`` file; command-line flags override
file values, and defaults follow the standard experimental setup (vocabulary
10000, s=20, m=20000, n=2000 ternary / 1600 binary, 10 runs).

All randomness derives from one base seed through named substreams
(selection, classifier, autoencoder, generator), so every command is a pure
function of its inputs: rerunning with the same config produces
byte-identical output files.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import zlib
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .autoencoder import AETrainConfig
from .corpus import (
    Corpus,
    PreprocessOptions,
    build_vocabulary,
    load_corpus,
    load_stopwords,
    save_corpus,
    tokenize_corpus,
)
from .embeddings import load_embeddings
from .errors import ConfigError, DataError, DataSelectError, NumericalError
from .evaluation import (
    ClassifierConfig,
    ExperimentResources,
    ExperimentResult,
    prepare_context,
    run_experiment,
    run_selection,
    t_test,
)
from .representations import EMBEDDING, REPRESENTATION_KINDS
from .selection import STRATEGIES, SelectionConfig
from .synthetic import DomainSpec, benchmark_suite, generate

BASELINES = ("random", "balanced")


def substream_seed(base_seed: int, name: str) -> int:
    """Derive a named, stable child seed from the base seed."""
    return int(
        np.random.SeedSequence([base_seed, zlib.crc32(name.encode())]).generate_state(1)[0]
    )


@dataclass
class RunConfig:
    task: str = "ternary"
    corpus: str | None = None
    target: str | None = None
    strategy: str = "subset"
    strategies: tuple[str, ...] = ("domain", "instance", "subset")
    representation: str = "term_dist"
    metric: str | None = None
    n: int | None = None
    s: int = 20
    m: int = 20000
    a: float = 1e-5
    vocab_cap: int = 10000
    ae_hidden: int = 1000
    ae_epochs: int = 50
    ae_masking: float = 0.8
    ae_lr: float = 1e-3
    ae_batch: int = 64
    runs: int = 10
    seed: int = 0
    out: str = "out"
    embeddings: str | None = None
    stopwords: str | None = None
    lowercase: bool = True
    allow_proxy_a_subsets: bool = False

    def __post_init__(self):
        if self.task not in ("binary", "ternary"):
            raise ConfigError(f"task must be binary or ternary, got {self.task!r}")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}")
        for strategy in self.strategies:
            if strategy not in STRATEGIES:
                raise ConfigError(f"unknown strategy {strategy!r}")
        if self.representation not in REPRESENTATION_KINDS:
            raise ConfigError(f"unknown representation {self.representation!r}")

    @property
    def resolved_n(self) -> int:
        if self.n is not None:
            return self.n
        return 2000 if self.task == "ternary" else 1600

    def echo(self) -> dict:
        effective = {f.name: getattr(self, f.name) for f in fields(self)}
        effective["n"] = self.resolved_n
        effective["strategies"] = list(self.strategies)
        return effective


_BOOL_VALUES = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


def _parse_bool(value: str) -> bool:
    try:
        return _BOOL_VALUES[value.strip().lower()]
    except KeyError:
        raise ConfigError(f"expected a boolean, got {value!r}") from None


_FIELD_PARSERS = {
    "task": str, "corpus": str, "target": str, "strategy": str,
    "strategies": lambda v: tuple(s.strip() for s in v.split(",") if s.strip()),
    "representation": str, "metric": str,
    "n": int, "s": int, "m": int, "a": float, "vocab_cap": int,
    "ae_hidden": int, "ae_epochs": int, "ae_masking": float,
    "ae_lr": float, "ae_batch": int,
    "runs": int, "seed": int, "out": str, "embeddings": str, "stopwords": str,
    "lowercase": _parse_bool, "allow_proxy_a_subsets": _parse_bool,
}


def load_config_file(path: str | Path) -> dict:
    """Parse a ``key = value`` config file ('#' starts a comment)."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    values: dict = {}
    for lineno, raw in enumerate(path.read_text("utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        parser = _FIELD_PARSERS.get(key)
        if parser is None:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        try:
            values[key] = parser(value)
        except (ValueError, TypeError):
            raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {value!r}") from None
    return values


def build_run_config(args: argparse.Namespace) -> RunConfig:
    values = load_config_file(args.config) if getattr(args, "config", None) else {}
    for key in _FIELD_PARSERS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return RunConfig(**values)


# ---------------------------------------------------------------------------
# Shared experiment wiring
# ---------------------------------------------------------------------------

def _preprocess_options(config: RunConfig) -> PreprocessOptions:
    stop = load_stopwords(config.stopwords) if config.stopwords else None
    return PreprocessOptions(lowercase=config.lowercase, stopwords=stop)


def _load_corpus(config: RunConfig) -> Corpus:
    if not config.corpus:
        raise ConfigError("a corpus path is required (corpus = ... or --corpus)")
    return load_corpus(config.corpus)


def _build_context(config: RunConfig, corpus: Corpus, labeled_pool_only: bool):
    if not config.target:
        raise ConfigError("a target domain is required (target = ... or --target)")
    if config.target not in corpus.domains:
        raise ConfigError(f"unknown target domain {config.target!r}")
    options = _preprocess_options(config)
    token_lists = tokenize_corpus(corpus, options)
    vocab = build_vocabulary(corpus, config.vocab_cap, token_lists=token_lists)
    table = None
    if config.representation == EMBEDDING:
        if not config.embeddings:
            raise ConfigError(
                "representation=embedding requires an embeddings file "
                "(embeddings = ... or --embeddings)"
            )
        table = load_embeddings(config.embeddings, restrict_to=vocab)
    resources = ExperimentResources(
        options=options,
        vocab_cap=config.vocab_cap,
        sif_a=config.a,
        embedding_table=table,
        ae_config=AETrainConfig(
            epochs=config.ae_epochs,
            masking_prob=config.ae_masking,
            learning_rate=config.ae_lr,
            batch_size=config.ae_batch,
            hidden_dim=config.ae_hidden,
            seed=substream_seed(config.seed, "autoencoder"),
        ),
        classifier=ClassifierConfig(seed=substream_seed(config.seed, "classifier")),
    )
    return prepare_context(
        corpus,
        config.target,
        config.representation,
        resources,
        token_lists=token_lists,
        vocab=vocab,
        labeled_pool_only=labeled_pool_only,
    )


def _selection_config(config: RunConfig, strategy: str, n: int | None = None) -> SelectionConfig:
    return SelectionConfig(
        n=n if n is not None else config.resolved_n,
        strategy=strategy,
        representation=config.representation,
        metric=config.metric,
        s=config.s,
        m=config.m,
        seed=config.seed,
        allow_proxy_a_subsets=config.allow_proxy_a_subsets,
    )


def _json_dump(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_select(config: RunConfig) -> int:
    corpus = _load_corpus(config)
    context = _build_context(config, corpus, labeled_pool_only=False)
    sel_config = _selection_config(config, config.strategy)
    result = run_selection(context, sel_config, substream_seed(config.seed, "selection"))
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "selection_ids.txt").write_text(
        "".join(doc_id + "\n" for doc_id in result.chosen), encoding="utf-8"
    )
    _json_dump({"config": config.echo(), "result": result.to_dict()}, out / "selection.json")
    print(
        f"selected {len(result.chosen)} of {sel_config.n} requested "
        f"({config.strategy}, {sel_config.resolved_metric}) -> {out}/selection_ids.txt"
    )
    return 0


def _format_row(columns: list[str]) -> str:
    return "\t".join(columns) + "\n"


def _evaluate_rows(config: RunConfig, corpus: Corpus) -> tuple[list[ExperimentResult], dict]:
    context = _build_context(config, corpus, labeled_pool_only=True)
    selection_seed = substream_seed(config.seed, "selection")
    results: list[ExperimentResult] = []
    for strategy in BASELINES + tuple(s for s in config.strategies if s not in BASELINES):
        results.append(
            run_experiment(
                corpus,
                config.target,
                _selection_config(config, strategy),
                runs=config.runs,
                base_seed=selection_seed,
                context=context,
            )
        )
    by_strategy = {r.strategy: r for r in results}
    significance: dict = {}
    for result in results:
        if result.strategy in BASELINES:
            continue
        entry = {}
        for baseline_key, baseline in (("rand", "random"), ("all", "balanced")):
            if config.runs < 2:
                entry[baseline_key] = "insufficient_runs"
                continue
            test = t_test(result.accuracies, by_strategy[baseline].accuracies)
            entry[baseline_key] = {
                "t": test.t,
                "df": test.df,
                "p": test.p,
                "significantly_better": bool(
                    test.significant and result.mean > by_strategy[baseline].mean
                ),
            }
        significance[result.strategy] = entry
    return results, significance


def cmd_evaluate(config: RunConfig) -> int:
    corpus = _load_corpus(config)
    results, significance = _evaluate_rows(config, corpus)
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    header = [
        "target_domain", "strategy", "representation", "metric",
        "mean_acc", "std", "p_vs_rand", "p_vs_all", "signif",
    ]
    lines = [_format_row(header)]
    for result in results:
        entry = significance.get(result.strategy)
        if entry is None:
            p_rand = p_all = ""
            marks = ""
        elif entry["rand"] == "insufficient_runs":
            p_rand = p_all = "insufficient_runs"
            marks = ""
        else:
            p_rand = f"{entry['rand']['p']:.6g}"
            p_all = f"{entry['all']['p']:.6g}"
            marks = ("*" if entry["rand"]["significantly_better"] else "") + (
                "+" if entry["all"]["significantly_better"] else ""
            )
        lines.append(
            _format_row(
                [
                    result.target_domain, result.strategy, result.representation,
                    result.metric, f"{result.mean:.6f}", f"{result.std:.6f}",
                    p_rand, p_all, marks,
                ]
            )
        )
    (out / "results.tsv").write_text("".join(lines), encoding="utf-8")
    _json_dump(
        {
            "config": config.echo(),
            "results": [r.to_dict() for r in results],
            "significance": significance,
        },
        out / "results.json",
    )
    print(f"wrote {out}/results.tsv and {out}/results.json ({len(results)} rows)")
    return 0


def cmd_sweep(config: RunConfig, n_values: list[int]) -> int:
    if not n_values:
        raise ConfigError("sweep requires at least one n value")
    if any(b <= a for a, b in zip(n_values, n_values[1:])):
        raise ConfigError(f"n values must be strictly ascending, got {n_values}")
    corpus = _load_corpus(config)
    context = _build_context(config, corpus, labeled_pool_only=True)
    selection_seed = substream_seed(config.seed, "selection")
    lines = [_format_row(["n", "strategy", "mean_acc", "std"])]
    for n in n_values:
        for strategy in config.strategies:
            result = run_experiment(
                corpus,
                config.target,
                _selection_config(config, strategy, n=n),
                runs=config.runs,
                base_seed=selection_seed,
                context=context,
            )
            lines.append(
                _format_row([str(n), strategy, f"{result.mean:.6f}", f"{result.std:.6f}"])
            )
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.tsv").write_text("".join(lines), encoding="utf-8")
    print(f"wrote {out}/sweep.tsv ({len(lines) - 1} data rows)")
    return 0


def _domain_spec_from_dict(obj: dict, default_seed: int) -> DomainSpec:
    allowed = {f.name for f in fields(DomainSpec)}
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown domain-spec keys: {sorted(unknown)}")
    values = dict(obj)
    if "doc_length" in values:
        values["doc_length"] = tuple(values["doc_length"])
    if "labels" in values:
        values["labels"] = tuple(values["labels"])
    values.setdefault("seed", default_seed)
    try:
        return DomainSpec(**values)
    except TypeError as exc:
        raise ConfigError(f"bad domain spec: {exc}") from None


def _write_corpus_files(corpus: Corpus, out_dir: Path) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for domain in sorted(corpus.domains):
        path = out_dir / f"{domain}.jsonl"
        save_corpus(Corpus(corpus.domain_documents(domain)), path)
        written.append(path)
    all_path = out_dir / "all.jsonl"
    save_corpus(corpus, all_path)
    written.append(all_path)
    return written


def cmd_generate(config: RunConfig, spec_file: str | None, catalog: bool) -> int:
    out = Path(config.out)
    generator_seed = substream_seed(config.seed, "generator")
    if catalog:
        for name, scenario in benchmark_suite(generator_seed).items():
            written = _write_corpus_files(scenario.corpus, out / name)
            print(f"scenario {name}: {len(written)} files under {out / name}")
        return 0
    if not spec_file:
        raise ConfigError("generate needs either --catalog or a spec file")
    spec_path = Path(spec_file)
    if not spec_path.exists():
        raise ConfigError(f"spec file not found: {spec_path}")
    try:
        spec_obj = json.loads(spec_path.read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{spec_path}: invalid JSON ({exc.msg})") from None
    if not isinstance(spec_obj, dict) or "target" not in spec_obj or "sources" not in spec_obj:
        raise ConfigError(f"{spec_path}: expected an object with 'target' and 'sources'")
    target = _domain_spec_from_dict(spec_obj["target"], generator_seed)
    sources = [
        _domain_spec_from_dict(source, substream_seed(generator_seed, f"source{i}"))
        for i, source in enumerate(spec_obj["sources"])
    ]
    corpus = generate(sources, target)
    written = _write_corpus_files(corpus, out)
    print(f"generated {len(corpus)} documents across {len(corpus.domains)} domains; "
          f"{len(written)} files under {out}")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems map to exit code 1, not argparse's 2
        raise ConfigError(message)


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--corpus", help="corpus JSONL path")
    parser.add_argument("--target", help="target domain name")
    parser.add_argument("--task", choices=["binary", "ternary"])
    parser.add_argument("--representation", choices=list(REPRESENTATION_KINDS))
    parser.add_argument("--metric", choices=["jensen_shannon", "cosine", "proxy_a"])
    parser.add_argument("--n", type=int)
    parser.add_argument("--s", type=int)
    parser.add_argument("--m", type=int)
    parser.add_argument("--a", type=float, help="embedding weighting smoothing factor")
    parser.add_argument("--vocab-cap", dest="vocab_cap", type=int)
    parser.add_argument("--ae-hidden", dest="ae_hidden", type=int)
    parser.add_argument("--ae-epochs", dest="ae_epochs", type=int)
    parser.add_argument("--ae-masking", dest="ae_masking", type=float)
    parser.add_argument("--ae-lr", dest="ae_lr", type=float)
    parser.add_argument("--ae-batch", dest="ae_batch", type=int)
    parser.add_argument("--runs", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--embeddings", help="word-vector file (token + floats per line)")
    parser.add_argument("--stopwords", help="stopword list override, one token per line")


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dataselect", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_select = sub.add_parser("select", help="write a training selection")
    _add_common_flags(p_select)
    p_select.add_argument("--strategy", choices=list(STRATEGIES))
    p_select.set_defaults(func=lambda a: cmd_select(build_run_config(a)))

    p_eval = sub.add_parser("evaluate", help="run the multi-seed evaluation protocol")
    _add_common_flags(p_eval)
    p_eval.add_argument("--strategies", type=_FIELD_PARSERS["strategies"])
    p_eval.set_defaults(func=lambda a: cmd_evaluate(build_run_config(a)))

    p_sweep = sub.add_parser("sweep", help="accuracy vs number of training examples")
    _add_common_flags(p_sweep)
    p_sweep.add_argument("--strategies", type=_FIELD_PARSERS["strategies"])
    p_sweep.add_argument(
        "--n-values", required=True,
        type=lambda v: [int(x) for x in v.split(",") if x.strip()],
        help="comma-separated ascending sizes, e.g. 500,1000,2000",
    )
    p_sweep.set_defaults(func=lambda a: cmd_sweep(build_run_config(a), a.n_values))

    p_gen = sub.add_parser("generate", help="write synthetic corpora")
    _add_common_flags(p_gen)
    p_gen.add_argument("--catalog", action="store_true", help="write the builtin scenarios")
    p_gen.add_argument("--spec", help="JSON domain-spec file")
    p_gen.set_defaults(func=lambda a: cmd_generate(build_run_config(a), a.spec, a.catalog))

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except DataSelectError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
