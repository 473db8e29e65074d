"""End-to-end orchestration and the ``slicefix`` command-line interface.

Every stage is a composable subcommand over JSON Lines artifacts:

    split, parse, graph, extract, encode, generate, run, eval, report

``report`` runs the whole pipeline from a declarative config file
(parse -> extract -> encode -> run -> eval), persisting each stage's output
under the configured output directory. Stage outputs are content-addressed
by a hash of their parameters and input files, so re-running an unchanged
stage is a no-op. Exit codes: 0 success, 1 fatal stage error, 2 config
error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import corpus as corpus_mod
from . import depgraph, encoder, evaluation, frontend, slicer
from .filter_ensemble import EnsembleResult, outcome_from_dict, outcome_to_dict, run_pipeline
from .generators import DEFAULT_K, GeneratorError, make_generator, parse_spec

EXIT_OK = 0
EXIT_STAGE_ERROR = 1
EXIT_CONFIG_ERROR = 2

MIN_BUDGET = 16


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"stage {stage}: {message}")
        self.stage = stage


@dataclass
class PipelineConfig:
    corpus: str
    out_dir: str
    backends: list[str] = field(default_factory=list)
    k: int = DEFAULT_K
    budget: int = encoder.DEFAULT_BUDGET
    policy: str = "refill"
    seed: int = 0
    raw_match: bool = False
    workers: int = 1
    max_k: int = 10

    def validate(self) -> None:
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.budget < MIN_BUDGET:
            raise ConfigError(f"budget must be >= {MIN_BUDGET}")
        if self.policy not in ("refill", "route-bug"):
            raise ConfigError(f"unknown policy {self.policy!r}")
        if not self.backends:
            raise ConfigError("at least one backend spec required")
        if not Path(self.corpus).exists():
            raise ConfigError(f"corpus file not found: {self.corpus}")

    @staticmethod
    def load(path: str | Path, overrides: dict | None = None) -> "PipelineConfig":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        data.update({k: v for k, v in (overrides or {}).items() if v is not None})
        if not data.get("backends"):
            env = os.environ.get("SLICEFIX_BACKEND")
            if env:
                data["backends"] = [env]
        known = set(PipelineConfig.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            cfg = PipelineConfig(**data)
        except TypeError as exc:
            raise ConfigError(str(exc))
        cfg.validate()
        return cfg


# --------------------------------------------------------------------------
# JSONL helpers
# --------------------------------------------------------------------------


def _read_jsonl(path: str | Path) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


def _write_jsonl(path: str | Path, records: list[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


# --------------------------------------------------------------------------
# Stages (pure record transforms; the orchestrator persists them)
# --------------------------------------------------------------------------


def stage_parse(instances: list[corpus_mod.BugInstance]) -> tuple[list[corpus_mod.BugInstance], list[dict]]:
    """Keep instances whose method (and class) parse; report every status."""
    kept: list[corpus_mod.BugInstance] = []
    statuses: list[dict] = []
    for inst in instances:
        try:
            m = frontend.parse_method(inst.method_source)
            frontend.extract_class_context(inst.class_source, m.name)
            stmt = m.statement_at_line(inst.buggy_line)
            if not stmt.is_graph_node:
                raise frontend.ParseFailure("buggy line is not a statement", inst.buggy_line, stmt.text)
        except (frontend.ParseFailure, KeyError) as exc:
            statuses.append({"id": inst.id, "ok": False, "error": str(exc)})
            continue
        kept.append(inst)
        statuses.append({"id": inst.id, "ok": True, "error": None})
    return kept, statuses


def stage_extract(instances: list[corpus_mod.BugInstance]) -> list[dict]:
    records = []
    for inst in instances:
        m = frontend.parse_method(inst.method_source)
        cc = frontend.extract_class_context(inst.class_source, m.name)
        pdg = depgraph.build_pdg(m)
        sc = slicer.extract_dependency_context(pdg, m, cc, m.statement_at_line(inst.buggy_line).sid)
        rec = {"id": inst.id}
        rec.update(slicer.context_to_dict(sc))
        records.append(rec)
    return records


def stage_encode(contexts: list[dict], budget: int, targets: dict | None = None) -> list[dict]:
    records = []
    for ctx in contexts:
        sc = slicer.context_from_dict(ctx)
        mi = encoder.encode_input(sc, budget=budget)
        rec = {"id": ctx["id"]}
        rec.update(encoder.input_to_dict(mi))
        if targets and ctx["id"] in targets:
            rec["target"] = targets[ctx["id"]]
        records.append(rec)
    return records


def stage_run(
    inputs_records: list[dict],
    backends: list[str],
    k: int,
    policy: str,
    workers: int = 1,
) -> EnsembleResult:
    specs = [parse_spec(b, name=f"gen{i + 1}") for i, b in enumerate(backends)]
    inputs = {rec["id"]: encoder.input_from_dict(rec) for rec in inputs_records}
    return run_pipeline(specs, inputs, k=k, policy=policy, workers=workers)


def stage_eval(
    candidates_by_model: dict[str, dict[str, list[str]]],
    truth_instances: list[corpus_mod.BugInstance],
    max_k: int = 10,
    raw: bool = False,
) -> evaluation.EvalReport:
    truths = {inst.id: inst.fixed_line for inst in truth_instances}
    buggy = {inst.id: inst.buggy_text() for inst in truth_instances}
    return evaluation.build_report(candidates_by_model, truths, buggy, max_k=max_k, raw=raw)


# --------------------------------------------------------------------------
# run_all orchestrator
# --------------------------------------------------------------------------


class _Manifest:
    def __init__(self, out_dir: Path):
        self.path = out_dir / "manifest.json"
        self.data: dict = {}
        if self.path.exists():
            try:
                self.data = json.loads(self.path.read_text(encoding="utf-8"))
            except json.JSONDecodeError:
                self.data = {}

    def stage_hash(self, stage: str, params: dict, input_paths: list[Path]) -> str:
        payload = {
            "stage": stage,
            "params": params,
            "inputs": [_sha256_file(p) for p in input_paths],
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()

    def is_fresh(self, stage: str, digest: str, outputs: list[Path]) -> bool:
        entry = self.data.get(stage)
        return bool(entry) and entry.get("hash") == digest and all(p.exists() for p in outputs)

    def record(self, stage: str, digest: str, outputs: list[Path]) -> None:
        self.data[stage] = {"hash": digest, "outputs": [str(p) for p in outputs]}
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(json.dumps(self.data, indent=2, sort_keys=True), encoding="utf-8")


def run_all(config: PipelineConfig) -> evaluation.EvalReport:
    """Execute parse -> extract -> encode -> run -> eval, persisting artifacts."""
    config.validate()
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = _Manifest(out_dir)
    events: list[dict] = []
    corpus_path = Path(config.corpus)

    def run_stage(stage: str, params: dict, input_paths: list[Path], outputs: list[Path], fn) -> None:
        digest = manifest.stage_hash(stage, params, input_paths)
        if manifest.is_fresh(stage, digest, outputs):
            events.append({"stage": stage, "status": "skipped", "hash": digest})
            return
        try:
            fn()
        except Exception as exc:
            events.append({"stage": stage, "status": "failed", "error": str(exc)})
            _write_jsonl(out_dir / "events.jsonl", events)
            _write_text(
                out_dir / "failure.json",
                json.dumps({"stage": stage, "error": str(exc)}, indent=2, sort_keys=True),
            )
            raise StageError(stage, str(exc))
        manifest.record(stage, digest, outputs)
        events.append({"stage": stage, "status": "ok", "hash": digest})

    parsed_path = out_dir / "parsed.jsonl"
    parse_report_path = out_dir / "parse_report.jsonl"

    def do_parse() -> None:
        result = corpus_mod.ingest(corpus_path)
        kept, statuses = stage_parse(result.instances)
        for issue in result.rejected:
            statuses.append({"id": issue.instance_id, "ok": False, "error": issue.reason})
        corpus_mod.write_corpus(kept, parsed_path)
        _write_jsonl(parse_report_path, statuses)

    run_stage("parse", {}, [corpus_path], [parsed_path, parse_report_path], do_parse)

    contexts_path = out_dir / "contexts.jsonl"

    def do_extract() -> None:
        instances = corpus_mod.ingest(parsed_path).instances
        _write_jsonl(contexts_path, stage_extract(instances))

    run_stage("extract", {}, [parsed_path], [contexts_path], do_extract)

    inputs_path = out_dir / "inputs.jsonl"

    def do_encode() -> None:
        contexts = _read_jsonl(contexts_path)
        instances = corpus_mod.ingest(parsed_path).instances
        targets = {inst.id: inst.fixed_line for inst in instances}
        _write_jsonl(inputs_path, stage_encode(contexts, config.budget, targets))

    run_stage("encode", {"budget": config.budget}, [contexts_path], [inputs_path], do_encode)

    ensemble_path = out_dir / "ensemble.jsonl"

    def do_run() -> None:
        inputs_records = _read_jsonl(inputs_path)
        result = stage_run(inputs_records, config.backends, config.k, config.policy, config.workers)
        _write_jsonl(ensemble_path, [outcome_to_dict(o) for o in result.outcomes.values()])

    run_stage(
        "run",
        {"backends": config.backends, "k": config.k, "policy": config.policy},
        [inputs_path],
        [ensemble_path],
        do_run,
    )

    report_path = out_dir / "report.json"
    tables_path = out_dir / "report.md"

    def do_eval() -> None:
        outcomes = [outcome_from_dict(d) for d in _read_jsonl(ensemble_path)]
        candidates = {"ensemble": {o.bug_id: [c.text for c in o.final] for o in outcomes}}
        instances = corpus_mod.ingest(parsed_path).instances
        report = stage_eval(candidates, instances, max_k=config.max_k, raw=config.raw_match)
        _write_text(report_path, json.dumps(report.to_json_dict(), indent=2, sort_keys=True))
        _write_text(tables_path, evaluation.render_markdown(report))

    run_stage(
        "eval",
        {"max_k": config.max_k, "raw": config.raw_match},
        [ensemble_path, parsed_path],
        [report_path, tables_path],
        do_eval,
    )

    _write_jsonl(out_dir / "events.jsonl", events)
    report = evaluation.EvalReport(models=[], total_bugs=0)
    data = json.loads(report_path.read_text(encoding="utf-8"))
    report.models = data["models"]
    report.total_bugs = data["total_bugs"]
    report.correct_sets = data["correct_sets"]
    report.fix_at_k = {m: {int(k): v for k, v in t.items()} for m, t in data["fix_at_k"].items()}
    report.bug_types = data["bug_types"]
    report.bug_type_totals = data["bug_type_totals"]
    report.overlap = data["overlap"]
    report.unique_fixes = data["unique_fixes"]
    return report


# --------------------------------------------------------------------------
# Subcommand handlers
# --------------------------------------------------------------------------


def _cmd_split(args) -> int:
    ratios = tuple(float(r) for r in args.ratios.split(","))
    if len(ratios) != 3:
        print("error: --ratios needs three comma-separated fractions", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    result = corpus_mod.ingest(args.infile)
    try:
        split = corpus_mod.split_by_repo(result.instances, ratios, args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    out_dir = Path(args.out_dir)
    by_id = {inst.id: inst for inst in result.instances}
    for name, ids in split.sets().items():
        corpus_mod.write_corpus([by_id[i] for i in sorted(ids)], out_dir / f"{name}.jsonl")
    report = corpus_mod.split_report(result.instances, split)
    _write_text(out_dir / "split.json", json.dumps(report, indent=2, sort_keys=True))
    print(json.dumps(report["splits"], indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_parse(args) -> int:
    result = corpus_mod.ingest(args.infile)
    kept, statuses = stage_parse(result.instances)
    for issue in result.rejected:
        statuses.append({"id": issue.instance_id, "ok": False, "error": issue.reason})
    _write_jsonl(args.report, statuses)
    if args.out:
        corpus_mod.write_corpus(kept, args.out)
    ok = sum(1 for s in statuses if s["ok"])
    print(f"parsed {ok}/{len(statuses)} instances; report at {args.report}")
    return EXIT_OK


def _cmd_graph(args) -> int:
    result = corpus_mod.ingest(args.infile)
    inst = next((i for i in result.instances if i.id == args.id), None)
    if inst is None:
        print(f"error: no instance {args.id!r}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    try:
        m = frontend.parse_method(inst.method_source)
    except frontend.ParseFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE_ERROR
    if args.graph == "cfg":
        g = depgraph.build_cfg(m)
        text = depgraph.cfg_to_dot(m, g) if args.format == "dot" else json.dumps(
            {
                "nodes": sorted(g.nodes),
                "edges": [
                    {"src": s, "dst": d, "label": label}
                    for s, d, label in sorted(g.edges, key=lambda e: (e[0], e[1], str(e[2])))
                ],
            },
            indent=2,
        )
    else:
        pdg = depgraph.build_pdg(m)
        text = depgraph.pdg_to_dot(m, pdg) if args.format == "dot" else json.dumps(
            depgraph.pdg_to_json(m, pdg), indent=2
        )
    print(text)
    return EXIT_OK


def _cmd_extract(args) -> int:
    result = corpus_mod.ingest(args.infile)
    kept, _ = stage_parse(result.instances)
    _write_jsonl(args.out, stage_extract(kept))
    print(f"wrote {len(kept)} contexts to {args.out}")
    return EXIT_OK


def _cmd_encode(args) -> int:
    contexts = _read_jsonl(args.infile)
    targets = None
    if args.targets:
        targets = {inst.id: inst.fixed_line for inst in corpus_mod.ingest(args.targets).instances}
    records = stage_encode(contexts, args.budget, targets)
    _write_jsonl(args.out, records)
    print(f"encoded {len(records)} inputs to {args.out}")
    return EXIT_OK


def _cmd_generate(args) -> int:
    spec = parse_spec(args.backend)
    inputs_records = _read_jsonl(args.infile)
    gen = make_generator(spec)
    records = []
    failures = 0
    try:
        for rec in inputs_records:
            mi = encoder.input_from_dict(rec)
            try:
                cands = gen.generate(mi, args.k, rec["id"])
            except GeneratorError as exc:
                records.append({"id": rec["id"], "candidates": [], "error": str(exc)})
                failures += 1
                continue
            records.append(
                {
                    "id": rec["id"],
                    "candidates": [
                        {"rank": c.rank, "text": c.text, "score": c.score, "generator": c.generator}
                        for c in cands
                    ],
                    "error": None,
                }
            )
    finally:
        gen.close()
    _write_jsonl(args.out, records)
    print(f"generated candidates for {len(records) - failures}/{len(records)} inputs")
    return EXIT_OK if failures == 0 else EXIT_STAGE_ERROR


def _split_backend_args(args) -> list[str]:
    backends: list[str] = []
    if args.backends:
        backends.extend(s for s in args.backends.split(",") if s)
    if args.backend:
        backends.extend(args.backend)
    if not backends:
        env = os.environ.get("SLICEFIX_BACKEND")
        if env:
            backends.append(env)
    return backends


def _cmd_run(args) -> int:
    backends = _split_backend_args(args)
    if not backends:
        print("error: no backends given (use --backends or SLICEFIX_BACKEND)", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    inputs_records = _read_jsonl(args.infile)
    try:
        result = stage_run(inputs_records, backends, args.k, args.policy, args.workers)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    _write_jsonl(args.out, [outcome_to_dict(o) for o in result.outcomes.values()])
    errors = sum(1 for o in result.outcomes.values() if o.error)
    print(f"processed {len(result.outcomes) - errors}/{len(result.outcomes)} bugs ({args.policy})")
    return EXIT_OK


def _cmd_eval(args) -> int:
    candidates_by_model: dict[str, dict[str, list[str]]] = {}
    for item in args.ensemble:
        if "=" in item and not item.split("=", 1)[0].startswith((".", "/")):
            name, path = item.split("=", 1)
        else:
            name, path = Path(item).stem, item
        outcomes = [outcome_from_dict(d) for d in _read_jsonl(path)]
        candidates_by_model[name] = {o.bug_id: [c.text for c in o.final] for o in outcomes}
    instances = corpus_mod.ingest(args.truth).instances
    report = stage_eval(candidates_by_model, instances, max_k=args.max_k, raw=args.raw)
    _write_text(args.report, json.dumps(report.to_json_dict(), indent=2, sort_keys=True))
    if args.tables:
        _write_text(args.tables, evaluation.render_markdown(report))
    for model in report.models:
        best_k = max(report.fix_at_k[model])
        rate = report.fix_at_k[model][best_k]
        print(f"{model}: {len(report.correct_sets[model])} correct, Fix@{best_k} = {rate * 100:.2f}%")
    return EXIT_OK


def _cmd_report(args) -> int:
    overrides = {
        "k": args.k,
        "budget": args.budget,
        "policy": args.policy,
        "workers": args.workers,
    }
    try:
        config = PipelineConfig.load(args.config, overrides)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    try:
        report = run_all(config)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE_ERROR
    out_dir = Path(config.out_dir)
    print(f"report written to {out_dir / 'report.json'} and {out_dir / 'report.md'}")
    for model in report.models:
        best_k = max(report.fix_at_k[model])
        rate = report.fix_at_k[model][best_k]
        print(f"{model}: Fix@{best_k} = {rate * 100:.2f}%")
    return EXIT_OK


# --------------------------------------------------------------------------
# Argument parsing
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slicefix", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="repo-disjoint corpus split")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--ratios", default="0.8,0.1,0.1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("parse", help="parse methods, report failures")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--out", help="write the surviving corpus subset here")
    p.set_defaults(func=_cmd_parse)

    p = sub.add_parser("graph", help="dump the CFG/PDG of one instance")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--id", required=True)
    p.add_argument("--format", choices=("dot", "json"), default="dot")
    p.add_argument("--graph", choices=("cfg", "pdg"), default="pdg")
    p.set_defaults(func=_cmd_graph)

    p = sub.add_parser("extract", help="extract dependency contexts")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("encode", help="encode contexts into model inputs")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--budget", type=int, default=encoder.DEFAULT_BUDGET)
    p.add_argument("--out", required=True)
    p.add_argument("--targets", help="corpus file; adds fixed lines as targets")
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("generate", help="query one backend for candidates")
    p.add_argument("--backend", required=True)
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("run", help="run the filter ensemble")
    p.add_argument("--backends", help="comma-separated backend specs")
    p.add_argument("--backend", action="append", help="repeatable backend spec")
    p.add_argument("--policy", choices=("refill", "route-bug"), default="refill")
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("eval", help="exact-match metrics and tables")
    p.add_argument("--ensemble", action="append", required=True, help="[name=]ensemble.jsonl, repeatable")
    p.add_argument("--truth", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--tables")
    p.add_argument("--max-k", type=int, default=10)
    p.add_argument("--raw", action="store_true", help="raw-text equality instead of token equality")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("report", help="run the whole pipeline from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--budget", type=int)
    p.add_argument("--policy", choices=("refill", "route-bug"))
    p.add_argument("--workers", type=int)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE_ERROR
    except (ValueError, frontend.ParseFailure) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
