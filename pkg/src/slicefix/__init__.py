"""slicefix: dependency-context slicing and patch-ensemble evaluation
for single-line bug corpora."""

__version__ = "0.1.0"

from .corpus import BugInstance, CorpusSplit, ingest, split_by_repo
from .depgraph import Cfg, Pdg, build_cfg, build_cdg, build_ddg, build_pdg, postdominators
from .encoder import ModelInput, decode_parts, encode_input
from .evaluation import BugType, classify_bug_type, exact_match, fix_at_k, normalize, overlap_matrix
from .filter_ensemble import EnsembleResult, Verdict, classify_candidate, run_pipeline
from .frontend import ClassContext, MethodAst, ParseFailure, collect_ingredients, extract_class_context, parse_method
from .generators import CandidatePatch, GeneratorSpec, generate
from .slicer import SliceContext, bidirectional_slice, extract_dependency_context

__all__ = [
    "BugInstance",
    "BugType",
    "CandidatePatch",
    "Cfg",
    "ClassContext",
    "CorpusSplit",
    "EnsembleResult",
    "GeneratorSpec",
    "MethodAst",
    "ModelInput",
    "ParseFailure",
    "Pdg",
    "SliceContext",
    "Verdict",
    "bidirectional_slice",
    "build_cdg",
    "build_cfg",
    "build_ddg",
    "build_pdg",
    "classify_bug_type",
    "classify_candidate",
    "collect_ingredients",
    "decode_parts",
    "encode_input",
    "exact_match",
    "extract_class_context",
    "extract_dependency_context",
    "fix_at_k",
    "generate",
    "ingest",
    "normalize",
    "overlap_matrix",
    "parse_method",
    "postdominators",
    "run_pipeline",
    "split_by_repo",
]
