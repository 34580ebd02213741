"""Statement-graph retrieval for repository-level code completion.

Source files become code context graphs (statements linked by control flow,
control dependence and data dependence). Every statement's backward slice
is indexed; a completion context is sliced the same way around a
placeholder for the next line, and similar slices are fetched coarse to
fine and placed in the model prompt.
"""

from .ccg import build_ccg, build_cdg, build_cfg, build_ddg, extract_statements
from .errors import CCGError
from .graph import CodeContextGraph, EdgeType, Language, Statement, StatementKind
from .index_store import Database, IndexEntry, build_database, exclude_file, load, save
from .llm import LlmConfig, complete
from .prompt import PromptBundle, Snippet, compose_prompt
from .retriever import Alignment, Candidate, coarse_retrieve, decay_sed, greedy_align, jaccard, rerank, retrieve
from .slicer import CCGSlice, SequenceSlice, SliceVertex, query_ccg, sequence_slice, slice

__version__ = "0.1.0"

__all__ = [
    "Alignment",
    "CCGError",
    "CCGSlice",
    "Candidate",
    "CodeContextGraph",
    "Database",
    "EdgeType",
    "IndexEntry",
    "Language",
    "LlmConfig",
    "PromptBundle",
    "SequenceSlice",
    "SliceVertex",
    "Snippet",
    "Statement",
    "StatementKind",
    "build_ccg",
    "build_cdg",
    "build_cfg",
    "build_database",
    "build_ddg",
    "coarse_retrieve",
    "complete",
    "compose_prompt",
    "decay_sed",
    "exclude_file",
    "extract_statements",
    "greedy_align",
    "jaccard",
    "load",
    "query_ccg",
    "rerank",
    "retrieve",
    "save",
    "sequence_slice",
    "slice",
]
