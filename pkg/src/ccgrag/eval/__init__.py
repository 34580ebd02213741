"""Task generation, metrics, the sliding-window baseline and the eval runner."""

from .metrics import edit_similarity, exact_match, identifier_match, levenshtein, normalize
from .runner import EvalReport, PipelineConfig, run_eval
from .tasks import CompletionTask, TaskLevel, duplication_ratio, generate_tasks, load_tasks, save_tasks
from .window import WindowIndex, count_windows, sliding_window_retrieve

__all__ = [
    "CompletionTask",
    "EvalReport",
    "PipelineConfig",
    "TaskLevel",
    "WindowIndex",
    "count_windows",
    "duplication_ratio",
    "edit_similarity",
    "exact_match",
    "generate_tasks",
    "identifier_match",
    "levenshtein",
    "load_tasks",
    "normalize",
    "run_eval",
    "save_tasks",
    "sliding_window_retrieve",
]
