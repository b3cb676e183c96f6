"""Audit how random the numbers produced by chat-completion models are."""

from .cot import (
    CotAnalysis,
    StrategyLabel,
    aggregate_strategies,
    analyze_trace,
    classify_strategies,
    detect_reasoning_language,
    extract_numbers,
)
from .parsing import ParsedOutput, Status, extract_think, parse_number, parse_output
from .plan import AuditConfig, Cell, ExperimentPlan, expand_plan, load_config
from .prompts import Language, PromptCatalog, render_prompt
from .providers import (
    CompletionRequest,
    CompletionResponse,
    Gateway,
    MockScript,
    ProviderConfig,
    complete,
    mock_draw,
)
from .report import (
    aggregate_table,
    distribution_summary,
    heatmap_matrix,
    render_heatmap_svg,
    summarize_store,
)
from .runner import RunSummary, resume, run
from .stats import (
    CellStats,
    Histogram,
    baseline_uniform_runs,
    cell_stats,
    chi_square_uniform,
    cramers_v,
    randomness_index,
    shannon_entropy_norm,
)

__version__ = "0.1.0"

__all__ = [
    "AuditConfig",
    "Cell",
    "CellStats",
    "CompletionRequest",
    "CompletionResponse",
    "CotAnalysis",
    "ExperimentPlan",
    "Gateway",
    "Histogram",
    "Language",
    "MockScript",
    "ParsedOutput",
    "PromptCatalog",
    "ProviderConfig",
    "RunSummary",
    "Status",
    "StrategyLabel",
    "aggregate_strategies",
    "aggregate_table",
    "analyze_trace",
    "baseline_uniform_runs",
    "cell_stats",
    "chi_square_uniform",
    "classify_strategies",
    "complete",
    "cramers_v",
    "detect_reasoning_language",
    "distribution_summary",
    "expand_plan",
    "extract_numbers",
    "extract_think",
    "heatmap_matrix",
    "load_config",
    "mock_draw",
    "parse_number",
    "parse_output",
    "randomness_index",
    "render_heatmap_svg",
    "render_prompt",
    "resume",
    "run",
    "shannon_entropy_norm",
    "summarize_store",
]
