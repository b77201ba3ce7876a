"""QA benchmark runner and scoring: LLM-as-judge rubric plus semantic
similarity, with per-record token, cost, and latency accounting.

Every (configuration, question, repetition) triple yields exactly one record;
failures are flagged on the record rather than dropped, so the record count is
always |configs| * |qa| * repetitions. Rubric scores are integers 1..5 per
criterion, rescaled to [0, 1] via (score - 1) / 4 and averaged.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable

from .agent import AgentLimits, ErrorEvent, TurnCompleteEvent, new_session, run_turn
from .errors import ScoringError
from .graph import AbstractionLevel, PropertyGraph
from .llm import Gateway, LlmHandle, TokenUsage, extract_json_object, fill_template, load_prompt
from .tools import PathRagParams, Toolkit
from .vectors import IndexName, VectorIndex, cosine_similarity


class QaCategory(str, Enum):
    GRAPH_QUERY_SINGLE = "graph_query_single"
    GRAPH_QUERY_MULTI = "graph_query_multi"
    PATH_EXPLORATION = "path_exploration"
    KNOWLEDGE_INFERENCE = "knowledge_inference"
    GRAPH_SUMMARIZATION = "graph_summarization"


CATEGORY_TITLES = {
    QaCategory.GRAPH_QUERY_SINGLE: "Graph Query (single)",
    QaCategory.GRAPH_QUERY_MULTI: "Graph Query (multi)",
    QaCategory.GRAPH_SUMMARIZATION: "Graph Summarization",
    QaCategory.KNOWLEDGE_INFERENCE: "Knowledge Inference",
    QaCategory.PATH_EXPLORATION: "Path Exploration",
}


@dataclass
class QaItem:
    id: str
    category: QaCategory
    question: str
    reference_answer: str


DEFAULT_QA_RESOURCE = Path(__file__).parent / "data" / "qa_set.jsonl"


def load_qa_set(path: Path | str | None = None) -> list[QaItem]:
    path = Path(path) if path is not None else DEFAULT_QA_RESOURCE
    items = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        raw = json.loads(line)
        items.append(
            QaItem(raw["id"], QaCategory(raw["category"]), raw["question"], raw["reference_answer"])
        )
    return items


RUBRIC_CRITERIA = ("relatedness", "completeness", "correctness", "coherence")


@dataclass
class RubricScore:
    relatedness: int
    completeness: int
    correctness: int
    coherence: int
    justifications: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for criterion in RUBRIC_CRITERIA:
            score = getattr(self, criterion)
            if not isinstance(score, int) or not 1 <= score <= 5:
                raise ScoringError(f"{criterion} score {score!r} outside 1..5")

    def rescaled_accuracy(self) -> float:
        return sum(rescale(getattr(self, c)) for c in RUBRIC_CRITERIA) / len(RUBRIC_CRITERIA)


def rescale(score: int) -> float:
    """Map a 1..5 rubric score linearly onto [0, 1]."""
    if not 1 <= score <= 5:
        raise ScoringError(f"rubric score {score!r} outside 1..5")
    return (score - 1) / 4


def judge_response(answer: str, reference: str, judge: LlmHandle, tag: str | None = None) -> RubricScore:
    """Rubric scoring with one structured retry on unparseable judge output."""
    prompt = fill_template(load_prompt("judge"), {"reference": reference, "answer": answer})
    reply = judge.complete(prompt, tag=tag)
    parsed = _parse_rubric(reply)
    if parsed is None:
        retry_prompt = (
            "Your previous reply could not be parsed. Reply again with JSON only, "
            "matching the requested shape exactly.\n\n" + prompt
        )
        reply = judge.complete(retry_prompt, tag=tag)
        parsed = _parse_rubric(reply)
    if parsed is None:
        raise ScoringError(f"judge output not parseable after retry: {reply[:200]!r}")
    return parsed


def _parse_rubric(reply: str) -> RubricScore | None:
    obj = extract_json_object(reply)
    if obj is None:
        return None
    scores = {}
    justifications = {}
    for criterion in RUBRIC_CRITERIA:
        entry = obj.get(criterion)
        if not isinstance(entry, dict):
            return None
        score = entry.get("score")
        justification = entry.get("justification", "")
        if not isinstance(score, int) or not 1 <= score <= 5 or not justification:
            return None
        scores[criterion] = score
        justifications[criterion] = str(justification)
    return RubricScore(justifications=justifications, **scores)


def score_semantic_similarity(answer: str, reference: str, gateway: Gateway, tag: str | None = None) -> float:
    vectors = gateway.embed([answer, reference], tag=tag)
    return cosine_similarity(vectors[0], vectors[1])


# -- benchmark runner ---------------------------------------------------------


@dataclass(frozen=True)
class BenchmarkConfig:
    model: str
    tool: str  # context_rag | vector_rag | path_rag | cypher_rag
    level: AbstractionLevel

    @property
    def name(self) -> str:
        return f"{self.model}+{self.tool}+{self.level.value}"


@dataclass
class EvalRecord:
    qa_id: str
    category: QaCategory
    config: str
    repetition: int
    answer: str = ""
    rubric: RubricScore | None = None
    accuracy: float | None = None
    similarity: float | None = None
    usage: TokenUsage = field(default_factory=TokenUsage)
    cost: float = 0.0
    latency_seconds: float = 0.0
    failed: bool = False
    error: str | None = None

    def to_dict(self) -> dict:
        out = {
            "qa_id": self.qa_id,
            "category": self.category.value,
            "config": self.config,
            "repetition": self.repetition,
            "answer": self.answer,
            "accuracy": self.accuracy,
            "similarity": self.similarity,
            "usage": {"input_tokens": self.usage.input_tokens, "output_tokens": self.usage.output_tokens},
            "cost": self.cost,
            "latency_seconds": self.latency_seconds,
            "failed": self.failed,
            "error": self.error,
        }
        if self.rubric is not None:
            out["rubric"] = {
                **{c: getattr(self.rubric, c) for c in RUBRIC_CRITERIA},
                "justifications": self.rubric.justifications,
            }
        return out


@dataclass
class BenchmarkRuntime:
    """Bindings the runner needs: graphs per level and handle factories.

    The factories are called once per record so scripted mocks start fresh;
    live runs can return a shared handle.
    """

    graphs: dict[AbstractionLevel, PropertyGraph]
    indexes: dict[AbstractionLevel, dict[IndexName, VectorIndex]]
    llm_factory: Callable[[BenchmarkConfig, QaItem, int], LlmHandle]
    judge_factory: Callable[[BenchmarkConfig, QaItem, int], LlmHandle]
    scoring_gateway: Gateway
    params: PathRagParams = field(default_factory=PathRagParams)


def run_benchmark(
    configs: list[BenchmarkConfig],
    qa_items: list[QaItem],
    repetitions: int,
    runtime: BenchmarkRuntime,
) -> list[EvalRecord]:
    records: list[EvalRecord] = []
    for config in configs:
        for qa in qa_items:
            for repetition in range(1, repetitions + 1):
                records.append(_run_one(config, qa, repetition, runtime))
    return records


def _run_one(config: BenchmarkConfig, qa: QaItem, repetition: int, runtime: BenchmarkRuntime) -> EvalRecord:
    record = EvalRecord(qa.id, qa.category, config.name, repetition)
    try:
        graph = runtime.graphs[config.level]
        indexes = runtime.indexes[config.level]
        llm = runtime.llm_factory(config, qa, repetition)
        toolkit = Toolkit(graph=graph, indexes=indexes, llm=llm, params=runtime.params)
        session = new_session(
            toolkit,
            AgentLimits(max_tool_calls_per_turn=4, benchmark_once_per_tool=True),
        )
        session.allowed_tools = [config.tool]

        started = time.perf_counter()
        answer = None
        for event in run_turn(session, qa.question):
            if isinstance(event, TurnCompleteEvent):
                record.latency_seconds = time.perf_counter() - started
                answer = event.answer
                record.usage = event.usage
                record.cost = event.cost
            elif isinstance(event, ErrorEvent):
                record.latency_seconds = time.perf_counter() - started
                raise ScoringError(f"agent turn failed: {event.detail}")
        if answer is None:
            raise ScoringError("agent turn produced no final answer")
        record.answer = answer

        record.similarity = score_semantic_similarity(
            answer, qa.reference_answer, runtime.scoring_gateway
        )
        judge = runtime.judge_factory(config, qa, repetition)
        record.rubric = judge_response(answer, qa.reference_answer, judge)
        record.accuracy = record.rubric.rescaled_accuracy()
    except Exception as exc:  # noqa: BLE001 - per-record isolation, run continues
        record.failed = True
        record.error = f"{type(exc).__name__}: {exc}"
    return record


# -- aggregation --------------------------------------------------------------


@dataclass
class CellStats:
    accuracy: float
    cost: float
    latency: float
    count: int


@dataclass
class AggregateRow:
    config: str
    by_category: dict[QaCategory, CellStats]
    average: CellStats | None


def aggregate(records: list[EvalRecord]) -> list[AggregateRow]:
    """Per-configuration means grouped by task category, plus the overall
    record-weighted average (failed records are excluded from means)."""
    by_config: dict[str, list[EvalRecord]] = {}
    for record in records:
        by_config.setdefault(record.config, []).append(record)

    rows = []
    for config in sorted(by_config):
        ok = [r for r in by_config[config] if not r.failed and r.accuracy is not None]
        by_category: dict[QaCategory, CellStats] = {}
        for category in QaCategory:
            subset = [r for r in ok if r.category is category]
            if subset:
                by_category[category] = _stats(subset)
        rows.append(AggregateRow(config, by_category, _stats(ok) if ok else None))
    return rows


def _stats(records: list[EvalRecord]) -> CellStats:
    n = len(records)
    return CellStats(
        accuracy=sum(r.accuracy for r in records) / n,
        cost=sum(r.cost for r in records) / n,
        latency=sum(r.latency_seconds for r in records) / n,
        count=n,
    )


def format_cell(stats: CellStats | None) -> str:
    if stats is None:
        return "-"
    return f"{stats.accuracy:.2f} / ${stats.cost:.3f}"


def render_report(rows: list[AggregateRow]) -> str:
    """Markdown table: one row per configuration, accuracy / cost per cell."""
    ordered = [
        QaCategory.GRAPH_QUERY_SINGLE,
        QaCategory.GRAPH_QUERY_MULTI,
        QaCategory.GRAPH_SUMMARIZATION,
        QaCategory.KNOWLEDGE_INFERENCE,
        QaCategory.PATH_EXPLORATION,
    ]
    header = ["Configuration"] + [CATEGORY_TITLES[c] for c in ordered] + ["Average"]
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join(["---"] * len(header)) + "|"]
    for row in rows:
        cells = [row.config]
        for category in ordered:
            cells.append(format_cell(row.by_category.get(category)))
        cells.append(format_cell(row.average))
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines)


def write_records(records: list[EvalRecord], path: Path | str) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_dict(), ensure_ascii=False) + "\n")
