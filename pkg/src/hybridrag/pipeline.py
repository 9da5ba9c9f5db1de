"""The query path: route, expand, retrieve from graph and vectors, generate."""
from __future__ import annotations

import enum
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

from .graphstore import GraphStore
from .graphstore.cypher import CypherError, ResultTable, execute, parse_cypher
from .prompts import (
    CYPHER_GENERATION,
    CYPHER_RETRY_SUFFIX,
    GENERATION,
    HYBRID_SUBQUERY,
    MULTI_QUERY_AACSB,
    MULTI_QUERY_INSTITUTION,
    SEP,
)
from .provider import ChatMessage, Provider, Task, ToolSpec
from .vectorindex import SearchHit, VectorIndex

logger = logging.getLogger(__name__)

ROUTER_SYSTEM_PROMPT = (
    "Decide whether the user's question asks only about AACSB accreditation standards, only about "
    "the institution, or about both. Call exactly one of the provided functions."
)

_QUESTION_PARAMS = {
    "type": "object",
    "properties": {"question": {"type": "string", "description": "the user's original question"}},
    "required": ["question"],
}


class Route(str, enum.Enum):
    AACSB = "AACSB"
    INSTITUTION = "INSTITUTION"
    HYBRID = "HYBRID"


ROUTE_TOOLS = {
    "generate_multiquestion_aacsb": Route.AACSB,
    "generate_multiquestion_institution": Route.INSTITUTION,
    "generate_subquestions_hybrid": Route.HYBRID,
}

ROUTING_TOOL_SPECS = (
    ToolSpec("generate_multiquestion_aacsb",
             "Expand a question that is only about AACSB accreditation standards into three queries.",
             _QUESTION_PARAMS),
    ToolSpec("generate_multiquestion_institution",
             "Expand a question that is only about the institution into three queries.", _QUESTION_PARAMS),
    ToolSpec("generate_subquestions_hybrid",
             "Split a question touching both the AACSB standards and the institution into two sub-queries.",
             _QUESTION_PARAMS),
)

# route -> (template, task, target number of queries)
_EXPANSION = {
    Route.AACSB: (MULTI_QUERY_AACSB, Task.MULTI_QUERY, 3),
    Route.INSTITUTION: (MULTI_QUERY_INSTITUTION, Task.MULTI_QUERY, 3),
    Route.HYBRID: (HYBRID_SUBQUERY, Task.SUBQUERY, 2),
}
MAX_EXPANSIONS = 5

_FENCE_RE = re.compile(r"^```[a-zA-Z]*\s*\n?(.*?)\n?```$", re.DOTALL)


class ExpansionError(ValueError):
    pass


class StageError(RuntimeError):
    """A fatal failure inside ``answer``; ``stage`` names where it happened."""

    def __init__(self, stage: str, cause: BaseException) -> None:
        super().__init__(f"{stage}: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class RouteDecision:
    route: Route
    tool_name: str


@dataclass
class ExpandedQueries:
    original: str
    expanded: list[str]
    warnings: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class VectorHit:
    chunk_id: str
    text: str
    score: float
    source: str


@dataclass
class HybridContext:
    kg_result_text: str
    vector_hits: list[VectorHit]
    context_string: str
    cypher: str | None = None
    kg_rows: ResultTable | None = None
    per_query_hits: list[list[SearchHit]] = field(default_factory=list)


@dataclass
class PipelineConfig:
    k: int = 2
    cypher_retry_count: int = 1
    max_workers: int = 4

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.cypher_retry_count < 0:
            raise ValueError("cypher_retry_count must be >= 0")


@dataclass
class AnswerTrace:
    query: str
    answer: str
    context: HybridContext
    route: RouteDecision
    expanded: ExpandedQueries

    def to_json(self) -> dict[str, Any]:
        return {
            "query": self.query,
            "answer": self.answer,
            "route": self.route.route.value,
            "tool": self.route.tool_name,
            "expanded": self.expanded.expanded,
            "expansionWarnings": self.expanded.warnings,
            "cypher": self.context.cypher,
            "kgResult": self.context.kg_result_text,
            "perQueryHits": [[[h.chunk_id, h.score] for h in hits] for hits in self.context.per_query_hits],
            "vectorHits": [
                {"chunkId": h.chunk_id, "score": h.score, "source": h.source} for h in self.context.vector_hits
            ],
            "context": self.context.context_string,
        }


def split_expansions(reply: str) -> list[str]:
    return [part.strip() for part in reply.split(SEP) if part.strip()]


def strip_code_fence(reply: str) -> str:
    text = reply.strip()
    match = _FENCE_RE.match(text)
    return match.group(1).strip() if match else text


def dedupe_hits(per_query: list[list[SearchHit]]) -> list[SearchHit]:
    """Union of hits keeping each chunk's best score; ordered by score then id."""
    best: dict[str, float] = {}
    for hits in per_query:
        for hit in hits:
            if hit.chunk_id not in best or hit.score > best[hit.chunk_id]:
                best[hit.chunk_id] = hit.score
    return [SearchHit(cid, s) for cid, s in sorted(best.items(), key=lambda kv: (-kv[1], kv[0]))]


def build_context_string(kg_text: str, hits: list[VectorHit]) -> str:
    blocks = []
    if kg_text:
        blocks.append(f"KG RESULT:\n{kg_text}")
    for i, hit in enumerate(hits, start=1):
        blocks.append(f"VECTOR RESULT {i} [{hit.source}]:\n{hit.text}")
    return "\n\n".join(blocks)


class Pipeline:
    """Answers questions over a graph store plus vector index through a provider.

    Stateless between calls; the store and index are only read.
    """

    def __init__(self, store: GraphStore, index: VectorIndex, provider: Provider,
                 config: PipelineConfig | None = None) -> None:
        self.store = store
        self.index = index
        self.provider = provider
        self.config = config or PipelineConfig()

    def route(self, query: str) -> RouteDecision:
        if not query.strip():
            raise ValueError("query must not be empty")
        req = self.provider.request(
            Task.ROUTE, [ChatMessage("system", ROUTER_SYSTEM_PROMPT), ChatMessage("user", query)],
            tools=ROUTING_TOOL_SPECS,
        )
        call = self.provider.call_tool(req)
        return RouteDecision(ROUTE_TOOLS[call.name], call.name)

    def expand(self, query: str, decision: RouteDecision) -> ExpandedQueries:
        template, task, target = _EXPANSION[decision.route]
        reply = self.provider.ask(task, template.format(question=query))
        items = split_expansions(reply)
        warnings: list[str] = []
        if not items:
            raise ExpansionError(f"no queries in expansion reply {reply[:80]!r}")
        if len(items) > MAX_EXPANSIONS:
            warnings.append(f"{len(items)} expansions returned; kept the first {MAX_EXPANSIONS}")
            items = items[:MAX_EXPANSIONS]
        elif len(items) != target:
            warnings.append(f"expected {target} expansions, got {len(items)}")
        dropped = len(reply.split(SEP)) - len(split_expansions(reply))
        if dropped:
            warnings.append(f"{dropped} empty expansion item(s) dropped")
        for w in warnings:
            logger.warning("expand: %s", w)
        return ExpandedQueries(query, items, warnings)

    def to_cypher(self, query: str) -> str | None:
        """Generate Cypher for ``query``; None if it never validates."""
        schema = self.store.derive_schema().to_text()
        prompt = CYPHER_GENERATION.format(schema=schema, question=query)
        for attempt in range(self.config.cypher_retry_count + 1):
            candidate = strip_code_fence(self.provider.ask(Task.CYPHER, prompt))
            try:
                parse_cypher(candidate)
                return candidate
            except CypherError as exc:
                logger.warning("cypher attempt %d rejected: %s", attempt + 1, exc)
                prompt = prompt + CYPHER_RETRY_SUFFIX.format(previous=candidate, error=exc)
        return None

    def _vector_hits(self, expanded: ExpandedQueries) -> tuple[list[list[SearchHit]], list[VectorHit]]:
        if len(self.index) == 0 or not expanded.expanded:
            return [[] for _ in expanded.expanded], []
        vectors = self.provider.embed(expanded.expanded)
        per_query = [self.index.search(v, self.config.k) for v in vectors]
        hits: list[VectorHit] = []
        for hit in dedupe_hits(per_query):
            node = self.store.get_node(hit.chunk_id)
            if node is None:
                logger.warning("vector hit %s has no chunk node; skipped", hit.chunk_id)
                continue
            props = node.properties
            source = str(props.get("source") or props.get("fileName") or props.get("parentId", ""))
            hits.append(VectorHit(hit.chunk_id, str(props.get("text", "")), hit.score, source))
        return per_query, hits

    def _kg(self, cypher: str | None) -> tuple[str, ResultTable | None]:
        if cypher is None:
            return "", None
        try:
            table = execute(self.store, parse_cypher(cypher))
        except CypherError as exc:
            logger.warning("cypher execution failed: %s", exc)
            return "", None
        return table.to_text(), table

    def retrieve(self, expanded: ExpandedQueries, cypher: str | None) -> HybridContext:
        per_query, hits = self._vector_hits(expanded)
        kg_text, table = self._kg(cypher)
        return HybridContext(kg_text, hits, build_context_string(kg_text, hits), cypher, table, per_query)

    def generate(self, query: str, context: HybridContext) -> str:
        return self.provider.ask(Task.GENERATE, GENERATION.format(context=context.context_string, question=query))

    def answer(self, query: str) -> AnswerTrace:
        """Run the whole path. The vector and graph branches run concurrently."""
        decision = self._stage("route", self.route, query)
        expanded = self._stage("expand", self.expand, query, decision)
        with ThreadPoolExecutor(max_workers=2) as pool:
            vec_future = pool.submit(self._vector_hits, expanded)
            kg_future = pool.submit(self._graph_branch, query)
            per_query, hits = self._stage("retrieve", vec_future.result)
            cypher, kg_text, table = self._stage("cypher", kg_future.result)
        context = HybridContext(kg_text, hits, build_context_string(kg_text, hits), cypher, table, per_query)
        text = self._stage("generate", self.generate, query, context)
        return AnswerTrace(query, text, context, decision, expanded)

    def _graph_branch(self, query: str) -> tuple[str | None, str, ResultTable | None]:
        cypher = self.to_cypher(query)
        kg_text, table = self._kg(cypher)
        return cypher, kg_text, table

    @staticmethod
    def _stage(name: str, fn, *args):
        try:
            return fn(*args)
        except StageError:
            raise
        except Exception as exc:
            raise StageError(name, exc) from exc
