"""Prompt templates for every model-facing task.

Templates are plain ``str.format`` strings. Slots: ``{question}``,
``{schema}``, ``{labels_line}``, ``{rels_line}``, ``{parent_doc_uuid}``,
``{standards}``, ``{context}``.
"""
from __future__ import annotations

SEP = "[SEP]"

_AACSB_TOPICS = """\
- formal descriptions of each AACSB standard
- the documentation expected in support of a standard
- the basis on which a standard is judged
- definitions of terms used inside the standards"""

_INSTITUTION_TOPICS = """\
- strategic plan, mission and finances
- academic departments of the business school (accounting, marketing, management, finance, entrepreneurship and others)
- student services and student organizations
- program goals, learning objectives and curriculum assessment
- continuous improvement"""

_FORMAT_RULES = """\
# Format Rules
Do not number the questions. Do not answer the question. Put the "[SEP]" token between questions."""

MULTI_QUERY_AACSB = f"""\
# Instruction
Rewrite the user question below as three different questions that will be used as
vector-search queries. Each rewrite should look at the question from a different
angle and be precise. Separate the questions with the "[SEP]" token.

# List Delimiter
Every question must be separated from the next by the "[SEP]" token.

# Context: AACSB
The questions target an index of AACSB accreditation standards covering:
{_AACSB_TOPICS}

{_FORMAT_RULES}
Original question: {{question}}"""

MULTI_QUERY_INSTITUTION = f"""\
# Instruction
Rewrite the user question below as three different questions that will be used as
vector-search queries. Each rewrite should look at the question from a different
angle and be precise. Separate the questions with the "[SEP]" token.

# List Delimiter
Every question must be separated from the next by the "[SEP]" token.

# Context: Academic Institution
The questions target an index of documents from a school of business covering:
{_INSTITUTION_TOPICS}

{_FORMAT_RULES}
Original question: {{question}}"""

HYBRID_SUBQUERY = f"""\
# Instruction
Split the user query into exactly two sub questions. The first covers the part of
the query about the AACSB standards; the second covers the part about the
institution itself. Separate the two with the "[SEP]" token.

# List Delimiter
The two questions must be separated by the "[SEP]" token.

# Context
## 1. AACSB sub question
May concern:
{_AACSB_TOPICS}

## 2. Institution sub question
May concern:
{_INSTITUTION_TOPICS}

{_FORMAT_RULES}
Original question: {{question}}"""

CYPHER_GENERATION = """\
Task: Write a Cypher statement that answers a question against a graph database.
Instructions: Only use the node labels, relationship types and properties listed in the schema.
Schema:
{schema}

Note: Reply with the Cypher statement alone, with no explanation, apology or code fence.
Use only MATCH, WHERE and RETURN. Quote labels that contain spaces with backticks,
for example (l:`Learning objective`), because an unquoted label such as
"MATCH (n:Learning objective) RETURN n.name" is a syntax error.

Examples:
## AACSB STANDARD EXAMPLE
# Which standards deal with staff resources?
MATCH (n) WHERE n.nodeCat = 'AACSB' AND (n.text CONTAINS 'staff' AND n.text CONTAINS 'resources' OR n.text CONTAINS 'staff resources') RETURN n
# How is standard 2 documented
MATCH (d:Documentation) WHERE d.parentStandardNum = 2 RETURN d.text
## INSTITUTION EXAMPLE (the real schema may differ)
# Which learning objectives did undergraduate and graduate program evaluate
MATCH (p:Program)-[]->(l:`Learning objective`) WHERE (p.name CONTAINS 'undergraduate' OR p.name CONTAINS 'graduate') RETURN l.name

The question is: {question}"""

CYPHER_RETRY_SUFFIX = """

Your previous statement was rejected:
{previous}
Error: {error}
Reply with a corrected Cypher statement only."""

EXTRACTION = """\
# Knowledge Graph Extraction Instructions
## 1. Overview
You extract structured information from documents of an academic institution to build a
knowledge graph of concepts relevant to AACSB accreditation. Look in particular for learning
goals (for example written communication, critical thinking, ethics) and for how and when
they are assessed.
- Nodes stand for entities and concepts.
- Keep the graph simple and clear.
## 2. Labeling Nodes
- Consistency: use basic, general types for labels, for example "person" rather than "professor".
- Node IDs: never use integers as node IDs; use names or readable identifiers from the text.
{labels_line}{rels_line}## 3. Handling Numerical Data and Dates
- Store numbers and dates as properties of the nodes they describe, never as separate nodes.
- Required property: every node must carry the property key "parentDocUUID" with the value {parent_doc_uuid}. Use exactly this value.
- Properties are key-value pairs; do not put escaped quotes inside values.
- Property keys use camelCase, for example `startDate`.
## 4. Coreference Resolution
- When one entity appears under several names or pronouns, always use its most complete name as the node ID.
## 5. Strict Compliance
Follow these rules exactly."""

CLASSIFICATION = """\
# Document Classification
## 1. Task
Read the summary of an institutional document and decide which single AACSB standard it
provides evidence for.
## 2. Output
Answer with one integer from 1 to 9 naming the standard, or 0 when the text is general
institutional information that fits no standard.
## 3. Standards
{standards}
## 4. Discernment Notes
Standard 4 is about curriculum content. Standard 5 is about assurance of learning: text that
evaluates performance (percentages, comparisons with earlier years, sample sizes) belongs to 5.
Use 4 only when the text is strictly about curriculum.
## 5. Strict Compliance
Return only the integer.

Summary:
{summary}"""

GENERATION = """\
You answer questions for staff preparing AACSB accreditation material. Use only the context
below together with the user's question, and write in a professional tone. If the context
does not contain the answer, say that the available context is insufficient.

Context:
{context}

Question: {question}"""

# AACSB 2020 standard titles, used when the store has no standards loaded
DEFAULT_STANDARD_TITLES = {
    1: "Strategic Planning",
    2: "Physical, Virtual and Financial Resources",
    3: "Faculty and Professional Staff Resources",
    4: "Curriculum",
    5: "Assurance of Learning",
    6: "Learner Progression",
    7: "Teaching Effectiveness and Impact",
    8: "Impact of Scholarship",
    9: "Engagement and Societal Impact",
}


def allowed_line(title: str, items: list[str] | None) -> str:
    """``- Allowed Node Labels: a, b`` style line, or "" when no list is given."""
    return f"- {title}: {', '.join(items)}\n" if items else ""


def standards_block(descriptions: dict[int, str]) -> str:
    return "\n".join(f"Standard {n}: {text}" for n, text in sorted(descriptions.items()))
