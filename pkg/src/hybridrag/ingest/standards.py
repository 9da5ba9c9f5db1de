"""Import of the structured standards tables (sections CSV + standards CSV).

The structured JSON written by ``write_standards_json`` looks like::

    {
      "format_version": 1,
      "sections": [{"sectionNum": 1, "sectionTitle": "...", "sectionDescription": "..."}],
      "standards": [{"section": 1, "standardNum": 1, "standardTitle": "...",
                     "standardFormal": "...", "definitions": "...",
                     "basisForJudgment": "...", "supportingDocs": "..."}]
    }

Titles keep their original casing; every other text field is preprocessed.
"""
from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict, dataclass
from pathlib import Path

from .text import preprocess

SECTION_HEADERS = ["Section_Num", "Section_Title", "Section_Description"]
STANDARD_HEADERS = [
    "Section",
    "Standard_num",
    "Standard_title",
    "Standard_formal",
    "Definitions",
    "Basis_for_judgment",
    "Supporting_docs",
]
STANDARDS_JSON_VERSION = 1


class StandardsImportError(ValueError):
    pass


@dataclass(frozen=True)
class SectionRecord:
    sectionNum: int
    sectionTitle: str
    sectionDescription: str


@dataclass(frozen=True)
class StandardRecord:
    section: int
    standardNum: int
    standardTitle: str
    standardFormal: str
    definitions: str
    basisForJudgment: str
    supportingDocs: str

    def component_text(self, kind: str) -> str:
        return {
            "formal": self.standardFormal,
            "definitions": self.definitions,
            "basis": self.basisForJudgment,
            "documentation": self.supportingDocs,
        }[kind]


def _read_rows(path: str | os.PathLike[str], headers: list[str]) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        found = [h.strip() for h in (reader.fieldnames or [])]
        if found != headers:
            raise StandardsImportError(f"{path}: headers {found} do not match {headers}")
        return [{k.strip(): (v or "") for k, v in row.items()} for row in reader]


def _as_int(value: str, column: str, path: str | os.PathLike[str]) -> int:
    try:
        return int(value.strip())
    except ValueError:
        raise StandardsImportError(f"{path}: column {column} holds non-integer {value!r}") from None


def import_standards(
    sections_csv: str | os.PathLike[str],
    standards_csv: str | os.PathLike[str],
    json_out: str | os.PathLike[str] | None = None,
) -> tuple[list[SectionRecord], list[StandardRecord]]:
    """Parse both CSVs, preprocess text fields, validate, optionally write JSON.

    Raises:
        StandardsImportError: header mismatch, non-integer numbers, a section
            outside 1-3, a standard outside 1-9, duplicates, or a standard
            pointing at a missing section.
    """
    sections: list[SectionRecord] = []
    for row in _read_rows(sections_csv, SECTION_HEADERS):
        num = _as_int(row["Section_Num"], "Section_Num", sections_csv)
        if num not in (1, 2, 3):
            raise StandardsImportError(f"{sections_csv}: Section_Num {num} not in 1..3")
        if any(s.sectionNum == num for s in sections):
            raise StandardsImportError(f"{sections_csv}: duplicate Section_Num {num}")
        sections.append(
            SectionRecord(num, row["Section_Title"].strip(), preprocess(row["Section_Description"]))
        )

    known_sections = {s.sectionNum for s in sections}
    standards: list[StandardRecord] = []
    for row in _read_rows(standards_csv, STANDARD_HEADERS):
        section = _as_int(row["Section"], "Section", standards_csv)
        num = _as_int(row["Standard_num"], "Standard_num", standards_csv)
        if not 1 <= num <= 9:
            raise StandardsImportError(f"{standards_csv}: Standard_num {num} not in 1..9")
        if any(s.standardNum == num for s in standards):
            raise StandardsImportError(f"{standards_csv}: duplicate Standard_num {num}")
        if section not in known_sections:
            raise StandardsImportError(f"{standards_csv}: standard {num} references unknown section {section}")
        standards.append(
            StandardRecord(
                section=section,
                standardNum=num,
                standardTitle=row["Standard_title"].strip(),
                standardFormal=preprocess(row["Standard_formal"]),
                definitions=preprocess(row["Definitions"]),
                basisForJudgment=preprocess(row["Basis_for_judgment"]),
                supportingDocs=preprocess(row["Supporting_docs"]),
            )
        )
    sections.sort(key=lambda s: s.sectionNum)
    standards.sort(key=lambda s: s.standardNum)
    if json_out is not None:
        write_standards_json(json_out, sections, standards)
    return sections, standards


def write_standards_json(path: str | os.PathLike[str], sections: list[SectionRecord],
                         standards: list[StandardRecord]) -> None:
    payload = {
        "format_version": STANDARDS_JSON_VERSION,
        "sections": [asdict(s) for s in sections],
        "standards": [asdict(s) for s in standards],
    }
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_standards_json(path: str | os.PathLike[str]) -> tuple[list[SectionRecord], list[StandardRecord]]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if data.get("format_version") != STANDARDS_JSON_VERSION:
        raise StandardsImportError(f"{path}: unsupported format_version {data.get('format_version')!r}")
    return (
        [SectionRecord(**s) for s in data["sections"]],
        [StandardRecord(**s) for s in data["standards"]],
    )
