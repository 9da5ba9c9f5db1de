"""Preprocessing, chunking, standards import and hierarchy construction."""
from .hierarchy import (
    AACSB_ROOT_ID,
    COMPONENTS,
    INSTITUTION_ROOT_ID,
    DuplicateDocumentError,
    HierarchyError,
    HierarchyReport,
    RawDocument,
    build_document_hierarchy,
    build_standard_hierarchy,
    chunk_texts,
    component_id,
    create_docsource,
    document_id,
    ingest_documents,
    load_documents,
    section_id,
    standard_id,
)
from .labels import propose_labels, tfidf_table
from .standards import (
    SectionRecord,
    StandardRecord,
    StandardsImportError,
    import_standards,
    load_standards_json,
    write_standards_json,
)
from .text import Chunk, ChunkingConfig, chunk, deoverlap, preprocess, stopwords, tokens

__all__ = [
    "AACSB_ROOT_ID", "COMPONENTS", "INSTITUTION_ROOT_ID", "Chunk", "ChunkingConfig",
    "DuplicateDocumentError", "HierarchyError", "HierarchyReport", "RawDocument",
    "SectionRecord", "StandardRecord", "StandardsImportError", "build_document_hierarchy",
    "build_standard_hierarchy", "chunk", "chunk_texts", "component_id", "create_docsource",
    "deoverlap", "document_id", "import_standards", "ingest_documents", "load_documents",
    "load_standards_json", "preprocess", "propose_labels", "section_id", "standard_id",
    "stopwords", "tfidf_table", "tokens", "write_standards_json",
]
