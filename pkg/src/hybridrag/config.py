"""Application configuration loaded from TOML."""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from .ingest.text import ChunkingConfig
from .pipeline import PipelineConfig
from .provider import HttpProvider, Provider, ProviderConfig, SummaryConfig, Task, load_mock_script
from .vectorindex import HnswParams, IndexConfig


class ConfigError(ValueError):
    pass


@dataclass
class AppConfig:
    """Everything a command needs. Relative paths resolve against the config file."""

    store_path: Path = Path("store")
    provider_kind: str = "mock"
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    mock_script: Path | None = None
    mock_seed: int = 0
    index: IndexConfig = field(default_factory=IndexConfig)
    chunking: ChunkingConfig = field(default_factory=ChunkingConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    summary: SummaryConfig = field(default_factory=SummaryConfig)
    eval_weight: float = 0.75
    allowed_node_labels: list[str] | None = None
    allowed_rel_types: list[str] | None = None

    def __post_init__(self) -> None:
        if self.provider_kind not in ("mock", "http"):
            raise ConfigError(f"provider.kind must be 'mock' or 'http', not {self.provider_kind!r}")
        if not 0.0 <= self.eval_weight <= 1.0:
            raise ConfigError("eval.weight must lie in [0, 1]")

    def make_provider(self) -> Provider:
        if self.provider_kind == "http":
            return HttpProvider(self.provider)
        # without a script the mock plays the bundled demo script
        script = self.mock_script or Path(str(resources.files("hybridrag.data").joinpath(
            "fixtures", "worked_example_script.json")))
        return load_mock_script(script, seed=self.mock_seed, dim=self.index.dim, config=self.provider)


def _section(data: dict[str, Any], name: str) -> dict[str, Any]:
    value = data.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(f"[{name}] must be a table")
    return value


def load_config(path: str | os.PathLike[str] | None = None, store_override: str | None = None) -> AppConfig:
    """Read ``path`` (TOML) or return defaults when it is None.

    The API key is never read from the file; only the name of the
    environment variable holding it.
    """
    data: dict[str, Any] = {}
    base = Path.cwd()
    if path is not None:
        p = Path(path)
        try:
            data = tomllib.loads(p.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file {p} not found") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{p}: {exc}") from None
        base = p.resolve().parent

    def resolve(value: str | None) -> Path | None:
        if value is None:
            return None
        q = Path(value)
        return q if q.is_absolute() else base / q

    try:
        prov = _section(data, "provider")
        if "api_key" in prov:
            raise ConfigError("put the API key in an environment variable, not the config file")
        models = {Task(k): v for k, v in _section(prov, "models").items()}
        provider = ProviderConfig(
            base_url=prov.get("base_url", ProviderConfig.base_url),
            api_key_env_var=prov.get("api_key_env_var", ProviderConfig.api_key_env_var),
            timeout_seconds=float(prov.get("timeout_seconds", ProviderConfig.timeout_seconds)),
            max_retries=int(prov.get("max_retries", ProviderConfig.max_retries)),
            models=models,
        )
        idx = _section(data, "index")
        index = IndexConfig(
            dim=int(idx.get("dim", 64)),
            backend=idx.get("backend", "exact"),
            hnsw=HnswParams(
                m=int(idx.get("m", 16)),
                ef_construction=int(idx.get("ef_construction", 200)),
                ef_search=int(idx.get("ef_search", 64)),
            ),
            k=int(idx.get("k", 2)),
            seed=int(idx.get("seed", 0)),
        )
        ch = _section(data, "chunking")
        chunking = ChunkingConfig(
            strategy=ch.get("strategy", "fixed"),
            chunk_tokens=int(ch.get("chunk_tokens", 200)),
            overlap_tokens=int(ch.get("overlap_tokens", 20)),
        )
        pl = _section(data, "pipeline")
        pipeline = PipelineConfig(k=int(pl.get("k", 2)), cypher_retry_count=int(pl.get("cypher_retry_count", 1)))
        ex = _section(data, "extraction")
        return AppConfig(
            store_path=Path(store_override) if store_override else resolve(data.get("store_path", "store")),  # type: ignore[arg-type]
            provider_kind=prov.get("kind", "mock"),
            provider=provider,
            mock_script=resolve(prov.get("mock_script")),
            mock_seed=int(prov.get("seed", 0)),
            index=index,
            chunking=chunking,
            pipeline=pipeline,
            summary=SummaryConfig(int(_section(data, "summary").get("max_length", 256))),
            eval_weight=float(_section(data, "eval").get("weight", 0.75)),
            allowed_node_labels=ex.get("allowed_node_labels"),
            allowed_rel_types=ex.get("allowed_rel_types"),
        )
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
