"""Effective settings: defaults, overridden by a JSON config file, then CLI flags."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from .errors import CCGError
from .eval.runner import PipelineConfig
from .eval.window import DEFAULT_STRIDE, DEFAULT_WINDOW
from .llm import LlmConfig
from .retriever import DEFAULT_COARSE_K, DEFAULT_GAMMA, DEFAULT_TOP_M
from .slicer import DEFAULT_HOPS, DEFAULT_MAX_STATEMENTS


class ConfigError(CCGError):
    pass


@dataclass(frozen=True)
class Config:
    languages: tuple[str, ...] = ("python", "java")
    h: int = DEFAULT_HOPS
    l: int = DEFAULT_MAX_STATEMENTS
    gamma: float = DEFAULT_GAMMA
    coarse_k: int = DEFAULT_COARSE_K
    top_m: int = DEFAULT_TOP_M
    window: int = DEFAULT_WINDOW
    stride: int = DEFAULT_STRIDE
    exclude_globs: tuple[str, ...] = ()
    llm: LlmConfig = field(default_factory=LlmConfig)

    def __post_init__(self) -> None:
        if self.h < 0 or self.l < 1:
            raise ConfigError("need h >= 0 and l >= 1")
        if not 0 < self.gamma <= 1:
            raise ConfigError("gamma must be in (0, 1]")
        if min(self.coarse_k, self.top_m, self.window, self.stride) < 1:
            raise ConfigError("coarse_k, top_m, window and stride must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["languages"] = list(self.languages)
        d["exclude_globs"] = list(self.exclude_globs)
        return d

    def with_overrides(self, **overrides: Any) -> "Config":
        """Apply non-``None`` overrides; keys prefixed ``llm_`` go to the LLM settings."""
        top = {k: v for k, v in overrides.items() if v is not None and not k.startswith("llm_")}
        llm = {k[4:]: v for k, v in overrides.items() if v is not None and k.startswith("llm_")}
        for key in ("languages", "exclude_globs"):
            if key in top:
                top[key] = tuple(top[key])
        try:
            return replace(self, **top, llm=replace(self.llm, **llm))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def pipeline(self, retriever: str) -> PipelineConfig:
        return PipelineConfig(
            retriever=retriever,
            h=self.h,
            l=self.l,
            gamma=self.gamma,
            coarse_k=self.coarse_k,
            top_m=self.top_m,
            window=self.window,
            stride=self.stride,
            languages=self.languages,
            exclude_globs=self.exclude_globs,
            llm=self.llm,
        )


def _check_keys(data: dict[str, Any], allowed: set[str], where: str) -> None:
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"unknown {where} key(s): {', '.join(unknown)}")


def config_from_dict(data: dict[str, Any]) -> Config:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    _check_keys(data, {f.name for f in fields(Config)}, "config")
    llm_data = data.get("llm", {})
    if not isinstance(llm_data, dict):
        raise ConfigError("'llm' must be a JSON object")
    _check_keys(llm_data, {f.name for f in fields(LlmConfig)}, "llm")
    top = {k: v for k, v in data.items() if k != "llm"}
    return Config().with_overrides(**top, **{f"llm_{k}": v for k, v in llm_data.items()})


def load_config(path: str | Path | None) -> Config:
    if path is None:
        return Config()
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    return config_from_dict(data)
