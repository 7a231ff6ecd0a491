"""Run configuration: every behaviour-affecting constant in one versioned file."""

import json
from dataclasses import dataclass, field, fields
from typing import Optional

from .deie import DeieParams
from .ldconv import LdconvConfig
from .mddc import MddcConfig
from .wpm import WpmConfig

SCHEMA_VERSION = 1


def _build(cls, d, where):
    if not isinstance(d, dict):
        raise ValueError(f"{where}: expected an object")
    known = {f.name for f in fields(cls)}
    extra = set(d) - known
    if extra:
        raise ValueError(f"{where}: unknown keys {sorted(extra)}")
    return cls(**d)


@dataclass
class RunConfig:
    deie: DeieParams = field(default_factory=DeieParams)
    mddc: MddcConfig = field(default_factory=MddcConfig)
    wpm: WpmConfig = field(default_factory=WpmConfig)
    ldconv: LdconvConfig = field(default_factory=LdconvConfig)
    graph: Optional[str] = None
    seed: int = 42

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        allowed = {"schema_version", "deie", "mddc", "wpm", "ldconv", "graph", "seed"}
        extra = set(d) - allowed
        if extra:
            raise ValueError(f"run config: unknown keys {sorted(extra)}")
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"run config: unsupported schema_version {d.get('schema_version')!r}")
        deie = _build(DeieParams, d.get("deie", {}), "deie")
        mddc_d = dict(d.get("mddc", {}))
        if "deie" in mddc_d:
            mddc_d["deie"] = _build(DeieParams, mddc_d["deie"], "mddc.deie")
        else:
            mddc_d["deie"] = deie
        return cls(
            deie=deie,
            mddc=_build(MddcConfig, mddc_d, "mddc"),
            wpm=_build(WpmConfig, d.get("wpm", {}), "wpm"),
            ldconv=_build(LdconvConfig, d.get("ldconv", {}), "ldconv"),
            graph=d.get("graph"),
            seed=int(d.get("seed", 42)),
        )

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))
