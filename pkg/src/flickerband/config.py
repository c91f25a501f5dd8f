"""Run configuration: YAML on disk, dataclasses in memory.

A run resolves defaults, then the config file, then command-line flags (flags
win), and writes the result next to its outputs as ``resolved_config.yaml``.
Feeding that snapshot back in reproduces the run.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Optional

import yaml

from .banding import BandingRanges
from .isp import IspParams
from . import specband

SNAPSHOT_NAME = "resolved_config.yaml"


def file_seed(master_seed: int, filename: str) -> int:
    """Stable 64-bit per-file seed; independent of worker count and file order."""
    digest = hashlib.blake2b(f"{int(master_seed)}:{filename}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass
class IspSection:
    wb_gains: list = field(default_factory=lambda: [1.0, 1.0, 1.0])
    ccm: list = field(default_factory=lambda: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    gamma_mode: str = "SRGB_STANDARD"
    gamma_exponent: float = 2.2
    randomize: bool = False

    def params(self) -> IspParams:
        return IspParams(self.wb_gains, self.ccm, self.gamma_mode, self.gamma_exponent)


@dataclass
class SynthSection:
    bit_depth: int = 8
    save_raw: bool = False


@dataclass
class SpecbandSection:
    rho1: float = specband.DEFAULT_RHO1
    rho2: float = specband.DEFAULT_RHO2
    order_n: int = specband.DEFAULT_ORDER
    eps: float = specband.DEFAULT_EPS
    weights: list = field(default_factory=lambda: list(specband.DEFAULT_WEIGHTS))
    ref_size_m0: int = specband.DEFAULT_M0
    bit_depth: int = 16

    def partition(self, height: int, width: int) -> specband.BandPartition:
        return specband.build_partition(height, width, self.rho1, self.rho2, self.order_n,
                                        self.eps, self.weights, self.ref_size_m0)


@dataclass
class TalossSection:
    # no defaults for the weights on purpose: they must come from the user
    layer_weights: Optional[dict] = None
    gamma: Optional[float] = None
    eps: float = 1e-8
    timestep: int = 0


@dataclass
class RunConfig:
    seed: int = 0
    workers: Optional[int] = None
    input: Optional[str] = None
    output: Optional[str] = None
    reference: Optional[str] = None
    crop512: bool = False
    isp: IspSection = field(default_factory=IspSection)
    banding: BandingRanges = field(default_factory=BandingRanges)
    synth: SynthSection = field(default_factory=SynthSection)
    specband: SpecbandSection = field(default_factory=SpecbandSection)
    taloss: TalossSection = field(default_factory=TalossSection)

    _SECTIONS = {
        "isp": IspSection, "synth": SynthSection, "specband": SpecbandSection,
        "taloss": TalossSection,
    }

    @property
    def resolved_workers(self) -> int:
        return max(1, int(self.workers or os.cpu_count() or 1))

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RunConfig":
        d = dict(d or {})
        top = {f.name for f in fields(cls)}
        unknown = set(d) - top
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kw = {}
        for key, val in d.items():
            if key == "banding":
                kw[key] = BandingRanges.from_dict(val or {})
            elif key in cls._SECTIONS:
                sec = cls._SECTIONS[key]
                names = {f.name for f in fields(sec)}
                bad = set(val or {}) - names
                if bad:
                    raise ValueError(f"unknown keys in [{key}]: {sorted(bad)}")
                kw[key] = sec(**(val or {}))
            else:
                kw[key] = val
        return cls(**kw)

    def to_dict(self) -> dict[str, Any]:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, BandingRanges):
                out[f.name] = v.to_dict()
            elif hasattr(v, "__dataclass_fields__"):
                out[f.name] = asdict(v)
            else:
                out[f.name] = v
        return out


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    with open(path, encoding="utf-8") as fh:
        return RunConfig.from_dict(yaml.safe_load(fh) or {})


def dump_config(cfg: RunConfig, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(cfg.to_dict(), fh, sort_keys=True)
