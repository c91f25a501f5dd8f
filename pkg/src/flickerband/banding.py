"""Flicker-banding masks, the gain model, and degraded/clean pair synthesis.

Geometry convention: rows are ``y``, columns ``x``. The stripe coordinate is
``s = y cos(theta) + x sin(theta) + phase`` so ``orientation_deg = 0`` gives
horizontal bands, the rolling-shutter case. The along-stripe coordinate is
``t = x cos(theta) - y sin(theta)``.

Randomness comes only from ``BandingSpec.seed``, split into fixed named
streams (row jitter, cracks, per-stripe eta) so that one family's draws
never shift another's.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from . import __version__, kernels
from .imagecore import Domain, ImagePlanes, MIN_SIZE, PairManifest
from .isp import IspParams, forward_isp, inverse_isp

U64_MAX = 2**64 - 1
DIAMOND_HALF_ANGLE = 30.0
COMPLEX_ROW_JITTER = 0.15

_STREAM_ROWS = 1
_STREAM_CRACKS = 2
_STREAM_ETA = 3


def pipeline_version() -> str:
    return f"flickerband-{__version__}+{kernels.BACKEND}"


class Pattern(str, enum.Enum):
    SIMPLE = "SIMPLE"
    DIAMOND = "DIAMOND"
    CURVE = "CURVE"
    CRACKED = "CRACKED"
    COMPLEX = "COMPLEX"


@dataclass(frozen=True)
class BandingSpec:
    """Full parameterization of one banding event. Validated on construction."""

    pattern: Pattern = Pattern.SIMPLE
    period_px: float = 48.0
    duty: float = 0.5
    phase_px: float = 0.0
    orientation_deg: float = 0.0
    feather_px: float = 0.0
    darkness: float = 0.4
    jitter_amp: float = 0.0
    gain_floor: float = 0.05
    curve_amp_px: float = 0.0
    curve_wavelength_px: float = 0.0
    crack_density: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "pattern", Pattern(self.pattern))
        for name in ("period_px", "duty", "phase_px", "orientation_deg", "feather_px", "darkness",
                     "jitter_amp", "gain_floor", "curve_amp_px", "curve_wavelength_px",
                     "crack_density"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        seed = int(self.seed)
        if not 0 <= seed <= U64_MAX:
            raise ValueError("seed must be a 64-bit unsigned integer")
        object.__setattr__(self, "seed", seed)

        if self.period_px < 2:
            raise ValueError("period_px must be >= 2")
        if not 0 < self.duty < 1:
            raise ValueError("duty must lie in (0, 1)")
        if not 0 <= self.feather_px <= self.period_px / 2:
            raise ValueError("feather_px must lie in [0, period_px/2]")
        if not 0 <= self.darkness < 1:
            raise ValueError("darkness must lie in [0, 1)")
        if not 0 <= self.jitter_amp < 1:
            raise ValueError("jitter_amp must lie in [0, 1)")
        if not 0 < self.gain_floor < 1:
            raise ValueError("gain_floor must lie in (0, 1)")
        if self.curve_amp_px < 0 or self.curve_wavelength_px < 0:
            raise ValueError("curve parameters must be non-negative")
        if not 0 <= self.crack_density <= 1:
            raise ValueError("crack_density must lie in [0, 1]")

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["pattern"] = self.pattern.value
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "BandingSpec":
        return cls(**d)


@dataclass(frozen=True, eq=False)
class GainField:
    values: np.ndarray
    gain_floor: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError("gain field must be 2-D")
        if v.min() < self.gain_floor or v.max() > 1.0:
            raise ValueError("gain values outside [gain_floor, 1]")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, stream])


@dataclass
class _Layer:
    mask: np.ndarray
    k: np.ndarray
    cell: np.ndarray


def _layer(h, w, theta_deg, phase, period, duty, feather, row_shift, curve_amp=0.0, curve_wl=0.0):
    th = math.radians(theta_deg)
    m, k, c = kernels.stripe_layer(h, w, math.cos(th), math.sin(th), float(phase), float(period),
                                   float(duty), float(feather), row_shift, float(curve_amp),
                                   float(curve_wl))
    return _Layer(m, k, c)


def _fields(spec: BandingSpec, h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    """Mask and per-pixel eta for ``spec`` on an ``h x w`` grid."""
    if h < MIN_SIZE or w < MIN_SIZE:
        raise ValueError(f"mask dimensions must be >= {MIN_SIZE}")
    pat = spec.pattern
    zero = np.zeros(h)
    base = dict(phase=spec.phase_px, period=spec.period_px, duty=spec.duty,
                feather=spec.feather_px)

    if pat is Pattern.DIAMOND:
        layers = [_layer(h, w, spec.orientation_deg + DIAMOND_HALF_ANGLE, row_shift=zero, **base),
                  _layer(h, w, spec.orientation_deg - DIAMOND_HALF_ANGLE, row_shift=zero, **base)]
        owner = (layers[1].mask > layers[0].mask).astype(np.int64)
        mask = np.maximum(layers[0].mask, layers[1].mask)
    elif pat is Pattern.CURVE:
        layers = [_layer(h, w, spec.orientation_deg, row_shift=zero, curve_amp=spec.curve_amp_px,
                         curve_wl=spec.curve_wavelength_px, **base)]
        owner = None
        mask = layers[0].mask
    elif pat is Pattern.COMPLEX:
        jit = COMPLEX_ROW_JITTER * spec.period_px
        shift = _rng(spec.seed, _STREAM_ROWS).uniform(-jit, jit, size=h)
        fine = dict(base, period=spec.period_px / 2, feather=min(spec.feather_px, spec.period_px / 4))
        layers = [_layer(h, w, spec.orientation_deg, row_shift=shift, **base),
                  _layer(h, w, spec.orientation_deg, row_shift=shift, **fine)]
        owner = (0.5 * layers[1].mask > layers[0].mask).astype(np.int64)
        mask = np.clip(layers[0].mask + 0.5 * layers[1].mask, 0.0, 1.0)
    else:
        layers = [_layer(h, w, spec.orientation_deg, row_shift=zero, **base)]
        owner = None
        mask = layers[0].mask

    if pat is Pattern.CRACKED:
        lay = layers[0]
        k0, c0 = lay.k.min(), lay.cell.min()
        shape = (lay.k.max() - k0 + 1, lay.cell.max() - c0 + 1)
        keep = _rng(spec.seed, _STREAM_CRACKS).random(shape) >= spec.crack_density
        mask = mask * keep[lay.k - k0, lay.cell - c0]

    # one eta per stripe index, stripes of different layers get distinct slots
    slot = np.empty((h, w), dtype=np.int64)
    offset = 0
    for i, lay in enumerate(layers):
        k0 = lay.k.min()
        local = lay.k - k0 + offset
        if owner is None:
            slot = local
        else:
            np.copyto(slot, local, where=owner == i)
        offset += int(lay.k.max() - k0 + 1)
    etas = _rng(spec.seed, _STREAM_ETA).uniform(1.0 - spec.jitter_amp, 1.0 + spec.jitter_amp,
                                                size=offset)
    return mask, etas[slot]


def generate_mask(spec: BandingSpec, height: int, width: int) -> np.ndarray:
    """Banding mask in [0, 1]; 1 is fully inside a dark stripe."""
    mask, _ = _fields(spec, height, width)
    return mask


def stripe_eta(spec: BandingSpec, height: int, width: int) -> np.ndarray:
    """Per-pixel brightness jitter factor, constant within each stripe."""
    _, eta = _fields(spec, height, width)
    return eta


def gain_formula(mask, darkness, eta, gain_floor):
    """``max(gain_floor, 1 - mask * (1 - darkness) * eta)``, broadcasting."""
    return kernels.gain_field(mask, eta, darkness, gain_floor)


def mask_to_gain(mask: np.ndarray, spec: BandingSpec) -> GainField:
    mask = np.asarray(mask, dtype=np.float64)
    if mask.ndim != 2:
        raise ValueError("mask must be 2-D")
    if mask.min() < 0.0 or mask.max() > 1.0:
        raise ValueError("mask values must lie in [0, 1]")
    eta = stripe_eta(spec, *mask.shape)
    g = kernels.gain_field(mask, eta, spec.darkness, spec.gain_floor)
    return GainField(g, spec.gain_floor)


def apply_banding(img: ImagePlanes, gain: GainField) -> ImagePlanes:
    img.require(Domain.RAW_LINEAR)
    if gain.shape != (img.height, img.width):
        raise ValueError(f"gain shape {gain.shape} does not match image {(img.height, img.width)}")
    return ImagePlanes(kernels.apply_gain(img.data, gain.values), Domain.RAW_LINEAR)


@dataclass
class PairResult:
    degraded: ImagePlanes
    manifest: PairManifest
    banded_raw: ImagePlanes = field(repr=False)


def synthesize_pair(clean_srgb: ImagePlanes, spec: BandingSpec, isp: IspParams | None = None, *,
                    source_path: str = "", output_path: str = "") -> tuple[ImagePlanes, PairManifest]:
    """Banded sRGB image from a clean one, plus its provenance record."""
    res = synthesize(clean_srgb, spec, isp, source_path=source_path, output_path=output_path)
    return res.degraded, res.manifest


def synthesize(clean_srgb: ImagePlanes, spec: BandingSpec, isp: IspParams | None = None, *,
               source_path: str = "", output_path: str = "") -> PairResult:
    """Like ``synthesize_pair`` but also keeps the banded pseudo-RAW."""
    clean_srgb.require(Domain.SRGB_NONLINEAR)
    isp = isp or IspParams()
    raw = inverse_isp(clean_srgb, isp)
    mask, eta = _fields(spec, raw.height, raw.width)
    gain = GainField(kernels.gain_field(mask, eta, spec.darkness, spec.gain_floor), spec.gain_floor)
    banded = apply_banding(raw, gain)
    degraded = forward_isp(banded, isp)
    manifest = PairManifest(source_path=source_path, output_path=output_path, seed=spec.seed,
                            banding_spec=spec.to_dict(), pipeline_version=pipeline_version(),
                            isp_params=isp.to_dict())
    return PairResult(degraded, manifest, banded)


def replay(manifest: PairManifest, clean_srgb: ImagePlanes) -> ImagePlanes:
    """Recreate the degraded image recorded by ``manifest``."""
    if manifest.pipeline_version != pipeline_version():
        raise ValueError(f"manifest was written by {manifest.pipeline_version}, "
                         f"this is {pipeline_version()}")
    spec = BandingSpec.from_dict(manifest.banding_spec)
    isp = IspParams.from_dict(manifest.isp_params) if manifest.isp_params else IspParams()
    return synthesize(clean_srgb, spec, isp).degraded


# -- random spec draws for dataset synthesis ---------------------------------

@dataclass
class BandingRanges:
    """Sampling ranges for dataset synthesis. Tunable config, not contract."""

    patterns: list[str] = field(default_factory=lambda: [p.value for p in Pattern])
    period_px: tuple[float, float] = (24.0, 220.0)
    duty: tuple[float, float] = (0.25, 0.6)
    darkness: tuple[float, float] = (0.2, 0.7)
    jitter_amp: tuple[float, float] = (0.0, 0.35)
    feather_min_px: float = 1.0
    feather_max_frac: float = 0.25
    orientation_deg: tuple[float, float] = (-20.0, 20.0)
    gain_floor: float = 0.05
    curve_amp_px: tuple[float, float] = (2.0, 12.0)
    curve_wavelength_px: tuple[float, float] = (120.0, 480.0)
    crack_density: tuple[float, float] = (0.1, 0.5)

    def to_dict(self) -> dict[str, Any]:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "BandingRanges":
        kw = {}
        for k, v in d.items():
            if k not in cls.__dataclass_fields__:
                raise ValueError(f"unknown banding range {k!r}")
            kw[k] = tuple(v) if isinstance(v, list) and k != "patterns" else v
        return cls(**kw)

    def draw(self, seed: int) -> BandingSpec:
        """Draw one spec; the same seed drives the draw and the spec's own randomness."""
        rng = np.random.default_rng([seed, 0])
        pattern = Pattern(self.patterns[int(rng.integers(len(self.patterns)))])
        lo, hi = self.period_px
        period = float(math.exp(rng.uniform(math.log(lo), math.log(hi))))
        fmax = min(self.feather_max_frac, 0.5) * period
        feather = float(rng.uniform(min(self.feather_min_px, fmax), fmax))
        orientation = float(rng.uniform(*self.orientation_deg))
        if pattern is Pattern.DIAMOND:
            # the two DIAMOND families already sit at +-30 degrees
            orientation = 0.0
        return BandingSpec(
            pattern=pattern,
            period_px=period,
            duty=float(rng.uniform(*self.duty)),
            phase_px=float(rng.uniform(0.0, period)),
            orientation_deg=orientation,
            feather_px=feather,
            darkness=float(rng.uniform(*self.darkness)),
            jitter_amp=float(rng.uniform(*self.jitter_amp)),
            gain_floor=self.gain_floor,
            curve_amp_px=float(rng.uniform(*self.curve_amp_px)) if pattern is Pattern.CURVE else 0.0,
            curve_wavelength_px=(float(rng.uniform(*self.curve_wavelength_px))
                                 if pattern is Pattern.CURVE else 0.0),
            crack_density=(float(rng.uniform(*self.crack_density))
                           if pattern is Pattern.CRACKED else 0.0),
            seed=seed,
        )
