"""Image containers, range contracts and file I/O.

Images are planar ``(3, H, W)`` float64 arrays in [0, 1]. PNG is the only
image interchange format. Float data (pseudo-RAW, band components, feature
stacks) goes through two tiny little-endian dump formats:

``MFRG``  magic, u32 height, u32 width, u32 channels, float32 planar data
``MFG4``  magic, u32 N, u32 C, u32 H, u32 W, float32 data
"""

from __future__ import annotations

import enum
import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator

import cv2
import numpy as np

MIN_SIZE = 8

MFRG_MAGIC = b"MFRG"
MFG4_MAGIC = b"MFG4"


class Domain(str, enum.Enum):
    SRGB_NONLINEAR = "SRGB_NONLINEAR"
    RAW_LINEAR = "RAW_LINEAR"


class DomainError(ValueError):
    """An operation received an image in the wrong color domain."""


class ImageFormatError(ValueError):
    """A file could not be decoded into a valid 3-channel image."""


@dataclass(frozen=True, eq=False)
class ImagePlanes:
    """Immutable 3-channel image, channel-major, values in [0, 1]."""

    data: np.ndarray
    domain_tag: Domain = Domain.SRGB_NONLINEAR

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, copy=True)
        if arr.ndim != 3 or arr.shape[0] != 3:
            raise ValueError(f"expected shape (3, H, W), got {arr.shape}")
        if arr.shape[1] < MIN_SIZE or arr.shape[2] < MIN_SIZE:
            raise ValueError(f"image must be at least {MIN_SIZE}x{MIN_SIZE}, got {arr.shape[1:]}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image contains NaN or Inf")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("image values must lie in [0, 1]")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "domain_tag", Domain(self.domain_tag))

    @property
    def channels(self) -> int:
        return 3

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    def with_data(self, data: np.ndarray, domain_tag: Domain | None = None) -> "ImagePlanes":
        return ImagePlanes(data, self.domain_tag if domain_tag is None else domain_tag)

    def require(self, domain: Domain) -> None:
        if self.domain_tag is not domain:
            raise DomainError(f"expected {domain.value} image, got {self.domain_tag.value}")

    @classmethod
    def from_hwc(cls, arr: np.ndarray, domain_tag: Domain = Domain.SRGB_NONLINEAR) -> "ImagePlanes":
        """Build from an interleaved ``(H, W, 3)`` array already scaled to [0, 1]."""
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"expected shape (H, W, 3), got {arr.shape}")
        return cls(np.transpose(arr, (2, 0, 1)), domain_tag)

    def to_hwc(self) -> np.ndarray:
        return np.ascontiguousarray(np.transpose(self.data, (1, 2, 0)))


def load_image(path: str | Path) -> ImagePlanes:
    """Read an 8- or 16-bit RGB PNG into an sRGB ``ImagePlanes``."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(path)
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise ImageFormatError(f"cannot decode {path}")
    if raw.dtype == np.uint8:
        scale = 255.0
    elif raw.dtype == np.uint16:
        scale = 65535.0
    else:
        raise ImageFormatError(f"unsupported bit depth {raw.dtype} in {path}")
    if raw.ndim != 3 or raw.shape[2] != 3:
        nch = 1 if raw.ndim == 2 else raw.shape[2]
        raise ImageFormatError(f"{path} has {nch} channels, expected 3")
    rgb = raw[:, :, ::-1].astype(np.float64) / scale
    return ImagePlanes.from_hwc(rgb)


def quantize(data: np.ndarray, bit_depth: int) -> np.ndarray:
    """Round [0, 1] data to the integer lattice of ``bit_depth``."""
    if bit_depth == 8:
        maxv, dtype = 255, np.uint8
    elif bit_depth == 16:
        maxv, dtype = 65535, np.uint16
    else:
        raise ValueError(f"bit_depth must be 8 or 16, got {bit_depth}")
    return np.rint(np.clip(data, 0.0, 1.0) * maxv).astype(dtype)


def encode_png(data_hwc: np.ndarray, bit_depth: int = 8) -> bytes:
    q = quantize(data_hwc, bit_depth)
    ok, buf = cv2.imencode(".png", np.ascontiguousarray(q[:, :, ::-1]))
    if not ok:
        raise ImageFormatError("PNG encoding failed")
    return buf.tobytes()


def save_image(img: ImagePlanes, path: str | Path, bit_depth: int = 8) -> None:
    """Write ``img`` as an RGB PNG at 8 or 16 bits per channel."""
    payload = encode_png(img.to_hwc(), bit_depth)
    path = Path(path)
    try:
        path.write_bytes(payload)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


# -- float dumps -------------------------------------------------------------

def write_mfrg(path: str | Path, data: np.ndarray) -> None:
    """Dump a ``(C, H, W)`` array as MFRG (float32, little-endian)."""
    arr = np.asarray(data)
    if arr.ndim != 3:
        raise ValueError(f"MFRG expects (C, H, W), got {arr.shape}")
    c, h, w = arr.shape
    header = MFRG_MAGIC + struct.pack("<III", h, w, c)
    Path(path).write_bytes(header + arr.astype("<f4").tobytes(order="C"))


def read_mfrg(path: str | Path) -> np.ndarray:
    buf = Path(path).read_bytes()
    if buf[:4] != MFRG_MAGIC:
        raise ImageFormatError(f"{path} is not an MFRG dump")
    h, w, c = struct.unpack("<III", buf[4:16])
    body = np.frombuffer(buf, dtype="<f4", offset=16)
    if body.size != c * h * w:
        raise ImageFormatError(f"{path}: payload size {body.size} != {c}*{h}*{w}")
    return body.reshape(c, h, w).astype(np.float64)


def write_mfg4(path: str | Path, data: np.ndarray) -> None:
    """Dump an ``(N, C, H, W)`` array as MFG4."""
    arr = np.asarray(data)
    if arr.ndim != 4:
        raise ValueError(f"MFG4 expects (N, C, H, W), got {arr.shape}")
    header = MFG4_MAGIC + struct.pack("<IIII", *arr.shape)
    Path(path).write_bytes(header + arr.astype("<f4").tobytes(order="C"))


def read_mfg4(path: str | Path) -> np.ndarray:
    buf = Path(path).read_bytes()
    if buf[:4] != MFG4_MAGIC:
        raise ImageFormatError(f"{path} is not an MFG4 dump")
    shape = struct.unpack("<IIII", buf[4:20])
    body = np.frombuffer(buf, dtype="<f4", offset=20)
    if body.size != int(np.prod(shape)):
        raise ImageFormatError(f"{path}: payload size {body.size} does not match header {shape}")
    return body.reshape(shape).astype(np.float64)


# -- manifests ---------------------------------------------------------------

@dataclass
class PairManifest:
    """Provenance for one degraded/clean pair.

    ``banding_spec`` and ``isp_params`` are stored in their dict form so the
    record serializes straight to JSON.
    """

    source_path: str
    output_path: str
    seed: int
    banding_spec: dict[str, Any]
    pipeline_version: str
    isp_params: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "PairManifest":
        return cls(**json.loads(line))


def write_jsonl(path: str | Path, records: Iterable[dict[str, Any] | PairManifest]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            line = rec.to_json() if isinstance(rec, PairManifest) else json.dumps(rec, sort_keys=True)
            fh.write(line + "\n")
            n += 1
    return n


def read_jsonl(path: str | Path) -> Iterator[dict[str, Any]]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield json.loads(line)
