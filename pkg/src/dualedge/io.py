"""File codecs: tensor files, weights archives, PGM/PPM images, detection JSONL.

Tensor file (little-endian throughout)::

    b"SFFT"  u16 version=1  u16 rank  u32 dims[rank]  f32 payload (row-major)

Weights archive::

    b"SFFW"  u16 version=1  u32 count
    count x ( u32 name_len  utf-8 name  <tensor file bytes> )
"""

import io
import json
import struct
from typing import Dict, Iterable, List, Mapping

import numpy as np

from .errors import BadMagicError, BadVersionError, FormatError, NameEncodingError, TruncatedError
from .metrics import DetectionRecord

TENSOR_MAGIC = b"SFFT"
ARCHIVE_MAGIC = b"SFFW"
VERSION = 1
_LE_F32 = np.dtype("<f4")


def _read_exact(fh, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise TruncatedError(f"truncated {what}: expected {n} bytes, got {len(data)}")
    return data


def encode_tensor(arr) -> bytes:
    a = np.asarray(arr, dtype=np.float32)
    if a.ndim < 1 or a.ndim > 0xFFFF:
        raise FormatError(f"cannot encode rank {a.ndim}")
    head = TENSOR_MAGIC + struct.pack("<HH", VERSION, a.ndim) + struct.pack(f"<{a.ndim}I", *a.shape)
    return head + np.ascontiguousarray(a, dtype=_LE_F32).tobytes()


def _decode_tensor(fh) -> np.ndarray:
    magic = _read_exact(fh, 4, "tensor header")
    if magic != TENSOR_MAGIC:
        raise BadMagicError(f"bad tensor magic {magic!r} (expected {TENSOR_MAGIC!r})")
    version, rank = struct.unpack("<HH", _read_exact(fh, 4, "tensor header"))
    if version != VERSION:
        raise BadVersionError(f"unsupported tensor format version {version}")
    dims = struct.unpack(f"<{rank}I", _read_exact(fh, 4 * rank, "tensor dims"))
    count = int(np.prod(dims, dtype=np.int64))
    payload = _read_exact(fh, 4 * count, "tensor payload")
    return np.frombuffer(payload, dtype=_LE_F32).astype(np.float32).reshape(dims)


def decode_tensor(data: bytes) -> np.ndarray:
    fh = io.BytesIO(data)
    arr = _decode_tensor(fh)
    if fh.read(1):
        raise FormatError("trailing bytes after tensor payload")
    return arr


def write_tensor(path, arr):
    with open(path, "wb") as fh:
        fh.write(encode_tensor(arr))


def read_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_tensor(fh.read())


def encode_weights(weights: Mapping[str, np.ndarray]) -> bytes:
    """Entries are written sorted by name so the bytes never depend on dict order."""
    parts = [ARCHIVE_MAGIC, struct.pack("<HI", VERSION, len(weights))]
    for name in sorted(weights):
        arr = weights[name]
        raw = name.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)) + raw)
        parts.append(encode_tensor(arr))
    return b"".join(parts)


def decode_weights(data: bytes) -> Dict[str, np.ndarray]:
    fh = io.BytesIO(data)
    magic = _read_exact(fh, 4, "archive header")
    if magic != ARCHIVE_MAGIC:
        raise BadMagicError(f"bad archive magic {magic!r} (expected {ARCHIVE_MAGIC!r})")
    version, count = struct.unpack("<HI", _read_exact(fh, 6, "archive header"))
    if version != VERSION:
        raise BadVersionError(f"unsupported archive version {version}")
    out: Dict[str, np.ndarray] = {}
    for i in range(count):
        (length,) = struct.unpack("<I", _read_exact(fh, 4, f"entry {i} name length"))
        raw = _read_exact(fh, length, f"entry {i} name")
        try:
            name = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise NameEncodingError(f"entry {i}: name is not valid UTF-8") from exc
        if name in out:
            raise FormatError(f"duplicate entry name {name!r}")
        out[name] = _decode_tensor(fh)
    if fh.read(1):
        raise FormatError("trailing bytes after last archive entry")
    return out


def write_weights(path, weights: Mapping[str, np.ndarray]):
    with open(path, "wb") as fh:
        fh.write(encode_weights(weights))


def read_weights(path) -> Dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        return decode_weights(fh.read())


def quantize(values) -> np.ndarray:
    """Clamp to [0, 1] and round half up to 8 bits."""
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    return np.floor(v * 255.0 + 0.5).astype(np.uint8)


def encode_pnm(image) -> bytes:
    """(h, w) -> P5 greyscale, (3, h, w) -> P6 colour."""
    a = np.asarray(image)
    if a.ndim == 2:
        return b"P5\n%d %d\n255\n" % (a.shape[1], a.shape[0]) + quantize(a).tobytes()
    if a.ndim == 3 and a.shape[0] == 3:
        px = quantize(np.moveaxis(a, 0, -1))
        return b"P6\n%d %d\n255\n" % (a.shape[2], a.shape[1]) + px.tobytes()
    raise FormatError(f"cannot write image of shape {a.shape}")


def _pnm_tokens(data: bytes, count: int):
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise TruncatedError("truncated image header")
        tokens.append(data[start:pos])
    return tokens, pos + 1


def decode_pnm(data: bytes) -> np.ndarray:
    """P5/P6 bytes -> float32 tensor (1, c, h, w) with values in [0, 1]."""
    if data[:2] not in (b"P5", b"P6"):
        raise BadMagicError(f"bad image magic {data[:2]!r} (expected P5 or P6)")
    tokens, pos = _pnm_tokens(data, 4)
    try:
        w, h, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise FormatError("malformed image header") from exc
    if not 0 < maxval < 256:
        raise FormatError(f"only 8-bit images are supported (maxval {maxval})")
    c = 1 if tokens[0] == b"P5" else 3
    need = w * h * c
    px = data[pos:pos + need]
    if len(px) != need:
        raise TruncatedError(f"truncated image payload: expected {need} bytes, got {len(px)}")
    arr = np.frombuffer(px, dtype=np.uint8).reshape(h, w, c).astype(np.float32) / np.float32(maxval)
    return np.ascontiguousarray(np.moveaxis(arr, -1, 0)[None])


def write_pnm(path, image):
    with open(path, "wb") as fh:
        fh.write(encode_pnm(image))


def read_pnm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_pnm(fh.read())


def read_any_tensor(path) -> np.ndarray:
    """Tensor file or PGM/PPM image, chosen by magic bytes."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] == TENSOR_MAGIC:
        return decode_tensor(data)
    if data[:2] in (b"P5", b"P6"):
        return decode_pnm(data)
    raise BadMagicError(f"{path}: neither a tensor file nor a PGM/PPM image")


def read_detections(path) -> List[DetectionRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(DetectionRecord.from_json(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
    return out


def write_detections(path, records: Iterable[DetectionRecord]):
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            obj = {"image_id": r.image_id, "category_id": r.category_id, "bbox": list(r.bbox)}
            if r.score is not None:
                obj["score"] = r.score
            fh.write(json.dumps(obj) + "\n")
