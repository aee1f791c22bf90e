"""File formats: run-length encoded masks, prediction manifests, label PNGs.

Native RLE is row-major and starts with a background run (possibly of
length zero), alternating background/foreground; counts must sum to
width*height. Note this differs from the column-major encodings common
in detection datasets; converters for those live with the bindings, not
here.

Label PNGs: canonical output is 16-bit grayscale where pixel value v>0
is instance id v. On input, 8-bit grayscale is accepted, as are RGB
label images (black = background, each distinct color one instance, ids
assigned by scanline order of each color's first occurrence).

All writes are atomic (temp file + rename) and contain nothing
run-dependent, so identical inputs give byte-identical outputs.
"""

from __future__ import annotations

import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

from .maskcore import PredictionSet, ScoredInstance, as_label_map, as_mask

__all__ = [
    "ManifestError",
    "rle_encode",
    "rle_decode",
    "manifest_to_dict",
    "manifest_from_dict",
    "save_manifest",
    "load_manifest",
    "save_label_png",
    "load_label_png",
    "atomic_write_bytes",
    "atomic_write_text",
]


class ManifestError(ValueError):
    """Malformed manifest or label file; message names the offending field."""


def rle_encode(mask) -> list[int]:
    """Row-major RLE, first count covering background (0 if mask starts on)."""
    mask = as_mask(mask)
    flat = mask.ravel()
    boundaries = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    edges = np.concatenate(([0], boundaries, [flat.size]))
    counts = np.diff(edges).tolist()
    if flat[0]:
        counts.insert(0, 0)
    return [int(c) for c in counts]


def rle_decode(counts, width: int, height: int) -> np.ndarray:
    """Inverse of :func:`rle_encode`; validates counts before decoding."""
    if width < 1 or height < 1:
        raise ManifestError(f"invalid dimensions {width}x{height}")
    counts = list(counts)
    for c in counts:
        if not isinstance(c, (int, np.integer)) or isinstance(c, bool) or c < 0:
            raise ManifestError(f"rle: counts must be non-negative integers, got {c!r}")
    total = sum(counts)
    if total != width * height:
        raise ManifestError(
            f"rle: counts sum to {total}, expected width*height = {width * height}"
        )
    flat = np.zeros(width * height, dtype=bool)
    pos = 0
    value = False
    for c in counts:
        if value:
            flat[pos : pos + c] = True
        pos += c
        value = not value
    return flat.reshape(height, width)


def manifest_to_dict(image_id: str, ps: PredictionSet) -> dict:
    instances = []
    for inst in ps.instances:
        entry = {"score": inst.score, "rle": rle_encode(inst.mask)}
        if inst.votes is not None:
            entry["votes"] = inst.votes
        instances.append(entry)
    return {
        "image_id": image_id,
        "width": ps.width,
        "height": ps.height,
        "instances": instances,
    }


def _require(payload: dict, key: str, where: str):
    if key not in payload:
        raise ManifestError(f"{where}: missing field {key!r}")
    return payload[key]


def manifest_from_dict(payload: dict, base_dir: Path | None = None) -> tuple[str, PredictionSet]:
    """Parse a manifest dict; mask PNG paths are resolved against base_dir."""
    if not isinstance(payload, dict):
        raise ManifestError("manifest: expected a JSON object")
    image_id = _require(payload, "image_id", "manifest")
    if not isinstance(image_id, str):
        raise ManifestError("image_id: expected a string")
    width = _require(payload, "width", "manifest")
    height = _require(payload, "height", "manifest")
    for name, v in (("width", width), ("height", height)):
        if not isinstance(v, int) or isinstance(v, bool) or v < 1:
            raise ManifestError(f"{name}: expected a positive integer, got {v!r}")
    raw = _require(payload, "instances", "manifest")
    if not isinstance(raw, list):
        raise ManifestError("instances: expected a list")
    instances = []
    for k, entry in enumerate(raw):
        where = f"instances[{k}]"
        if not isinstance(entry, dict):
            raise ManifestError(f"{where}: expected an object")
        score = _require(entry, "score", where)
        if not isinstance(score, (int, float)) or isinstance(score, bool):
            raise ManifestError(f"{where}.score: expected a number, got {score!r}")
        if not (0.0 <= float(score) <= 1.0):
            raise ManifestError(f"{where}.score: {score} outside [0,1]")
        if ("rle" in entry) == ("mask_png" in entry):
            raise ManifestError(f"{where}: need exactly one of 'rle' or 'mask_png'")
        if "rle" in entry:
            if not isinstance(entry["rle"], list):
                raise ManifestError(f"{where}.rle: expected a list of counts")
            try:
                mask = rle_decode(entry["rle"], width, height)
            except ManifestError as exc:
                raise ManifestError(f"{where}.{exc}") from None
        else:
            rel = entry["mask_png"]
            if not isinstance(rel, str):
                raise ManifestError(f"{where}.mask_png: expected a path string")
            path = (base_dir or Path(".")) / rel
            try:
                mask = np.array(Image.open(path)) > 0
            except OSError as exc:
                raise ManifestError(f"{where}.mask_png: cannot read {path}: {exc}") from None
            if mask.ndim != 2 or mask.shape != (height, width):
                raise ManifestError(
                    f"{where}.mask_png: mask shape {mask.shape} does not match "
                    f"{height}x{width}"
                )
        votes = entry.get("votes")
        if votes is not None and (not isinstance(votes, int) or isinstance(votes, bool) or votes < 1):
            raise ManifestError(f"{where}.votes: expected a positive integer")
        if not mask.any():
            raise ManifestError(f"{where}: mask has no positive pixel")
        instances.append(ScoredInstance(mask=mask, score=float(score), votes=votes))
    try:
        ps = PredictionSet(width=width, height=height, instances=tuple(instances))
    except ValueError as exc:
        raise ManifestError(str(exc)) from None
    return image_id, ps


def save_manifest(path, image_id: str, ps: PredictionSet) -> None:
    payload = manifest_to_dict(image_id, ps)
    atomic_write_text(path, json.dumps(payload, sort_keys=True) + "\n")


def load_manifest(path) -> tuple[str, PredictionSet]:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON: {exc}") from None
    try:
        return manifest_from_dict(payload, base_dir=path.parent)
    except ManifestError as exc:
        raise ManifestError(f"{path}: {exc}") from None


def save_label_png(path, lm) -> None:
    """Write a label map as 16-bit grayscale PNG."""
    lm = as_label_map(lm)
    if lm.max(initial=0) > 0xFFFF:
        raise ValueError("label ids exceed 16-bit range")
    img = Image.fromarray(lm.astype(np.uint16))
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    atomic_write_bytes(path, buf.getvalue())


def load_label_png(path) -> np.ndarray:
    """Read a grayscale or RGB label PNG into a label map."""
    try:
        img = Image.open(path)
        img.load()
    except OSError as exc:
        raise ManifestError(f"{path}: cannot read PNG: {exc}") from None
    if img.mode == "P":
        img = img.convert("RGB")
    arr = np.array(img)
    if arr.ndim == 2:
        return as_label_map(arr.astype(np.int32))
    if arr.ndim == 3 and arr.shape[2] in (3, 4):
        rgb = arr[:, :, :3].astype(np.int64)
        codes = (rgb[:, :, 0] << 16) | (rgb[:, :, 1] << 8) | rgb[:, :, 2]
        flat = codes.ravel()
        colors, first_pos = np.unique(flat, return_index=True)
        lut = {}
        next_id = 1
        for pos in np.sort(first_pos):
            code = int(flat[pos])
            if code == 0:
                lut[code] = 0
            else:
                lut[code] = next_id
                next_id += 1
        out = np.zeros(flat.shape, dtype=np.int32)
        for code, label in lut.items():
            out[flat == code] = label
        return out.reshape(codes.shape)
    raise ManifestError(f"{path}: unsupported image layout {arr.shape}")


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))
