"""Text file formats: datasets, indicator fields, heatmaps and manifests.

Dataset CSV::

    # version: 1
    # kind: phaseless            (or farfield)
    # k: 40
    # R: 10                      (none for far-field data)
    # L: 200
    # noise_delta: 0
    # noise_seed: none
    # generator: splitmix64-counter-v1
    <L rows of L values, or 2L values re,im interleaved>

Numbers are written with ``%.17g`` so files round-trip exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .forward import FarFieldMatrix, PhaselessDataset
from .geometry import SamplingGrid
from .inversion import IndicatorField
from .noise import GENERATOR_ID

FORMAT_VERSION = 1
HEADER_KEYS = ("version", "kind", "k", "R", "L", "noise_delta", "noise_seed", "generator")


class DataFormatError(ValueError):
    """Malformed input file; the message names the file and line."""


def _fmt(x) -> str:
    return f"{x:.17g}"


def _rows(matrix: np.ndarray) -> list[str]:
    return [",".join(_fmt(v) for v in row) for row in matrix]


def _interleave(values: np.ndarray) -> np.ndarray:
    out = np.empty((values.shape[0], 2 * values.shape[1]))
    out[:, 0::2] = values.real
    out[:, 1::2] = values.imag
    return out


def format_dataset(data) -> str:
    if isinstance(data, PhaselessDataset):
        header = {
            "version": FORMAT_VERSION, "kind": "phaseless", "k": _fmt(data.k), "R": _fmt(data.R), "L": data.L,
            "noise_delta": _fmt(data.noise_delta),
            "noise_seed": "none" if data.noise_seed is None else int(data.noise_seed),
            "generator": data.generator,
        }
        body = _rows(data.values)
    elif isinstance(data, FarFieldMatrix):
        header = {
            "version": FORMAT_VERSION, "kind": "farfield", "k": _fmt(data.k), "R": "none", "L": data.L,
            "noise_delta": "0", "noise_seed": "none", "generator": GENERATOR_ID,
        }
        body = _rows(_interleave(data.values))
    else:
        raise TypeError(f"cannot serialize {type(data).__name__}")
    lines = [f"# {key}: {header[key]}" for key in HEADER_KEYS]
    return "\n".join(lines + body) + "\n"


def write_dataset(path, data) -> Path:
    path = Path(path)
    path.write_text(format_dataset(data))
    return path


def _parse_header(lines, name):
    header = {}
    n = 0
    for n, line in enumerate(lines):
        if not line.startswith("#"):
            break
        key, sep, value = line[1:].partition(":")
        if not sep:
            raise DataFormatError(f"{name}:{n + 1}: header line must be '# key: value'")
        header[key.strip()] = value.strip()
    else:
        n = len(lines)
    return header, n


def _parse_body(lines, start, name, width):
    rows = []
    for i, line in enumerate(lines[start:], start + 1):
        if not line.strip():
            continue
        try:
            row = [float(v) for v in line.split(",")]
        except ValueError as exc:
            raise DataFormatError(f"{name}:{i}: {exc}") from None
        if len(row) != width:
            raise DataFormatError(f"{name}:{i}: expected {width} values, found {len(row)}")
        rows.append(row)
    return np.array(rows, dtype=float).reshape(-1, width)


def read_dataset(path):
    """Load a dataset file as ``PhaselessDataset`` or ``FarFieldMatrix``."""
    path = Path(path)
    name = str(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise DataFormatError(f"{name}: {exc.strerror}") from None
    header, start = _parse_header(lines, name)
    missing = [k for k in HEADER_KEYS if k not in header]
    if missing:
        raise DataFormatError(f"{name}: missing header keys {', '.join(missing)}")
    if header["version"] != str(FORMAT_VERSION):
        raise DataFormatError(f"{name}: unsupported format version {header['version']}")
    try:
        k = float(header["k"])
        L = int(header["L"])
        delta = float(header["noise_delta"])
        seed = None if header["noise_seed"] == "none" else int(header["noise_seed"])
    except ValueError as exc:
        raise DataFormatError(f"{name}: bad header value ({exc})") from None
    kind = header["kind"]
    if kind == "phaseless":
        values = _parse_body(lines, start, name, L)
        if values.shape[0] != L:
            raise DataFormatError(f"{name}: expected {L} data rows, found {values.shape[0]}")
        try:
            return PhaselessDataset(values, k, float(header["R"]), delta, seed, header["generator"])
        except ValueError as exc:
            raise DataFormatError(f"{name}: {exc}") from None
    if kind == "farfield":
        raw = _parse_body(lines, start, name, 2 * L)
        if raw.shape[0] != L:
            raise DataFormatError(f"{name}: expected {L} data rows, found {raw.shape[0]}")
        try:
            return FarFieldMatrix(raw[:, 0::2] + 1j * raw[:, 1::2], k)
        except ValueError as exc:
            raise DataFormatError(f"{name}: {exc}") from None
    raise DataFormatError(f"{name}: unknown dataset kind {kind!r}")


def write_operator_csv(path, A) -> Path:
    """Debug dump of a square complex matrix, re/im interleaved."""
    values = np.asarray(getattr(A, "values", A), dtype=complex)
    tag = getattr(A, "tag", "derived")
    path = Path(path)
    path.write_text(f"# operator: {tag}\n# L: {values.shape[0]}\n" + "\n".join(_rows(_interleave(values))) + "\n")
    return path


def format_indicator(field_: IndicatorField) -> str:
    g = field_.grid
    lines = [
        "# indicator v1",
        f"# bounds: {_fmt(g.xmin)} {_fmt(g.xmax)} {_fmt(g.ymin)} {_fmt(g.ymax)}",
        f"# shape: {g.ny} {g.nx}",
        f"# raw_max: {_fmt(field_.raw_max)}",
        f"# cutoff_rel: {_fmt(field_.cutoff_rel)}",
        f"# normalized: {str(field_.normalized).lower()}",
    ]
    # rows run from ymin upward, x increasing along each row
    return "\n".join(lines + _rows(field_.values)) + "\n"


def write_indicator(path, field_: IndicatorField) -> Path:
    path = Path(path)
    path.write_text(format_indicator(field_))
    return path


def read_indicator(path) -> IndicatorField:
    path = Path(path)
    name = str(path)
    lines = path.read_text().splitlines()
    if not lines or lines[0].strip() != "# indicator v1":
        raise DataFormatError(f"{name}:1: expected '# indicator v1'")
    header, start = _parse_header(lines[1:], name)
    try:
        xmin, xmax, ymin, ymax = (float(v) for v in header["bounds"].split())
        ny, nx = (int(v) for v in header["shape"].split())
        raw_max = float(header["raw_max"])
        cutoff = float(header["cutoff_rel"])
        normalized = header["normalized"] == "true"
    except (KeyError, ValueError) as exc:
        raise DataFormatError(f"{name}: bad indicator header ({exc})") from None
    values = _parse_body(lines, start + 1, name, nx)
    grid = SamplingGrid(xmin, xmax, ymin, ymax, nx, ny)
    return IndicatorField(grid, values, raw_max, cutoff, normalized)


def format_pgm(values: np.ndarray) -> str:
    """Plain 16-bit PGM with levels floor(65535 W / max W), top row = largest y."""
    v = np.asarray(values, dtype=float)
    peak = v.max() if v.size else 0.0
    levels = np.zeros(v.shape, dtype=np.int64) if peak <= 0 else np.floor(65535 * v / peak).astype(np.int64)
    levels = np.clip(levels, 0, 65535)[::-1]
    ny, nx = v.shape
    body = "\n".join(" ".join(str(x) for x in row) for row in levels)
    return f"P2\n{nx} {ny}\n65535\n{body}\n"


def write_pgm(path, values) -> Path:
    path = Path(path)
    path.write_text(format_pgm(values))
    return path


def write_manifest(path, record: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(record, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return path


def _jsonable(value):
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"not JSON serializable: {type(value).__name__}")
