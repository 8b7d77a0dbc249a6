"""PLY reader and writer for point clouds.

Supports ASCII and binary little-endian PLY files.  The vertex element must
carry numeric x, y, z properties; nx, ny, nz are consumed as normals when all
three are present.  Every other property is skipped, and non-vertex elements
are skipped wholesale.  Only fixed-size scalar properties are understood
(float, double, uchar, int and their float32/float64/uint8/int32 aliases);
list properties make an element unskippable and are rejected.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass

import numpy as np

from .cloud import PointCloud

ASCII = "ascii"
BINARY_LE = "binary-le"

_FORMAT_LINES = {
    "ascii 1.0": ASCII,
    "binary_little_endian 1.0": BINARY_LE,
}

# PLY type name -> (numpy dtype, byte size); little-endian for binary bodies
_SCALAR_TYPES = {
    "float": ("<f4", 4),
    "float32": ("<f4", 4),
    "double": ("<f8", 8),
    "float64": ("<f8", 8),
    "uchar": ("u1", 1),
    "uint8": ("u1", 1),
    "int": ("<i4", 4),
    "int32": ("<i4", 4),
}


class PlyParseError(ValueError):
    """Malformed or unsupported PLY content, with the offending position.

    ``line`` is the 1-based header/ASCII line number; ``byte`` is the file
    offset for binary-body failures.  Whichever applies is embedded in the
    message as well.
    """

    def __init__(self, message: str, *, line: int | None = None, byte: int | None = None):
        where = ""
        if line is not None:
            where = f" (line {line})"
        elif byte is not None:
            where = f" (byte {byte})"
        super().__init__(message + where)
        self.line = line
        self.byte = byte


@dataclass
class _Property:
    name: str
    ply_type: str


@dataclass
class _Element:
    name: str
    count: int
    properties: list[_Property]
    line: int  # header line that declared the element


def _read_header_line(stream, lineno: int) -> str:
    raw = stream.readline()
    if not raw:
        raise PlyParseError("unexpected end of file inside header", line=lineno)
    try:
        text = raw.decode("ascii")
    except UnicodeDecodeError as exc:
        raise PlyParseError(f"non-ASCII byte in header: {exc}", line=lineno) from None
    return text.rstrip("\r\n")


def _parse_header(stream) -> tuple[str, list[_Element], int]:
    """Parse the header; returns (format, elements, lines consumed)."""
    lineno = 1
    magic = _read_header_line(stream, lineno)
    if magic != "ply":
        raise PlyParseError(f"not a PLY file: first line is {magic!r}, expected 'ply'", line=1)

    fmt: str | None = None
    elements: list[_Element] = []
    while True:
        lineno += 1
        line = _read_header_line(stream, lineno)
        if line == "end_header":
            break
        tokens = line.split()
        if not tokens:
            raise PlyParseError("blank line inside header", line=lineno)
        keyword = tokens[0]
        if keyword == "format":
            if fmt is not None:
                raise PlyParseError("duplicate format line", line=lineno)
            spec = " ".join(tokens[1:])
            if spec not in _FORMAT_LINES:
                raise PlyParseError(f"unsupported PLY format {spec!r}", line=lineno)
            fmt = _FORMAT_LINES[spec]
        elif keyword in ("comment", "obj_info"):
            continue
        elif keyword == "element":
            if len(tokens) != 3:
                raise PlyParseError(f"malformed element line {line!r}", line=lineno)
            name = tokens[1]
            try:
                count = int(tokens[2])
            except ValueError:
                raise PlyParseError(f"element count {tokens[2]!r} is not an integer", line=lineno) from None
            if count < 0:
                raise PlyParseError(f"negative element count {count}", line=lineno)
            if any(e.name == name for e in elements):
                raise PlyParseError(f"duplicate element {name!r}", line=lineno)
            elements.append(_Element(name, count, [], lineno))
        elif keyword == "property":
            if not elements:
                raise PlyParseError("property declared before any element", line=lineno)
            if len(tokens) >= 2 and tokens[1] == "list":
                raise PlyParseError(
                    f"unsupported property type 'list' for {tokens[-1]!r}", line=lineno
                )
            if len(tokens) != 3:
                raise PlyParseError(f"malformed property line {line!r}", line=lineno)
            ply_type, name = tokens[1], tokens[2]
            if ply_type not in _SCALAR_TYPES:
                raise PlyParseError(f"unsupported property type {ply_type!r}", line=lineno)
            if any(p.name == name for p in elements[-1].properties):
                raise PlyParseError(
                    f"duplicate property {name!r} in element {elements[-1].name!r}", line=lineno
                )
            elements[-1].properties.append(_Property(name, ply_type))
        else:
            raise PlyParseError(f"unknown header keyword {keyword!r}", line=lineno)

    if fmt is None:
        raise PlyParseError("header has no format line", line=lineno)
    return fmt, elements, lineno


def _vertex_element(elements: list[_Element]) -> _Element:
    for element in elements:
        if element.name == "vertex":
            return element
    raise PlyParseError("no vertex element in header")


def _vertex_columns(vertex: _Element) -> tuple[dict[str, int], bool]:
    index = {p.name: i for i, p in enumerate(vertex.properties)}
    missing = [c for c in ("x", "y", "z") if c not in index]
    if missing:
        raise PlyParseError(
            f"vertex element is missing required propert{'y' if len(missing) == 1 else 'ies'} "
            + ", ".join(missing),
            line=vertex.line,
        )
    has_normals = all(c in index for c in ("nx", "ny", "nz"))
    return index, has_normals


def _renormalize(normals: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(normals, axis=1)
    bad = norms == 0.0
    if bad.any():
        raise PlyParseError(
            f"zero-length normal on vertex {int(np.flatnonzero(bad)[0])}; cannot renormalize"
        )
    return normals / norms[:, None]


def _read_ascii_body(stream, elements, vertex, header_lines) -> tuple[np.ndarray, np.ndarray | None]:
    text = stream.read().decode("ascii", errors="replace")
    lines = text.splitlines()
    cursor = 0  # index into lines
    lineno = header_lines  # last consumed line number

    def next_row(expected_tokens: int, what: str) -> list[str]:
        nonlocal cursor, lineno
        while cursor < len(lines) and not lines[cursor].strip():
            cursor += 1
            lineno += 1
        if cursor >= len(lines):
            raise PlyParseError(f"truncated body: missing {what}", line=lineno + 1)
        row = lines[cursor].split()
        cursor += 1
        lineno += 1
        if len(row) != expected_tokens:
            raise PlyParseError(
                f"expected {expected_tokens} values for {what}, got {len(row)}", line=lineno
            )
        return row

    points = normals = None
    for element in elements:
        ncols = len(element.properties)
        if element.name != "vertex":
            for i in range(element.count):
                next_row(ncols, f"{element.name} row {i}")
            continue
        index, has_normals = _vertex_columns(element)
        cols = [index["x"], index["y"], index["z"]]
        if has_normals:
            cols += [index["nx"], index["ny"], index["nz"]]
        data = np.empty((element.count, len(cols)), dtype=np.float64)
        for i in range(element.count):
            row = next_row(ncols, f"vertex {i}")
            try:
                for j, c in enumerate(cols):
                    data[i, j] = float(row[c])
            except ValueError:
                raise PlyParseError(
                    f"non-numeric value {row[c]!r} in vertex {i}", line=lineno
                ) from None
        points = data[:, :3]
        normals = _renormalize(data[:, 3:]) if has_normals else None
    return points, normals


def _read_binary_body(stream, elements, vertex) -> tuple[np.ndarray, np.ndarray | None]:
    body = stream.read()
    offset = 0
    points = normals = None
    for element in elements:
        dtype = np.dtype([(p.name, _SCALAR_TYPES[p.ply_type][0]) for p in element.properties])
        nbytes = dtype.itemsize * element.count
        if offset + nbytes > len(body):
            raise PlyParseError(
                f"truncated body: element {element.name!r} needs {nbytes} bytes, "
                f"{len(body) - offset} remain",
                byte=offset,
            )
        if element.name == "vertex":
            index, has_normals = _vertex_columns(element)
            rows = np.frombuffer(body, dtype=dtype, count=element.count, offset=offset)
            points = np.column_stack(
                [rows["x"], rows["y"], rows["z"]]
            ).astype(np.float64)
            if has_normals:
                raw = np.column_stack([rows["nx"], rows["ny"], rows["nz"]]).astype(np.float64)
                normals = _renormalize(raw)
        offset += nbytes
    return points, normals


def read_ply(source, format: str | None = None) -> PointCloud:
    """Read a point cloud from a PLY file.

    ``source`` may be a path, bytes, or a binary file object.  ``format``
    optionally pins the expected encoding ("ascii" or "binary-le"); a
    mismatch with the file's own format line is an error.  The returned
    cloud has ``bit_depth`` unset; callers supply or infer it.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return read_ply(fh, format=format)
    if isinstance(source, (bytes, bytearray)):
        return read_ply(io.BytesIO(source), format=format)

    fmt, elements, header_lines = _parse_header(source)
    if format is not None:
        if format not in (ASCII, BINARY_LE):
            raise ValueError(f"format must be {ASCII!r} or {BINARY_LE!r}, got {format!r}")
        if format != fmt:
            raise PlyParseError(f"file is {fmt!r} but {format!r} was requested")
    vertex = _vertex_element(elements)
    _vertex_columns(vertex)  # validate x/y/z presence before touching the body

    if fmt == ASCII:
        points, normals = _read_ascii_body(source, elements, vertex, header_lines)
    else:
        points, normals = _read_binary_body(source, elements, vertex)
    return PointCloud(points, normals=normals)


# convenience alias: loading a point cloud is format-checked PLY reading
load_point_cloud = read_ply


def write_ply(cloud: PointCloud, dest, format: str = BINARY_LE) -> None:
    """Write a point cloud as PLY with double-precision coordinates.

    Binary little-endian output round-trips coordinates bit-exactly; ASCII
    uses shortest round-trip decimal formatting, which is also exact for
    float64.  Normals are written when present; bit depth is not stored
    (PLY has no standard slot for it).
    """
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "wb") as fh:
            write_ply(cloud, fh, format=format)
            return
    if format not in (ASCII, BINARY_LE):
        raise ValueError(f"format must be {ASCII!r} or {BINARY_LE!r}, got {format!r}")

    names = ["x", "y", "z"]
    columns = [cloud.points]
    if cloud.has_normals:
        names += ["nx", "ny", "nz"]
        columns.append(cloud.normals)
    data = np.column_stack(columns)

    header = ["ply"]
    header.append("format ascii 1.0" if format == ASCII else "format binary_little_endian 1.0")
    header.append(f"element vertex {len(cloud)}")
    header.extend(f"property double {name}" for name in names)
    header.append("end_header")
    dest.write(("\n".join(header) + "\n").encode("ascii"))

    if format == ASCII:
        rows = "\n".join(" ".join(repr(float(v)) for v in row) for row in data)
        if rows:
            rows += "\n"
        dest.write(rows.encode("ascii"))
    else:
        dest.write(np.ascontiguousarray(data, dtype="<f8").tobytes())
