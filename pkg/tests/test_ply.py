import io

import numpy as np
import pytest

from pcqa import PlyParseError, PointCloud, load_point_cloud, read_ply, write_ply
from pcqa.ply import ASCII, BINARY_LE


def ascii_ply(body_rows, props=("x", "y", "z"), count=None, extra_header=()):
    lines = ["ply", "format ascii 1.0"]
    lines.extend(extra_header)
    lines.append(f"element vertex {len(body_rows) if count is None else count}")
    lines.extend(f"property float {p}" for p in props)
    lines.append("end_header")
    lines.extend(body_rows)
    return ("\n".join(lines) + "\n").encode("ascii")


SIMPLE = ascii_ply(["0 0 0", "1 0 0", "0 1 0"])


def test_reads_ascii_from_bytes_path_and_stream(tmp_path):
    from_bytes = read_ply(SIMPLE)
    path = tmp_path / "tri.ply"
    path.write_bytes(SIMPLE)
    from_path = read_ply(path)
    from_stream = read_ply(io.BytesIO(SIMPLE))
    expected = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float)
    for cloud in (from_bytes, from_path, from_stream):
        assert np.array_equal(cloud.points, expected)
        assert cloud.normals is None
        assert cloud.bit_depth is None


def test_load_point_cloud_is_the_reader():
    assert load_point_cloud is read_ply


def test_normals_consumed_when_all_three_present():
    data = ascii_ply(
        ["0 0 0 0 0 1", "1 0 0 0 1 0"],
        props=("x", "y", "z", "nx", "ny", "nz"),
    )
    cloud = read_ply(data)
    assert np.array_equal(cloud.normals, [[0, 0, 1], [0, 1, 0]])


def test_partial_normal_columns_are_ignored():
    data = ascii_ply(["0 0 0 1", "1 0 0 1"], props=("x", "y", "z", "nx"))
    assert read_ply(data).normals is None


def test_file_normals_are_renormalized():
    data = ascii_ply(["0 0 0 0 0 2"], props=("x", "y", "z", "nx", "ny", "nz"))
    assert np.array_equal(read_ply(data).normals, [[0.0, 0.0, 1.0]])


def test_zero_length_normal_is_an_error():
    data = ascii_ply(["0 0 0 0 0 0"], props=("x", "y", "z", "nx", "ny", "nz"))
    with pytest.raises(PlyParseError, match="zero-length normal"):
        read_ply(data)


def test_extra_properties_and_elements_are_skipped():
    lines = [
        "ply",
        "format ascii 1.0",
        "comment colors and a face element, all ignored",
        "element vertex 2",
        "property float x",
        "property float y",
        "property float z",
        "property uchar red",
        "element face 1",
        "property int a",
        "end_header",
        "1 2 3 255",
        "4 5 6 0",
        "7",
    ]
    cloud = read_ply(("\n".join(lines) + "\n").encode())
    assert np.array_equal(cloud.points, [[1, 2, 3], [4, 5, 6]])


def test_column_order_does_not_matter():
    data = ascii_ply(["9 1 2 3", "8 4 5 6"], props=("index", "z", "x", "y"))
    # index column first; x/y/z picked out by name
    cloud = read_ply(data.replace(b"property float index", b"property int index"))
    assert np.array_equal(cloud.points, [[2, 3, 1], [5, 6, 4]])


def test_binary_little_endian_round_trip(tmp_path):
    pts = np.array([[0.1, 1 / 3, -2.5], [1e-300, 16777216.1, 3.0]])
    normals = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    cloud = PointCloud(pts, normals=normals)
    path = tmp_path / "bin.ply"
    write_ply(cloud, path, format=BINARY_LE)
    back = read_ply(path)
    assert np.array_equal(back.points, pts)  # bit-exact
    assert np.array_equal(back.normals, normals)


def test_ascii_round_trip_is_exact(tmp_path):
    # repr() emits shortest round-trip decimals, so ASCII is lossless too
    pts = np.array([[0.1, 0.2, 0.30000000000000004], [-1e-17, 2**52 + 1.0, 5.5]])
    path = tmp_path / "ascii.ply"
    write_ply(PointCloud(pts), path, format=ASCII)
    assert b"format ascii 1.0" in path.read_bytes()
    assert np.array_equal(read_ply(path).points, pts)


def test_write_empty_cloud_round_trips(tmp_path):
    for fmt in (ASCII, BINARY_LE):
        path = tmp_path / f"empty-{fmt}.ply"
        write_ply(PointCloud(np.empty((0, 3))), path, format=fmt)
        assert len(read_ply(path)) == 0


def test_write_rejects_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        write_ply(PointCloud([[0.0, 0.0, 0.0]]), tmp_path / "x.ply", format="big-endian")


def test_format_pin_mismatch():
    with pytest.raises(PlyParseError, match="requested"):
        read_ply(SIMPLE, format=BINARY_LE)
    assert len(read_ply(SIMPLE, format=ASCII)) == 3
    with pytest.raises(ValueError):
        read_ply(SIMPLE, format="utf-16")


def test_binary_vertices_parse_mixed_property_types():
    header = (
        b"ply\nformat binary_little_endian 1.0\n"
        b"element vertex 2\n"
        b"property double x\nproperty double y\nproperty double z\n"
        b"property uchar red\n"
        b"end_header\n"
    )
    row = np.dtype([("x", "<f8"), ("y", "<f8"), ("z", "<f8"), ("red", "u1")])
    body = np.array([(1.5, 2.5, 3.5, 7), (4.0, 5.0, 6.0, 9)], dtype=row).tobytes()
    cloud = read_ply(header + body)
    assert np.array_equal(cloud.points, [[1.5, 2.5, 3.5], [4.0, 5.0, 6.0]])


@pytest.mark.parametrize(
    "mutate,match,line",
    [
        (lambda t: t.replace("ply", "npy", 1), "not a PLY file", 1),
        (lambda t: t.replace("format ascii 1.0", "format ascii 2.0"), "unsupported PLY format", 2),
        (lambda t: t.replace("format ascii 1.0", "fmt ascii 1.0"), "unknown header keyword", 2),
        (lambda t: t.replace("element vertex 3", "element vertex three"), "not an integer", 3),
        (lambda t: t.replace("element vertex 3", "element vertex -1"), "negative element count", 3),
        (lambda t: t.replace("property float y", "property list uchar int y"), "'list'", 5),
        (lambda t: t.replace("property float y", "property quad y"), "unsupported property type", 5),
        (lambda t: t.replace("property float y", "property float x"), "duplicate property", 5),
    ],
)
def test_header_errors_carry_line_numbers(mutate, match, line):
    text = SIMPLE.decode()
    with pytest.raises(PlyParseError, match=match) as exc_info:
        read_ply(mutate(text).encode())
    assert exc_info.value.line == line


def test_duplicate_format_and_missing_format():
    text = SIMPLE.decode().replace("format ascii 1.0", "format ascii 1.0\nformat ascii 1.0")
    with pytest.raises(PlyParseError, match="duplicate format"):
        read_ply(text.encode())
    text = SIMPLE.decode().replace("format ascii 1.0\n", "")
    with pytest.raises(PlyParseError, match="no format line"):
        read_ply(text.encode())


def test_property_before_element_rejected():
    lines = ["ply", "format ascii 1.0", "property float x", "end_header"]
    with pytest.raises(PlyParseError, match="before any element"):
        read_ply("\n".join(lines).encode())


def test_missing_vertex_element_or_coordinates():
    lines = ["ply", "format ascii 1.0", "element face 0", "property int a", "end_header"]
    with pytest.raises(PlyParseError, match="no vertex element"):
        read_ply("\n".join(lines).encode())
    data = ascii_ply(["0 0", "1 0", "0 1"], props=("x", "y"))
    with pytest.raises(PlyParseError, match="missing required property z"):
        read_ply(data)


def test_header_truncation():
    with pytest.raises(PlyParseError, match="end of file inside header"):
        read_ply(b"ply\nformat ascii 1.0\n")


def test_ascii_body_errors_carry_line_numbers():
    short = ascii_ply(["0 0 0", "1 0 0"], count=3)
    with pytest.raises(PlyParseError, match="truncated body") as exc_info:
        read_ply(short)
    assert exc_info.value.line == 10  # 7 header lines, rows on 8-9, miss at 10

    bad_token = ascii_ply(["0 0 0", "1 zero 0", "0 1 0"])
    with pytest.raises(PlyParseError, match="non-numeric value 'zero'") as exc_info:
        read_ply(bad_token)
    assert exc_info.value.line == 9

    wrong_arity = ascii_ply(["0 0 0", "1 0", "0 1 0"])
    with pytest.raises(PlyParseError, match="expected 3 values") as exc_info:
        read_ply(wrong_arity)
    assert exc_info.value.line == 9


def test_binary_truncation_reports_byte_offset():
    header = (
        b"ply\nformat binary_little_endian 1.0\n"
        b"element vertex 2\n"
        b"property double x\nproperty double y\nproperty double z\n"
        b"end_header\n"
    )
    body = np.zeros((2, 3), dtype="<f8").tobytes()[:-8]  # one double short
    with pytest.raises(PlyParseError, match="truncated body") as exc_info:
        read_ply(header + body)
    assert exc_info.value.byte == 0  # vertex element starts at body offset 0
    assert "48 bytes" in str(exc_info.value)


def test_non_ascii_header_byte():
    with pytest.raises(PlyParseError, match="non-ASCII"):
        read_ply(b"ply\nform\xffat ascii 1.0\nend_header\n")


def test_blank_line_in_header_rejected():
    with pytest.raises(PlyParseError, match="blank line"):
        read_ply(b"ply\n\nformat ascii 1.0\nend_header\n")


def test_crlf_line_endings_accepted():
    data = SIMPLE.decode().replace("\n", "\r\n").encode()
    assert len(read_ply(data)) == 3
