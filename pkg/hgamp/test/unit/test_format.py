"""Test instance formats."""

import pytest

from hgamp.exceptions import HgampError, InstanceSyntaxError, InstanceValidationError
from hgamp.format import (
    SingleFormats,
    TokenStream,
    instance_name,
    parse_instance,
    serialize_instance,
    write_instance,
)
from hgamp.generate import gen_tiny

CANONICAL = """\
CLRP 1
NAME toy   # two depots, three customers
3 2 10 5 scaled-integer:1
0 0 20 100
10 0 20 50
1 0 3
2 0 4
9 0 5
"""

PRINS = """\
2
1
0 0
3 4
6 8
10
25
4
5
100
7
1
"""


def test_canonical(tmp_path, line):
    path = tmp_path / "ignored.txt"
    path.write_text(CANONICAL)

    inst = parse_instance(str(path))

    assert inst.name == "toy"
    assert inst.m == 2
    assert inst.n == 3
    assert inst.vehicle_capacity == 10
    assert inst.vehicle_fixed_cost == 5
    assert inst.distances == line.distances


def test_canonical_matrix(tmp_path):
    path = tmp_path / "matrix.txt"
    path.write_text(
        "CLRP 1\n1 1 10 0 exact-real\n- - 10 3\n- - 4\nMATRIX\n0 2.5\n3.5 0\n"
    )

    inst = parse_instance(str(path), "canonical")

    assert inst.c[0][1] == 2.5
    assert inst.c[1][0] == 3.5
    assert not inst.distances.symmetric


def test_canonical_missing_coordinates_need_matrix(tmp_path):
    path = tmp_path / "nocoords.txt"
    path.write_text("CLRP 1\n1 1 10 0 exact-real\n- - 10 3\n1 1 4\n")

    with pytest.raises(InstanceValidationError):
        parse_instance(str(path))


def test_syntax_error_line(tmp_path):
    path = tmp_path / "broken.txt"
    path.write_text(CANONICAL.replace("2 0 4", "2 zero 4"))

    with pytest.raises(InstanceSyntaxError) as e:
        parse_instance(str(path))

    assert e.value.line == 7
    assert "customer 1 y" in str(e.value)


def test_truncated_file(tmp_path):
    path = tmp_path / "short.txt"
    path.write_text("\n".join(CANONICAL.splitlines()[:-1]) + "\n")

    with pytest.raises(InstanceSyntaxError) as e:
        parse_instance(str(path))

    assert "end of file" in str(e.value)


def test_semantic_error_field(tmp_path):
    path = tmp_path / "demand.txt"
    path.write_text(CANONICAL.replace("9 0 5", "9 0 50"))

    with pytest.raises(InstanceValidationError) as e:
        parse_instance(str(path))

    assert e.value.field == "customers[2].demand"


def test_prins(tmp_path):
    path = tmp_path / "coordP-small.dat"
    path.write_text(PRINS)

    inst = parse_instance(str(path))

    assert inst.name == "P-small"
    assert inst.m == 1
    assert inst.n == 2
    assert inst.capacity == [25]
    assert inst.demand == [0, 4, 5]
    assert inst.opening == [100]
    assert inst.vehicle_fixed_cost == 7
    assert str(inst.convention) == "scaled-integer:100"
    # depot (0, 0) to customer (3, 4) is 5, scaled by 100
    assert inst.c[0][1] == 500


def test_prins_real_costs(tmp_path):
    path = tmp_path / "real.dat"
    path.write_text(PRINS.rstrip()[:-1] + "0\n")

    inst = parse_instance(str(path), "prins")

    assert str(inst.convention) == "exact-real"
    assert inst.c[0][1] == pytest.approx(5.0)


def test_convention_override(tmp_path):
    path = tmp_path / "override.dat"
    path.write_text(PRINS)

    inst = parse_instance(str(path), convention="exact-real")

    assert inst.c[1][2] == pytest.approx(5.0)


def test_unknown_format(tmp_path):
    path = tmp_path / "toy.txt"
    path.write_text(CANONICAL)

    with pytest.raises(HgampError):
        parse_instance(str(path), "vrplib")


def test_undetectable(tmp_path):
    path = tmp_path / "junk.txt"
    path.write_text("hello world\n")

    with pytest.raises(InstanceSyntaxError):
        parse_instance(str(path))


def test_loader_priority():
    fids = [f.fid for f in SingleFormats().formats]

    assert fids == ["canonical", "prins"]


def test_token_stream_comments():
    stream = TokenStream("inline", "# header\n1 2 # trailing\n\n3\n")

    assert stream.number("a") == 1
    assert stream.line == 2
    assert stream.number("b") == 2
    assert stream.line == 4
    assert stream.number("c") == 3
    stream.expect_end()


def test_instance_name():
    assert instance_name("sets/coordP111112.dat") == "P111112"
    assert instance_name("20-5-1a.txt") == "20-5-1a"


def test_serialize_reparses(tmp_path):
    inst = gen_tiny(5, 2, 9)
    path = tmp_path / "tiny.txt"

    write_instance(inst, str(path))
    again = parse_instance(str(path))

    assert again == inst
    assert "MATRIX" not in serialize_instance(inst)


def test_serialize_keeps_matrix(tmp_path):
    source = tmp_path / "matrix.txt"
    source.write_text(
        "CLRP 1\nNAME asym\n1 1 10 0 exact-real\n- - 10 3\n- - 4\nMATRIX\n0 2.5\n3.5 0\n"
    )
    inst = parse_instance(str(source))

    text = serialize_instance(inst)
    target = tmp_path / "again.txt"
    target.write_text(text)

    assert "MATRIX" in text
    assert parse_instance(str(target)) == inst
