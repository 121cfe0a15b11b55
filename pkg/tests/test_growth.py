import pytest

from reglab import GrowthFunction, InputError, parse_growth
from reglab.growth import read_table


def test_presets():
    assert GrowthFunction.linear()(0) == 1
    assert GrowthFunction.linear()(3.5) == 4.5
    assert GrowthFunction.linear(8, 8)(1) == 16
    assert GrowthFunction.polynomial(2)(3) == 16
    assert GrowthFunction.exponential(0.5)(1) == 4 / 0.125


def test_table_is_step_interpolated(tmp_path):
    path = tmp_path / "f.txt"
    path.write_text("# M F(M)\n0 2\n1.5 3\n\n4 10\n")
    f = read_table(path)
    assert [f(v) for v in (0, 1, 1.5, 3.9, 4, 100)] == [2, 2, 3, 3, 10, 10]
    assert parse_growth(f"table:{path}")(2) == 3


@pytest.mark.parametrize("text", ["0 3\n1 2\n", "0 1 2\n", "0 x\n", "1 1\n0 2\n", "0 0\n", ""])
def test_bad_tables(tmp_path, text):
    path = tmp_path / "f.txt"
    path.write_text(text)
    with pytest.raises(InputError):
        read_table(path)


def test_parse_growth():
    assert parse_growth("linear") == GrowthFunction.linear()
    assert parse_growth("poly:3")(1) == 8
    assert parse_growth("paper-exp", 0.25)(0) == 64
    for bad in ("cubic", "poly:x", "poly:-1", "table:/nonexistent/file"):
        with pytest.raises(InputError):
            parse_growth(bad, 0.25)
    with pytest.raises(InputError):
        parse_growth("paper-exp")


def test_negative_argument_rejected():
    with pytest.raises(InputError):
        GrowthFunction.linear()(-1)


def test_monotone():
    assert GrowthFunction.polynomial(1.5).is_monotone_on(range(20))
    assert GrowthFunction.exponential(0.3).is_monotone_on([0, 0.5, 1, 7])
