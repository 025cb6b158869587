import numpy as np
import pytest

from rank_knockoffs.data_io import (
    format_value, ingest_csv, read_key_values, read_numeric_csv, write_csv, write_key_values,
)
from rank_knockoffs.errors import InvalidData, ParseError
from rank_knockoffs.simulate import Family


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_small_matrix(tmp_path):
    x = _write(tmp_path / "x.csv", "1,2\n3,4\n5,6\n")
    y = _write(tmp_path / "y.csv", "1\n0\n1\n")
    data = ingest_csv(x, y)
    np.testing.assert_array_equal(data.x, [[1, 2], [3, 4], [5, 6]])
    np.testing.assert_array_equal(data.y, [1, 0, 1])
    assert data.column_names == ("x1", "x2") and data.true_support is None


def test_header_and_blank_lines(tmp_path):
    x = _write(tmp_path / "x.csv", "gene_a, gene_b\n1,2\n\n3,4\n")
    matrix, header, lines = read_numeric_csv(x)
    assert header == ("gene_a", "gene_b") and lines == [2, 4]
    assert ingest_csv(x).column_names == ("gene_a", "gene_b")


def test_bad_cell_reports_line(tmp_path):
    text = "".join(f"{i},{i}\n" for i in range(6)) + "7,abc\n"
    with pytest.raises(ParseError) as info:
        read_numeric_csv(_write(tmp_path / "x.csv", text))
    assert info.value.line == 7 and "line 7" in str(info.value)


def test_ragged_and_nonfinite(tmp_path):
    with pytest.raises(ParseError) as info:
        read_numeric_csv(_write(tmp_path / "a.csv", "1,2\n3\n"))
    assert info.value.line == 2
    with pytest.raises(ParseError):
        read_numeric_csv(_write(tmp_path / "b.csv", "1,nan\n"))
    with pytest.raises(ParseError):
        read_numeric_csv(_write(tmp_path / "c.csv", "a,b\n"))


def test_row_mismatch_and_wide_response(tmp_path):
    x = _write(tmp_path / "x.csv", "1,2\n3,4\n5,6\n")
    with pytest.raises(ParseError) as info:
        ingest_csv(x, _write(tmp_path / "y.csv", "1\n2\n"))
    assert info.value.line == 3
    with pytest.raises(ParseError):
        ingest_csv(x, _write(tmp_path / "y2.csv", "1,1\n2,2\n3,3\n"))


def test_log_transform(tmp_path):
    x = _write(tmp_path / "x.csv", "1,1\n1,1\n")
    y = _write(tmp_path / "y.csv", "1\n1\n")
    data = ingest_csv(x, y, log_transform=True)
    assert np.all(data.x == 0) and np.all(data.y == 0)
    with pytest.raises(InvalidData):
        ingest_csv(_write(tmp_path / "z.csv", "1,0\n"), log_transform=True)


def test_format_value_round_trips():
    for v in (0.1, 1 / 3, 1e-300, -2.5):
        assert float(format_value(v)) == v
    assert format_value(None) == "" and format_value(True) == "true"
    assert format_value(np.float64(0.5)) == "0.5" and format_value(Family.SINGLE_INDEX) == "sim"


def test_key_values(tmp_path):
    path = _write(tmp_path / "c.txt", "# comment\nReps = 10\nfix-truth: true  # inline\n\n")
    assert read_key_values(path) == {"reps": "10", "fix_truth": "true"}
    with pytest.raises(ParseError) as info:
        read_key_values(_write(tmp_path / "bad.txt", "reps 10\n"))
    assert info.value.line == 1
    write_key_values(tmp_path / "out.txt", {"q": 0.2, "plus": True})
    assert read_key_values(tmp_path / "out.txt") == {"q": "0.2", "plus": "true"}


def test_csv_quoting(tmp_path):
    write_csv(tmp_path / "o.csv", ("name", "v"), [["a,b", "1"]])
    assert (tmp_path / "o.csv").read_bytes() == b'name,v\r\n"a,b",1\r\n'
