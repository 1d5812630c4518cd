"""Tests for data file and constraint file readers."""
import pytest
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).parent.parent))

from weber.config import BASE_DIR, DATA_DIR
from weber.exceptions import InvalidParameterError, ParseError
from weber.services.loaders import load_constraints, load_points, load_points_csv, load_points_tsplib, parse_constraints

EIL76_HEAD = """NAME : tiny
COMMENT : three nodes
TYPE : TSP
DIMENSION : 3
EDGE_WEIGHT_TYPE : EUC_2D
NODE_COORD_SECTION
1 22 22
2 36 26
3 21 45
EOF
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestCsv:
    """Test CSV demand-point files."""

    def test_shipped_triangle(self):
        """The triangle fixture loads as a 3 x 2 matrix."""
        A = load_points_csv(DATA_DIR / 'triangle.csv')
        assert np.array_equal(A, [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])

    def test_header_detected(self):
        """A non-numeric first row is skipped as a header."""
        A = load_points_csv(DATA_DIR / 'square.csv')
        assert A.shape == (4, 2)
        assert np.array_equal(A[2], [1.0, 1.0])

    def test_whitespace_and_blank_lines(self, tmp_path):
        """Spaces after commas and blank lines are tolerated."""
        A = load_points_csv(write(tmp_path, 'a.csv', "1, 2\n\n3, 4.5\n"))
        assert np.array_equal(A, [[1.0, 2.0], [3.0, 4.5]])

    def test_short_row(self, tmp_path):
        """A row with too few cells reports its row number."""
        with pytest.raises(ParseError) as info:
            load_points_csv(write(tmp_path, 'a.csv', "1,2\n3,4\n5\n"))
        assert info.value.row == 3

    def test_long_row(self, tmp_path):
        """A row with too many cells reports its row number."""
        with pytest.raises(ParseError) as info:
            load_points_csv(write(tmp_path, 'a.csv', "1,2\n3,4,5\n"))
        assert info.value.row == 2

    def test_non_numeric_cell(self, tmp_path):
        """A non-numeric cell reports row and column."""
        with pytest.raises(ParseError) as info:
            load_points_csv(write(tmp_path, 'a.csv', "x,y\n1,2\n3,abc\n"))
        assert info.value.row == 3
        assert info.value.column == 2
        assert 'abc' in str(info.value)

    def test_blank_cell(self, tmp_path):
        """An empty cell between commas is non-numeric."""
        with pytest.raises(ParseError) as info:
            load_points_csv(write(tmp_path, 'a.csv', "1,2\n3,\n"))
        assert info.value.column == 2

    def test_empty_file(self, tmp_path):
        """An empty file is a parse error."""
        with pytest.raises(ParseError, match='Empty'):
            load_points_csv(write(tmp_path, 'a.csv', ""))

    def test_header_only(self, tmp_path):
        """A header with no data rows is a parse error."""
        with pytest.raises(ParseError, match='Empty'):
            load_points_csv(write(tmp_path, 'a.csv', "x,y\n"))

    def test_missing_file(self, tmp_path):
        """A missing file is a parse error naming the path."""
        with pytest.raises(ParseError) as info:
            load_points_csv(tmp_path / 'nope.csv')
        assert info.value.path.endswith('nope.csv')

    def test_non_finite(self, tmp_path):
        """nan and inf cells are rejected."""
        with pytest.raises(ParseError, match='Non-finite'):
            load_points_csv(write(tmp_path, 'a.csv', "1,2\n3,inf\n"))


class TestTsplib:
    """Test TSPLIB node coordinate files."""

    def test_minimal_file(self, tmp_path):
        """Node indices are dropped and coordinates kept in order."""
        A = load_points_tsplib(write(tmp_path, 'tiny.tsp', EIL76_HEAD))
        assert np.array_equal(A, [[22.0, 22.0], [36.0, 26.0], [21.0, 45.0]])

    def test_dispatch(self, tmp_path):
        """load_points routes by format name."""
        A = load_points(write(tmp_path, 'tiny.tsp', EIL76_HEAD), 'tsplib')
        assert A.shape == (3, 2)
        with pytest.raises(InvalidParameterError):
            load_points(tmp_path / 'tiny.tsp', 'xlsx')

    def test_missing_section(self, tmp_path):
        """No NODE_COORD_SECTION is a parse error."""
        with pytest.raises(ParseError, match='NODE_COORD_SECTION'):
            load_points_tsplib(write(tmp_path, 'a.tsp', "NAME : x\nDIMENSION : 1\nEOF\n"))

    def test_missing_eof(self, tmp_path):
        """A truncated file without EOF is a parse error."""
        with pytest.raises(ParseError, match='EOF'):
            load_points_tsplib(write(tmp_path, 'a.tsp', EIL76_HEAD.replace('EOF\n', '')))

    def test_dimension_mismatch(self, tmp_path):
        """DIMENSION must match the number of coordinate lines."""
        with pytest.raises(ParseError, match='DIMENSION'):
            load_points_tsplib(write(tmp_path, 'a.tsp', EIL76_HEAD.replace('DIMENSION : 3', 'DIMENSION : 4')))

    def test_bad_coordinate_line(self, tmp_path):
        """A malformed coordinate line reports its line number."""
        with pytest.raises(ParseError) as info:
            load_points_tsplib(write(tmp_path, 'a.tsp', EIL76_HEAD.replace('2 36 26', '2 36 x')))
        assert info.value.row == 8


class TestConstraints:
    """Test YAML constraint files."""

    def test_shipped_eil76_constraints(self):
        """The EIL76 file gives two centers with three regions each and a params block."""
        constraints, params = load_constraints(BASE_DIR / 'presets' / 'eil76_constraints.yaml')
        assert len(constraints) == 2
        assert [len(c) for c in constraints] == [3, 3]
        assert constraints[0][2].kind == 'box'
        assert params['sigma'] == 100

    def test_bad_literal_reports_line(self, tmp_path):
        """An unknown region kind reports its line and field path."""
        path = write(tmp_path, 'c.yaml', 'constraints:\n  - ["ball 0 0 1"]\n  - ["circle 1 1 1"]\n')
        with pytest.raises(ParseError) as info:
            load_constraints(path)
        assert info.value.row == 3
        assert info.value.column == 'constraints/1/0'

    def test_schema_violation_reports_path(self, tmp_path):
        """A non-string literal is rejected with its field path."""
        path = write(tmp_path, 'c.yaml', 'constraints:\n  - [1]\n')
        with pytest.raises(ParseError) as info:
            load_constraints(path)
        assert info.value.column == 'constraints/0/0'
        assert info.value.row == 2

    def test_unknown_key(self, tmp_path):
        """Unknown top-level keys are rejected."""
        with pytest.raises(ParseError):
            load_constraints(write(tmp_path, 'c.yaml', 'constraint: []\n'))

    def test_invalid_yaml(self, tmp_path):
        """Unparseable YAML is a parse error."""
        with pytest.raises(ParseError, match='Invalid YAML'):
            load_constraints(write(tmp_path, 'c.yaml', 'constraints: [\n'))

    def test_parse_in_memory_document(self):
        """Request bodies go through the same validation."""
        constraints, params = parse_constraints({'constraints': [['box 0 0 1 1']]})
        assert constraints[0][0].hi == (1.0, 1.0)
        assert params == {}


class TestShippedDatasets:
    """Test downloaded datasets when present."""

    @pytest.mark.parametrize('name,shape', [
        ('wine.csv', (178, 13)), ('iris.csv', (150, 4)), ('pima.csv', (768, 8)),
        ('ionosphere.csv', (351, 34)), ('uscity.csv', (1217, 2)),
    ])
    def test_csv_shapes(self, name, shape):
        """Downloaded CSV datasets have the documented shapes."""
        path = DATA_DIR / name
        if not path.exists():
            pytest.skip(f"{name} not downloaded")
        assert load_points_csv(path).shape == shape

    def test_eil76(self):
        """EIL76 has 76 two-dimensional nodes."""
        path = DATA_DIR / 'eil76.tsp'
        if not path.exists():
            pytest.skip("eil76.tsp not downloaded")
        assert load_points_tsplib(path).shape == (76, 2)
