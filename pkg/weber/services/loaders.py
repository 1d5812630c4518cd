"""Readers for demand-point files and constraint/run configuration files.

Demand points come as CSV (optional header, auto-detected) or as the
EUC_2D subset of TSPLIB. Constraint files are YAML:

    constraints:
      - ["ball 30 40 7", "box 30 30 40 40"]
      - ["ball 35 20 7", "ball 45 20 7"]
    params:
      sigma: 100

Errors are raised as ParseError with the file path and row/column (or the
field path for YAML documents).
"""
import re
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import jsonschema
import numpy as np
import pandas as pd
import yaml

from weber.config import get_logger
from weber.exceptions import InvalidParameterError, ParseError
from weber.services.sets import ConvexRegion

logger = get_logger()

PathLike = Union[str, Path]

CONSTRAINTS_SCHEMA = {
    'type': 'object',
    'properties': {
        'constraints': {
            'type': 'array',
            'items': {'type': 'array', 'items': {'type': 'string', 'minLength': 1}},
        },
        'params': {'type': 'object'},
        'k': {'type': 'integer', 'minimum': 1},
    },
    'additionalProperties': False,
}


# =============================================================================
# CSV
# =============================================================================

def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_points_csv(path: PathLike) -> np.ndarray:
    """Read an m x n demand matrix from a comma-separated file.

    A first row containing any non-numeric cell is taken as a header.

    Raises:
        ParseError: Missing or empty file, ragged rows, non-numeric cells
    """
    path = Path(path)
    if not path.exists():
        raise ParseError("File not found", path=str(path))
    try:
        frame = pd.read_csv(path, header=None, dtype=str, keep_default_na=False,
                            skip_blank_lines=True, skipinitialspace=True)
    except pd.errors.EmptyDataError as e:
        raise ParseError("Empty file", path=str(path)) from e
    except pd.errors.ParserError as e:
        # pandas reports "Expected N fields in line L, saw M"
        match = re.search(r'line (\d+)', str(e))
        raise ParseError(f"Ragged rows: {e}", path=str(path),
                         row=int(match.group(1)) if match else None) from e

    cells = frame.to_numpy()
    offset = 1
    # short rows are padded with NaN by pandas; present-but-blank cells stay ''
    if len(cells) and not all(_is_number(c) for c in cells[0] if isinstance(c, str)):
        cells = cells[1:]
        offset = 2
    if len(cells) == 0:
        raise ParseError("Empty file", path=str(path))

    values = np.empty(cells.shape, dtype=float)
    width = cells.shape[1]
    for r, row in enumerate(cells):
        filled = [c for c in row if isinstance(c, str)]
        if len(filled) != width:
            raise ParseError(f"Expected {width} columns, found {len(filled)}", path=str(path), row=r + offset)
        for c, cell in enumerate(row):
            try:
                values[r, c] = float(cell)
            except ValueError:
                raise ParseError(f"Non-numeric cell '{cell}'", path=str(path), row=r + offset, column=c + 1)

    if not np.all(np.isfinite(values)):
        raise ParseError("Non-finite value in data", path=str(path))
    logger.info("points_loaded", path=str(path), format='csv', m=values.shape[0], n=values.shape[1])
    return values


# =============================================================================
# TSPLIB
# =============================================================================

def load_points_tsplib(path: PathLike) -> np.ndarray:
    """Read node coordinates from a TSPLIB file; node indices are discarded.

    Raises:
        ParseError: Missing NODE_COORD_SECTION or EOF, malformed coordinate
            lines, or a DIMENSION that does not match the node count
    """
    path = Path(path)
    if not path.exists():
        raise ParseError("File not found", path=str(path))
    lines = path.read_text().splitlines()

    header: Dict[str, str] = {}
    start: Optional[int] = None
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if stripped.upper().startswith('NODE_COORD_SECTION'):
            start = lineno
            break
        if ':' in stripped:
            key, value = stripped.split(':', 1)
            header[key.strip().upper()] = value.strip()
    if start is None:
        raise ParseError("Missing NODE_COORD_SECTION", path=str(path))

    coords: List[List[float]] = []
    saw_eof = False
    for lineno, line in enumerate(lines[start:], start=start + 1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.upper() == 'EOF':
            saw_eof = True
            break
        parts = stripped.split()
        if len(parts) < 3:
            raise ParseError("Coordinate line needs an index and two values", path=str(path), row=lineno)
        try:
            coords.append([float(v) for v in parts[1:]])
        except ValueError:
            raise ParseError(f"Non-numeric coordinate in '{stripped}'", path=str(path), row=lineno)
    if not saw_eof:
        raise ParseError("Missing EOF marker", path=str(path))
    if not coords:
        raise ParseError("NODE_COORD_SECTION is empty", path=str(path))
    if len({len(c) for c in coords}) != 1:
        raise ParseError("Coordinate lines have different dimensions", path=str(path))

    edge_type = header.get('EDGE_WEIGHT_TYPE')
    if edge_type and edge_type != 'EUC_2D':
        logger.warning("tsplib_edge_type", path=str(path), edge_weight_type=edge_type)
    if 'DIMENSION' in header:
        try:
            dimension = int(header['DIMENSION'])
        except ValueError:
            raise ParseError(f"Invalid DIMENSION '{header['DIMENSION']}'", path=str(path))
        if dimension != len(coords):
            raise ParseError(f"DIMENSION is {dimension} but {len(coords)} nodes were read", path=str(path))

    values = np.array(coords, dtype=float)
    logger.info("points_loaded", path=str(path), format='tsplib', m=values.shape[0], n=values.shape[1])
    return values


def load_points(path: PathLike, data_format: str = 'csv') -> np.ndarray:
    if data_format == 'csv':
        return load_points_csv(path)
    if data_format == 'tsplib':
        return load_points_tsplib(path)
    raise InvalidParameterError(f"Unknown data format: {data_format}")


# =============================================================================
# YAML CONFIG
# =============================================================================

def _node_line(root: Optional[yaml.Node], field_path: List[Any]) -> Optional[int]:
    """1-based source line of the YAML node at field_path, when resolvable."""
    node = root
    for key in field_path:
        if isinstance(node, yaml.MappingNode):
            node = next((v for k, v in node.value if k.value == key), None)
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
        else:
            node = None
        if node is None:
            return None
    return node.start_mark.line + 1 if node is not None else None


def parse_constraints(document: Dict[str, Any], source: str = '<request>',
                      root: Optional[yaml.Node] = None) -> Tuple[Tuple[Tuple[ConvexRegion, ...], ...], Dict[str, Any]]:
    """Validate a constraints document and build the per-center regions.

    Returns:
        (constraints, params) where params is the optional `params:` block
    """
    validator = jsonschema.Draft7Validator(CONSTRAINTS_SCHEMA)
    errors = sorted(validator.iter_errors(document), key=lambda e: list(e.path))
    if errors:
        error = errors[0]
        field_path = list(error.path)
        raise ParseError(error.message, path=source, row=_node_line(root, field_path),
                         column='/'.join(str(p) for p in field_path) or None)

    constraints = []
    for ell, literals in enumerate(document.get('constraints', [])):
        regions = []
        for j, literal in enumerate(literals):
            try:
                regions.append(ConvexRegion.from_literal(literal))
            except InvalidParameterError as e:
                raise ParseError(str(e), path=source, row=_node_line(root, ['constraints', ell, j]),
                                 column=f"constraints/{ell}/{j}") from e
        constraints.append(tuple(regions))
    return tuple(constraints), dict(document.get('params') or {})


def load_constraints(path: PathLike):
    """Read a YAML constraints file.

    Returns:
        (constraints, params)

    Raises:
        ParseError: Unreadable YAML, schema violations, bad region literals
    """
    path = Path(path)
    if not path.exists():
        raise ParseError("File not found", path=str(path))
    text = path.read_text()
    try:
        root = yaml.compose(text)
        document = yaml.safe_load(text) or {}
    except yaml.YAMLError as e:
        mark = getattr(e, 'problem_mark', None)
        raise ParseError(f"Invalid YAML: {getattr(e, 'problem', e)}", path=str(path),
                         row=mark.line + 1 if mark else None) from e
    if not isinstance(document, dict):
        raise ParseError("Top level must be a mapping", path=str(path))

    constraints, params = parse_constraints(document, source=str(path), root=root)
    logger.info("constraints_loaded", path=str(path), centers=len(constraints),
                q=len(constraints[0]) if constraints else 0)
    return constraints, params
