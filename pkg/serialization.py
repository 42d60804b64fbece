"""
JSON / CSV / PPM formats for every artifact the command line writes.

Complex numbers are stored as [re, im]; the point at infinity as the string
"inf". CSV cells carry 17 significant digits. JSON numbers use the shortest
repr that reads back as the same double, which never needs more than 17
digits. Either way reading a file back gives bit-identical values.
"""
import colorsys
import csv
import io
import json
import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from PIL import Image

from analytic import INFINITY, AnalyticFn, ExtendedComplex, MoebiusTransform, TaylorSeries
from dynamics import ESCAPE_CODE, FixedPointRecord, MobiusTaxonomy, Orbit
from errors import HarmonicError, SchemaError
from hardy import BlockOperator, HardyVector
from harmonic import HarmonicMap, assemble
from linearization import LinearizationResult

logger = logging.getLogger(__name__)


def dumps(payload: Any) -> str:
    """Indented JSON text with a trailing newline."""
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


# ========== SCALARS ==========

def encode_complex(value: ExtendedComplex):
    """
    JSON form of an extended complex number.

    Args:
        value: Complex number or INFINITY

    Returns:
        [re, im] as floats, or "inf"
    """
    if value is INFINITY:
        return "inf"
    value = complex(value)
    return [value.real, value.imag]


def decode_complex(raw, where: str = "value") -> ExtendedComplex:
    """
    Inverse of encode_complex; a bare JSON number is read as a real value.

    Args:
        raw: Decoded JSON value
        where: Location used in error messages

    Returns:
        Complex number or INFINITY

    Raises:
        SchemaError: not a number, a [re, im] pair or "inf"
    """
    if raw == "inf":
        return INFINITY
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return complex(raw)
    if (
        isinstance(raw, list)
        and len(raw) == 2
        and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in raw)
    ):
        return complex(raw[0], raw[1])
    raise SchemaError(f"{where}: expected [re, im], got {raw!r}")


def _encode_array(values) -> List:
    return [encode_complex(v) for v in np.asarray(values).reshape(-1)]


def _decode_array(raw, where: str) -> np.ndarray:
    if not isinstance(raw, list):
        raise SchemaError(f"{where}: expected a list")
    values = [decode_complex(x, f"{where}[{i}]") for i, x in enumerate(raw)]
    if any(v is INFINITY for v in values):
        raise SchemaError(f"{where}: infinite entries are not allowed")
    return np.array(values, dtype=complex)


# ========== HARMONIC MAPS ==========

def encode_analytic(fn: AnalyticFn) -> Dict[str, Any]:
    """
    Tagged JSON object for one part.

    Args:
        fn: Truncated series or Möbius map

    Returns:
        {"type": "series", "coeffs": [...]} or {"type": "mobius", "matrix": [[..], [..]]}
    """
    if isinstance(fn, MoebiusTransform):
        return {"type": "mobius", "matrix": [_encode_array(row) for row in fn.matrix]}
    return {"type": "series", "coeffs": _encode_array(fn.coeffs)}


def map_to_dict(f: HarmonicMap) -> Dict[str, Any]:
    """
    JSON-ready dict of a harmonic map.

    Args:
        f: Map to encode

    Returns:
        Dict with parts "h" and "g" and "trunc" (None when both parts are Möbius)
    """
    orders = [p.trunc_order for p in (f.h, f.g) if isinstance(p, TaylorSeries)]
    return {
        "h": encode_analytic(f.h),
        "g": encode_analytic(f.g),
        "trunc": max(orders) if orders else None,
    }


def serialize_map(f: HarmonicMap) -> str:
    return dumps(map_to_dict(f))


def decode_analytic(raw, trunc: Optional[int], where: str) -> AnalyticFn:
    """
    Raises:
        SchemaError: unknown type, missing fields, or a coefficient count other than trunc + 1
    """
    if not isinstance(raw, dict):
        raise SchemaError(f"{where}: expected an object")
    kind = raw.get("type")
    try:
        if kind == "series":
            if "coeffs" not in raw:
                raise SchemaError(f"{where}: missing 'coeffs'")
            coeffs = _decode_array(raw["coeffs"], f"{where}.coeffs")
            if coeffs.size == 0:
                raise SchemaError(f"{where}.coeffs: empty")
            if trunc is not None and coeffs.size != trunc + 1:
                raise SchemaError(f"{where}.coeffs: expected {trunc + 1} entries, got {coeffs.size}")
            return TaylorSeries(coeffs)
        if kind == "mobius":
            rows = raw.get("matrix")
            if not isinstance(rows, list) or len(rows) != 2:
                raise SchemaError(f"{where}.matrix: expected two rows")
            matrix = np.array([_decode_array(row, f"{where}.matrix") for row in rows])
            if matrix.shape != (2, 2):
                raise SchemaError(f"{where}.matrix: expected a 2x2 matrix")
            return MoebiusTransform(MoebiusTransform(matrix).normalized())
    except SchemaError:
        raise
    except (HarmonicError, ValueError) as e:
        raise SchemaError(f"{where}: {e}") from e
    raise SchemaError(f"{where}: unknown type {kind!r} (expected 'series' or 'mobius')")


def map_from_dict(raw) -> HarmonicMap:
    """Inverse of map_to_dict; schema problems raise SchemaError."""
    if not isinstance(raw, dict):
        raise SchemaError("expected a JSON object")
    for key in ("h", "g"):
        if key not in raw:
            raise SchemaError(f"missing part {key!r}")
    trunc = raw.get("trunc")
    if trunc is not None and (not isinstance(trunc, int) or isinstance(trunc, bool) or trunc < 0):
        raise SchemaError(f"trunc: expected a nonnegative integer, got {trunc!r}")
    return assemble(decode_analytic(raw["h"], trunc, "h"), decode_analytic(raw["g"], trunc, "g"))


def _load_json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}") from e


def deserialize_map(text: str) -> HarmonicMap:
    """
    Raises:
        SchemaError: malformed JSON or a document outside the map schema
    """
    return map_from_dict(_load_json(text))


# ========== DYNAMICS ==========

def fixed_points_to_json(records: Sequence[FixedPointRecord]) -> str:
    """
    JSON array of induced fixed points.

    Args:
        records: Output of induced_fixed_points

    Returns:
        One object per record with mu, omega, the constant, both multipliers,
        their classes, the combined class and the residual
    """
    return dumps([
        {
            "mu": encode_complex(r.mu),
            "omega": encode_complex(r.omega),
            "point": encode_complex(r.constant.value()),
            "lambda": encode_complex(r.lam),
            "theta": encode_complex(r.theta),
            "lambda_class": r.lambda_class.value,
            "theta_class": r.theta_class.value,
            "class": r.classification.value,
            "residual": r.residual,
        }
        for r in records
    ])


def taxonomy_to_json(taxonomy: MobiusTaxonomy) -> str:
    return dumps({
        "case": taxonomy.case_label.value,
        "A": [_encode_array(row) for row in taxonomy.A.matrix],
        "B": [_encode_array(row) for row in taxonomy.B.matrix],
        "kind_a": taxonomy.kind_a.value,
        "kind_b": taxonomy.kind_b.value,
        "fp_a": [encode_complex(p) for p in taxonomy.fp_a],
        "fp_b": [encode_complex(p) for p in taxonomy.fp_b],
        "all_z_convergent": taxonomy.all_z_convergent,
    })


def _csv_number(x: float) -> str:
    return format(x, ".17g")


def orbit_to_csv(orbit: Orbit) -> str:
    """CSV with columns n,re,im, one row per recorded point."""
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["n", "re", "im"])
    for n, point in enumerate(orbit.points):
        writer.writerow([n, _csv_number(point.real), _csv_number(point.imag)])
    return buffer.getvalue()


# ========== LINEARIZATION ==========

def linearization_to_json(result: LinearizationResult) -> str:
    """Kind, multipliers, degrees, residuals and the conjugator coefficients."""
    return dumps({
        "kind": result.kind.value,
        "lambda": encode_complex(result.lambda_),
        "theta": encode_complex(result.theta),
        "p": result.p,
        "q": result.q,
        "residual": result.residual,
        "h_residual": result.h_residual,
        "g_residual": result.g_residual,
        "phi": {
            "h_coeffs": _encode_array(result.phi.h.coeffs),
            "g_coeffs": _encode_array(result.phi.g.coeffs),
        },
    })


# ========== OPERATORS AND VECTORS ==========

def operator_to_json(L: BlockOperator) -> str:
    """Both blocks as row lists of [re, im] entries, with the truncation order."""
    return dumps({
        "trunc": L.trunc_order,
        "A": [_encode_array(row) for row in L.A],
        "B": [_encode_array(row) for row in L.B],
    })


def operator_from_json(text: str) -> BlockOperator:
    """
    Raises:
        SchemaError: missing blocks or blocks that do not match `trunc`
    """
    raw = _load_json(text)
    if not isinstance(raw, dict) or "A" not in raw or "B" not in raw:
        raise SchemaError("operator needs 'A' and 'B' blocks")
    blocks = []
    for key in ("A", "B"):
        rows = raw[key]
        if not isinstance(rows, list) or not rows:
            raise SchemaError(f"{key}: expected a list of rows")
        block = [_decode_array(row, f"{key}[{i}]") for i, row in enumerate(rows)]
        if any(row.size != len(block) for row in block):
            raise SchemaError(f"{key}: block must be square")
        blocks.append(np.array(block))
    trunc = raw.get("trunc")
    if trunc is not None and blocks[0].shape[0] != trunc + 1:
        raise SchemaError(f"trunc {trunc} does not match a block of size {blocks[0].shape[0]}")
    try:
        return BlockOperator(*blocks)
    except HarmonicError as e:
        raise SchemaError(str(e)) from e


def operator_to_csv(L: BlockOperator) -> str:
    """One CSV row per matrix row: block name, row index, then re,im interleaved."""
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    n = L.trunc_order + 1
    header = ["block", "row"]
    for k in range(n):
        header += [f"re{k}", f"im{k}"]
    writer.writerow(header)
    for name, block in (("A", L.A), ("B", L.B)):
        for i, row in enumerate(block):
            cells: List[Any] = [name, i]
            for value in row:
                cells += [_csv_number(value.real), _csv_number(value.imag)]
            writer.writerow(cells)
    return buffer.getvalue()


def vector_to_json(u: HardyVector) -> str:
    return dumps({"trunc": u.trunc_order, "a": _encode_array(u.a), "b": _encode_array(u.b)})


# ========== BASIN IMAGES ==========

def basin_palette(count: int) -> List[Tuple[int, int, int]]:
    """Distinct saturated colors, one per fixed-point index (golden-ratio hue steps)."""
    colors = []
    for k in range(count):
        hue = (0.61803398875 * k) % 1.0
        r, g, b = colorsys.hsv_to_rgb(hue, 0.75, 0.95)
        colors.append((int(round(r * 255)), int(round(g * 255)), int(round(b * 255))))
    return colors


def basin_image(grid: np.ndarray, palette: Optional[Sequence[Tuple[int, int, int]]] = None) -> Image.Image:
    """RGB image of a basin grid; escape codes are black."""
    grid = np.asarray(grid, dtype=int)
    height, width = grid.shape
    count = int(grid.max()) + 1 if grid.size and grid.max() >= 0 else 0
    palette = list(palette) if palette is not None else basin_palette(count)
    lut = np.zeros((len(palette) + 1, 3), dtype=np.uint8)
    if palette:
        lut[1:] = np.asarray(palette, dtype=np.uint8)
    pixels = lut[np.where(grid == ESCAPE_CODE, 0, grid + 1)]
    return Image.fromarray(pixels.reshape(height, width, 3))


def basin_ppm_bytes(grid: np.ndarray) -> bytes:
    """Binary PPM (P6) of a basin grid."""
    buffer = io.BytesIO()
    basin_image(grid).save(buffer, format="PPM")
    return buffer.getvalue()
