"""
Photometric File Input and Output

This module reads IESNA LM-63 (.ies) and EULUMDAT (.ldt) files into a
PhotometricFile, reduces one C-plane to the 91 samples at 0..90 degrees
that the optimizers consume, and writes single-plane .ies files.

Only the LM-63 subset needed for candela-per-angle data is supported:
TILT=NONE, photometric type and units read but not interpreted, candela
multiplier applied.
"""

import io
import re
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ledfit.errors import ExtractionError, LedFitError, PhotometryParseError
from ledfit.state import IntensitySamples, PhotometricFile

# Lamp count, lumens/lamp, multiplier, #vertical, #horizontal, photometric
# type, units, width, length, height, ballast factor, future use, watts.
NUMERIC_BLOCK = 13
MIN_POLAR = 0
MAX_POLAR = 90

_SPLIT = re.compile(r"[\s,]+")
# User keyword (LM-63 reserves the leading underscore) carrying the model scale.
IMAX_KEYWORD = "[_IMAX]"

Token = Tuple[str, int]


def _tokens(lines: Sequence[str], first_line_no: int) -> List[Token]:
    tokens = []
    for offset, line in enumerate(lines):
        for tok in _SPLIT.split(line.strip()):
            if tok:
                tokens.append((tok, first_line_no + offset))
    return tokens


def _number(token: Token, what: str) -> float:
    text, line_no = token
    try:
        return float(text)
    except ValueError:
        raise PhotometryParseError(f"non-numeric {what} {text!r}", line_no)


def _count(token: Token, what: str) -> int:
    value = _number(token, what)
    if value != int(value) or value < 1:
        raise PhotometryParseError(f"{what} must be a positive integer, got {token[0]!r}", token[1])
    return int(value)


def parse_ies(text: str) -> PhotometricFile:
    """
    Parse an IESNA LM-63 photometric file.

    Args:
        text: File contents

    Returns:
        PhotometricFile with candela already multiplied by the file's
        candela multiplier

    Raises:
        PhotometryParseError: On a missing or unsupported TILT line, a
            malformed numeric block, a count mismatch or negative candela
    """
    lines = text.splitlines()
    metadata: List[str] = []
    tilt_index = None
    for index, line in enumerate(lines):
        stripped = line.strip()
        if stripped.upper().startswith("TILT"):
            tilt_index = index
            break
        if stripped:
            metadata.append(stripped)
    if tilt_index is None:
        raise PhotometryParseError("missing TILT= line")

    tilt = lines[tilt_index].split("=", 1)[-1].strip().upper()
    if tilt != "NONE":
        raise PhotometryParseError(f"unsupported TILT={tilt} (only TILT=NONE)", tilt_index + 1)

    tokens = _tokens(lines[tilt_index + 1 :], tilt_index + 2)
    if len(tokens) < NUMERIC_BLOCK:
        line_no = tokens[-1][1] if tokens else tilt_index + 1
        raise PhotometryParseError(
            f"numeric block needs {NUMERIC_BLOCK} values, found {len(tokens)}", line_no
        )

    multiplier = _number(tokens[2], "candela multiplier")
    n_vertical = _count(tokens[3], "number of vertical angles")
    n_horizontal = _count(tokens[4], "number of horizontal angles")
    for token in tokens[:NUMERIC_BLOCK]:
        _number(token, "header value")

    body = tokens[NUMERIC_BLOCK:]
    expected = n_vertical + n_horizontal + n_vertical * n_horizontal
    if len(body) < expected:
        line_no = body[-1][1] if body else tokens[NUMERIC_BLOCK - 1][1]
        raise PhotometryParseError(
            f"declared {n_vertical} vertical x {n_horizontal} horizontal angles need "
            f"{expected} values, found {len(body)}",
            line_no,
        )
    if len(body) > expected:
        raise PhotometryParseError(
            f"{len(body) - expected} unexpected trailing values", body[expected][1]
        )

    vertical = np.array([_number(t, "vertical angle") for t in body[:n_vertical]])
    horizontal = np.array(
        [_number(t, "horizontal angle") for t in body[n_vertical : n_vertical + n_horizontal]]
    )
    candela_tokens = body[n_vertical + n_horizontal :]
    candela = np.empty(len(candela_tokens))
    for index, token in enumerate(candela_tokens):
        value = _number(token, "candela value")
        if value < 0:
            raise PhotometryParseError(f"negative candela value {token[0]}", token[1])
        candela[index] = value

    if np.any(np.diff(vertical) <= 0):
        raise PhotometryParseError(
            "vertical angles must be strictly increasing", body[n_vertical - 1][1]
        )

    return PhotometricFile(
        c_plane_angles=horizontal,
        polar_angles=vertical,
        candela_grid=candela.reshape(n_horizontal, n_vertical) * multiplier,
        metadata=metadata,
    )


def _format_value(value: float, decimals: Optional[int]) -> str:
    if decimals is None:
        return repr(float(value))
    return f"{value:.{decimals}f}"


def _wrap(values: Sequence[float], decimals: Optional[int], per_line: int = 10) -> List[str]:
    return [
        " ".join(_format_value(v, decimals) for v in values[i : i + per_line])
        for i in range(0, len(values), per_line)
    ]


def format_ies(file: PhotometricFile, decimals: Optional[int] = None) -> str:
    """
    Serialize a PhotometricFile as LM-63 text.

    Args:
        file: Photometric data
        decimals: Fixed decimals for candela values, or None for full
            round-trip precision

    Returns:
        File contents ending with a newline
    """
    header = [line for line in file.metadata if not line.upper().startswith("IESNA")]
    first = next(
        (line for line in file.metadata if line.upper().startswith("IESNA")), "IESNA:LM-63-2002"
    )
    n_vertical = file.polar_angles.size
    n_horizontal = file.c_plane_angles.size

    lines = [first, *header, "TILT=NONE"]
    lines.append(f"1 -1 1.0 {n_vertical} {n_horizontal} 1 2 0 0 0")
    lines.append("1.0 1.0 0")
    lines.extend(_wrap(file.polar_angles, None))
    lines.extend(_wrap(file.c_plane_angles, None))
    for row in file.candela_grid:
        lines.extend(_wrap(row, decimals))
    return "\n".join(lines) + "\n"


def write_ies(
    samples: IntensitySamples,
    decimals: Optional[int] = None,
    metadata: Optional[List[str]] = None,
) -> str:
    """
    Emit a single-plane .ies file for ``samples``.

    Polar angles continue in 1 degree steps up to 180 with candela 0, so
    the upper hemisphere is dark.

    Args:
        samples: Intensity samples (normally 0..90 degrees)
        decimals: Fixed decimals for candela values, or None for full precision
        metadata: Keyword lines such as "[TEST] ..." placed before TILT

    Returns:
        File contents
    """
    start = int(np.floor(samples.phi[-1])) + 1
    upper = np.arange(start, 181, dtype=float)
    polar = np.concatenate([samples.phi, upper])
    candela = np.concatenate([samples.candela, np.zeros(upper.size)])
    file = PhotometricFile(
        c_plane_angles=np.array([0.0]),
        polar_angles=polar,
        candela_grid=candela[None, :],
        metadata=[
            "IESNA:LM-63-2002",
            *(metadata or []),
            f"{IMAX_KEYWORD} {samples.i_max!r}",
        ],
    )
    return format_ies(file, decimals)


def extract_plane(
    file: PhotometricFile,
    plane_index: int = 0,
    average: bool = False,
) -> IntensitySamples:
    """
    Reduce one C-plane to the 91 samples at integer angles 0..90.

    Args:
        file: Parsed photometric file
        plane_index: C-plane to use
        average: Average all C-planes instead of picking one

    Returns:
        IntensitySamples at phi = 0, 1, ..., 90

    Raises:
        ExtractionError: If the plane index is invalid or an integer
            angle between 0 and 90 has no sample
    """
    planes = file.candela_grid.shape[0]
    if not average and not 0 <= plane_index < planes:
        raise ExtractionError(
            message=f"plane index {plane_index} out of range (file has {planes} planes)"
        )

    wanted = np.arange(MIN_POLAR, MAX_POLAR + 1, dtype=float)
    present = np.isin(wanted, file.polar_angles)
    if not present.all():
        raise ExtractionError(missing=wanted[~present].tolist())

    columns = np.searchsorted(file.polar_angles, wanted)
    row = file.candela_grid.mean(axis=0) if average else file.candela_grid[plane_index]
    return IntensitySamples(wanted, row[columns], declared_i_max(file))


def declared_i_max(file: PhotometricFile) -> Optional[float]:
    """The intensity scale stored in the file's keywords, if any."""
    for line in file.metadata:
        if line.upper().startswith(IMAX_KEYWORD):
            try:
                return float(line[len(IMAX_KEYWORD) :].strip())
            except ValueError:
                raise PhotometryParseError(f"invalid {IMAX_KEYWORD} value in {line!r}")
    return None


def _ldt_lines(text: str) -> List[str]:
    return [line.strip() for line in text.splitlines()]


def _ldt_float(lines: List[str], index: int, what: str) -> float:
    if index >= len(lines):
        raise PhotometryParseError(f"unexpected end of file reading {what}", index + 1)
    try:
        return float(lines[index].replace(",", "."))
    except ValueError:
        raise PhotometryParseError(f"invalid {what} {lines[index]!r}", index + 1)


def parse_ldt(text: str) -> PhotometricFile:
    """
    Parse a EULUMDAT (.ldt) file.

    The stored C-planes follow the symmetry indicator: 0 all planes,
    1 a single plane, 2 C0..C180, 3 C90..C270, 4 C0..C90. Intensities are
    multiplied by the conversion factor.

    Raises:
        PhotometryParseError: On malformed or truncated content
    """
    lines = _ldt_lines(text)
    if len(lines) < 26:
        raise PhotometryParseError("EULUMDAT files need at least 26 header lines")

    symmetry = int(_ldt_float(lines, 2, "symmetry indicator"))
    if symmetry not in (0, 1, 2, 3, 4):
        raise PhotometryParseError(f"invalid symmetry indicator {symmetry}", 3)
    n_planes = int(_ldt_float(lines, 3, "number of C-planes"))
    n_gamma = int(_ldt_float(lines, 5, "number of intensities per plane"))
    if n_planes < 1 or n_gamma < 1:
        raise PhotometryParseError("plane and intensity counts must be positive", 4)
    factor = _ldt_float(lines, 23, "conversion factor")
    lamp_sets = abs(int(_ldt_float(lines, 25, "number of lamp sets")))

    index = 26 + 6 * lamp_sets + 10
    c_angles = np.array(
        [_ldt_float(lines, index + i, "C-plane angle") for i in range(n_planes)]
    )
    index += n_planes
    gamma = np.array([_ldt_float(lines, index + i, "gamma angle") for i in range(n_gamma)])
    index += n_gamma

    if symmetry == 1:
        stored = c_angles[:1]
    elif symmetry == 2:
        stored = c_angles[(c_angles >= 0) & (c_angles <= 180)]
    elif symmetry == 3:
        stored = c_angles[(c_angles >= 90) & (c_angles <= 270)]
    elif symmetry == 4:
        stored = c_angles[(c_angles >= 0) & (c_angles <= 90)]
    else:
        stored = c_angles

    expected = stored.size * n_gamma
    # Decimal commas are common in EULUMDAT files.
    tokens = [
        (tok, index + 1 + offset)
        for offset, line in enumerate(lines[index:])
        for tok in line.replace(",", ".").split()
    ]
    if len(tokens) < expected:
        raise PhotometryParseError(
            f"expected {expected} intensity values, found {len(tokens)}",
            tokens[-1][1] if tokens else index,
        )
    values = np.empty(expected)
    for i, token in enumerate(tokens[:expected]):
        value = _number(token, "intensity")
        if value < 0:
            raise PhotometryParseError(f"negative intensity {token[0]}", token[1])
        values[i] = value

    return PhotometricFile(
        c_plane_angles=stored,
        polar_angles=gamma,
        candela_grid=values.reshape(stored.size, n_gamma) * factor,
        metadata=[line for line in lines[:2] if line],
    )


_IMAX_COMMENT = re.compile(r"^#\s*i_max\s*[:=]\s*(\S+)")


def read_samples_csv(path: Union[str, Path]) -> IntensitySamples:
    """
    Read samples from a CSV with columns phi_deg and candela.

    A comment line "# i_max: <value>" sets the intensity scale.
    """
    text = Path(path).read_text(encoding="utf-8")
    i_max = None
    for line in text.splitlines():
        match = _IMAX_COMMENT.match(line.strip())
        if match:
            i_max = float(match.group(1))
    frame = pd.read_csv(io.StringIO(text), comment="#", float_precision="round_trip")
    missing = {"phi_deg", "candela"} - set(frame.columns)
    if missing:
        raise PhotometryParseError(f"CSV lacks columns: {', '.join(sorted(missing))}")
    return IntensitySamples(
        frame["phi_deg"].to_numpy(float), frame["candela"].to_numpy(float), i_max
    )


def format_samples_csv(samples: IntensitySamples, header: Sequence[str] = ()) -> str:
    """Samples as CSV text, preceded by comment lines and the i_max comment."""
    comments = [f"# {line}" for line in header] + [f"# i_max: {samples.i_max!r}"]
    frame = pd.DataFrame({"phi_deg": samples.phi, "candela": samples.candela})
    return "\n".join(comments) + "\n" + frame.to_csv(index=False, lineterminator="\n")


def load_samples(
    path: Union[str, Path],
    plane_index: int = 0,
    average: bool = False,
) -> IntensitySamples:
    """
    Load IntensitySamples from a .ies, .ldt or samples .csv file.

    Args:
        path: Input file
        plane_index: C-plane to use for photometric files
        average: Average all C-planes of a photometric file

    Returns:
        IntensitySamples of the file
    """
    path = Path(path)
    if not path.is_file():
        raise LedFitError(f"{path}: file not found")

    suffix = path.suffix.lower()
    try:
        if suffix == ".csv":
            return read_samples_csv(path)
        text = path.read_text(encoding="utf-8", errors="replace")
        if suffix == ".ies":
            return extract_plane(parse_ies(text), plane_index, average)
        if suffix == ".ldt":
            return extract_plane(parse_ldt(text), plane_index, average)
    except PhotometryParseError as exc:
        raise PhotometryParseError(f"{path}: {exc.message}", exc.line_no) from exc
    except ExtractionError as exc:
        raise ExtractionError(exc.missing, f"{path}: {exc.message}") from exc
    except ValueError as exc:
        raise LedFitError(f"{path}: {exc}") from exc
    raise LedFitError(f"{path}: unsupported file type {suffix!r} (expected .ies, .ldt or .csv)")
