"""
Dataset files for spectra, figure tables and comparison reports.

Every file starts with a header holding the tool version and the resolved run
configuration. CSV files carry it as a `#`-prefixed JSON line above the
column row; JSON files carry it under "header". Floats are written in their
shortest round-trip form, so parsing a file and rendering it again gives the
same bytes.
"""

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

try:
    from .models import HalfIndex, Line, ModelKind, OutputFormat, RunConfig, Spectrum
    from .settings import __version__, load_settings
    from .validators import SpectrumFileError
except ImportError:
    from models import HalfIndex, Line, ModelKind, OutputFormat, RunConfig, Spectrum
    from settings import __version__, load_settings
    from validators import SpectrumFileError

logger = logging.getLogger(__name__)

TOOL_NAME = "kd-sim"
SPECTRUM_COLUMNS = ["k", "n", "intensity", "stderr"]
Cell = Union[int, float, str, None]


@dataclass
class DataTable:
    """Columnar dataset with its header."""
    header: Dict[str, Any]
    columns: List[str]
    rows: List[List[Cell]] = field(default_factory=list)

    def column(self, name: str) -> List[Cell]:
        try:
            position = self.columns.index(name)
        except ValueError:
            raise SpectrumFileError(f"column {name!r} not present.")
        return [row[position] for row in self.rows]


def make_header(kind: str, config: Optional[RunConfig] = None, **extra: Any) -> Dict[str, Any]:
    """Header block shared by all dataset files; the output path is not echoed."""
    header = {"tool": TOOL_NAME, "version": __version__, "kind": kind}
    if config is not None:
        echoed = config.to_dict()
        echoed.pop("output", None)
        header["config"] = echoed
    header.update(extra)
    return header


def _format_cell(value: Cell) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_cell(column: str, raw: str) -> Cell:
    if raw == "":
        return None
    if column == "k":
        return int(raw)
    if column == "n":
        return raw
    return float(raw)


def _header_line(header: Dict[str, Any]) -> str:
    return json.dumps(header, sort_keys=True)


def render_table(table: DataTable, fmt: OutputFormat = OutputFormat.CSV) -> str:
    """Serialize a table to CSV or JSON text."""
    fmt = OutputFormat(fmt)
    if fmt is OutputFormat.JSON:
        payload = {"header": table.header, "columns": table.columns, "rows": table.rows}
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    buffer = io.StringIO()
    buffer.write(f"# {_header_line(table.header)}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_format_cell(value) for value in row])
    return buffer.getvalue()


def parse_table(text: str) -> DataTable:
    """
    Parse CSV or JSON text produced by render_table.

    Raises:
        SpectrumFileError: If the text is not a dataset written by this tool
    """
    stripped = text.lstrip()
    try:
        if stripped.startswith("{"):
            payload = json.loads(text)
            return DataTable(payload["header"], list(payload["columns"]), [list(row) for row in payload["rows"]])

        lines = text.splitlines()
        if not lines or not lines[0].startswith("# "):
            raise SpectrumFileError("CSV dataset is missing its '# {header}' line.")
        header = json.loads(lines[0][2:])
        reader = csv.reader(lines[1:])
        columns = next(reader)
        rows = []
        for raw in reader:
            if len(raw) != len(columns):
                raise SpectrumFileError(f"row {raw!r} does not match columns {columns}.")
            rows.append([_parse_cell(name, value) for name, value in zip(columns, raw)])
        return DataTable(header, columns, rows)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError, StopIteration) as e:
        raise SpectrumFileError(f"could not parse dataset: {e}")


def spectrum_table(
    spectrum: Spectrum,
    config: Optional[RunConfig] = None,
    extra_columns: Optional[Dict[str, Any]] = None,
) -> DataTable:
    """
    Lay a spectrum out as k,n,intensity,stderr rows.

    Args:
        extra_columns: name -> callable(HalfIndex) adding computed columns
    """
    extra_columns = extra_columns or {}
    header = make_header(
        "spectrum",
        config,
        spectrum={"tau": spectrum.tau, "model": spectrum.model.value, "samples": spectrum.samples, "meta": spectrum.meta},
    )
    columns = SPECTRUM_COLUMNS + list(extra_columns)
    rows = []
    for key, line in spectrum.lines():
        row = [key.k, key.label(), line.intensity, line.stderr]
        row.extend(float(fn(key)) for fn in extra_columns.values())
        rows.append(row)
    return DataTable(header, columns, rows)


def table_spectrum(table: DataTable) -> Spectrum:
    """
    Rebuild a Spectrum from a spectrum table.

    Raises:
        SpectrumFileError: If the table is not a spectrum dataset
    """
    info = table.header.get("spectrum")
    if table.header.get("kind") != "spectrum" or not isinstance(info, dict):
        raise SpectrumFileError("dataset does not hold a spectrum.")
    for name in SPECTRUM_COLUMNS:
        if name not in table.columns:
            raise SpectrumFileError(f"spectrum dataset lacks column {name!r}.")
    try:
        entries = {}
        for k, intensity, stderr in zip(table.column("k"), table.column("intensity"), table.column("stderr")):
            entries[HalfIndex(int(k))] = Line(float(intensity), None if stderr is None else float(stderr))
        return Spectrum(
            entries=entries,
            tau=float(info["tau"]),
            model=ModelKind(info["model"]),
            samples=info.get("samples"),
            meta=dict(info.get("meta") or {}),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise SpectrumFileError(f"invalid spectrum dataset: {e}")


class SpectrumStore:
    """Reads and writes dataset files below an output directory."""

    def __init__(self, output_dir: Optional[Union[str, Path]] = None):
        """
        Args:
            output_dir: Directory for default file names; defaults to KDSIM_OUTPUT_DIR
        """
        self.output_dir = Path(output_dir) if output_dir is not None else load_settings().output_dir

    def default_path(self, name: str) -> Path:
        """Location for a file the user did not name explicitly."""
        return self.output_dir / name

    @staticmethod
    def format_for(path: Path, fmt: Optional[Union[str, OutputFormat]] = None) -> OutputFormat:
        if fmt is not None:
            return OutputFormat(fmt)
        return OutputFormat.JSON if path.suffix.lower() == ".json" else OutputFormat.CSV

    def write_table(self, table: DataTable, name: Union[str, Path], fmt: Optional[Union[str, OutputFormat]] = None) -> Path:
        path = Path(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(render_table(table, self.format_for(path, fmt)))
        logger.info(f"Wrote {len(table.rows)} rows to {path}")
        return path

    def read_table(self, name: Union[str, Path]) -> DataTable:
        path = Path(name)
        try:
            with open(path, "r", encoding="utf-8", newline="") as f:
                text = f.read()
        except OSError as e:
            raise SpectrumFileError(f"could not read {path}: {e}")
        return parse_table(text)

    def write_spectrum(
        self,
        spectrum: Spectrum,
        name: Union[str, Path],
        config: Optional[RunConfig] = None,
        fmt: Optional[Union[str, OutputFormat]] = None,
        extra_columns: Optional[Dict[str, Any]] = None,
    ) -> Path:
        return self.write_table(spectrum_table(spectrum, config, extra_columns), name, fmt)

    def read_spectrum(self, name: Union[str, Path]) -> Spectrum:
        return table_spectrum(self.read_table(name))

    def write_report(self, report: Dict[str, Any], name: Union[str, Path], config: Optional[RunConfig] = None) -> Path:
        """Write a comparison report as JSON."""
        path = Path(name)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {"header": make_header("comparison", config), "report": report}
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")
        return path

    def __str__(self) -> str:
        return f"SpectrumStore({self.output_dir})"
