"""CSV/JSON/gnuplot emission with provenance headers and atomic commits."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from . import __version__


def fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


class OutputSet:
    """Files staged in memory and written together by :meth:`commit`."""

    def __init__(self, command: str, config_hash: str, metadata: dict):
        self.command = command
        self.config_hash = config_hash
        self.metadata = metadata
        self.files: dict[str, str] = {}

    def header_lines(self) -> list[str]:
        lines = [f"tool: pathlab {__version__}", f"command: {self.command}",
                 f"config_sha256: {self.config_hash}"]
        lines += [f"{k}: {fmt(v)}" for k, v in self.metadata.items()]
        return lines

    def add_csv(self, name: str, header, rows):
        buf = io.StringIO(newline="")
        for line in self.header_lines():
            buf.write(f"# {line}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
        self.files[name] = buf.getvalue()

    def add_json(self, name: str, payload: dict):
        doc = {"meta": dict(line.split(": ", 1) for line in self.header_lines()), **payload}
        self.files[name] = json.dumps(_plain(doc), indent=2, sort_keys=True) + "\n"

    def add_text(self, name: str, text: str):
        comment = "".join(f"# {line}\n" for line in self.header_lines())
        self.files[name] = comment + text

    def commit(self, out_dir) -> list[Path]:
        """Write every staged file, or none of them."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        staged = []
        try:
            for name, text in self.files.items():
                fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=out)
                with os.fdopen(fd, "w", newline="") as fh:
                    fh.write(text)
                staged.append((tmp, out / name))
        except BaseException:
            for tmp, _ in staged:
                os.unlink(tmp)
            raise
        for tmp, dest in staged:
            os.replace(tmp, dest)
        return [dest for _, dest in staged]


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else str(f)
    return obj


def gnuplot_script(data_file: str, title: str, xlabel: str, ylabel: str,
                   series: list[tuple[int, int, str]], logscale: str = "") -> str:
    lines = [
        "set datafile separator ','",
        "set datafile commentschars '#'",
        "set key autotitle columnhead",
        f"set title '{title}'",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
    ]
    if logscale:
        lines.append(f"set logscale {logscale}")
    plots = [f"'{data_file}' using {x}:{y} with linespoints title '{label}'" for x, y, label in series]
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"
