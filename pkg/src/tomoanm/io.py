"""Persistent formats: SLC stack binary, sweep CSV, truth sidecar CSV, ASCII
PLY point clouds and gnuplot scripts.

SLC stack layout (little-endian)::

    magic "TSAR" | version u16 | N u16 | A u32 | R u32 | flags u32
    N * A * R complex samples as (real f64, imag f64), channel-major,
    then azimuth, then range
"""

from __future__ import annotations

import csv
import os
import struct
from pathlib import Path
from typing import Optional

import numpy as np

from .bench import SweepRow, SweepTable
from .errors import (
    BadMagicError,
    ConfigError,
    FormatError,
    ShapeError,
    TruncatedFileError,
    VersionMismatchError,
)
from .tomosar import ArrayGeometry, PointCloud, Scatterer, SLCStack

MAGIC = b"TSAR"
FORMAT_VERSION = 1
HEADER = struct.Struct("<4sHHIII")
SAMPLE_DTYPE = np.dtype("<c16")
SWEEP_HEADER = ("param", "algorithm", "rmse_mean", "success_rate",
                "runtime_mean_s", "runtime_median_s", "trials")
TRUTH_HEADER = ("azimuth", "range", "height_m", "re", "im")


def write_slc_stack(stack: SLCStack, path) -> None:
    n, a, r = stack.shape
    if n > 0xFFFF:
        raise ShapeError(f"{n} channels exceed the u16 header field")
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, FORMAT_VERSION, n, a, r, 0))
        fh.write(np.ascontiguousarray(stack.data, dtype=SAMPLE_DTYPE).tobytes())


def read_slc_stack(path, geometry: Optional[ArrayGeometry] = None) -> SLCStack:
    """Load a stack; ``geometry`` defaults to the standard array with the file's ``N``."""
    raw = Path(path).read_bytes()
    if len(raw) < HEADER.size:
        raise TruncatedFileError(f"{path}: {len(raw)} bytes is shorter than the {HEADER.size}-byte header")
    magic, version, n, a, r, _flags = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise BadMagicError(f"{path}: magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    expected = n * a * r * SAMPLE_DTYPE.itemsize
    payload = len(raw) - HEADER.size
    if payload < expected:
        raise TruncatedFileError(f"{path}: payload has {payload} bytes, expected {expected}")
    if payload > expected:
        raise FormatError(f"{path}: {payload - expected} trailing bytes after the payload")
    data = np.frombuffer(raw, dtype=SAMPLE_DTYPE, offset=HEADER.size).reshape(n, a, r)
    if geometry is None:
        geometry = ArrayGeometry(n_elements=n)
    elif geometry.n_elements != n:
        raise ShapeError(f"{path}: file has {n} channels, geometry has {geometry.n_elements}")
    return SLCStack(data.astype(complex), geometry)


def write_sweep_csv(table: SweepTable, path) -> None:
    if len(table) == 0:
        raise ConfigError("refusing to write an empty sweep table")
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for row in table.rows:
            w.writerow([repr(float(row.param)), row.algorithm, repr(float(row.rmse_mean)),
                        repr(float(row.success_rate)), repr(float(row.runtime_mean_s)),
                        repr(float(row.runtime_median_s)), str(int(row.trials))])


def read_sweep_csv(path, kind: str) -> SweepTable:
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != SWEEP_HEADER:
            raise FormatError(f"{path}: unexpected sweep CSV header {header}")
        rows = [SweepRow(float(p), alg, float(rm), float(sr), float(tm), float(td), int(n))
                for p, alg, rm, sr, tm, td, n in reader]
    return SweepTable(kind, tuple(rows))


def write_truth_csv(truth: list, path) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRUTH_HEADER)
        for a, row in enumerate(truth):
            for r, scatterers in enumerate(row):
                for sc in scatterers:
                    c = complex(sc.reflectivity)
                    w.writerow([a, r, repr(float(sc.elevation)), repr(c.real), repr(c.imag)])


def read_truth_csv(path, azimuth_size: int, range_size: int) -> list:
    truth: list = [[[] for _ in range(range_size)] for _ in range(azimuth_size)]
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        if tuple(next(reader, ())) != TRUTH_HEADER:
            raise FormatError(f"{path}: unexpected truth CSV header")
        for a, r, h, re, im in reader:
            truth[int(a)][int(r)].append(Scatterer(float(h), complex(float(re), float(im))))
    return truth


def write_point_cloud_ply(cloud: PointCloud, path) -> None:
    """ASCII PLY with double properties x, y, z and intensity."""
    lines = ["ply", "format ascii 1.0", f"element vertex {len(cloud)}",
             "property double x", "property double y", "property double z",
             "property double intensity", "end_header"]
    for (x, y, z), i in zip(cloud.xyz().tolist(), cloud.intensity.tolist()):
        lines.append(f"{x!r} {y!r} {z!r} {i!r}")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_point_cloud_ply(path) -> np.ndarray:
    """Vertex rows ``(x, y, z, intensity)`` of a file written by :func:`write_point_cloud_ply`."""
    with open(path, encoding="ascii") as fh:
        text = fh.read().splitlines()
    if not text or text[0] != "ply":
        raise BadMagicError(f"{path}: not a PLY file")
    end = text.index("end_header")
    count = next(int(t.split()[2]) for t in text[:end] if t.startswith("element vertex"))
    body = text[end + 1:end + 1 + count]
    if len(body) != count:
        raise TruncatedFileError(f"{path}: {len(body)} of {count} vertices present")
    return np.array([[float(v) for v in line.split()] for line in body]).reshape(count, 4)


_PLOTS = {
    "snr": ("SNR (dB)", "RMSE (cycles)", 3, False),
    "elements": ("number of elements N", "mean runtime (s)", 5, True),
    "sparseness": ("sparseness K/N", "RMSE (cycles)", 3, False),
}


def emit_plot_script(table: SweepTable, kind: str, path, csv_path, n_elements: int = 8) -> None:
    """gnuplot script plotting ``csv_path``: one series per algorithm.

    The SNR plot adds the single-tone CRLB for ``n_elements`` elements.
    """
    if len(table) == 0:
        raise ConfigError("cannot plot an empty sweep table")
    if kind not in _PLOTS:
        raise ConfigError(f"no plot for sweep kind {kind!r}; choose from {', '.join(_PLOTS)}")
    if table.kind != kind:
        raise ConfigError(f"table holds a {table.kind!r} sweep, not {kind!r}")
    xlabel, ylabel, column, loglog = _PLOTS[kind]
    csv_name = os.fspath(csv_path)
    # the image lands next to the script, named after it
    out = os.path.splitext(os.path.basename(os.fspath(path)))[0] + ".png"
    series = [
        f"'{csv_name}' every ::1 using 1:(strcol(2) eq \"{alg}\" ? ${column} : 1/0) "
        f"with linespoints title \"{alg}\""
        for alg in table.algorithms()
    ]
    if kind == "snr":
        series.append(
            f"sqrt(6.0 / ((2*pi)**2 * 10**(x/10.0) * {n_elements} * ({n_elements}**2 - 1))) "
            "with lines lw 2 lc rgb \"black\" title \"CRLB\""
        )
    lines = [
        "set terminal pngcairo size 800,600",
        f"set output '{out}'",
        "set datafile separator ','",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
        "set logscale y",
    ]
    if loglog:
        lines.append("set logscale x")
    lines.append("set grid")
    lines.append("plot " + ", \\\n     ".join(series))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
