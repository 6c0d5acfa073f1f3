"""Bit-exact output files: CSV tables, binary PGM rasters, the text report and
its checksum manifest, and the per-directory lock."""

from __future__ import annotations

import csv
import hashlib
import io
import os
import re
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    return str(v)


def csv_bytes(header: Sequence[str], rows: Iterable[Sequence]) -> bytes:
    """RFC-4180 CSV with \\n line endings and shortest round-trip floats."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise ValueError("row width does not match header")
        w.writerow([_cell(v) for v in row])
    return buf.getvalue().encode("utf-8")


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.write_bytes(csv_bytes(header, rows))
    return path


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


# ---------------------------------------------------------------------------
# PGM


def pgm_bytes(field: np.ndarray, maxval: int) -> bytes:
    """Binary P5 image of an (nx, ny) field: width nx, height ny, image row k
    holding grid row j = k.  Masks (maxval 255) are written as 0/255.  Fields
    (maxval 65535) are scaled by their maximum, which is recorded in a
    ``# max <repr>`` header comment."""
    img = np.asarray(field, dtype=float).T
    height, width = img.shape
    if maxval == 255:
        data = np.where(img > 0, 255, 0).astype(np.uint8).tobytes()
        header = f"P5\n{width} {height}\n255\n"
    elif maxval == 65535:
        top = float(img.max()) if img.size else 0.0
        scaled = np.zeros_like(img) if top <= 0 else np.clip(img / top, 0.0, 1.0) * 65535.0
        data = np.rint(scaled).astype(">u2").tobytes()
        header = f"P5\n# max {top!r}\n{width} {height}\n65535\n"
    else:
        raise ValueError("maxval must be 255 or 65535")
    return header.encode("ascii") + data


def write_pgm(path, field, maxval) -> Path:
    path = Path(path)
    path.write_bytes(pgm_bytes(field, maxval))
    return path


def read_pgm(path) -> np.ndarray:
    """Inverse of ``pgm_bytes``; 16-bit images are rescaled by the recorded
    max, 8-bit images are returned as booleans.  Returns an (nx, ny) array."""
    raw = Path(path).read_bytes()
    tokens: list[str] = []
    top = None
    pos = 0
    while len(tokens) < 4:
        end = raw.index(b"\n", pos)
        line = raw[pos:end].decode("ascii")
        pos = end + 1
        if line.startswith("#"):
            m = re.match(r"#\s*max\s+(\S+)", line)
            if m:
                top = float(m.group(1))
            continue
        tokens.extend(line.split())
    if tokens[0] != "P5":
        raise ValueError("not a binary PGM")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval == 255:
        img = np.frombuffer(raw, dtype=np.uint8, count=width * height, offset=pos)
        return img.reshape(height, width).T > 0
    img = np.frombuffer(raw, dtype=">u2", count=width * height, offset=pos).astype(float)
    img = img.reshape(height, width).T / 65535.0
    return img * (top if top is not None else 1.0)


# ---------------------------------------------------------------------------
# manifest and lock


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def manifest(directory, exclude: Sequence[str] = ()) -> list[tuple[str, int, str]]:
    """(name, size, sha256) of every regular file in ``directory``, sorted."""
    out = []
    for p in sorted(Path(directory).iterdir()):
        if p.is_file() and p.name not in exclude:
            out.append((p.name, p.stat().st_size, sha256_file(p)))
    return out


class DirectoryLock:
    """Exclusive ``.lock`` file; a second holder fails immediately."""

    NAME = ".lock"

    def __init__(self, directory):
        self.path = Path(directory) / self.NAME
        self.fd = None

    def __enter__(self):
        try:
            self.fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise RuntimeError(f"output directory is locked: {self.path}") from None
        os.write(self.fd, f"{os.getpid()}\n".encode())
        return self

    def __exit__(self, *exc):
        os.close(self.fd)
        self.path.unlink(missing_ok=True)
        return False
