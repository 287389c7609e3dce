"""Export of per-grid SNR fields to CSV and plain PGM images.

CSV rows run u-major (x outer, y inner) with header x,y,snr_db,valid and 9
significant digits, enough to re-import the field to well under 1e-6 dB.
PGM output is a plain (P2) top-view image, one pixel per grid cell, with the
dB window used for the 0..255 mapping recorded in a comment; cells inside
obstacle footprints are painted 0.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .geometry import GridSpec

MAP_FORMATS = ("csv", "pgm")


def _field_db(snr_field: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(snr_field)


def export_map(
    snr_field: np.ndarray,
    valid: np.ndarray,
    grid: GridSpec,
    path: str | Path,
    fmt: str = "csv",
    db_window: tuple[float, float] | None = None,
) -> None:
    """Write one SNR field (linear input, dB output) as csv or pgm."""
    if snr_field.shape != (grid.nx, grid.ny) or valid.shape != (grid.nx, grid.ny):
        raise ValueError("field and validity mask must match the grid shape")
    if fmt not in MAP_FORMATS:
        raise ValueError(f"unknown map format {fmt!r}; expected one of {MAP_FORMATS}")
    db = _field_db(snr_field)
    if fmt == "csv":
        _write_csv(db, valid, grid, path)
    else:
        _write_pgm(db, valid, grid, path, db_window)


def _write_csv(db: np.ndarray, valid: np.ndarray, grid: GridSpec, path) -> None:
    xs = grid.x_centers()
    ys = grid.y_centers()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("x,y,snr_db,valid\n")
        for u in range(grid.nx):
            for v in range(grid.ny):
                fh.write(f"{xs[u]:.9g},{ys[v]:.9g},{db[u, v]:.9g},{int(valid[u, v])}\n")


def _write_pgm(db, valid, grid: GridSpec, path, db_window) -> None:
    if db_window is None:
        vals = db[valid]
        if vals.size == 0:
            raise ValueError("cannot derive a dB window: no valid cells")
        db_window = (float(vals.min()), float(vals.max()))
    lo, hi = db_window
    if not hi >= lo:
        raise ValueError("dB window must satisfy max >= min")
    span = hi - lo
    if span > 0:
        scaled = np.clip(np.rint((db - lo) / span * 255.0), 0, 255)
    else:
        scaled = np.full_like(db, 255.0)
    pixels = np.where(valid, scaled, 0.0).astype(int)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("P2\n")
        fh.write(f"# snr_db window min={lo:.9g} max={hi:.9g}\n")
        fh.write(f"{grid.nx} {grid.ny}\n255\n")
        # image rows top to bottom = y decreasing, so +y prints at the top
        for v in range(grid.ny - 1, -1, -1):
            fh.write(" ".join(str(pixels[u, v]) for u in range(grid.nx)))
            fh.write("\n")


def read_map_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Read back an exported CSV map: (x, y, snr_db, valid) as flat u-major arrays."""
    xs, ys, db, valid = [], [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "x,y,snr_db,valid":
            raise ValueError(f"unexpected map CSV header: {header!r}")
        for line in fh:
            fx, fy, fdb, fvalid = line.strip().split(",")
            xs.append(float(fx))
            ys.append(float(fy))
            db.append(float(fdb))
            valid.append(bool(int(fvalid)))
    return np.asarray(xs), np.asarray(ys), np.asarray(db), np.asarray(valid)
