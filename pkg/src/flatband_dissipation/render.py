"""Binary PPM heatmaps of ``|rho_mn|``."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import BadCsv

__all__ = ["read_rho_csv", "heatmap_pixels", "write_ppm", "render_heatmap", "RHO_HEADER"]

RHO_HEADER = ["m", "n", "re", "im", "abs"]
LINE_RGB = (255, 0, 0)


def read_rho_csv(path: str | Path) -> np.ndarray:
    """Complex matrix from a ``m,n,re,im,abs`` file; every element must be present once."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise BadCsv(f"cannot read {path}: {exc}") from exc
    if not rows or rows[0] != RHO_HEADER:
        raise BadCsv(f"{path}: header must be {','.join(RHO_HEADER)}")
    body = rows[1:]
    if not body:
        raise BadCsv(f"{path}: no data rows")
    try:
        m = np.array([int(r[0]) for r in body])
        n = np.array([int(r[1]) for r in body])
        re = np.array([float(r[2]) for r in body])
        im = np.array([float(r[3]) for r in body])
    except (ValueError, IndexError) as exc:
        raise BadCsv(f"{path}: malformed row ({exc})") from exc
    if any(len(r) != 5 for r in body):
        raise BadCsv(f"{path}: every row needs 5 fields")
    D = int(round(np.sqrt(len(body))))
    if D * D != len(body) or m.min() < 0 or n.min() < 0 or m.max() >= D or n.max() >= D:
        raise BadCsv(f"{path}: entries do not form a square matrix")
    out = np.full((D, D), np.nan + 0j)
    out[m, n] = re + 1j * im
    if np.isnan(out.real).any():
        raise BadCsv(f"{path}: missing or duplicated matrix elements")
    return out


def heatmap_pixels(values: np.ndarray, fb: tuple[int, int] | None = None) -> np.ndarray:
    """RGB array: grey level ``|x| / max|x|`` per element plus window lines.

    The flat-band boundaries are drawn as extra one-pixel rows and columns
    between neighbouring elements, so every matrix element keeps its own
    pixel.
    """
    a = np.abs(np.asarray(values))
    peak = a.max() if a.size else 0.0
    grey = np.zeros(a.shape, dtype=np.uint8) if peak == 0 else np.rint(255.0 * a / peak).astype(np.uint8)
    img = np.repeat(grey[:, :, None], 3, axis=2)
    if fb is None:
        return img
    D = a.shape[0]
    lo, hi = fb
    cuts = sorted({c for c in (lo, hi + 1) if 0 < c < D})
    for k, c in enumerate(cuts):
        pos = c + k
        line_row = np.tile(np.array(LINE_RGB, dtype=np.uint8), (1, img.shape[1], 1))
        img = np.concatenate([img[:pos], line_row, img[pos:]], axis=0)
        line_col = np.tile(np.array(LINE_RGB, dtype=np.uint8), (img.shape[0], 1, 1))
        img = np.concatenate([img[:, :pos], line_col, img[:, pos:]], axis=1)
    return img


def write_ppm(path: str | Path, rgb: np.ndarray) -> None:
    h, w, _ = rgb.shape
    with Path(path).open("wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(rgb, dtype=np.uint8).tobytes())


def render_heatmap(rho_mn_csv: str | Path, out_image: str | Path, fb: tuple[int, int] | None = None) -> None:
    write_ppm(out_image, heatmap_pixels(read_rho_csv(rho_mn_csv), fb))
