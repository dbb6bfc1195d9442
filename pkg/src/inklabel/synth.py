"""Synthetic document pages for experiments and end-to-end tests.

Pages are dark-ink-on-white grayscale rasters built from simple primitives:
text-like lines of word blocks, and an elliptical logo blob.  Everything is
driven by a seeded generator, so a (function, size, seed) triple always
yields the identical image.
"""

from __future__ import annotations

import numpy as np


def _ellipse(img: np.ndarray, cx: int, cy: int, rx: int, ry: int, value: int) -> None:
    h, w = img.shape
    y0, y1 = max(cy - ry, 0), min(cy + ry + 1, h)
    x0, x1 = max(cx - rx, 0), min(cx + rx + 1, w)
    if y0 >= y1 or x0 >= x1:
        return
    ys, xs = np.mgrid[y0:y1, x0:x1]
    inside = ((xs - cx) * ry) ** 2 + ((ys - cy) * rx) ** 2 <= (rx * ry) ** 2
    img[y0:y1, x0:x1][inside] = value


def text_page(width: int, height: int, *, lines: int = 0, seed: int = 0,
              logo: bool = True) -> np.ndarray:
    """A page of synthetic text lines, optionally with a logo blob.

    lines=0 picks a line count from the page height.  Characters are small
    filled rectangles grouped into words; ink intensities vary per character
    so global and adaptive thresholds have something to chew on.
    """
    if width < 64 or height < 64:
        raise ValueError("page must be at least 64x64")
    rng = np.random.default_rng(seed)
    img = np.full((height, width), 255, dtype=np.uint8)

    margin_x = width // 12
    margin_y = height // 12
    line_h = max(8, height // 45)
    gap_y = max(6, line_h)
    if lines <= 0:
        lines = (height - 2 * margin_y) // (line_h + gap_y)

    logo_bottom = 0
    if logo:
        rx = width // 9
        ry = height // 14
        cx = width - margin_x - rx
        cy = margin_y + ry
        _ellipse(img, cx, cy, rx, ry, int(rng.integers(10, 50)))
        logo_bottom = cy + ry + gap_y

    y = margin_y
    for _ in range(lines):
        if y + line_h > height - margin_y:
            break
        # keep text clear of the logo so units never touch it
        x_limit = (width - margin_x - 2 * (width // 9) - 3 * gap_y) if (logo and y < logo_bottom) else (width - margin_x)
        x = margin_x
        while x < x_limit - line_h:
            word_chars = int(rng.integers(2, 9))
            for _ in range(word_chars):
                cw = max(3, int(rng.integers(line_h // 2, line_h)))
                if x + cw >= x_limit:
                    break
                ink = int(rng.integers(0, 70))
                ch_h = int(rng.integers((3 * line_h) // 4, line_h + 1))
                img[y + line_h - ch_h : y + line_h, x : x + cw] = ink
                x += cw + max(1, line_h // 5)
            x += max(3, line_h)  # word gap
        y += line_h + gap_y
    return img


def blob_grid(width: int, height: int, count: int, *, seed: int = 0) -> np.ndarray:
    """Exactly `count` well-separated rectangular blobs laid out on a grid.

    Blob sizes and intensities vary with the seed, but the count and the
    coarse layout do not, which makes corpus-level statistics exact.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    img = np.full((height, width), 255, dtype=np.uint8)
    cols = int(np.ceil(np.sqrt(count * width / height)))
    rows = int(np.ceil(count / cols))
    cell_w = width // cols
    cell_h = height // rows
    if cell_w < 8 or cell_h < 8:
        raise ValueError("page too small for that many blobs")
    placed = 0
    for r in range(rows):
        for c in range(cols):
            if placed == count:
                return img
            x0 = c * cell_w + cell_w // 4
            y0 = r * cell_h + cell_h // 4
            bw = max(2, cell_w // 2 - int(rng.integers(0, cell_w // 8 + 1)))
            bh = max(2, cell_h // 2 - int(rng.integers(0, cell_h // 8 + 1)))
            img[y0 : y0 + bh, x0 : x0 + bw] = int(rng.integers(0, 80))
            placed += 1
    return img
