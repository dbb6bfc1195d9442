"""Raster containers and image I/O.

Rasters are plain numpy arrays throughout the package:

* gray page      -- ``uint8`` array of shape ``(h, w)``, 0 = black ink, 255 = white
* foreground mask -- ``bool`` array of shape ``(h, w)``, True = foreground
* label image    -- ``uint8`` array of shape ``(h, w)``, values index a palette,
                    index 0 is reserved for unlabeled background (drawn white)

The indexed-PNG writer is hand rolled (stdlib ``zlib`` + ``struct``) so that
output bytes are fully deterministic and the palette chunk holds exactly the
entries we were given.  Decoding goes through Pillow, which copes with any
bit depth and filter choice a foreign encoder may have used.
"""

from __future__ import annotations

import io
import struct
import zlib
from typing import Iterable, Sequence

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import CorruptImage, MissingPaletteEntry, NotIndexedPng, UnsupportedFormat

RGB = tuple[int, int, int]

WHITE: RGB = (255, 255, 255)

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def to_gray(rgb: np.ndarray) -> np.ndarray:
    """Convert an (h, w, 3) uint8 array to 8-bit luma.

    Uses ITU-R BT.601 weights 0.299/0.587/0.114 with round-half-up, which is
    the dominant convention in document-analysis pipelines.
    """
    rgb = np.asarray(rgb, dtype=np.float64)
    luma = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    return np.floor(luma + 0.5).astype(np.uint8)


def _open_image(path: str) -> Image.Image:
    try:
        img = Image.open(path)
        img.load()
    except FileNotFoundError:
        raise
    except UnidentifiedImageError as exc:
        raise CorruptImage(f"{path}: not a decodable image") from exc
    except OSError as exc:
        raise CorruptImage(f"{path}: {exc}") from exc
    if img.format not in ("PNG", "JPEG"):
        raise UnsupportedFormat(f"{path}: {img.format or 'unknown'} input is not supported (PNG/JPEG only)")
    return img


def load_image(path: str) -> np.ndarray:
    """Load a PNG or JPEG file as an 8-bit grayscale page.

    Color inputs are converted with :func:`to_gray`; grayscale inputs pass
    through unchanged.
    """
    gray, _ = load_page(path)
    return gray


def load_page(path: str) -> tuple[np.ndarray, np.ndarray | None]:
    """Like :func:`load_image` but also returns the original RGB raster
    (``None`` for grayscale inputs) so previews can show true page colors."""
    img = _open_image(path)
    return _split_gray_color(img)


def decode_page(data: bytes, name: str = "<bytes>") -> tuple[np.ndarray, np.ndarray | None]:
    """In-memory variant of :func:`load_page` for uploaded images."""
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except (UnidentifiedImageError, OSError) as exc:
        raise CorruptImage(f"{name}: not a decodable image") from exc
    if img.format not in ("PNG", "JPEG"):
        raise UnsupportedFormat(f"{name}: {img.format or 'unknown'} input is not supported (PNG/JPEG only)")
    return _split_gray_color(img)


def _split_gray_color(img: Image.Image) -> tuple[np.ndarray, np.ndarray | None]:
    if img.mode == "L":
        return np.asarray(img, dtype=np.uint8), None
    if img.mode == "1":
        return np.asarray(img.convert("L"), dtype=np.uint8), None
    rgb = np.asarray(img.convert("RGB"), dtype=np.uint8)
    return to_gray(rgb), rgb


def _chunk(tag: bytes, payload: bytes) -> bytes:
    crc = zlib.crc32(tag + payload) & 0xFFFFFFFF
    return struct.pack(">I", len(payload)) + tag + payload + struct.pack(">I", crc)


def _dense_palette(palette: Iterable, max_used: int) -> list[RGB]:
    """Normalize (index, rgb) pairs or a plain color sequence into dense slots."""
    items = list(palette)
    if items and isinstance(items[0], (tuple, list)) and len(items[0]) == 2 and isinstance(items[0][1], (tuple, list)):
        by_index = {int(i): (int(c[0]), int(c[1]), int(c[2])) for i, c in items}
    else:
        by_index = {i: (int(c[0]), int(c[1]), int(c[2])) for i, c in enumerate(items)}
    if 0 in by_index and by_index[0] != WHITE:
        raise ValueError("palette index 0 is reserved for background and must be white")
    by_index.setdefault(0, WHITE)
    top = max(max(by_index), max_used)
    dense = [by_index.get(k, (0, 0, 0)) for k in range(top + 1)]
    return dense


def encode_indexed_png(indices: np.ndarray, palette: Iterable) -> bytes:
    """Encode a palette-type PNG whose slot k holds the color for index k.

    ``palette`` is either a sequence of ``(index, (r, g, b))`` pairs or a
    plain sequence of colors implicitly indexed from 0.  Every index used in
    ``indices`` must have an entry; index 0 is always white.  The output is
    byte deterministic: fixed filter, fixed compression level.
    """
    arr = np.ascontiguousarray(indices, dtype=np.uint8)
    if arr.ndim != 2:
        raise ValueError("label image must be a 2-D uint8 array")
    h, w = arr.shape
    max_used = int(arr.max()) if arr.size else 0

    items = list(palette)
    if items and isinstance(items[0], (tuple, list)) and len(items[0]) == 2 and isinstance(items[0][1], (tuple, list)):
        provided = {int(i) for i, _ in items}
    else:
        provided = set(range(len(items)))
    provided.add(0)
    used = {int(v) for v in np.unique(arr)}
    missing = sorted(used - provided)
    if missing:
        raise MissingPaletteEntry(f"indices {missing} used in image but absent from palette", details=missing)

    dense = _dense_palette(items, max_used)
    plte = b"".join(bytes(c) for c in dense)
    raw = b"".join(b"\x00" + arr[y].tobytes() for y in range(h))
    ihdr = struct.pack(">IIBBBBB", w, h, 8, 3, 0, 0, 0)
    return b"".join(
        [
            _PNG_SIGNATURE,
            _chunk(b"IHDR", ihdr),
            _chunk(b"PLTE", plte),
            _chunk(b"IDAT", zlib.compress(raw, 6)),
            _chunk(b"IEND", b""),
        ]
    )


def write_indexed_png(indices: np.ndarray, palette: Iterable, path: str) -> None:
    """encode_indexed_png straight to disk."""
    data = encode_indexed_png(indices, palette)
    with open(path, "wb") as f:
        f.write(data)


def _plte_entries(data: bytes) -> int:
    """Number of palette entries actually stored in the file's PLTE chunk."""
    pos = len(_PNG_SIGNATURE)
    while pos + 8 <= len(data):
        (length,) = struct.unpack(">I", data[pos : pos + 4])
        tag = data[pos + 4 : pos + 8]
        if tag == b"PLTE":
            return length // 3
        if tag == b"IEND":
            break
        pos += 12 + length
    raise NotIndexedPng("PNG has no PLTE chunk")


def read_indexed_png(path: str) -> tuple[np.ndarray, list[RGB]]:
    """Read a palette-type PNG back into (label image, palette).

    The palette is returned verbatim: exactly the entries present in the
    file's PLTE chunk, in slot order.
    """
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(_PNG_SIGNATURE):
        raise NotIndexedPng(f"{path}: not a PNG file")
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except (UnidentifiedImageError, OSError) as exc:
        raise CorruptImage(f"{path}: {exc}") from exc
    if img.mode != "P":
        raise NotIndexedPng(f"{path}: PNG is {img.mode}, not palette type")
    n = _plte_entries(data)
    flat = img.getpalette()[: 3 * n]
    colors = [(flat[3 * k], flat[3 * k + 1], flat[3 * k + 2]) for k in range(n)]
    return np.asarray(img, dtype=np.uint8), colors


def encode_rgb_png(img: np.ndarray) -> bytes:
    """Encode an (h, w, 3) uint8 array as a truecolor PNG (previews, crops)."""
    arr = np.ascontiguousarray(img, dtype=np.uint8)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError("expected an (h, w, 3) RGB array")
    buf = io.BytesIO()
    Image.fromarray(arr, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def parse_hex_color(text: str) -> RGB:
    """Parse ``#RRGGBB`` into an (r, g, b) tuple."""
    if len(text) != 7 or not text.startswith("#"):
        raise ValueError(f"bad color {text!r}, expected #RRGGBB")
    return tuple(int(text[i : i + 2], 16) for i in (1, 3, 5))  # type: ignore[return-value]


def format_hex_color(color: Sequence[int]) -> str:
    return "#{:02X}{:02X}{:02X}".format(*color)
