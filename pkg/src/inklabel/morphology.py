"""Binary morphology and run-length smoothing for grouping foreground pixels.

The grouping step turns the binarized mask into connected blobs that become
labeling units.  A recipe is an ordered list of steps -- erode / dilate /
open / close with a structuring element, run-length smoothing, or directional
gap filling -- applied left to right.

Border rule: pixels outside the image count as background for both erosion
and dilation, so structuring elements shave mask borders.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import ConfigError, EmptyRecipe

SE_SHAPES = ("rect", "ellipse", "cross")


@dataclass(frozen=True)
class StructuringElement:
    """Odd-sized kernel; the origin is the geometric center cell.

    Cell patterns are deterministic functions of (shape, width, height):
    rect fills everything, cross keeps the center row and column, ellipse
    keeps cells whose centers satisfy (dx/(w/2))^2 + (dy/(h/2))^2 <= 1
    (evaluated in exact integers; 1xN and Nx1 degenerate to rect).
    """

    shape: str
    width: int
    height: int

    def __post_init__(self):
        if self.shape not in SE_SHAPES:
            raise ValueError(f"unknown element shape {self.shape!r}")
        if self.width < 1 or self.height < 1 or self.width % 2 == 0 or self.height % 2 == 0:
            raise ValueError(f"element size must be odd and >= 1, got {self.width}x{self.height}")

    def cells(self) -> np.ndarray:
        """(height, width) bool array of set cells."""
        w, h = self.width, self.height
        if self.shape == "rect":
            return np.ones((h, w), dtype=bool)
        dy, dx = np.mgrid[-(h // 2) : h // 2 + 1, -(w // 2) : w // 2 + 1]
        if self.shape == "cross":
            return (dx == 0) | (dy == 0)
        # ellipse: (2*dx*h)^2 + (2*dy*w)^2 <= (w*h)^2
        lhs = (2 * dx.astype(np.int64) * h) ** 2 + (2 * dy.astype(np.int64) * w) ** 2
        return lhs <= (w * h) ** 2

    def offsets(self) -> np.ndarray:
        """(k, 2) array of (dy, dx) offsets of set cells relative to the origin."""
        ys, xs = np.nonzero(self.cells())
        return np.stack([ys - self.height // 2, xs - self.width // 2], axis=1)


def _padded(mask: np.ndarray, ry: int, rx: int) -> np.ndarray:
    h, w = mask.shape
    out = np.zeros((h + 2 * ry, w + 2 * rx), dtype=bool)
    out[ry : ry + h, rx : rx + w] = mask
    return out


def erode(mask: np.ndarray, se: StructuringElement) -> np.ndarray:
    """Foreground where every element cell lands on foreground (outside = background)."""
    mask = np.asarray(mask, dtype=bool)
    if se.shape == "rect" and se.width > 1 and se.height > 1:
        # rect = row x column Minkowski sum, so two thin passes are exact
        return erode(erode(mask, StructuringElement("rect", se.width, 1)),
                     StructuringElement("rect", 1, se.height))
    h, w = mask.shape
    ry, rx = se.height // 2, se.width // 2
    pad = _padded(mask, ry, rx)
    out = np.ones_like(mask)
    for dy, dx in se.offsets():
        out &= pad[ry + dy : ry + dy + h, rx + dx : rx + dx + w]
    return out


def dilate(mask: np.ndarray, se: StructuringElement) -> np.ndarray:
    """Foreground where the reflected element hits at least one foreground pixel."""
    mask = np.asarray(mask, dtype=bool)
    if se.shape == "rect" and se.width > 1 and se.height > 1:
        return dilate(dilate(mask, StructuringElement("rect", se.width, 1)),
                      StructuringElement("rect", 1, se.height))
    h, w = mask.shape
    ry, rx = se.height // 2, se.width // 2
    pad = _padded(mask, ry, rx)
    out = np.zeros_like(mask)
    for dy, dx in se.offsets():
        out |= pad[ry - dy : ry - dy + h, rx - dx : rx - dx + w]
    return out


def open_close(mask: np.ndarray, se: StructuringElement, mode: str) -> np.ndarray:
    if mode == "open":
        return dilate(erode(mask, se), se)
    if mode == "close":
        return erode(dilate(mask, se), se)
    raise ValueError(f"mode must be 'open' or 'close', got {mode!r}")


def _hfill(mask: np.ndarray, run: int) -> np.ndarray:
    """Fill background runs of length <= run bounded by foreground in their row."""
    mask = np.asarray(mask, dtype=bool)
    if run <= 0:
        return mask.copy()
    w = mask.shape[1]
    dt = np.int16 if w < 32000 else np.int32
    col = np.arange(w, dtype=dt)
    prev = np.maximum.accumulate(np.where(mask, col, dt(-1)), axis=1)
    nxt = np.minimum.accumulate(np.where(mask, col, dt(w))[:, ::-1], axis=1)[:, ::-1]
    # foreground survives on its own: there prev == nxt == col, so every
    # term below holds and an explicit union with the mask is redundant
    out = prev >= 0
    out &= nxt < dt(w)
    nxt -= prev
    out &= nxt <= dt(min(run + 1, int(w)))
    return out


def _vfill(mask: np.ndarray, run: int) -> np.ndarray:
    if run <= 0:
        return np.asarray(mask, dtype=bool).copy()
    # column-wise accumulate strides badly; a transposed contiguous copy wins
    flipped = np.ascontiguousarray(np.asarray(mask, dtype=bool).T)
    return _hfill(flipped, run).T.copy()


def smooth_rlsa(mask: np.ndarray, run_h: int, run_v: int, combined: bool = False) -> np.ndarray:
    """Run-length smoothing.

    Sequential form (combined=False): horizontal fill, then vertical fill
    (single pass when the other run length is 0).  Combined form: AND of the
    two directional fills followed by a horizontal fill with run length
    max(1, run_h // 8), the classic RLSA combination.
    """
    if run_h < 0 or run_v < 0:
        raise ValueError("run lengths must be >= 0")
    if combined:
        merged = _hfill(mask, run_h) & _vfill(mask, run_v)
        return _hfill(merged, max(1, run_h // 8))
    if run_v == 0:
        return _hfill(mask, run_h)
    if run_h == 0:
        return _vfill(mask, run_v)
    return _vfill(_hfill(mask, run_h), run_v)


def fill_gaps(mask: np.ndarray, gap_h: int, gap_v: int) -> np.ndarray:
    """Union of independent directional fills; purely additive."""
    if gap_h < 0 or gap_v < 0:
        raise ValueError("gap sizes must be >= 0")
    mask = np.asarray(mask, dtype=bool)
    return mask | _hfill(mask, gap_h) | _vfill(mask, gap_v)


@dataclass(frozen=True)
class Erode:
    se: StructuringElement


@dataclass(frozen=True)
class Dilate:
    se: StructuringElement


@dataclass(frozen=True)
class Open:
    se: StructuringElement


@dataclass(frozen=True)
class Close:
    se: StructuringElement


@dataclass(frozen=True)
class Smooth:
    run_h: int
    run_v: int
    combined: bool = False


@dataclass(frozen=True)
class FillGaps:
    gap_h: int
    gap_v: int


Step = Union[Erode, Dilate, Open, Close, Smooth, FillGaps]


def apply_step(mask: np.ndarray, step: Step) -> np.ndarray:
    if isinstance(step, Erode):
        return erode(mask, step.se)
    if isinstance(step, Dilate):
        return dilate(mask, step.se)
    if isinstance(step, Open):
        return open_close(mask, step.se, "open")
    if isinstance(step, Close):
        return open_close(mask, step.se, "close")
    if isinstance(step, Smooth):
        return smooth_rlsa(mask, step.run_h, step.run_v, step.combined)
    if isinstance(step, FillGaps):
        return fill_gaps(mask, step.gap_h, step.gap_v)
    raise TypeError(f"not a recipe step: {step!r}")


def apply_recipe(mask: np.ndarray, recipe: Sequence[Step]) -> np.ndarray:
    """Apply steps left to right; deterministic."""
    if not recipe:
        raise EmptyRecipe("grouping recipe has no steps")
    out = np.asarray(mask, dtype=bool)
    for step in recipe:
        out = apply_step(out, step)
    return out


_SE_OPS = {"erode": Erode, "dilate": Dilate, "open": Open, "close": Close}


def recipe_to_json(recipe: Sequence[Step]) -> list[dict]:
    out = []
    for step in recipe:
        if isinstance(step, (Erode, Dilate, Open, Close)):
            op = next(k for k, v in _SE_OPS.items() if isinstance(step, v))
            out.append({"op": op, "shape": step.se.shape, "width": step.se.width, "height": step.se.height})
        elif isinstance(step, Smooth):
            out.append({"op": "smooth", "run_h": step.run_h, "run_v": step.run_v, "combined": step.combined})
        elif isinstance(step, FillGaps):
            out.append({"op": "fill_gaps", "gap_h": step.gap_h, "gap_v": step.gap_v})
        else:
            raise TypeError(f"not a recipe step: {step!r}")
    return out


def recipe_from_json(data: Sequence[dict]) -> list[Step]:
    if not isinstance(data, (list, tuple)):
        raise ConfigError("recipe must be a list of step objects")
    steps: list[Step] = []
    for i, item in enumerate(data):
        if not isinstance(item, dict) or "op" not in item:
            raise ConfigError(f"recipe step {i} must be an object with an 'op' key")
        op = item["op"]
        try:
            if op in _SE_OPS:
                _reject_unknown(item, {"op", "shape", "width", "height"}, i)
                se = StructuringElement(item.get("shape", "rect"), int(item["width"]), int(item["height"]))
                steps.append(_SE_OPS[op](se))
            elif op == "smooth":
                _reject_unknown(item, {"op", "run_h", "run_v", "combined"}, i)
                steps.append(Smooth(int(item.get("run_h", 0)), int(item.get("run_v", 0)), bool(item.get("combined", False))))
            elif op == "fill_gaps":
                _reject_unknown(item, {"op", "gap_h", "gap_v"}, i)
                steps.append(FillGaps(int(item.get("gap_h", 0)), int(item.get("gap_v", 0))))
            else:
                raise ConfigError(f"recipe step {i}: unknown op {op!r}")
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"recipe step {i}: {exc}") from exc
    return steps


def _reject_unknown(item: dict, allowed: set, i: int) -> None:
    unknown = set(item) - allowed
    if unknown:
        raise ConfigError(f"recipe step {i}: unknown keys {sorted(unknown)}")
