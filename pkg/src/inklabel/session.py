"""Annotation session: labels, labeling units, and the labeling state machine.

A session moves along Loaded -> Binarized -> UnitsReady -> Annotating ->
Finalized.  Re-binarizing or re-grouping falls back to Binarized and discards
units; once labeling has started that fallback demands explicit confirmation.
After finalization the session is read-only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import geometry
from .binarize import ThresholdParams, binarize
from .errors import (
    ConfirmationRequired,
    DuplicateColor,
    DuplicateName,
    EmptyRoi,
    LabelCapacityExceeded,
    LabelInUse,
    NoForeground,
    PhaseError,
    SessionFinalized,
    UnknownLabel,
    UnknownUnit,
    UnlabeledUnitsRemain,
)
from .morphology import Step, apply_recipe, recipe_from_json, recipe_to_json
from .raster import RGB, WHITE, format_hex_color, parse_hex_color

PHASES = ("Loaded", "Binarized", "UnitsReady", "Annotating", "Finalized")
ROI_MODES = ("fill_all", "fill_unlabeled", "per_unit")

DEFAULT_EPSILON = 1.0

# Fixed auto-assignment palette; none of these is white.
AUTO_PALETTE: tuple[RGB, ...] = tuple(
    parse_hex_color(c)
    for c in (
        "#E6194B", "#3CB44B", "#FFE119", "#4363D8", "#F58231",
        "#911EB4", "#46F0F0", "#F032E6", "#BCF60C", "#FABEBE",
        "#008080", "#E6BEFF", "#9A6324", "#FFFAC8", "#800000",
        "#AAFFC3", "#808000", "#FFD8B1", "#000075", "#808080",
    )
)


def _auto_color(k: int) -> RGB:
    if k < len(AUTO_PALETTE):
        return AUTO_PALETTE[k]
    # past the fixed palette: walk a stride permutation of the 24-bit color
    # space so the sequence never repeats before the 255-label cap
    v = (k - len(AUTO_PALETTE)) * 2654435761 % (1 << 24)
    color = (v >> 16 & 255, v >> 8 & 255, v & 255)
    return color if color != WHITE else (254, 254, 254)


@dataclass
class LabelDef:
    index: int
    name: str
    color: RGB


class LabelSet:
    """Ordered labels with unique index, name, and color; index 0 reserved."""

    def __init__(self):
        self.labels: list[LabelDef] = []
        self._next_index = 1

    def __iter__(self):
        return iter(self.labels)

    def __len__(self):
        return len(self.labels)

    def get(self, index: int) -> LabelDef:
        for lab in self.labels:
            if lab.index == index:
                return lab
        raise UnknownLabel(f"no label with index {index}", index=index)

    def has(self, index: int) -> bool:
        return any(lab.index == index for lab in self.labels)

    def add(self, name: str, color=None) -> LabelDef:
        if not isinstance(name, str) or not name.strip():
            raise ValueError("label name must be a non-empty string")
        name = name.strip()
        if any(lab.name == name for lab in self.labels):
            raise DuplicateName(f"label name {name!r} already exists", name=name)
        if self._next_index > 255:
            raise LabelCapacityExceeded("a session supports at most 255 labels")
        used = {lab.color for lab in self.labels}
        if color is not None:
            if isinstance(color, str):
                color = parse_hex_color(color)
            color = tuple(int(c) for c in color)
            if color == WHITE:
                raise ValueError("label color may not be white; white marks background")
            if color in used:
                raise DuplicateColor(
                    f"color {format_hex_color(color)} already in use",
                    color=format_hex_color(color),
                )
        else:
            k = 0
            while _auto_color(k) in used:
                k += 1
            color = _auto_color(k)
        lab = LabelDef(self._next_index, name, color)
        self._next_index += 1
        self.labels.append(lab)
        return lab

    def remove(self, index: int) -> None:
        """Drop the label; its index is never handed out again."""
        lab = self.get(index)
        self.labels.remove(lab)


@dataclass
class LabelingUnit:
    """One polygonal labeling unit.

    `pixels` holds sorted flat raster indices (y * width + x) of the
    foreground pixels this unit owns; `area` is their count.
    """

    id: int
    polygon: np.ndarray
    bbox: tuple[int, int, int, int]
    pixels: np.ndarray
    label: Optional[int] = None

    @property
    def area(self) -> int:
        return int(len(self.pixels))

    def summary(self) -> dict:
        return {
            "id": self.id,
            "polygon": {"points": [[int(x), int(y)] for x, y in self.polygon]},
            "bbox": list(self.bbox),
            "area": self.area,
            "label": self.label,
        }


class AnnotationSession:
    def __init__(self, gray: np.ndarray, color: Optional[np.ndarray] = None, *,
                 source_name: str = "", dpi: Optional[int] = None):
        gray = np.asarray(gray, dtype=np.uint8)
        if gray.ndim != 2 or gray.size == 0:
            raise ValueError("source image must be a non-empty 2-d grayscale array")
        if color is not None:
            color = np.asarray(color, dtype=np.uint8)
            if color.shape != gray.shape + (3,):
                raise ValueError("color image must match the grayscale shape")
        self.gray = gray
        self.color = color
        self.source_name = source_name
        self.dpi = dpi
        self.height, self.width = gray.shape
        self.phase = "Loaded"
        self.labels = LabelSet()
        self.units: list[LabelingUnit] = []
        self.mask: Optional[np.ndarray] = None
        self.grouped: Optional[np.ndarray] = None
        self.threshold: Optional[ThresholdParams] = None
        self.invert = False
        self.threshold_value: Optional[int] = None
        self.recipe: Optional[list[Step]] = None
        self.epsilon = DEFAULT_EPSILON
        self.label_image: Optional[np.ndarray] = None

    # -- guards ------------------------------------------------------------

    def _writable(self):
        if self.phase == "Finalized":
            raise SessionFinalized("session is finalized and read-only")

    def _labeled_ids(self) -> list[int]:
        return [u.id for u in self.units if u.label is not None]

    def _confirm_discard(self, confirm: bool):
        labeled = self._labeled_ids()
        if labeled and not confirm:
            raise ConfirmationRequired(
                "regenerating units discards existing label assignments; "
                "pass confirm=true to proceed",
                labeled_units=labeled,
            )

    # -- pipeline ----------------------------------------------------------

    def binarize(self, params: ThresholdParams, invert: bool = False,
                 confirm: bool = False) -> Optional[int]:
        """Threshold the source image; returns the effective global threshold
        (None for adaptive methods).  Falls back to phase Binarized."""
        self._writable()
        self._confirm_discard(confirm)
        t, mask = binarize(self.gray, params, invert=invert)
        self.threshold = params
        self.invert = bool(invert)
        self.threshold_value = t
        self.mask = mask
        self.grouped = None
        self.recipe = None
        self.units = []
        self.phase = "Binarized"
        return t

    def apply_grouping(self, recipe: Sequence[Step], confirm: bool = False) -> np.ndarray:
        """Run the morphology recipe over the binarized mask."""
        self._writable()
        if self.mask is None:
            raise PhaseError("binarize before applying a grouping recipe")
        self._confirm_discard(confirm)
        grouped = apply_recipe(self.mask, list(recipe))
        self.recipe = list(recipe)
        self.grouped = grouped
        self.units = []
        self.phase = "Binarized"
        return grouped

    def generate_units(self, epsilon: float = DEFAULT_EPSILON, confirm: bool = False) -> int:
        """Trace the grouped mask into units and claim their pixels.

        A pixel belongs to unit k when it is foreground in the binarized
        mask, Inside or Boundary of polygon k, and not claimed by a lower
        id.  Units left without pixels are dropped and ids re-sequenced.
        """
        self._writable()
        if self.mask is None:
            raise PhaseError("binarize before generating units")
        if self.grouped is None:
            raise PhaseError("apply a grouping recipe before generating units")
        self._confirm_discard(confirm)
        if not self.grouped.any():
            raise NoForeground("grouped mask has no foreground pixels")
        self.epsilon = float(epsilon)
        contours = geometry.trace_contours(self.grouped)
        polygons = [geometry.simplify_polygon(c, self.epsilon) for c in contours]
        self.units = self._claim_units(polygons)
        self.phase = "UnitsReady"
        return len(self.units)

    def _claim_units(self, polygons, ids=None, labels=None) -> list[LabelingUnit]:
        claimed = np.zeros_like(self.mask)
        units: list[LabelingUnit] = []
        for k, poly in enumerate(polygons):
            x, y, w, h = geometry.bounding_box(poly)
            x0, y0 = max(x, 0), max(y, 0)
            x1, y1 = min(x + w, self.width), min(y + h, self.height)
            if x0 >= x1 or y0 >= y1:
                continue
            window = self.mask[y0:y1, x0:x1] & ~claimed[y0:y1, x0:x1]
            window &= geometry.rasterize_ring(poly, x0, y0, x1 - x0, y1 - y0)
            ys, xs = np.nonzero(window)
            if len(ys) == 0:
                continue
            ys, xs = ys + y0, xs + x0
            claimed[ys, xs] = True
            flat = np.sort(ys.astype(np.int64) * self.width + xs)
            uid = ids[k] if ids is not None else len(units) + 1
            unit = LabelingUnit(uid, poly, geometry.bounding_box(poly), flat)
            if labels is not None:
                unit.label = labels[k]
            units.append(unit)
        return units

    # -- labels ------------------------------------------------------------

    def add_label(self, name: str, color=None) -> LabelDef:
        self._writable()
        return self.labels.add(name, color)

    def delete_label(self, index: int) -> None:
        self._writable()
        self.labels.get(index)
        users = [u.id for u in self.units if u.label == index]
        if users:
            raise LabelInUse(
                f"label {index} is assigned to {len(users)} unit(s)", units=users
            )
        self.labels.remove(index)

    # -- annotation --------------------------------------------------------

    def _require_units(self):
        if self.phase not in ("UnitsReady", "Annotating"):
            raise PhaseError(f"units not generated yet (phase {self.phase})")

    def unit(self, unit_id: int) -> LabelingUnit:
        for u in self.units:
            if u.id == unit_id:
                return u
        raise UnknownUnit(f"no unit with id {unit_id}", unit=unit_id)

    def next_unlabeled(self) -> Optional[int]:
        self._require_units()
        for u in self.units:
            if u.label is None:
                return u.id
        return None

    def unlabeled_ids(self) -> list[int]:
        self._require_units()
        return [u.id for u in self.units if u.label is None]

    def assign_label(self, unit_id: int, label_index: int) -> LabelingUnit:
        """Label one unit; overwriting an earlier assignment is allowed."""
        self._writable()
        self._require_units()
        unit = self.unit(unit_id)
        self.labels.get(label_index)
        unit.label = int(label_index)
        self.phase = "Annotating"
        return unit

    def annotate_roi(self, rect, mode: str, label_index: Optional[int] = None) -> list[int]:
        """Label every unit whose polygon lies fully inside the closed rect.

        fill_all overwrites, fill_unlabeled only fills gaps, per_unit just
        reports candidate ids.  No candidates raises EmptyRoi, a signal the
        caller may treat as a no-op.
        """
        self._require_units()
        if mode not in ROI_MODES:
            raise ValueError(f"roi mode must be one of {ROI_MODES}, got {mode!r}")
        x, y, w, h = (int(v) for v in rect)
        if w < 1 or h < 1:
            raise ValueError("roi extents must be >= 1")
        if x < 0 or y < 0 or x + w > self.width or y + h > self.height:
            raise ValueError("roi must lie within the image")
        candidates = [u for u in self.units if geometry.polygon_in_rect(u.polygon, (x, y, w, h))]
        if not candidates:
            raise EmptyRoi("no unit polygon lies fully inside the roi", rect=[x, y, w, h])
        if mode == "per_unit":
            return [u.id for u in candidates]
        self._writable()
        if label_index is None:
            raise ValueError(f"mode {mode!r} requires a label index")
        self.labels.get(label_index)
        targets = candidates if mode == "fill_all" else [u for u in candidates if u.label is None]
        for u in targets:
            u.label = int(label_index)
        if targets:
            self.phase = "Annotating"
        return [u.id for u in targets]

    # -- output ------------------------------------------------------------

    def render_preview(self) -> np.ndarray:
        """RGB preview: labeled unit pixels take the label color, everything
        else keeps its source value."""
        if self.phase not in ("UnitsReady", "Annotating", "Finalized"):
            raise PhaseError(f"no units to preview (phase {self.phase})")
        if self.color is not None:
            out = self.color.copy()
        else:
            out = np.repeat(self.gray[:, :, None], 3, axis=2)
        flat = out.reshape(-1, 3)
        for u in self.units:
            if u.label is not None:
                flat[u.pixels] = self.labels.get(u.label).color
        return out

    def unit_crop(self, unit_id: int) -> np.ndarray:
        """RGB crop of one unit's bounding box over the source image."""
        self._require_units()
        u = self.unit(unit_id)
        x, y, w, h = u.bbox
        x0, y0 = max(x, 0), max(y, 0)
        x1, y1 = min(x + w, self.width), min(y + h, self.height)
        if self.color is not None:
            return self.color[y0:y1, x0:x1].copy()
        return np.repeat(self.gray[y0:y1, x0:x1, None], 3, axis=2)

    def finalize(self) -> np.ndarray:
        """Freeze the session and build the label image (0 = background)."""
        if self.phase == "Finalized":
            raise SessionFinalized("session already finalized")
        self._require_units()
        missing = self.unlabeled_ids()
        if missing:
            raise UnlabeledUnitsRemain(
                f"{len(missing)} unit(s) still unlabeled", units=missing
            )
        img = np.zeros((self.height, self.width), dtype=np.uint8)
        flat = img.reshape(-1)
        for u in self.units:
            flat[u.pixels] = u.label
        self.label_image = img
        self.phase = "Finalized"
        return img

    # -- persistence ---------------------------------------------------------

    def to_snapshot(self) -> dict:
        """JSON-friendly state; pixel sets are recomputed on restore."""
        return {
            "phase": self.phase,
            "source": {"file": self.source_name, "dpi": self.dpi},
            "threshold": self.threshold.to_json() if self.threshold else None,
            "invert": self.invert,
            "recipe": recipe_to_json(self.recipe) if self.recipe is not None else None,
            "epsilon": self.epsilon,
            "labels": [
                {"index": lab.index, "name": lab.name, "color": format_hex_color(lab.color)}
                for lab in self.labels
            ],
            "next_label_index": self.labels._next_index,
            "units": [
                {"id": u.id, "polygon": [[int(x), int(y)] for x, y in u.polygon],
                 "label": u.label}
                for u in self.units
            ],
        }

    @classmethod
    def from_snapshot(cls, gray: np.ndarray, snap: dict,
                      color: Optional[np.ndarray] = None) -> "AnnotationSession":
        src = snap.get("source", {})
        s = cls(gray, color, source_name=src.get("file", ""), dpi=src.get("dpi"))
        for lab in snap.get("labels", []):
            s.labels.labels.append(
                LabelDef(int(lab["index"]), lab["name"], parse_hex_color(lab["color"]))
            )
        s.labels._next_index = int(snap.get("next_label_index", 1))
        if snap.get("threshold") is not None:
            s.binarize(ThresholdParams.from_json(snap["threshold"]), snap.get("invert", False))
        if snap.get("recipe") is not None:
            s.apply_grouping(recipe_from_json(snap["recipe"]))
        s.epsilon = float(snap.get("epsilon", DEFAULT_EPSILON))
        units = snap.get("units", [])
        if units:
            polygons = [np.array(u["polygon"], dtype=np.int32) for u in units]
            ids = [int(u["id"]) for u in units]
            labels = [u["label"] for u in units]
            s.units = s._claim_units(polygons, ids=ids, labels=labels)
        phase = snap.get("phase", s.phase)
        if phase == "Finalized":
            s.phase = "Annotating"
            s.finalize()
        else:
            s.phase = phase
        return s
