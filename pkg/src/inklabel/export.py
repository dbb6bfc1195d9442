"""Ground-truth output files: indexed PNG + XML metadata, re-import, validation.

A finalized session exports to `<stem>_gt.png` (palette PNG, index 0 white)
and `<stem>_gt.xml`.  The XML layout is fixed so repeated exports are byte
identical:

  <anveshak-groundtruth version="1.0">
    <source file=".." width=".." height=".." dpi=".."?/>
    <labels><label index=".." name=".." color="#RRGGBB"/>...</labels>
    <units count="..">
      <unit id=".." label-index=".." area=".." bbox="x,y,w,h">
        <polygon points="x1,y1 x2,y2 ..."/>
      </unit>...
    </units>
  </anveshak-groundtruth>
"""

from __future__ import annotations

import io
import tempfile
import xml.etree.ElementTree as ET
import zipfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import geometry
from .errors import (
    IndexMismatch,
    MissingPng,
    NotFinalized,
    NotIndexedPng,
    SchemaViolation,
)
from .raster import WHITE, format_hex_color, parse_hex_color, read_indexed_png, write_indexed_png
from .session import AnnotationSession, LabelDef

ROOT_TAG = "anveshak-groundtruth"
SCHEMA_VERSION = "1.0"


@dataclass
class UnitRecord:
    id: int
    label_index: int
    area: int
    bbox: tuple[int, int, int, int]
    polygon: np.ndarray


@dataclass
class GroundtruthDocument:
    file: str
    width: int
    height: int
    dpi: Optional[int] = None
    labels: list[LabelDef] = field(default_factory=list)
    units: list[UnitRecord] = field(default_factory=list)


def _xml_tree(session: AnnotationSession) -> ET.ElementTree:
    root = ET.Element(ROOT_TAG, {"version": SCHEMA_VERSION})
    src = {
        "file": session.source_name or "",
        "width": str(session.width),
        "height": str(session.height),
    }
    if session.dpi is not None:
        src["dpi"] = str(session.dpi)
    ET.SubElement(root, "source", src)
    labels_el = ET.SubElement(root, "labels")
    for lab in session.labels:
        ET.SubElement(
            labels_el,
            "label",
            {"index": str(lab.index), "name": lab.name, "color": format_hex_color(lab.color)},
        )
    units_el = ET.SubElement(root, "units", {"count": str(len(session.units))})
    for u in session.units:
        unit_el = ET.SubElement(
            units_el,
            "unit",
            {
                "id": str(u.id),
                "label-index": str(u.label),
                "area": str(u.area),
                "bbox": ",".join(str(v) for v in u.bbox),
            },
        )
        ET.SubElement(unit_el, "polygon", {"points": geometry.format_points(u.polygon)})
    tree = ET.ElementTree(root)
    ET.indent(tree, space="  ")
    return tree


def export_groundtruth(session: AnnotationSession, out_dir, stem: Optional[str] = None) -> dict:
    """Write `<stem>_gt.png` and `<stem>_gt.xml`; returns their paths."""
    if session.phase != "Finalized" or session.label_image is None:
        raise NotFinalized("finalize the session before exporting")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if stem is None:
        stem = Path(session.source_name).stem if session.source_name else "groundtruth"
    png_path = out_dir / f"{stem}_gt.png"
    xml_path = out_dir / f"{stem}_gt.xml"
    palette = [(0, WHITE)] + [(lab.index, lab.color) for lab in session.labels]
    write_indexed_png(session.label_image, palette, png_path)
    _xml_tree(session).write(xml_path, encoding="utf-8", xml_declaration=True)
    return {"png": png_path, "xml": xml_path}


def export_zip_bytes(session: AnnotationSession, stem: str) -> bytes:
    """The export pair bundled as a deterministic in-memory zip."""
    if session.phase != "Finalized" or session.label_image is None:
        raise NotFinalized("finalize the session before exporting")
    with tempfile.TemporaryDirectory() as tmp:
        paths = export_groundtruth(session, tmp, stem=stem)
        buf = io.BytesIO()
        with zipfile.ZipFile(buf, "w", zipfile.ZIP_DEFLATED) as zf:
            for key in ("png", "xml"):
                p = paths[key]
                info = zipfile.ZipInfo(p.name, date_time=(1980, 1, 1, 0, 0, 0))
                info.compress_type = zipfile.ZIP_DEFLATED
                zf.writestr(info, p.read_bytes())
        return buf.getvalue()


# -- parsing ----------------------------------------------------------------


def _attr(el: ET.Element, name: str, bad) -> Optional[str]:
    v = el.get(name)
    if v is None:
        bad(f"<{el.tag}> is missing attribute {name!r}")
    return v


def _int_attr(el: ET.Element, name: str, bad, minimum: Optional[int] = None) -> int:
    v = _attr(el, name, bad)
    try:
        n = int(v)
    except (TypeError, ValueError):
        bad(f"<{el.tag}> attribute {name}={v!r} is not an integer")
        return 0
    if minimum is not None and n < minimum:
        bad(f"<{el.tag}> attribute {name}={n} must be >= {minimum}")
    return n


def _doc_from_root(root: ET.Element, problems: Optional[list]) -> GroundtruthDocument:
    def bad(msg: str):
        if problems is None:
            raise SchemaViolation(msg)
        problems.append(msg)

    if root.tag != ROOT_TAG:
        bad(f"root element is <{root.tag}>, expected <{ROOT_TAG}>")
        return GroundtruthDocument("", 0, 0)
    if root.get("version") != SCHEMA_VERSION:
        bad(f"unsupported version {root.get('version')!r}")

    src = root.find("source")
    if src is None:
        bad("missing <source> element")
        doc = GroundtruthDocument("", 0, 0)
    else:
        dpi = src.get("dpi")
        try:
            dpi = int(dpi) if dpi is not None else None
        except ValueError:
            bad(f"<source> dpi={src.get('dpi')!r} is not an integer")
            dpi = None
        doc = GroundtruthDocument(
            file=_attr(src, "file", bad) or "",
            width=_int_attr(src, "width", bad, minimum=1),
            height=_int_attr(src, "height", bad, minimum=1),
            dpi=dpi,
        )

    labels_el = root.find("labels")
    if labels_el is None:
        bad("missing <labels> element")
    else:
        for el in labels_el.findall("label"):
            idx = _int_attr(el, "index", bad, minimum=1)
            if idx > 255:
                bad(f"label index {idx} exceeds 255")
            name = _attr(el, "name", bad) or ""
            color_s = _attr(el, "color", bad) or "#000000"
            try:
                color = parse_hex_color(color_s)
            except ValueError as exc:
                bad(f"label {name!r}: {exc}")
                color = (0, 0, 0)
            doc.labels.append(LabelDef(idx, name, color))

    units_el = root.find("units")
    if units_el is None:
        bad("missing <units> element")
        return doc
    count = _int_attr(units_el, "count", bad, minimum=0)
    for el in units_el.findall("unit"):
        uid = _int_attr(el, "id", bad, minimum=1)
        li = _int_attr(el, "label-index", bad, minimum=1)
        area = _int_attr(el, "area", bad, minimum=1)
        bbox_s = el.get("bbox", "")
        try:
            bx, by, bw, bh = (int(v) for v in bbox_s.split(","))
            bbox = (bx, by, bw, bh)
        except ValueError:
            bad(f"unit {uid}: bbox={bbox_s!r} is not four integers")
            bbox = (0, 0, 0, 0)
        poly_el = el.find("polygon")
        if poly_el is None:
            bad(f"unit {uid}: missing <polygon> element")
            poly = np.zeros((0, 2), dtype=np.int32)
        else:
            try:
                poly = geometry.parse_points(poly_el.get("points", ""))
            except ValueError as exc:
                bad(f"unit {uid}: bad polygon points: {exc}")
                poly = np.zeros((0, 2), dtype=np.int32)
        doc.units.append(UnitRecord(uid, li, area, bbox, poly))
    if count != len(doc.units):
        bad(f"<units count={count}> but {len(doc.units)} unit elements present")
    return doc


def _check_semantics(doc: GroundtruthDocument, bad) -> None:
    seen_idx: set[int] = set()
    seen_name: set[str] = set()
    seen_color: set = set()
    for lab in doc.labels:
        if lab.index in seen_idx:
            bad(f"duplicate label index {lab.index}")
        if lab.name in seen_name:
            bad(f"duplicate label name {lab.name!r}")
        if not lab.name:
            bad(f"label {lab.index} has an empty name")
        if lab.color in seen_color:
            bad(f"duplicate label color {format_hex_color(lab.color)}")
        if lab.color == WHITE:
            bad(f"label {lab.name!r} uses white, reserved for background")
        seen_idx.add(lab.index)
        seen_name.add(lab.name)
        seen_color.add(lab.color)
    prev = 0
    for u in doc.units:
        if u.id <= prev:
            bad(f"unit ids must be unique and ascending; saw {u.id} after {prev}")
        prev = u.id
        if u.label_index not in seen_idx:
            bad(f"unit {u.id} references unknown label index {u.label_index}")
        x, y, w, h = u.bbox
        if w < 1 or h < 1 or x < 0 or y < 0 or x + w > doc.width or y + h > doc.height:
            bad(f"unit {u.id} bbox {u.bbox} outside the {doc.width}x{doc.height} image")
        if len(u.polygon) == 0:
            bad(f"unit {u.id} has an empty polygon")
        elif tuple(geometry.bounding_box(u.polygon)) != tuple(u.bbox):
            bad(f"unit {u.id} bbox {u.bbox} does not match its polygon")


def _png_sibling(xml_path: Path) -> Path:
    return xml_path.with_suffix(".png")


def import_groundtruth(xml_path):
    """Parse an exported pair; returns (document, label image, palette).

    A structural or semantic problem in the XML raises SchemaViolation; a
    missing PNG raises MissingPng; a PNG whose pixel indices or size do not
    match the document raises IndexMismatch.
    """
    xml_path = Path(xml_path)
    try:
        root = ET.parse(xml_path).getroot()
    except ET.ParseError as exc:
        raise SchemaViolation(f"malformed XML at line {exc.position[0]}: {exc.msg}") from exc
    doc = _doc_from_root(root, None)
    _check_semantics(doc, _raise_schema)
    png_path = _png_sibling(xml_path)
    if not png_path.exists():
        raise MissingPng(f"expected label image beside the XML: {png_path}")
    indices, palette = read_indexed_png(png_path)
    if indices.shape != (doc.height, doc.width):
        raise IndexMismatch(
            f"label image is {indices.shape[1]}x{indices.shape[0]}, "
            f"XML says {doc.width}x{doc.height}"
        )
    known = {lab.index for lab in doc.labels}
    used = set(np.unique(indices).tolist()) - {0}
    orphans = sorted(used - known)
    if orphans:
        raise IndexMismatch(f"PNG uses label indices {orphans} absent from the XML")
    return doc, indices, palette


def _raise_schema(msg: str):
    raise SchemaViolation(msg)


def validate(xml_path) -> list[str]:
    """Non-throwing import: returns every violation found (empty when valid)."""
    xml_path = Path(xml_path)
    problems: list[str] = []
    if not xml_path.exists():
        return [f"file not found: {xml_path}"]
    try:
        root = ET.parse(xml_path).getroot()
    except ET.ParseError as exc:
        return [f"malformed XML at line {exc.position[0]}: {exc.msg}"]
    doc = _doc_from_root(root, problems)
    _check_semantics(doc, problems.append)

    png_path = _png_sibling(xml_path)
    if not png_path.exists():
        problems.append(f"missing label image {png_path.name}")
        return problems
    try:
        indices, palette = read_indexed_png(png_path)
    except NotIndexedPng as exc:
        problems.append(f"{png_path.name}: {exc}")
        return problems
    if doc.width >= 1 and doc.height >= 1 and indices.shape != (doc.height, doc.width):
        problems.append(
            f"label image is {indices.shape[1]}x{indices.shape[0]}, "
            f"XML says {doc.width}x{doc.height}"
        )
    if palette and palette[0] != WHITE:
        problems.append("palette slot 0 is not white")
    for lab in doc.labels:
        if lab.index < len(palette):
            if palette[lab.index] != lab.color:
                problems.append(
                    f"palette slot {lab.index} is {format_hex_color(palette[lab.index])}, "
                    f"XML color is {format_hex_color(lab.color)}"
                )
        else:
            problems.append(f"palette has no slot for label index {lab.index}")
    known = {lab.index for lab in doc.labels}
    counts = np.bincount(indices.reshape(-1), minlength=256)
    used = {int(i) for i in np.nonzero(counts)[0] if i != 0}
    for idx in sorted(used - known):
        problems.append(f"PNG uses label index {idx} absent from the XML")
    declared = {}
    for u in doc.units:
        declared[u.label_index] = declared.get(u.label_index, 0) + u.area
    for idx in sorted(known):
        if declared.get(idx, 0) != int(counts[idx]):
            problems.append(
                f"label {idx}: XML unit areas sum to {declared.get(idx, 0)} "
                f"but the PNG has {int(counts[idx])} pixels"
            )
    return problems


def corpus_stats(directory) -> dict:
    """Averages over all valid exported pairs in a directory.

    Returns image count, mean labels and units per image, per-label pixel
    totals keyed by label name, and the invalid files that were skipped.
    """
    directory = Path(directory)
    xmls = sorted(directory.glob("*.xml"))
    label_counts: list[int] = []
    unit_counts: list[int] = []
    pixel_totals: dict[str, int] = {}
    invalid: list[str] = []
    for xml_path in xmls:
        problems = validate(xml_path)
        if problems:
            invalid.append(xml_path.name)
            continue
        doc, indices, _ = import_groundtruth(xml_path)
        label_counts.append(len(doc.labels))
        unit_counts.append(len(doc.units))
        counts = np.bincount(indices.reshape(-1), minlength=256)
        for lab in doc.labels:
            pixel_totals[lab.name] = pixel_totals.get(lab.name, 0) + int(counts[lab.index])
    n = len(label_counts)
    return {
        "images": n,
        "mean_labels_per_image": (sum(label_counts) / n) if n else None,
        "mean_units_per_image": (sum(unit_counts) / n) if n else None,
        "per_label_pixels": dict(sorted(pixel_totals.items())),
        "invalid": invalid,
    }
