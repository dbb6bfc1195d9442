"""Command-line front end: batch pipeline, validation, stats, and the server.

Exit codes are stable: 0 success, 1 domain error (bad image, empty mask,
unlabeled units, invalid ground truth), 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import socket
import sys
from pathlib import Path

import numpy as np

from .config import AppConfig, PipelineConfig, load_config
from .errors import ConfigError, InkLabelError, UnknownLabel
from .export import corpus_stats, export_groundtruth, validate
from .raster import WHITE, load_page, write_indexed_png
from .session import AnnotationSession

log = logging.getLogger("inklabel")

_MASK_PALETTE = [(0, WHITE), (1, (0, 0, 0))]


def _build_session(image_path: str, pcfg: PipelineConfig) -> AnnotationSession:
    """load -> binarize -> group -> units, straight from config."""
    gray, color = load_page(image_path)
    session = AnnotationSession(gray, color, source_name=Path(image_path).name)
    session.binarize(pcfg.threshold, pcfg.invert)
    session.apply_grouping(pcfg.recipe)
    session.generate_units(pcfg.epsilon)
    return session


def cmd_units(args, cfg: AppConfig) -> int:
    pcfg = cfg.pipeline
    out_dir = Path(args.out_dir or pcfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    session = _build_session(args.image, pcfg)
    stem = Path(args.image).stem
    units_path = out_dir / f"{stem}.units.json"
    grouped_path = out_dir / f"{stem}.grouped.png"
    payload = {
        "source": Path(args.image).name,
        "width": session.width,
        "height": session.height,
        "threshold": session.threshold_value,
        "epsilon": session.epsilon,
        "units": [
            {
                "id": u.id,
                "polygon": {"points": [[int(x), int(y)] for x, y in u.polygon]},
                "bbox": list(u.bbox),
                "area": u.area,
            }
            for u in session.units
        ],
    }
    units_path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    write_indexed_png(session.grouped.astype(np.uint8), _MASK_PALETTE, grouped_path)
    if args.json:
        print(json.dumps({"count": len(session.units),
                          "units_json": str(units_path),
                          "grouped_png": str(grouped_path)}))
    else:
        print(f"{len(session.units)} units -> {units_path}")
        print(f"grouped mask -> {grouped_path}")
    return 0


def _resolve_label(session: AnnotationSession, value) -> int:
    if isinstance(value, int):
        session.labels.get(value)
        return value
    for lab in session.labels:
        if lab.name == value:
            return lab.index
    raise UnknownLabel(f"label map references unknown label {value!r}", label=value)


def cmd_export_run(args, cfg: AppConfig) -> int:
    """The full scripted pipeline: units, labels from config, label map
    assignments, finalize, export."""
    pcfg = cfg.pipeline
    out_dir = Path(args.out_dir or pcfg.output_dir)
    session = _build_session(args.image, pcfg)
    for spec in pcfg.labels:
        session.add_label(spec["name"], spec.get("color"))
    fallback = pcfg.label_map.get("*")
    for ordinal, unit in enumerate(session.units, start=1):
        value = pcfg.label_map.get(str(ordinal), fallback)
        if value is None:
            continue  # finalize reports the gap
        session.assign_label(unit.id, _resolve_label(session, value))
    session.finalize()
    paths = export_groundtruth(session, out_dir)
    if args.json:
        print(json.dumps({"png": str(paths["png"]), "xml": str(paths["xml"]),
                          "units": len(session.units), "labels": len(session.labels)}))
    else:
        print(f"wrote {paths['png']}")
        print(f"wrote {paths['xml']}")
    return 0


def cmd_validate(args, cfg: AppConfig) -> int:
    results = [(p, validate(p)) for p in args.paths]
    if args.json:
        print(json.dumps([{"path": str(p), "violations": v} for p, v in results], indent=2))
    else:
        for p, violations in results:
            if violations:
                print(f"{p}: {len(violations)} violation(s)")
                for v in violations:
                    print(f"  - {v}")
            else:
                print(f"{p}: OK")
    return 0 if all(not v for _, v in results) else 1


def cmd_stats(args, cfg: AppConfig) -> int:
    stats = corpus_stats(args.dir)
    if args.json:
        print(json.dumps(stats, indent=2))
        return 0
    print(f"{'images':<24}{stats['images']}")
    if stats["images"]:
        print(f"{'mean labels/image':<24}{stats['mean_labels_per_image']:.4g}")
        print(f"{'mean units/image':<24}{stats['mean_units_per_image']:.4g}")
    if stats["per_label_pixels"]:
        print("per-label pixels:")
        width = max(len(n) for n in stats["per_label_pixels"])
        for name, px in stats["per_label_pixels"].items():
            print(f"  {name:<{width}}  {px}")
    for name in stats["invalid"]:
        print(f"skipped invalid file: {name}")
    return 0


def cmd_serve(args, cfg: AppConfig) -> int:
    import uvicorn

    from .service import create_app

    scfg = cfg.service
    try:
        probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((scfg.host, scfg.port))
        probe.close()
    except OSError as exc:
        print(f"cannot bind {scfg.host}:{scfg.port}: {exc}", file=sys.stderr)
        return 1
    app = create_app(scfg)
    uvicorn.run(app, host=scfg.host, port=scfg.port,
                log_level="debug" if args.verbose else "warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="inklabel",
        description="Ground-truth annotation engine for document images.",
    )
    parser.add_argument("--config", metavar="PATH", help="JSON config file")
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("units", help="binarize, group, and write labeling units")
    p.add_argument("image", help="input PNG or JPEG")
    p.add_argument("--out-dir", help="where to write <stem>.units.json and <stem>.grouped.png")
    p.set_defaults(func=cmd_units)

    p = sub.add_parser("validate", help="check exported ground-truth pairs")
    p.add_argument("paths", nargs="+", help="XML files to validate")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stats", help="corpus statistics over exported pairs")
    p.add_argument("dir", help="directory of exported pairs")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("export-run", help="scripted end-to-end run: units, labels, export")
    p.add_argument("image", help="input PNG or JPEG")
    p.add_argument("--out-dir", help="output directory")
    p.set_defaults(func=cmd_export_run)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"ConfigError: {exc}", file=sys.stderr)
        return 2
    except InkLabelError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"file not found: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
