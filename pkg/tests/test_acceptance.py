"""End-to-end checks over the whole engine.

Each test prints one [PASS]/[FAIL] line naming the property it guards, so a
full run reads as a checklist.  Oracles come from tests/oracles.py and are
algorithmically independent of the library code they verify.
"""

import contextlib
import io
import json
import time
import zipfile

import numpy as np
from fastapi.testclient import TestClient
from PIL import Image

from inklabel.binarize import ThresholdParams, histogram, otsu_threshold
from inklabel.cli import main
from inklabel.config import ServiceConfig
from inklabel.errors import EmptyRoi
from inklabel.export import export_groundtruth, export_zip_bytes, import_groundtruth
from inklabel.geometry import OUTSIDE, classify_points, simplify_polygon, trace_contours
from inklabel.morphology import (
    Close,
    Smooth,
    StructuringElement,
    dilate,
    erode,
    fill_gaps,
    open_close,
    smooth_rlsa,
)
from inklabel.raster import read_indexed_png
from inklabel.service import create_app
from inklabel.session import AnnotationSession
from inklabel.synth import blob_grid, text_page

from .oracles import (
    count_components,
    otsu_exhaustive,
    points_within_ring,
    random_simple_polygon,
    winding_classify,
)


@contextlib.contextmanager
def _criterion(capsys, name: str):
    ok = False
    try:
        yield
        ok = True
    finally:
        with capsys.disabled():
            print(f"[{'PASS' if ok else 'FAIL'}] {name}")


def test_otsu_equals_exhaustive_variance_search(capsys):
    with _criterion(capsys, "otsu threshold equals exhaustive search on 200 images (exact, <5s)"):
        rng = np.random.default_rng(2025)
        t0 = time.perf_counter()
        for i in range(200):
            kind = i % 4
            if kind == 0:
                img = rng.integers(0, 256, size=(64, 64), dtype=np.uint8)
            elif kind == 1:
                dark = rng.normal(60.0, 12.0, size=(64, 64))
                light = rng.normal(190.0, 14.0, size=(64, 64))
                pick = rng.random((64, 64)) < rng.uniform(0.15, 0.85)
                img = np.clip(np.where(pick, dark, light), 0, 255).astype(np.uint8)
            elif kind == 2:
                img = rng.integers(118, 139, size=(64, 64), dtype=np.uint8)
            else:
                img = np.full((64, 64), int(rng.integers(0, 256)), dtype=np.uint8)
            assert otsu_threshold(img) == otsu_exhaustive(histogram(img))
        assert time.perf_counter() - t0 < 5.0


def test_morphology_invariants_on_randomized_cases(capsys):
    with _criterion(capsys, "morphology duality/idempotence/extensivity/RLSA supersets on 1000 cases (<10s)"):
        rng = np.random.default_rng(7)
        shapes = ("rect", "cross", "ellipse")
        t0 = time.perf_counter()
        for _ in range(1000):
            h = int(rng.integers(4, 17))
            w = int(rng.integers(4, 17))
            mask = rng.random((h, w)) < rng.uniform(0.1, 0.7)
            se = StructuringElement(
                shapes[int(rng.integers(0, 3))],
                int(2 * rng.integers(0, 3) + 1),
                int(2 * rng.integers(0, 3) + 1),
            )
            # margin sized so every intermediate keeps clear of the border,
            # where the outside-is-background rule would otherwise interfere
            m = 2 * (max(se.width, se.height) // 2) + 1
            canvas = np.zeros((h + 4 * m, w + 4 * m), dtype=bool)
            canvas[2 * m : 2 * m + h, 2 * m : 2 * m + w] = mask

            er = erode(canvas, se)
            di = dilate(canvas, se)
            inner = (slice(m, -m), slice(m, -m))
            assert np.array_equal(di[inner], (~erode(~canvas, se))[inner])

            op = open_close(canvas, se, "open")
            cl = open_close(canvas, se, "close")
            assert np.array_equal(open_close(op, se, "open"), op)
            assert np.array_equal(open_close(cl, se, "close"), cl)
            for smaller, larger in ((er, op), (op, canvas), (canvas, cl), (cl, di)):
                assert not (smaller & ~larger).any()

            rh = int(rng.integers(0, 13))
            rv = int(rng.integers(0, 13))
            sm = smooth_rlsa(mask, rh, rv, bool(rng.integers(0, 2)))
            assert not (mask & ~sm).any()
            fg = fill_gaps(mask, int(rng.integers(0, 7)), int(rng.integers(0, 7)))
            assert not (mask & ~fg).any()
        assert time.perf_counter() - t0 < 10.0


def test_contour_count_equals_union_find_components(capsys):
    with _criterion(capsys, "contour count equals union-find components on 500 masks (exact, <5s)"):
        rng = np.random.default_rng(3)
        t0 = time.perf_counter()
        for _ in range(500):
            mask = rng.random((32, 32)) < rng.uniform(0.05, 0.6)
            assert len(trace_contours(mask)) == count_components(mask)
        assert time.perf_counter() - t0 < 5.0


def test_simplification_keeps_contours_within_epsilon(capsys):
    with _criterion(capsys, "simplified polygons stay within epsilon of their contours (exact, <5s)"):
        rng = np.random.default_rng(5)
        contours = []
        while len(contours) < 200:
            mask = rng.random((24, 24)) < rng.uniform(0.15, 0.6)
            contours.extend(trace_contours(mask))
        contours = contours[:200]
        t0 = time.perf_counter()
        for eps, eps4 in ((0.0, 0), (0.5, 1), (1.0, 4), (2.0, 16), (5.0, 100)):
            for contour in contours:
                ring = simplify_polygon(contour, eps)
                assert points_within_ring(contour, ring, eps4)
        assert time.perf_counter() - t0 < 5.0


def test_point_in_polygon_agrees_with_winding_oracle(capsys):
    with _criterion(capsys, "point-in-polygon agrees with the winding oracle on 10000 pairs (<5s)"):
        rng = np.random.default_rng(17)
        t0 = time.perf_counter()
        for _ in range(200):
            poly = random_simple_polygon(rng)
            xs = rng.integers(0, 50, size=50)
            ys = rng.integers(0, 50, size=50)
            got = classify_points(xs, ys, poly)
            want = [winding_classify(int(x), int(y), poly) for x, y in zip(xs, ys)]
            assert np.array_equal(got, np.array(want))
        assert time.perf_counter() - t0 < 5.0


def test_scripted_pipeline_deterministic_and_partitions_foreground(tmp_path, capsys):
    with _criterion(capsys, "scripted pipeline is byte-deterministic and partitions in-polygon foreground"):
        page_path = tmp_path / "doc.png"
        Image.fromarray(text_page(1000, 1400, seed=11), mode="L").save(page_path)
        cfg_path = tmp_path / "config.json"
        cfg_payload = {
            "pipeline": {
                "threshold": {"method": "otsu"},
                "recipe": [{"op": "close", "shape": "rect", "width": 9, "height": 3}],
                "epsilon": 1.0,
            }
        }
        cfg_path.write_text(json.dumps(cfg_payload))

        outs = []
        for run in ("a", "b"):
            out = tmp_path / run
            rc = main(["--config", str(cfg_path), "units", str(page_path),
                       "--out-dir", str(out)])
            assert rc == 0
            outs.append(out)
        for name in ("doc.units.json", "doc.grouped.png"):
            assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()

        # rebuild the same session to reach the pixel sets, then check the
        # partition property against the binarized mask and the polygons
        s = AnnotationSession(np.asarray(Image.open(page_path), dtype=np.uint8))
        s.binarize(ThresholdParams(method="otsu"))
        s.apply_grouping([Close(StructuringElement("rect", 9, 3))])
        s.generate_units(epsilon=1.0)
        reported = json.loads((outs[0] / "doc.units.json").read_text())
        assert [u["id"] for u in reported["units"]] == [u.id for u in s.units]
        assert [u["polygon"]["points"] for u in reported["units"]] == [
            [[int(x), int(y)] for x, y in u.polygon] for u in s.units
        ]

        claimed = np.concatenate([u.pixels for u in s.units])
        assert len(np.unique(claimed)) == len(claimed)  # pairwise disjoint

        fy, fx = np.nonzero(s.mask)
        in_any = np.zeros(len(fy), dtype=bool)
        for u in s.units:
            x, y, w, h = u.bbox
            sel = (fx >= x) & (fx < x + w) & (fy >= y) & (fy < y + h) & ~in_any
            if not sel.any():
                continue
            cls = classify_points(fx[sel], fy[sel], u.polygon)
            hit = np.zeros(len(fy), dtype=bool)
            hit[np.nonzero(sel)[0][cls != OUTSIDE]] = True
            in_any |= hit
        covered = set((fy[in_any] * s.width + fx[in_any]).tolist())
        assert covered == set(claimed.tolist())  # exact cover


def test_export_import_round_trips_randomized_sessions(tmp_path, capsys):
    with _criterion(capsys, "export/import round-trips 50 randomized sessions, XML byte-stable"):
        rng = np.random.default_rng(23)
        for i in range(50):
            count = int(rng.integers(1, 5))
            img = blob_grid(64, 64, count, seed=i)
            s = AnnotationSession(img, source_name=f"img{i}.png",
                                  dpi=300 if i % 4 == 0 else None)
            s.binarize(ThresholdParams(method="global", t=128))
            s.apply_grouping([Close(StructuringElement("rect", 3, 3))])
            s.generate_units(epsilon=float(rng.choice([0.0, 0.5, 1.0, 2.0])))
            n_labels = int(rng.integers(1, 5))
            for k in range(n_labels):
                color = f"#12{40 + k:02X}56" if i % 3 == 0 else None
                s.add_label(f"lab{k}", color)
            indices = [lab.index for lab in s.labels]
            for u in s.units:
                s.assign_label(u.id, int(rng.choice(indices)))
            s.finalize()

            first = export_groundtruth(s, tmp_path / f"a{i}")
            second = export_groundtruth(s, tmp_path / f"b{i}")
            assert first["xml"].read_bytes() == second["xml"].read_bytes()
            assert first["png"].read_bytes() == second["png"].read_bytes()

            doc, img_back, palette = import_groundtruth(first["xml"])
            assert np.array_equal(img_back, s.label_image)
            assert (doc.file, doc.width, doc.height, doc.dpi) == (
                s.source_name, s.width, s.height, s.dpi)
            assert [(lab.index, lab.name, lab.color) for lab in doc.labels] == [
                (lab.index, lab.name, lab.color) for lab in s.labels]
            assert len(doc.units) == len(s.units)
            for rec, unit in zip(doc.units, s.units):
                assert (rec.id, rec.label_index, rec.area) == (unit.id, unit.label, unit.area)
                assert rec.bbox == unit.bbox
                assert np.array_equal(rec.polygon, unit.polygon)
            assert palette[0] == (255, 255, 255)


def test_corpus_statistics_reproduce_expected_means(tmp_path, capsys):
    with _criterion(capsys, "corpus stats mean exactly 5 labels and 148 units per image"):
        corpus = tmp_path / "corpus"
        label_names = [f"l{k}" for k in range(1, 6)]
        cfg_path = tmp_path / "config.json"
        cfg_path.write_text(json.dumps({
            "pipeline": {
                "threshold": {"method": "global", "t": 128},
                "recipe": [{"op": "close", "shape": "rect", "width": 1, "height": 1}],
                "epsilon": 0.0,
                "labels": [{"name": n} for n in label_names],
                "label_map": {str(k): label_names[(k - 1) % 5] for k in range(1, 149)},
            }
        }))
        for i in range(3):
            page = tmp_path / f"page{i}.png"
            Image.fromarray(blob_grid(640, 400, 148, seed=i), mode="L").save(page)
            rc = main(["--config", str(cfg_path), "export-run", str(page),
                       "--out-dir", str(corpus)])
            assert rc == 0
        capsys.readouterr()  # drop the export-run progress lines
        assert main(["--json", "stats", str(corpus)]) == 0
        stats = json.loads(capsys.readouterr().out)
        assert stats["images"] == 3
        assert stats["mean_labels_per_image"] == 5.0
        assert stats["mean_units_per_image"] == 148.0
        assert stats["invalid"] == []


def test_large_page_pipeline_under_ten_seconds(capsys):
    with _criterion(capsys, "full pipeline on a 5100x6600 page finishes in under 10s"):
        page = text_page(5100, 6600, seed=3)
        t0 = time.perf_counter()
        s = AnnotationSession(page)
        s.binarize(ThresholdParams(method="otsu"))
        s.apply_grouping([Close(StructuringElement("rect", 15, 3)), Smooth(60, 40, False)])
        n = s.generate_units(epsilon=1.0)
        elapsed = time.perf_counter() - t0
        assert n > 0
        assert elapsed < 10.0


def _replay_actions_http(client, sid, actions):
    for act in actions:
        kind = act[0]
        if kind == "binarize":
            r = client.post(f"/sessions/{sid}/binarize", json=act[1])
        elif kind == "recipe":
            r = client.post(f"/sessions/{sid}/recipe", json={"steps": act[1]})
        elif kind == "units":
            r = client.post(f"/sessions/{sid}/units", json={"epsilon": act[1]})
        elif kind == "label":
            r = client.post(f"/sessions/{sid}/labels", json=act[1])
        elif kind == "delete_label":
            r = client.delete(f"/sessions/{sid}/labels/{act[1]}")
        elif kind == "assign":
            r = client.post(f"/sessions/{sid}/assign", json={"unit": act[1], "label": act[2]})
        elif kind == "roi":
            r = client.post(f"/sessions/{sid}/roi",
                            json={"rect": act[1], "mode": act[2], "label": act[3]})
        elif kind == "finalize":
            r = client.post(f"/sessions/{sid}/finalize")
        else:
            raise AssertionError(kind)
        assert r.status_code in (200, 201), (act, r.status_code, r.text)


def _replay_actions_library(s, actions):
    from inklabel.morphology import recipe_from_json

    for act in actions:
        kind = act[0]
        if kind == "binarize":
            payload = dict(act[1])
            s.binarize(ThresholdParams.from_json(
                {k: payload[k] for k in ("method", "t", "window", "c") if k in payload}))
        elif kind == "recipe":
            s.apply_grouping(recipe_from_json(act[1]))
        elif kind == "units":
            s.generate_units(epsilon=act[1])
        elif kind == "label":
            s.add_label(act[1]["name"], act[1].get("color"))
        elif kind == "delete_label":
            s.delete_label(act[1])
        elif kind == "assign":
            s.assign_label(act[1], act[2])
        elif kind == "roi":
            try:
                s.annotate_roi(act[1], act[2], act[3])
            except EmptyRoi:
                pass
        elif kind == "finalize":
            s.finalize()
        else:
            raise AssertionError(kind)


def test_http_replay_matches_direct_library_calls(tmp_path, capsys):
    with _criterion(capsys, "30-action script over HTTP equals direct library calls"):
        img = blob_grid(200, 160, 12, seed=5)
        actions = [
            ("binarize", {"method": "global", "t": 128}),
            ("recipe", [{"op": "close", "shape": "rect", "width": 3, "height": 3}]),
            ("units", 1.0),
            ("label", {"name": "text", "color": "#FF0000"}),
            ("label", {"name": "figure", "color": "#00FF00"}),
            ("label", {"name": "noise", "color": "#0000FF"}),
            ("label", {"name": "scratch"}),
            ("delete_label", 4),
            ("assign", 1, 1),
            ("assign", 2, 2),
            ("assign", 2, 1),
            ("roi", [0, 0, 200, 160], "per_unit", None),
            ("roi", [0, 0, 200, 80], "fill_unlabeled", 2),
            ("roi", [0, 106, 200, 54], "fill_all", 3),
            ("roi", [0, 0, 10, 10], "fill_all", 1),
            ("assign", 5, 1),
            ("assign", 6, 2),
            ("assign", 7, 3),
            ("assign", 8, 1),
            ("label", {"name": "margin"}),
            ("assign", 9, 5),
            ("assign", 10, 2),
            ("assign", 11, 2),
            ("roi", [0, 0, 120, 120], "per_unit", None),
            ("assign", 12, 5),
            ("roi", [0, 0, 200, 160], "fill_unlabeled", 1),
            ("assign", 3, 1),
            ("assign", 4, 3),
            ("finalize",),
        ]
        assert len(actions) + 1 == 30  # plus the final export fetch

        buf = io.BytesIO()
        Image.fromarray(img, mode="L").save(buf, format="PNG")
        with TestClient(create_app(ServiceConfig())) as client:
            r = client.post("/sessions",
                            files={"image": ("doc.png", buf.getvalue(), "image/png")})
            assert r.status_code == 201
            sid = r.json()["id"]
            _replay_actions_http(client, sid, actions)
            z = client.get(f"/sessions/{sid}/export.zip")
            assert z.status_code == 200
            http_zip = z.content

        s = AnnotationSession(img, source_name="doc.png")
        _replay_actions_library(s, actions)
        lib_zip = export_zip_bytes(s, "doc")

        with zipfile.ZipFile(io.BytesIO(http_zip)) as zf:
            png_path = tmp_path / "doc_gt.png"
            png_path.write_bytes(zf.read("doc_gt.png"))
        http_label_image, _ = read_indexed_png(png_path)
        assert np.array_equal(http_label_image, s.label_image)
        assert http_zip == lib_zip
