"""Shared fixtures: tiny images, ready-made sessions, and an HTTP client."""

from __future__ import annotations

import numpy as np
import pytest

from inklabel.binarize import ThresholdParams
from inklabel.morphology import Close, StructuringElement
from inklabel.session import AnnotationSession


def two_blob_image(w: int = 40, h: int = 24) -> np.ndarray:
    """White page with two well-separated dark rectangles."""
    img = np.full((h, w), 255, dtype=np.uint8)
    img[4:10, 4:12] = 20
    img[14:20, 24:36] = 40
    return img


@pytest.fixture
def blob_image() -> np.ndarray:
    return two_blob_image()


@pytest.fixture
def units_session(blob_image) -> AnnotationSession:
    """Session advanced to UnitsReady with two units."""
    s = AnnotationSession(blob_image, source_name="page.png")
    s.binarize(ThresholdParams(method="global", t=128))
    s.apply_grouping([Close(StructuringElement("rect", 3, 3))])
    s.generate_units(epsilon=0.0)
    assert len(s.units) == 2
    return s


def finalize_simple(session: AnnotationSession) -> np.ndarray:
    """Label everything with one label and finalize."""
    lab = session.add_label("text")
    for u in session.units:
        session.assign_label(u.id, lab.index)
    return session.finalize()
