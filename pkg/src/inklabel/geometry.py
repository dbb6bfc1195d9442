"""Contour extraction and polygon geometry on the pixel grid.

Points are (x, y) pairs with y growing downward.  A contour is the closed
clockwise walk over the outer boundary pixels of one 8-connected foreground
component; a polygon is a list of vertices interpreted as a closed ring.
All containment tests run on exact integer arithmetic.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

OUTSIDE = 0
INSIDE = 1
BOUNDARY = 2

# Moore neighborhood, clockwise from east, as (dx, dy) with y down.
_DIRS = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))

_EIGHT = np.ones((3, 3), dtype=int)


def label_components(mask: np.ndarray):
    """8-connected component labels; returns (labels, count)."""
    labels, n = ndimage.label(np.asarray(mask, dtype=bool), structure=_EIGHT)
    return labels, int(n)


def _trace_cycle(buf: bytes, stride: int, start: int) -> list[int]:
    """Clockwise boundary walk from `start` (a flat index whose west neighbor
    is background).  The walk is a deterministic state machine on
    (pixel, backtrack direction), so the first repeated state closes the loop.
    """
    offs = tuple(dx + dy * stride for dx, dy in _DIRS)
    inv = {off: i for i, off in enumerate(offs)}
    # arriving via direction d, the backtrack cell is the one probed just
    # before the hit; its direction seen from the new pixel is fixed by d
    back_dir = tuple(inv[offs[(d - 1) & 7] - offs[d]] for d in range(8))
    walk: list[int] = []
    seen: dict[int, int] = {}
    pos, bdir = start, 4
    state = pos * 8 + bdir
    while state not in seen:
        seen[state] = len(walk)
        walk.append(pos)
        d = bdir
        for _ in range(8):
            d = (d + 1) & 7
            if buf[pos + offs[d]]:
                break
        else:
            return [pos]
        pos += offs[d]
        bdir = back_dir[d]
        state = pos * 8 + bdir
    return walk[seen[state] :]


def trace_contours(mask: np.ndarray) -> list[np.ndarray]:
    """Outer boundary of every 8-connected component.

    Each contour is an (n, 2) int32 array of (x, y) pixel centers starting at
    the component's topmost-leftmost pixel and proceeding clockwise.  Pixels
    may repeat where the walk doubles back through one pixel wide spurs.
    Contours are ordered by the raster position of their start pixel.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2:
        raise ValueError("mask must be 2-d")
    labels, n = label_components(mask)
    out = []
    for i, sl in enumerate(ndimage.find_objects(labels), start=1):
        lh = sl[0].stop - sl[0].start
        lw = sl[1].stop - sl[1].start
        local = np.zeros((lh + 2, lw + 2), dtype=np.uint8)
        local[1:-1, 1:-1] = labels[sl] == i
        stride = lw + 2
        ys, xs = np.nonzero(local)
        start = int(ys[0]) * stride + int(xs[0])
        cycle = np.array(_trace_cycle(local.tobytes(), stride, start), dtype=np.int32)
        pts = np.stack([cycle % stride, cycle // stride], axis=1)
        k = int(np.lexsort((pts[:, 0], pts[:, 1]))[0])
        pts = np.roll(pts, -k, axis=0)
        pts[:, 0] += sl[1].start - 1
        pts[:, 1] += sl[0].start - 1
        out.append(pts)
    out.sort(key=lambda c: (int(c[0, 1]), int(c[0, 0])))
    return out


def _convex_hull(pts: np.ndarray) -> np.ndarray:
    """Andrew monotone chain on unique, lexicographically sorted points."""
    n = len(pts)
    if n <= 2:
        return pts
    rows = pts.tolist()  # plain ints keep the chain loop off numpy scalars
    def build(seq):
        h = []
        for p in seq:
            while len(h) >= 2:
                o, a = h[-2], h[-1]
                if (a[0] - o[0]) * (p[1] - o[1]) - (a[1] - o[1]) * (p[0] - o[0]) <= 0:
                    h.pop()
                else:
                    break
            h.append(p)
        return h
    lower = build(rows)
    upper = build(rows[::-1])
    return np.array(lower[:-1] + upper[:-1], dtype=np.int64)


def _farthest_pair(pts: np.ndarray) -> tuple[int, int]:
    """Contour indices (i, j), i <= j, of two mutually farthest points.

    Distance ties resolve to the pair whose (min index, max index) sorts
    first, indices being each point's first occurrence in the contour.
    """
    pts = np.asarray(pts, dtype=np.int64)
    # unique + lexicographic sort via one packed key; coordinates fit int32
    half = np.int64(1) << 31
    code = ((pts[:, 0] + half).astype(np.uint64) << np.uint64(32)) | (
        pts[:, 1] + half
    ).astype(np.uint64)
    ucode = np.unique(code)
    if len(ucode) == 1:
        return 0, 0
    upts = np.stack(
        [
            (ucode >> np.uint64(32)).astype(np.int64) - half,
            (ucode & np.uint64(0xFFFFFFFF)).astype(np.int64) - half,
        ],
        axis=1,
    )
    hull = _convex_hull(upts)
    diff = hull[:, None, :] - hull[None, :, :]
    d2 = (diff ** 2).sum(axis=2)
    best = d2.max()
    first: dict[tuple[int, int], int] = {}
    def first_idx(x: int, y: int) -> int:
        key = (x, y)
        if key not in first:
            hit = np.nonzero((pts[:, 0] == x) & (pts[:, 1] == y))[0]
            first[key] = int(hit[0])
        return first[key]
    cand = []
    for a, b in np.argwhere(d2 == best):
        if a >= b:
            continue
        ia = first_idx(int(hull[a, 0]), int(hull[a, 1]))
        ib = first_idx(int(hull[b, 0]), int(hull[b, 1]))
        cand.append((min(ia, ib), max(ia, ib)))
    return min(cand)


def _segment_dist2(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Squared distance from each row of p to segment ab, float64."""
    ab = b - a
    pa = p - a
    den = float(ab @ ab)
    if den == 0.0:
        return (pa ** 2).sum(axis=1)
    t = np.clip((pa @ ab) / den, 0.0, 1.0)
    d = pa - t[:, None] * ab
    return (d ** 2).sum(axis=1)


def _dp_keep(pts: np.ndarray, eps2: float) -> np.ndarray:
    """Douglas-Peucker on an open polyline; returns sorted kept indices."""
    m = len(pts)
    keep = np.zeros(m, dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, m - 1)]
    while stack:
        a, b = stack.pop()
        if b - a < 2:
            continue
        d2 = _segment_dist2(pts[a + 1 : b], pts[a], pts[b])
        k = int(np.argmax(d2)) + a + 1
        if d2[k - a - 1] > eps2:
            keep[k] = True
            stack.append((a, k))
            stack.append((k, b))
    return np.nonzero(keep)[0]


def _dedup_ring(poly: np.ndarray) -> np.ndarray:
    """Drop consecutive duplicate vertices, treating the list as a ring."""
    if len(poly) <= 1:
        return poly
    keep = np.any(poly != np.roll(poly, 1, axis=0), axis=1)
    if not keep.any():
        return poly[:1]
    return poly[keep]


def simplify_polygon(points: np.ndarray, epsilon: float) -> np.ndarray:
    """Simplify a closed contour with Douglas-Peucker.

    The ring is split at two mutually farthest vertices so both anchors
    survive, each arc is simplified independently against tolerance
    `epsilon` (a dropped vertex always lies within epsilon of the segment
    that replaced it), and the result is rotated to start at its
    topmost-leftmost vertex.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    pts = np.asarray(points, dtype=np.int32)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be (n, 2)")
    if len(pts) <= 2:
        return _dedup_ring(pts.copy())
    i, j = _farthest_pair(pts)
    if i == j:
        return pts[:1].copy()
    arc1 = pts[i : j + 1]
    arc2 = np.concatenate([pts[j:], pts[: i + 1]])
    eps2 = float(epsilon) ** 2
    k1 = _dp_keep(arc1.astype(np.float64), eps2)
    k2 = _dp_keep(arc2.astype(np.float64), eps2)
    poly = _dedup_ring(np.concatenate([arc1[k1[:-1]], arc2[k2[:-1]]]))
    k = int(np.lexsort((poly[:, 0], poly[:, 1]))[0])
    return np.roll(poly, -k, axis=0)


def classify_points(xs: np.ndarray, ys: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Even-odd containment for many points at once.

    Returns a uint8 array of OUTSIDE / INSIDE / BOUNDARY.  A point is
    BOUNDARY when it sits exactly on a polygon edge; otherwise parity of
    crossings with the ray toward +x decides.  Exact in int64.
    """
    xs = np.asarray(xs, dtype=np.int64)
    ys = np.asarray(ys, dtype=np.int64)
    poly = np.asarray(poly, dtype=np.int64)
    if poly.ndim != 2 or poly.shape[1] != 2 or len(poly) == 0:
        raise ValueError("polygon must be a non-empty (n, 2) array")
    parity = np.zeros(xs.shape, dtype=bool)
    on = np.zeros(xs.shape, dtype=bool)
    n = len(poly)
    for e in range(n):
        ax, ay = int(poly[e, 0]), int(poly[e, 1])
        bx, by = int(poly[(e + 1) % n, 0]), int(poly[(e + 1) % n, 1])
        cross = (bx - ax) * (ys - ay) - (by - ay) * (xs - ax)
        on |= (
            (cross == 0)
            & (xs >= min(ax, bx))
            & (xs <= max(ax, bx))
            & (ys >= min(ay, by))
            & (ys <= max(ay, by))
        )
        dy = by - ay
        if dy != 0:
            spans = (ay > ys) != (by > ys)
            side = cross > 0 if dy > 0 else cross < 0
            parity ^= spans & side
    res = np.zeros(xs.shape, dtype=np.uint8)
    res[parity] = INSIDE
    res[on] = BOUNDARY
    return res


def point_in_polygon(x: int, y: int, poly: np.ndarray) -> int:
    """OUTSIDE / INSIDE / BOUNDARY for one point."""
    return int(classify_points(np.array([x]), np.array([y]), poly)[0])


def rasterize_ring(poly: np.ndarray, x0: int, y0: int, w: int, h: int) -> np.ndarray:
    """Boolean (h, w) window at offset (x0, y0), True where the grid point is
    Inside or Boundary of the ring.

    Scanline form of the even-odd rule in classify_points: per row, parity at
    column x equals the count of edge crossings strictly right of x, found by
    an exact integer threshold per edge; boundary cells are the lattice
    points of each edge, reached by stepping the primitive direction.
    """
    poly = np.asarray(poly, dtype=np.int64)
    if poly.ndim != 2 or poly.shape[1] != 2 or len(poly) == 0:
        raise ValueError("polygon must be a non-empty (n, 2) array")
    if w <= 0 or h <= 0:
        return np.zeros((max(h, 0), max(w, 0)), dtype=bool)
    toggles = np.zeros((h, w + 1), dtype=bool)
    on = np.zeros((h, w), dtype=bool)
    rows: list = []
    cols: list = []
    n = len(poly)
    for e in range(n):
        ax, ay = int(poly[e, 0]), int(poly[e, 1])
        bx, by = int(poly[(e + 1) % n, 0]), int(poly[(e + 1) % n, 1])
        dx, dy = bx - ax, by - ay
        g = math.gcd(abs(dx), abs(dy))
        if g == 0:
            if x0 <= ax < x0 + w and y0 <= ay < y0 + h:
                on[ay - y0, ax - x0] = True
            continue
        t = np.arange(g + 1, dtype=np.int64)
        px = ax + t * (dx // g)
        py = ay + t * (dy // g)
        m = (px >= x0) & (px < x0 + w) & (py >= y0) & (py < y0 + h)
        on[py[m] - y0, px[m] - x0] = True
        if dy == 0:
            continue
        if dy < 0:
            ax, ay, bx, by = bx, by, ax, ay
            dx, dy = -dx, -dy
        lo, hi = max(ay, y0), min(by, y0 + h)  # half-open row span
        if lo >= hi:
            continue
        ys = np.arange(lo, hi, dtype=np.int64)
        # parity toggles where x < crossing, i.e. x*dy < ax*dy + dx*(y - ay)
        thr = (ax * dy + dx * (ys - ay) - 1) // dy + 1
        rows.append(ys - y0)
        cols.append(np.clip(thr - x0, 0, w))
    if rows:
        np.bitwise_xor.at(toggles, (np.concatenate(rows), np.concatenate(cols)), True)
    parity = np.bitwise_xor.accumulate(toggles[:, ::-1], axis=1)[:, ::-1]
    parity = parity[:, 1:]
    parity |= on
    return parity


def bounding_box(points: np.ndarray) -> tuple[int, int, int, int]:
    """Pixel bounding box (x, y, w, h); a single pixel has w = h = 1."""
    pts = np.asarray(points)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) == 0:
        raise ValueError("points must be a non-empty (n, 2) array")
    minx, miny = int(pts[:, 0].min()), int(pts[:, 1].min())
    maxx, maxy = int(pts[:, 0].max()), int(pts[:, 1].max())
    return minx, miny, maxx - minx + 1, maxy - miny + 1


def polygon_in_rect(poly: np.ndarray, rect: tuple[int, int, int, int]) -> bool:
    """True when every vertex lies in the closed rect [x, x+w] x [y, y+h]."""
    x, y, w, h = rect
    if w < 0 or h < 0:
        raise ValueError("rect extents must be >= 0")
    pts = np.asarray(poly)
    return bool(
        (pts[:, 0] >= x).all()
        and (pts[:, 0] <= x + w).all()
        and (pts[:, 1] >= y).all()
        and (pts[:, 1] <= y + h).all()
    )


def format_points(poly: np.ndarray) -> str:
    return " ".join(f"{int(x)},{int(y)}" for x, y in np.asarray(poly))


def parse_points(text: str) -> np.ndarray:
    pts = []
    for tok in text.split():
        x, _, y = tok.partition(",")
        pts.append((int(x), int(y)))
    if not pts:
        raise ValueError("empty points string")
    return np.array(pts, dtype=np.int32)
