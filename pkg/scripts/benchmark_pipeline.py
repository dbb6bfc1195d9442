"""Time each pipeline stage on synthetic pages of increasing size.

Stages: Otsu binarization, the grouping recipe (close 15x3 then a
run-length smooth), and unit generation (contours, simplification,
pixel claiming).  Prints one row per page size.
"""

import argparse
import time

from inklabel.binarize import ThresholdParams
from inklabel.morphology import Close, Smooth, StructuringElement
from inklabel.session import AnnotationSession
from inklabel.synth import text_page

SIZES = ((1000, 1400), (2550, 3300), (5100, 6600))


def bench(width: int, height: int, seed: int) -> dict:
    page = text_page(width, height, seed=seed)
    s = AnnotationSession(page)
    out = {}
    t0 = time.perf_counter()
    s.binarize(ThresholdParams(method="otsu"))
    out["binarize"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    s.apply_grouping([Close(StructuringElement("rect", 15, 3)), Smooth(60, 40, False)])
    out["group"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    out["units_n"] = s.generate_units(epsilon=1.0)
    out["units"] = time.perf_counter() - t0
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--repeats", type=int, default=1)
    args = ap.parse_args()

    print(f"{'size':>12} {'binarize':>10} {'group':>10} {'units':>10} {'total':>10} {'n':>6}")
    for width, height in SIZES:
        best = None
        for _ in range(args.repeats):
            r = bench(width, height, args.seed)
            total = r["binarize"] + r["group"] + r["units"]
            if best is None or total < best[0]:
                best = (total, r)
        total, r = best
        print(f"{width}x{height:>6} {r['binarize']:>9.2f}s {r['group']:>9.2f}s "
              f"{r['units']:>9.2f}s {total:>9.2f}s {r['units_n']:>6}")


if __name__ == "__main__":
    main()
