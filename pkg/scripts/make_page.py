"""Generate synthetic document pages for exercising the pipeline.

Examples:
    python3 scripts/make_page.py page.png --width 1000 --height 1400 --seed 11
    python3 scripts/make_page.py grid.png --kind blobs --count 148 --width 640 --height 400
"""

import argparse

from PIL import Image

from inklabel.synth import blob_grid, text_page


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("out", help="output PNG path")
    ap.add_argument("--kind", choices=("text", "blobs"), default="text",
                    help="text lines plus a logo block, or a grid of ink blobs")
    ap.add_argument("--width", type=int, default=1000)
    ap.add_argument("--height", type=int, default=1400)
    ap.add_argument("--count", type=int, default=64,
                    help="number of blobs (blobs kind only)")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if args.kind == "text":
        img = text_page(args.width, args.height, seed=args.seed)
    else:
        img = blob_grid(args.width, args.height, args.count, seed=args.seed)
    Image.fromarray(img, mode="L").save(args.out)
    print(f"wrote {args.out} ({args.width}x{args.height}, kind={args.kind})")


if __name__ == "__main__":
    main()
