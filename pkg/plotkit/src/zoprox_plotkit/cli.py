"""Dispatcher and per-figure entry points.

    zoprox-plot fig1c --data runs/ --out figures/
    zoprox-plot-fig1c --data runs/ --out figures/

Exit codes: 0 success, 2 usage, 3 bad/missing input data.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .recipes import recipe_for
from .render import PlotkitError, render

FIGURES = ("fig1c", "fig2", "fig3", "fig5", "fig6")


def _run(which: str, data: str, out: str) -> int:
    data_dir = Path(data)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        recipe = recipe_for(which, data_dir, out_dir / f"{which}.png")
        result = render(recipe, data_dir)
    except PlotkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {result.image_path} ({result.n_series} series, "
          f"checksum {result.plotted_checksum[:12]})")
    return 0


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(prog="zoprox-plot", description=__doc__)
    parser.add_argument("figure", choices=FIGURES)
    parser.add_argument("--data", default=".", help="directory with the experiment CSV/JSON files")
    parser.add_argument("--out", default=".", help="directory for the rendered images")
    args = parser.parse_args(argv)
    sys.exit(_run(args.figure, args.data, args.out))


def _single(which: str):
    def entry(argv=None) -> None:
        parser = argparse.ArgumentParser(prog=f"zoprox-plot-{which}")
        parser.add_argument("--data", default=".")
        parser.add_argument("--out", default=".")
        args = parser.parse_args(argv)
        sys.exit(_run(which, args.data, args.out))

    return entry


main_fig1c = _single("fig1c")
main_fig2 = _single("fig2")
main_fig3 = _single("fig3")
main_fig5 = _single("fig5")
main_fig6 = _single("fig6")


if __name__ == "__main__":
    main()
