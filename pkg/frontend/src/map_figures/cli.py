"""map-figures: render choropleths and line plots from smoothing-study CSVs."""

import argparse
import sys
from pathlib import Path

from .choropleth import render_choropleth
from .jobs import FigureJob
from .lineplot import render_lineplot


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="map-figures",
        description="Render percentile-binned choropleths and metric line "
                    "plots from smoothing-study CSV outputs.")
    parser.add_argument("--job", required=True,
                        help="path to a JSON figure-job document")
    args = parser.parse_args(argv)
    try:
        job = FigureJob.from_json(Path(args.job).read_text())
        if job.kind == "choropleth":
            out = render_choropleth(job)
        else:
            out = render_lineplot(job)
    except (FileNotFoundError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
