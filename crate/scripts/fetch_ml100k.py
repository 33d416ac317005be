#!/usr/bin/env python3
"""Materialize MovieLens-100K as a tab-separated edge list.

The ratings table ships inside the pytorch-widedeep wheel, which is
reachable through a plain `pip download`. The file is written in the
original `u.data` layout: user \t item \t rating \t timestamp.

Usage: python3 scripts/fetch_ml100k.py [out_dir]   (default: data/ml-100k)
"""
import io
import pathlib
import subprocess
import sys
import tempfile
import zipfile

MEMBER = "pytorch_widedeep/datasets/data/MovieLens100k_data.parquet.brotli"


def main() -> int:
    out_dir = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else "data/ml-100k")
    out_dir.mkdir(parents=True, exist_ok=True)
    target = out_dir / "u.data"
    if target.exists():
        print(f"{target} already present")
        return 0
    import pandas as pd

    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "pytorch-widedeep==1.7.0",
             "--no-deps", "-q", "-d", tmp],
            check=True,
        )
        wheel = next(pathlib.Path(tmp).glob("pytorch_widedeep-*.whl"))
        raw = zipfile.ZipFile(wheel).read(MEMBER)
    df = pd.read_parquet(io.BytesIO(raw))
    df = df[["user_id", "movie_id", "rating", "timestamp"]]
    df.to_csv(target, sep="\t", header=False, index=False)
    print(f"wrote {len(df)} ratings to {target}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
