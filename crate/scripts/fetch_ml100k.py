#!/usr/bin/env python3
"""Fetch MovieLens-100K and write it in MovieLens `.dat` layout.

The ratings are pulled from the `recbole` wheel, which bundles the
dataset, so only a pip index is needed. Output defaults to
data/ml-100k.dat (UserID::MovieID::Rating::Timestamp).
"""
import argparse
import pathlib
import subprocess
import sys
import tempfile
import zipfile

MEMBER = "recbole/dataset_example/ml-100k/ml-100k.inter"


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="data/ml-100k.dat")
    args = parser.parse_args()

    out = pathlib.Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "recbole==1.2.1",
             "--no-deps", "-q", "-d", tmp],
            check=True,
        )
        wheel = next(pathlib.Path(tmp).glob("recbole-*.whl"))
        lines = zipfile.ZipFile(wheel).read(MEMBER).decode().splitlines()

    with out.open("w") as f:
        for line in lines[1:]:
            user, item, rating, ts = line.split("\t")
            f.write(f"{user}::{item}::{int(float(rating))}::{int(float(ts))}\n")
    print(f"wrote {len(lines) - 1} ratings to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
