#!/usr/bin/env python3
"""Fetch the PHOIBLE 2.0 segment table and store it gzipped under src/typolex/data/.

Tries the canonical PHOIBLE release first. When GitHub is unreachable, falls back to
the copy of PHOIBLE 2.0 redistributed inside the ``allophant`` wheel on PyPI
(``allophant/package_data/allophoible.csv``), dropping the synthetic inventory 0
that allophant appends. Both routes yield the 3020 PHOIBLE 2.0 inventories.

PHOIBLE is (c) Moran & McCloy, released under CC BY-SA 3.0.
"""

import argparse
import csv
import gzip
import io
import subprocess
import sys
import tempfile
import urllib.request
import zipfile
from pathlib import Path

PHOIBLE_URL = "https://raw.githubusercontent.com/phoible/dev/v2.0/data/phoible.csv"
DEFAULT_OUT = Path(__file__).resolve().parents[1] / "src" / "typolex" / "data" / "phoible.csv.gz"


def from_github(timeout):
    with urllib.request.urlopen(PHOIBLE_URL, timeout=timeout) as resp:
        return resp.read().decode("utf-8")


def from_allophant_wheel():
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "--no-deps", "-q", "allophant==1.0.0", "-d", tmp],
            check=True,
        )
        wheel = next(Path(tmp).glob("allophant-*.whl"))
        with zipfile.ZipFile(wheel) as zf:
            raw = zf.read("allophant/package_data/allophoible.csv").decode("utf-8")
    # inventory 0 is allophant's pooled pseudo-inventory, not a PHOIBLE doculect
    reader = csv.reader(io.StringIO(raw))
    out = io.StringIO()
    writer = csv.writer(out, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
    header = next(reader)
    writer.writerow(header)
    inv_col = header.index("InventoryID")
    for row in reader:
        if row[inv_col] != "0":
            writer.writerow(row)
    return out.getvalue()


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=DEFAULT_OUT)
    parser.add_argument("--timeout", type=float, default=30.0)
    args = parser.parse_args(argv)

    try:
        text = from_github(args.timeout)
        source = PHOIBLE_URL
    except OSError as exc:
        print(f"direct download failed ({exc}); using the allophant wheel copy", file=sys.stderr)
        text = from_allophant_wheel()
        source = "allophant-1.0.0 wheel"

    args.out.parent.mkdir(parents=True, exist_ok=True)
    # mtime=0 keeps the archive byte-identical across runs
    with open(args.out, "wb") as fh, gzip.GzipFile(fileobj=fh, mode="wb", mtime=0, compresslevel=9) as gz:
        gz.write(text.encode("utf-8"))
    n_rows = text.count("\n") - 1
    print(f"wrote {args.out} ({n_rows} rows) from {source}")


if __name__ == "__main__":
    main()
