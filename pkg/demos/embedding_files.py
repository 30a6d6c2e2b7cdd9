"""Feature files on disk: writing, reading, and the failure modes.

The container is deliberately small: a fixed header naming the row
count, the dimension, and the scalar type, followed by the rows in
order.  Identical matrices always produce identical bytes, which is
what makes checksum-level reproducibility claims possible downstream.
"""

import tempfile
from pathlib import Path

import numpy as np

from synthcap import FormatError, read_embeddings, write_embeddings


def main() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        path = str(Path(tmp) / "demo.syne")

        matrix = np.array([[1.0, 0.0]], dtype=np.float32)
        write_embeddings(matrix, path)
        raw = Path(path).read_bytes()
        print(f"one row, two columns -> {len(raw)} bytes")
        print(f"  header+payload hex: {raw.hex()}")

        loaded = read_embeddings(path)
        print(f"  read back: {loaded.tolist()} dtype={loaded.dtype}")

        # round trips are byte-exact
        second = str(Path(tmp) / "again.syne")
        write_embeddings(loaded, second)
        print(f"  rewrite identical: {Path(second).read_bytes() == raw}")

        # truncation and trailing garbage are distinct, loud failures
        Path(second).write_bytes(raw[:-2])
        try:
            read_embeddings(second)
        except FormatError as exc:
            print(f"  truncated file: {exc}")
        Path(second).write_bytes(raw + b"\x00")
        try:
            read_embeddings(second)
        except FormatError as exc:
            print(f"  trailing bytes: {exc}")


if __name__ == "__main__":
    main()
