#!/usr/bin/env python3
"""Build the small MNIST IDX fixture used by the test suites.

Source: the per-digit JSON files shipped in the `mnist` npm package
(10,000 MNIST digits, pixel intensities in [0,1] with three decimals).

    npm pack mnist && tar xzf mnist-*.tgz
    python3 tools/make_mnist_desk.py package/src/digits tests/data/mnist_desk

Writes train (200 per digit) and test (100 per digit) IDX pairs, with
digits interleaved so that any prefix is roughly class-balanced.
"""
import json
import struct
import sys
from pathlib import Path

TRAIN_PER_CLASS = 200
TEST_PER_CLASS = 100
SIDE = 28


def load_digits(src):
    out = []
    for d in range(10):
        raw = json.loads((src / f"{d}.json").read_text())["data"]
        px = SIDE * SIDE
        out.append([raw[i * px:(i + 1) * px] for i in range(len(raw) // px)])
    return out


def write_idx(prefix, images, labels):
    with open(f"{prefix}-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), SIDE, SIDE))
        for img in images:
            f.write(bytes(min(255, max(0, round(v * 255))) for v in img))
    with open(f"{prefix}-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def interleave(digits, start, count):
    images, labels = [], []
    for i in range(start, start + count):
        for d in range(10):
            images.append(digits[d][i])
            labels.append(d)
    return images, labels


def main():
    src, dst = Path(sys.argv[1]), Path(sys.argv[2])
    dst.mkdir(parents=True, exist_ok=True)
    digits = load_digits(src)
    write_idx(dst / "train", *interleave(digits, 0, TRAIN_PER_CLASS))
    write_idx(dst / "t10k", *interleave(digits, TRAIN_PER_CLASS, TEST_PER_CLASS))


if __name__ == "__main__":
    main()
