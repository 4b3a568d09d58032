#!/usr/bin/env python3
"""Regenerates (or with --check, verifies) the byte fixtures in fixtures/.

Independent of the C++ code: own struct-based encoder, own xoshiro256**,
own list-style network step. Only the standard library is used.
"""
import argparse
import math
import pathlib
import struct
import sys

MASK = (1 << 64) - 1


def splitmix64(state):
    while True:
        state = (state + 0x9E3779B97F4A7C15) & MASK
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        yield z ^ (z >> 31)


def rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & MASK


class Xoshiro:
    def __init__(self, seed):
        sm = splitmix64(seed)
        self.s = [next(sm) for _ in range(4)]

    def next_u64(self):
        s = self.s
        result = (rotl((s[1] * 5) & MASK, 7) * 9) & MASK
        t = (s[1] << 17) & MASK
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = rotl(s[3], 45)
        return result

    def uniform(self):
        return (self.next_u64() >> 11) * 2.0**-53


def sample(rng):
    x = rng.uniform()
    y = rng.uniform()
    root = math.sqrt(x * y)
    return [x, y], [root, math.sqrt(root)]


def sigmoid(x):
    return 1.0 / (1.0 + math.exp(-x))


def dot(a, w):
    acc = 0.0
    for x, y in zip(a, w):
        acc = acc + x * y
    return acc


def ann(inp, w_in, w_hid, target):
    hidden = [sigmoid(dot(inp + [1.0], row)) for row in w_in]
    out = [sigmoid(dot(hidden + [1.0], row)) for row in w_hid]
    deltas = [o * (1.0 - o) * (o - t) for o, t in zip(out, target)]
    w_hid2 = [[w - d * i for w, i in zip(row, hidden + [1.0])] for row, d in zip(w_hid, deltas)]
    # Hidden deltas read the already-updated output weights.
    h_err = [dot([row[h] for row in w_hid2], deltas) * hv * (1.0 - hv) for h, hv in enumerate(hidden)]
    w_in2 = [[w - d * i for w, i in zip(row, inp + [1.0])] for row, d in zip(w_in, h_err)]
    return w_in2, w_hid2


def flat(w_in, w_hid):
    return [v for row in w_in for v in row] + [v for row in w_hid for v in row]


def unflat(f):
    return [f[0:3], f[3:6], f[6:9]], [f[9:13], f[13:17]]


def frame(payload):
    return struct.pack(">I", len(payload)) + payload


def model_bytes(f):
    return struct.pack("<17d", *f)


DYADIC = [i / 16.0 - 0.5 for i in range(17)]


def fixtures():
    w_in, w_hid = unflat(DYADIC)
    rng = Xoshiro(5555)
    for _ in range(250):
        x, t = sample(rng)
        w_in, w_hid = ann(x, w_in, w_hid, t)
    update = frame(b"\x02" + struct.pack(">III", 7, 3, 250) + model_bytes(flat(w_in, w_hid)))
    return {
        "golden_model.hex": model_bytes(DYADIC),
        "golden_assignment.hex": frame(b"\x01" + struct.pack(">I", 7) + model_bytes(DYADIC)),
        "golden_hello.hex": frame(b"\x00\x01" + struct.pack(">I", 3)),
        "golden_update.hex": update,
    }


def to_hex(data):
    return "".join(" ".join(f"{b:02x}" for b in data[i:i + 16]) + "\n" for i in range(0, len(data), 16))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--check", action="store_true", help="compare instead of writing")
    parser.add_argument("--dir", default=pathlib.Path(__file__).resolve().parent.parent / "fixtures", type=pathlib.Path)
    args = parser.parse_args()
    bad = 0
    for name, data in fixtures().items():
        path = args.dir / name
        if args.check:
            same = path.exists() and path.read_text() == to_hex(data)
            print(("ok   " if same else "DIFF ") + name)
            bad += not same
        else:
            path.write_text(to_hex(data))
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
