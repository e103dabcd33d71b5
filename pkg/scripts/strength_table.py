#!/usr/bin/env python3
"""Print the second-preimage strength of the truncated-SHA-512 binding for a
grid of output lengths and maximum input lengths.

The interesting row is n=511: only an output one bit short of the full
digest ever sees the input-length penalty. Every output length actually used
for control words (128/192/256) keeps full strength at any input length a
deployment can produce.
"""

import argparse

from cwbind.binding import second_preimage_strength


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, nargs="*", default=[128, 192, 256, 384, 511])
    parser.add_argument("--exponents", type=int, nargs="*",
                        default=[10, 13, 16, 20, 25, 30, 35, 40])
    args = parser.parse_args()

    header = "output/bits " + " ".join(f"L=2^{e}".rjust(8) for e in args.exponents)
    print(header)
    print("-" * len(header))
    for n in args.n:
        cells = [str(second_preimage_strength(n, 2**e)).rjust(8) for e in args.exponents]
        print(f"{n:>11} " + " ".join(cells))

    sender_counts = [1, 2, 4, 8, 16]
    print("\nmax binding input per sender count (32-byte keys, 16-byte rand):")
    for count in sender_counts:
        bits = (count * 32 + 16) * 8
        strengths = {n: second_preimage_strength(n, max(bits, 2**10)) for n in (128, 192, 256)}
        print(f"  {count:>2} senders: {bits:>5} bits -> strength {strengths}")


if __name__ == "__main__":
    main()
