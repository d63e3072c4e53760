"""Train the layered generator at depths 1-6 on 2x2 Bars-and-Stripes.

Each depth writes its own directory under ``--out`` (``layered_L<k>``).
Defaults follow the full protocol (30 runs, 5000 epochs); pass smaller
``--runs``/``--epochs`` for a quick look.
"""
import argparse
import sys

from qgan.cli import main as qgan


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--depths", type=int, nargs="+", default=[1, 2, 3, 4, 5, 6])
    parser.add_argument("--runs", type=int, default=30)
    parser.add_argument("--epochs", type=int, default=5000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="results")
    args = parser.parse_args()
    for depth in args.depths:
        code = qgan(["run", "--circuit", "layered", "--m", "2", "--layers", str(depth),
                     "--runs", str(args.runs), "--epochs", str(args.epochs), "--seed", str(args.seed),
                     "--out", f"{args.out}/layered_L{depth}", "-v"])
        if code:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
