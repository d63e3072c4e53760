"""Train the recycled-qubit (MPS) generator for four (layers, ancilla) settings.

The settings are (2, 1), (2, 2), (2, 3) and (3, 2), i.e. 80, 120, 160 and 180
parameters for 4-bit images.  Results go to ``--out/mps_L<l>_V<v>``.
"""
import argparse
import sys

from qgan.cli import main as qgan

CASES = {"a": (2, 1), "b": (2, 2), "c": (2, 3), "d": (3, 2)}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--cases", nargs="+", choices=sorted(CASES), default=sorted(CASES))
    parser.add_argument("--runs", type=int, default=30)
    parser.add_argument("--epochs", type=int, default=5000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="results")
    args = parser.parse_args()
    for case in args.cases:
        layers, ancilla = CASES[case]
        code = qgan(["run", "--circuit", "mps", "--m", "2", "--layers", str(layers),
                     "--ancilla", str(ancilla), "--runs", str(args.runs), "--epochs", str(args.epochs),
                     "--seed", str(args.seed), "--out", f"{args.out}/mps_L{layers}_V{ancilla}", "-v"])
        if code:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
