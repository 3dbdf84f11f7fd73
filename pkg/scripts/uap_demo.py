"""Train the scalar net on the integral functional and report held-out error.

    python scripts/uap_demo.py [--seed 42] [--steps 2000] [--history loss.csv]
"""

import argparse
from dataclasses import replace

from qpnet import tasks


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--history", help="write the per-step loss CSV here")
    args = ap.parse_args()
    task = tasks.ScalarTask()
    task.train = replace(task.train, seed=args.seed, steps=args.steps)
    res = tasks.run_scalar_task(task)
    print(f"train/test sizes   {res['n_train']}/{res['n_test']}")
    print(f"final train loss   {res['train_loss']:.3e}")
    print(f"test mse           {res['test_mse']:.3e}")
    print(f"test max abs error {res['test_max_abs_error']:.4f}")
    print(f"seconds            {res['seconds']:.1f}")
    if args.history:
        with open(args.history, "w") as fh:
            fh.write("step,loss\n" + "".join(f"{i},{v!r}\n" for i, v in enumerate(res["history"])))


if __name__ == "__main__":
    main()
