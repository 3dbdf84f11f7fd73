"""Squaring operator through a codebook: per-point error against the certified bound.

    python scripts/borel_pipeline.py [--epsilon 0.1] [--rows rows.csv]
"""

import argparse

from qpnet import tasks


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--epsilon", type=float, default=0.1)
    ap.add_argument("--rows", help="write per-test-point rows as CSV here")
    args = ap.parse_args()
    res = tasks.run_borel_task(tasks.BorelTask(epsilon=args.epsilon))
    rows = res["rows"]
    print(f"centers          {len(res['codebook'].centers)}")
    print(f"covering radius  {res['covering_radius']:.4f}")
    print(f"train loss       {res['train_loss']:.3e}")
    print(f"mean net error   {res['mean_net_error']:.4f}")
    print(f"bound holds      {sum(r['ok'] for r in rows)}/{len(rows)}")
    print(f"seconds          {res['seconds']:.1f}")
    if args.rows:
        keys = ["id", "index", "encoded_error", "net_error", "nearest_center", "bound", "ok"]
        with open(args.rows, "w") as fh:
            fh.write(",".join(keys) + "\n")
            for r in rows:
                fh.write(",".join(str(r[k]) for k in keys) + "\n")


if __name__ == "__main__":
    main()
