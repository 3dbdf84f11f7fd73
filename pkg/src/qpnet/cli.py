"""``qpnet`` command line: gen, split, fit, eval, embed, codebook, verify."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import data, tasks
from .activation import Componentwise, GateSpec
from .embed import builtin_encoder, encode_many, encoder_from_json, encoder_to_json, verify_cube
from .net import VectorNet, init_scalar, init_vector, load_model, save_model
from .quantize import build_codebook, save_codebook
from .train import config_dict, config_from_toml, fit, load_toml, predict
from .verify import report_json, verify

log = logging.getLogger("qpnet")

MODEL_DEFAULTS = {
    "kind": "scalar",  # or "vector"
    "encoder": "fourier",
    "n": 16,
    "j": 32,
    "m": 8,
    "activation": "rank_one",
    "gate": "gated_tanh",
    "psi_scale": 8.0,
    "target_encoder": "dyadic",
    "k": 16,
}


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _load_encoder(arg: str, dataset: data.Dataset, n: int):
    """An encoder JSON file, or the name of a builtin built on the data grid."""
    p = Path(arg)
    if p.exists():
        return encoder_from_json(json.loads(p.read_text()))
    return builtin_encoder(arg, dataset.records[0].sample.grid, n)


# ---------------------------------------------------------------------------


def cmd_gen(args) -> int:
    if args.family != "fourier":
        raise SystemExit(f"unknown family {args.family!r}")
    spec = data.FamilySpec(args.modes, args.bound, args.grid, args.count, args.seed)
    ds = data.gen_fourier_family(spec)
    if args.target:
        ds = data.attach_target(ds, args.target, args.t0)
    data.save_jsonl(ds, args.out)
    log.info("wrote %d records to %s", len(ds), args.out)
    return 0


def cmd_split(args) -> int:
    ds = data.load_jsonl(args.data)
    train, test = data.split(ds, args.test_fraction, args.seed)
    data.save_jsonl(train, args.train_out)
    data.save_jsonl(test, args.test_out)
    return 0


def _model_cfg(doc: dict) -> dict:
    cfg = dict(MODEL_DEFAULTS)
    extra = set(doc.get("model", {})) - set(cfg) - {"seed"}
    if extra:
        raise ValueError(f"unknown model keys {sorted(extra)}")
    cfg.update(doc.get("model", {}))
    return cfg


def _training_arrays(ds: data.Dataset, mc: dict):
    enc = builtin_encoder(mc["encoder"], ds.records[0].sample.grid, mc["n"])
    z = encode_many(enc, ds.samples, mc["n"])
    first = ds.records[0].target
    if first is None:
        raise ValueError("dataset has no targets; use gen --target or set [data].target")
    henc = None
    if isinstance(first, data.FunctionSample):
        henc = tasks.target_encoder(first.grid, mc["k"]) if mc["target_encoder"] == "dyadic" else builtin_encoder(mc["target_encoder"], first.grid, mc["k"])
        t = encode_many(henc, [r.target for r in ds.records], mc["k"])
    elif np.ndim(first) == 0:
        t = ds.scalar_targets()
    else:
        t = np.stack([np.asarray(r.target, dtype=np.float64) for r in ds.records])
    return enc, henc, z, t


def cmd_fit(args) -> int:
    doc = load_toml(args.config)
    cfg = config_from_toml(doc)
    mc = _model_cfg(doc)
    ds = data.load_jsonl(args.data)
    dsec = doc.get("data", {})
    if dsec.get("target") and ds.records and ds.records[0].target is None:
        ds = data.attach_target(ds, dsec["target"], dsec.get("t0"))
    enc, _, z, t = _training_arrays(ds, mc)
    n = mc["n"]
    act = tasks.scaled_rank_one(n, mc["psi_scale"], mc["gate"]) if mc["activation"] == "rank_one" else Componentwise(GateSpec(mc["gate"]))
    rng = np.random.default_rng(mc.get("seed", cfg.seed))
    if mc["kind"] == "vector" or t.ndim == 2:
        model = init_vector(n, mc["j"], mc["m"], t.shape[1], act, rng, enc)
    else:
        model = init_scalar(n, mc["j"], act, rng, enc)
    res = fit(model, (z, t), cfg)
    save_model(res.model, args.out)
    hist = Path(args.history) if args.history else Path(args.out).with_suffix(".loss.csv")
    hist.write_text(res.history_csv())
    log.info("final minibatch loss %.6g; config %s", res.history[-1], config_dict(cfg))
    return 0


def cmd_eval(args) -> int:
    model = load_model(args.model)
    ds = data.load_jsonl(args.data)
    if model.encoder is None:
        raise ValueError("model has no encoder; cannot evaluate on raw functions")
    n = model.truncation
    z = encode_many(model.encoder, ds.samples, n)
    first = ds.records[0].target
    if isinstance(first, data.FunctionSample):
        henc = tasks.target_encoder(first.grid, model.K)
        t = encode_many(henc, [r.target for r in ds.records], model.K)
    elif isinstance(model, VectorNet):
        t = np.stack([np.asarray(r.target, dtype=np.float64) for r in ds.records])
    else:
        t = ds.scalar_targets()
    pred = predict(model, z)
    err = np.abs(pred - t) if pred.ndim == 1 else np.linalg.norm(pred - t, axis=1)
    report = {
        "count": len(ds),
        "mse": float(np.mean((pred - t) ** 2)),
        "max_abs_error": float(np.max(err)),
        "mean_abs_error": float(np.mean(err)),
        "finite": bool(np.all(np.isfinite(pred))),
    }
    ok = report["finite"] and (args.max_error is None or report["max_abs_error"] < args.max_error)
    report["ok"] = bool(ok)
    _write_json(args.report, report)
    return 0 if ok else 1


def cmd_embed(args) -> int:
    ds = data.load_jsonl(args.data)
    enc = _load_encoder(args.encoder, ds, args.n)
    zs = encode_many(enc, ds.samples, args.n)
    ok = True
    with open(args.out, "w") as fh:
        for rid, z in zip(ds.ids, zs):
            rep = verify_cube(z)
            ok &= rep.ok
            fh.write(json.dumps({"id": rid, "z": z.tolist(), "cube_ok": rep.ok}) + "\n")
    if args.save_encoder:
        _write_json(args.save_encoder, encoder_to_json(enc))
    return 0 if ok else 1


def cmd_codebook(args) -> int:
    ds = data.load_jsonl(args.data)
    first = ds.records[0].target
    objs = [r.target for r in ds.records] if isinstance(first, data.FunctionSample) else ds.samples
    p = Path(args.encoder)
    if p.exists():
        enc = encoder_from_json(json.loads(p.read_text()))
    elif args.encoder == "dyadic":
        enc = tasks.target_encoder(objs[0].grid, args.n)
    else:
        enc = builtin_encoder(args.encoder, objs[0].grid, args.n)
    pts = encode_many(enc, objs, args.n)
    cb = build_codebook(pts, args.epsilon, payloads=ds.ids)
    cb.payload_refs = list(cb.payloads)
    save_codebook(cb, args.out)
    log.info("%d centers, covering radius %.6g", cb.R, cb.covering_radius)
    return 0 if cb.covering_radius <= args.epsilon else 1


def cmd_verify(args) -> int:
    report = report_json(verify(args.suite, args.seed))
    if args.report:
        _write_json(args.report, report)
    for name, s in report["suites"].items():
        print(f"{'PASS' if s['ok'] else 'FAIL'} {name} ({s['seconds']:.2f}s)")
        for c in s["checks"]:
            if not c["ok"]:
                print(f"    failed: {c['name']}")
    return 0 if report["ok"] else 1


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qpnet", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic function family")
    g.add_argument("--family", default="fourier")
    g.add_argument("--modes", type=int, default=3)
    g.add_argument("--bound", type=float, default=1.0)
    g.add_argument("--grid", type=int, default=1001)
    g.add_argument("--count", type=int, default=2048)
    g.add_argument("--seed", type=int, default=42)
    g.add_argument("--target", choices=data.TARGET_KINDS)
    g.add_argument("--t0", type=float)
    g.add_argument("--out", required=True)
    g.set_defaults(fn=cmd_gen)

    s = sub.add_parser("split", help="split a dataset into disjoint train/test files")
    s.add_argument("--data", required=True)
    s.add_argument("--test-fraction", type=float, default=0.2)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--train-out", required=True)
    s.add_argument("--test-out", required=True)
    s.set_defaults(fn=cmd_split)

    f = sub.add_parser("fit", help="train a model from a TOML config")
    f.add_argument("--config", required=True)
    f.add_argument("--data", required=True)
    f.add_argument("--out", required=True)
    f.add_argument("--history", help="loss CSV path (default: <out>.loss.csv)")
    f.set_defaults(fn=cmd_fit)

    e = sub.add_parser("eval", help="score a model on a dataset")
    e.add_argument("--model", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--report", required=True)
    e.add_argument("--max-error", type=float, help="fail unless max abs error is below this")
    e.set_defaults(fn=cmd_eval)

    m = sub.add_parser("embed", help="encode functions into cube points")
    m.add_argument("--encoder", required=True, help="encoder JSON file or builtin name (fourier, dyadic, intervals)")
    m.add_argument("--data", required=True)
    m.add_argument("--n", type=int, default=16)
    m.add_argument("--out", required=True)
    m.add_argument("--save-encoder", help="also write the encoder JSON")
    m.set_defaults(fn=cmd_embed)

    c = sub.add_parser("codebook", help="greedy epsilon-net over encoded targets")
    c.add_argument("--data", required=True)
    c.add_argument("--encoder", required=True, help="encoder JSON file or builtin name")
    c.add_argument("--epsilon", type=float, default=0.1)
    c.add_argument("--n", type=int, default=16)
    c.add_argument("--out", required=True)
    c.set_defaults(fn=cmd_codebook)

    v = sub.add_parser("verify", help="run invariant suites")
    v.add_argument("--suite", default="all")
    v.add_argument("--seed", type=int, default=42)
    v.add_argument("--report")
    v.set_defaults(fn=cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.fn(args)
    except (ValueError, OSError) as exc:
        print(f"qpnet: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
