"""Command-line interface.

Subcommands: simulate, spate, evaluate, sinkhorn, train-toy,
sweep-lengthscale.  Every command is deterministic given its flags and
--seed.  Reports are CSV with frozen column orders; human-facing legend
lines go to stderr so stdout stays machine-readable.

Exit codes: 0 success, 1 validation or numerical error, 2 I/O or file
format error.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys

import numpy as np

from .errors import FormatError, NumericalError, ValidationError
from .expectation import DEFAULT_LENGTHSCALE
from .metrics import emd, knn_c2st, mmd_squared
from .nets import generator_forward
from .rng import SplitMix64
from .simulate import SimConfig, gen_moving_blobs, gen_pseudo_lgcp, gen_static_dynamic
from .spate import _embedding_variant
from .tensor import SpatioTemporalBatch, read_stgk, write_pgm, write_stgk
from .train import TrainConfig, train
from .transport import SinkhornConfig, mixed_sinkhorn_divergence, pairwise_base_cost, sinkhorn
from .weights import build_grid_weights

_SIM_KINDS = ("lgcp", "blobs", "weather")
_METRICS = ("emd", "mmd", "knn")
_LEGENDS = {
    "emd": "emd: lower is better",
    "mmd": "mmd: lower is better",
    "knn": "knn: closer to 0.5 is better",
}
_PGM_SAMPLE_ROWS = 4


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def _parse_dims(text: str) -> tuple[int, int, int, int]:
    parts = text.split(",")
    if len(parts) != 4:
        raise ValidationError(f"--dims wants B,T,H,W (four integers), got {text!r}")
    try:
        dims = tuple(int(p) for p in parts)
    except ValueError:
        raise ValidationError(f"--dims values must be integers, got {text!r}") from None
    return dims


def _single_channel_values(batch: SpatioTemporalBatch, what: str) -> np.ndarray:
    b, t, c, h, w = batch.dims
    if c != 1:
        raise ValidationError(f"{what} must be single-channel, got C={c}")
    return batch.values.reshape(b, t, h, w)


def cmd_simulate(args) -> None:
    b, t, h, w = _parse_dims(args.dims)
    cfg = SimConfig(
        batch=b, t_steps=t, height=h, width=w,
        radius=args.radius, rho=args.rho, amplitude=args.amplitude, seed=args.seed,
    )
    generator = {
        "lgcp": gen_pseudo_lgcp,
        "blobs": gen_moving_blobs,
        "weather": gen_static_dynamic,
    }[args.kind]
    batch = generator(cfg)
    write_stgk(batch, args.out)
    with open(args.out, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()
    print("dims=" + ",".join(str(d) for d in batch.dims))
    print(f"sha256={digest}")


def cmd_spate(args) -> None:
    batch = read_stgk(args.input)
    x = _single_channel_values(batch, "spate input")
    if args.variant == "ksw" and batch.dims[1] < 2:
        raise ValidationError("the sequential variant needs T >= 2")
    weights = build_grid_weights(batch.dims[3], batch.dims[4], args.scheme)
    field = _embedding_variant(x, weights, args.variant, args.lengthscale, 1e-12)
    if args.concat:
        out = np.stack([x, field], axis=2)
    else:
        out = field[:, :, None, :, :]
    write_stgk(SpatioTemporalBatch(out), args.out)
    print("dims=" + ",".join(str(d) for d in out.shape))


def _metric_rows(real: SpatioTemporalBatch, fake: SpatioTemporalBatch,
                 metric: str, seed: int) -> list[tuple[str, float, int, int]]:
    if real.dims != fake.dims:
        raise ValidationError(
            f"real and fake batches must share dims, got {real.dims} vs {fake.dims}")
    n = real.dims[0]
    p = real.values.reshape(n, -1)
    s = fake.values.reshape(n, -1)
    names = _METRICS if metric == "all" else (metric,)
    rows = []
    for name in names:
        if name == "emd":
            value = emd(p, s)
        elif name == "mmd":
            value = mmd_squared(p, s)
        else:
            value = knn_c2st(p, s, seed)
        rows.append((name, value, n, seed))
    return rows


def cmd_evaluate(args) -> None:
    real = read_stgk(args.real)
    fake = read_stgk(args.fake)
    rows = _metric_rows(real, fake, args.metric, args.seed)
    print("name,value,n,seed")
    for name, value, n, seed in rows:
        print(f"{name},{_fmt(value)},{n},{seed}")
        print(_LEGENDS[name], file=sys.stderr)


def cmd_sinkhorn(args) -> None:
    batch_a = read_stgk(args.a)
    batch_b = read_stgk(args.b)
    flats = [batch_a.values.reshape(batch_a.dims[0], -1),
             batch_b.values.reshape(batch_b.dims[0], -1)]
    names = ["w_ab"]
    if args.mixed:
        batch_a2 = read_stgk(args.mixed[0])
        batch_b2 = read_stgk(args.mixed[1])
        flats += [batch_a2.values.reshape(batch_a2.dims[0], -1),
                  batch_b2.values.reshape(batch_b2.dims[0], -1)]
        names = ["w_ab", "w_a2b2", "w_aa2", "w_bb2"]
    shape = flats[0].shape
    for fl in flats[1:]:
        if fl.shape != shape:
            raise ValidationError("all batches must share item count and frame dims")
    config = SinkhornConfig(epsilon=args.epsilon, iterations=args.iters)
    pairs = ((0, 1),) if not args.mixed else ((0, 1), (2, 3), (0, 2), (1, 3))
    print("term,value,marginal_error,iterations")
    results = []
    for name, (i, j) in zip(names, pairs):
        res = sinkhorn(pairwise_base_cost(flats[i], flats[j]), config)
        results.append(res)
        print(f"{name},{_fmt(res.value)},{_fmt(res.marginal_error)},{res.iterations}")
    if args.mixed:
        value = mixed_sinkhorn_divergence(flats[0], flats[1], flats[2], flats[3], config)
        err = max(r.marginal_error for r in results)
        its = max(r.iterations for r in results)
        print(f"mixed,{_fmt(value)},{_fmt(err)},{its}")


def _write_param_blob(values: np.ndarray, path: str) -> None:
    blob = values.reshape(1, 1, 1, 1, values.size)
    write_stgk(SpatioTemporalBatch(blob), path)


def _pgm_strip(samples: np.ndarray, path: str) -> None:
    """First few samples as a (rows * H) x (T * W) grayscale strip."""
    rows = [np.concatenate(list(seq), axis=1) for seq in samples[:_PGM_SAMPLE_ROWS]]
    write_pgm(np.concatenate(rows, axis=0), path)


def _run_train_toy(data: SpatioTemporalBatch, variant: str, lengthscale: float,
                   iters: int, seed: int, out_dir: str) -> dict:
    """Train, then write the checkpoint artifact set into out_dir.

    Sample sequences for samples.stgk/samples.pgm are generated from the
    trained parameters with latents from a fresh stream seeded seed + 1,
    one batch item per dataset item.
    """
    x = _single_channel_values(data, "training data")
    cfg = TrainConfig(iterations=iters, seed=seed, variant=variant, lengthscale=lengthscale)
    state = train(cfg, x)
    os.makedirs(out_dir, exist_ok=True)
    paths = {name: os.path.join(out_dir, name) for name in (
        "theta.stgk", "phi.stgk", "manifest.txt", "history.csv",
        "samples.stgk", "samples.pgm")}
    _write_param_blob(state.theta, paths["theta.stgk"])
    _write_param_blob(state.phi, paths["phi.stgk"])
    dims = state.dims
    manifest = [
        f"t_steps={dims.t_steps}", f"height={dims.height}", f"width={dims.width}",
        f"d_latent={dims.d_latent}", f"d_state={dims.d_state}",
        f"d_disc={dims.d_disc}", f"j_outputs={dims.j_outputs}",
        f"theta_params={state.theta.size}", f"phi_params={state.phi.size}",
        f"step={state.step}", f"seed={state.seed}",
        f"variant={cfg.variant}", f"lengthscale={_fmt(cfg.lengthscale)}",
    ]
    with open(paths["manifest.txt"], "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(manifest) + "\n")
    with open(paths["history.csv"], "w", encoding="ascii", newline="\n") as fh:
        fh.write("iteration,phi_loss,theta_loss\n")
        for row in state.history:
            fh.write(f"{int(row[0])},{_fmt(row[1])},{_fmt(row[2])}\n")
    gen = state.generator()
    stream = SplitMix64(seed + 1)
    n_samples, t_steps = data.dims[0], dims.t_steps
    latents = stream.normal_block(n_samples * t_steps * cfg.d_latent)
    latents = latents.reshape(n_samples, t_steps, cfg.d_latent)
    samples = np.stack([
        generator_forward(gen, latents[i], dims.height, dims.width)
        for i in range(n_samples)
    ])
    write_stgk(SpatioTemporalBatch(samples[:, :, None, :, :]), paths["samples.stgk"])
    _pgm_strip(samples, paths["samples.pgm"])
    return {"paths": paths, "state": state}


def cmd_train_toy(args) -> None:
    data = read_stgk(args.data)
    result = _run_train_toy(
        data, args.variant, args.lengthscale, args.iters, args.seed, args.out_dir)
    state = result["state"]
    print(f"iterations={state.step}")
    if state.history.shape[0]:
        print(f"phi_loss={_fmt(state.history[-1, 1])}")
        print(f"theta_loss={_fmt(state.history[-1, 2])}")
    print(f"out={args.out_dir}")


def _parse_sweep_values(text: str) -> list[tuple[str, float]]:
    tokens = [tok.strip() for tok in text.split(",") if tok.strip()]
    if not tokens:
        raise ValidationError("--values must list at least one lengthscale")
    values = []
    for tok in tokens:
        try:
            values.append((tok, float(tok)))
        except ValueError:
            raise ValidationError(f"bad lengthscale value {tok!r}") from None
    parsed = [v for _, v in values]
    if len(set(parsed)) != len(parsed):
        raise ValidationError(f"duplicate lengthscale in --values: {text!r}")
    for _, v in values:
        if not (v > 0.0):
            raise ValidationError(f"lengthscales must be positive, got {v}")
    return values


def cmd_sweep_lengthscale(args) -> None:
    data = read_stgk(args.data)
    values = _parse_sweep_values(args.values)
    lines = ["lengthscale,emd,mmd,knn"]
    for token, lengthscale in values:
        sub_dir = os.path.join(args.out_dir, f"l_{token}")
        result = _run_train_toy(
            data, args.variant, lengthscale, args.iters, args.seed, sub_dir)
        samples = read_stgk(result["paths"]["samples.stgk"])
        rows = {name: value for name, value, _, _ in
                _metric_rows(data, samples, "all", args.seed)}
        lines.append(
            f"{token},{_fmt(rows['emd'])},{_fmt(rows['mmd'])},{_fmt(rows['knn'])}")
    report = "\n".join(lines) + "\n"
    os.makedirs(args.out_dir, exist_ok=True)
    with open(os.path.join(args.out_dir, "sweep.csv"), "w", encoding="ascii",
              newline="\n") as fh:
        fh.write(report)
    sys.stdout.write(report)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spategan",
        description="Spatio-temporal association statistics, causal transport "
                    "metrics and a desk-scale adversarial trainer.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a synthetic (B,T,1,H,W) batch")
    p.add_argument("--kind", choices=_SIM_KINDS, required=True)
    p.add_argument("--dims", required=True, help="B,T,H,W")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--radius", type=int, default=2, help="blur/blob radius")
    p.add_argument("--rho", type=float, default=0.8, help="temporal correlation (lgcp)")
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("spate", help="association field of a single-channel batch")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--variant", choices=("k", "kw", "ksw", "moran"), default="ksw")
    p.add_argument("--lengthscale", type=float, default=DEFAULT_LENGTHSCALE)
    p.add_argument("--scheme", choices=("rook", "queen"), default="queen")
    p.add_argument("--concat", action="store_true",
                   help="write (B,T,2,H,W): data channel plus field channel")
    p.set_defaults(func=cmd_spate)

    p = sub.add_parser("evaluate", help="sample-quality metrics between two batches")
    p.add_argument("--real", required=True)
    p.add_argument("--fake", required=True)
    p.add_argument("--metric", choices=_METRICS + ("all",), default="all")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sinkhorn", help="entropic transport value between batches")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--epsilon", type=float, default=0.8)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--mixed", nargs=2, metavar=("A2", "B2"),
                   help="two more batches: report all four terms and the divergence")
    p.set_defaults(func=cmd_sinkhorn)

    p = sub.add_parser("train-toy", help="run the desk-scale adversarial trainer")
    p.add_argument("--data", required=True)
    p.add_argument("--variant", choices=("k", "kw", "ksw", "moran"), default="ksw")
    p.add_argument("--lengthscale", type=float, default=DEFAULT_LENGTHSCALE)
    p.add_argument("--iters", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_train_toy)

    p = sub.add_parser("sweep-lengthscale",
                       help="train per lengthscale and tabulate the metrics")
    p.add_argument("--data", required=True)
    p.add_argument("--values", default="1,10,20,30,50")
    p.add_argument("--variant", choices=("k", "kw", "ksw", "moran"), default="ksw")
    p.add_argument("--iters", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_sweep_lengthscale)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ValidationError, NumericalError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0
