"""Command-line entry point: ``dpvarsel <command> [flags]``.

Every command writes ``manifest.json`` into its ``--out-dir``. The manifest
holds the command, every resolved flag value, the master seed and derived
stream ids; ``dpvarsel replay --manifest PATH`` re-executes it and reproduces
the output files byte for byte (``timing.txt`` excepted).

Exit status: 0 success, 2 usage error, 3 I/O or parse error, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis
from .beta_sampler import FACTORIZATIONS, NumericalError
from .datasets import (
    ParseError,
    ScenarioSpec,
    gen_scenario,
    load_csv,
    load_expression_matrix,
    load_gold_standard,
    read_truth,
    write_csv,
    write_truth,
)
from .gibbs import MODEL_NAMES, DrawStore, Hyper, ModelConfig, run_chain
from .network import edge_probabilities, gene_stream_id

EXIT_USAGE, EXIT_IO, EXIT_NUMERICAL = 2, 3, 4


class UsageError(Exception):
    pass


def _likelihood(value: str) -> str:
    value = value.lower()
    if value in ("gaussian", "normal"):
        return "gaussian"
    if value in ("t", "student", "student_t", "student-t"):
        return "student_t"
    raise argparse.ArgumentTypeError(f"unknown likelihood {value!r} (use gaussian or t)")


def _add_sampler_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--likelihood", type=_likelihood, default="gaussian", help="gaussian or t")
    p.add_argument("--nu", type=float, default=2.0, help="Student-t degrees of freedom")
    p.add_argument("--iterations", type=int, default=10_000)
    p.add_argument("--burn-in", type=int, default=None, help="default: iterations / 2")
    p.add_argument("--thin", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--v0", type=float, default=Hyper.v0, help="spike variance")
    p.add_argument("--beta-backend", choices=("auto", "direct", "fast"), default="auto")
    p.add_argument("--alpha-update", choices=("classical", "shifted"), default="classical")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dpvarsel", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic scenario")
    p.add_argument("--scenario", choices=("S1", "S2"), default="S2")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--likelihood", type=_likelihood, default="gaussian")
    p.add_argument("--nu", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("fit", help="run one Gibbs chain on a data CSV")
    p.add_argument("--data", required=True, help="CSV, last column is the response")
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--model", choices=sorted(MODEL_NAMES), default="dpss")
    _add_sampler_flags(p)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("select", help="recover the support from stored draws")
    p.add_argument("--draws", required=True, help="directory written by fit")
    p.add_argument("--method", choices=analysis.SELECTION_METHODS, default=None)
    p.add_argument("--zeta", type=float, default=0.05)
    p.add_argument("--threshold", type=float, default=0.1)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("evaluate", help="compare stored draws with a truth sidecar")
    p.add_argument("--draws", required=True)
    p.add_argument("--truth", default=None)
    p.add_argument("--method", choices=analysis.SELECTION_METHODS, default=None)
    p.add_argument("--zeta", type=float, default=0.05)
    p.add_argument("--threshold", type=float, default=0.1)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("network", help="per-gene regressions -> edge probabilities")
    p.add_argument("--expression", nargs="+", required=True)
    p.add_argument("--gold", nargs="*", default=[], help="DREAM edge lists, one per expression file")
    p.add_argument("--model", default="dpss", help="comma-separated subset of ss,hs,dpss,dphs")
    p.add_argument("--genes-as-rows", action="store_true")
    p.add_argument("--threshold", type=float, default=0.1)
    p.add_argument("--workers", type=int, default=1)
    _add_sampler_flags(p)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("sweep", help="replicate driver: scenario x models x seeds")
    p.add_argument("--scenario", choices=("S1", "S2"), default="S2")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--model", default="ss,dpss,hs,dphs")
    p.add_argument("--replicates", type=int, default=10)
    p.add_argument("--zeta", type=float, default=0.05)
    p.add_argument("--workers", type=int, default=1)
    _add_sampler_flags(p)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", default=None, help="write to a different directory")
    return parser


def _config(args, model: str, seed: int | None = None, stream_id: int = 0) -> ModelConfig:
    try:
        return ModelConfig.for_model(
            model,
            likelihood=args.likelihood,
            nu=args.nu,
            hyper=Hyper(v0=args.v0),
            iterations=args.iterations,
            burn_in=args.burn_in,
            thin=args.thin,
            seed=args.seed if seed is None else seed,
            stream_id=stream_id,
            beta_backend=args.beta_backend,
            alpha_update=args.alpha_update,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _models(spec: str) -> list:
    models = [m.strip() for m in spec.split(",") if m.strip()]
    bad = [m for m in models if m not in MODEL_NAMES]
    if bad or not models:
        raise UsageError(f"unknown model(s) {bad}; choose from {sorted(MODEL_NAMES)}")
    return models


def write_manifest(out: Path, args, outputs: list, stream_ids: dict | None = None, config=None) -> None:
    record = {
        "command": args.command,
        "args": {k: v for k, v in sorted(vars(args).items()) if k != "command"},
        "config": config,
        "seed": getattr(args, "seed", None),
        "stream_ids": stream_ids or {},
        "outputs": sorted(outputs),
        "version": __version__,
    }
    (out / "manifest.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")


def cmd_simulate(args) -> None:
    try:
        spec = ScenarioSpec(args.scenario, args.likelihood, args.n, args.p, args.seed, args.nu)
        data = gen_scenario(spec)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "data.csv", data.X, data.y)
    write_truth(out / "data.truth", data.truth, data.meta)
    write_manifest(out, args, ["data.csv", "data.truth"], {"data": 0})
    print(f"wrote {out / 'data.csv'} (n={data.n}, p={data.p}, components={data.truth.n_components})")


def cmd_fit(args) -> None:
    cfg = _config(args, args.model)
    data = load_csv(args.data, has_header=not args.no_header)
    out = Path(args.out_dir)
    before = dict(FACTORIZATIONS)
    store = run_chain(data, cfg)
    store.save(out)
    used = {k: FACTORIZATIONS[k] - before.get(k, 0) for k in ("pxp", "nxn")}
    (out / "timing.txt").write_text(f"wall_clock_seconds={store.wall_clock!r}\n")
    write_manifest(out, args, ["draws.csv", "draws.meta"], {"chain": 0}, cfg.flat())
    print(
        f"{cfg.name}: n={data.n} p={data.p} kept={len(store)} wall_clock={store.wall_clock:.2f}s "
        f"factorizations pxp={used['pxp']} nxn={used['nxn']}"
    )


def _load_draws(path) -> DrawStore:
    try:
        return DrawStore.load(path)
    except (OSError, KeyError, ValueError) as exc:
        raise ParseError(f"cannot read draws from {path}: {exc}") from None


def cmd_select(args) -> None:
    store = _load_draws(args.draws)
    try:
        report = analysis.select(store, args.method, args.zeta, args.threshold)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    analysis.write_text(out / "selection.txt", report.to_text())
    analysis.write_per_index(out / "selection.csv", report)
    write_manifest(out, args, ["selection.txt", "selection.csv"])
    print(report.to_text(), end="")


def cmd_evaluate(args) -> None:
    if not args.truth:
        raise UsageError("evaluate needs --truth (a .truth sidecar written by simulate)")
    store = _load_draws(args.draws)
    truth = read_truth(args.truth)
    if truth.beta0.shape[0] != store.p:
        raise UsageError(f"truth has p={truth.beta0.shape[0]} but draws have p={store.p}")
    try:
        report = analysis.select(store, args.method, args.zeta, args.threshold)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    tp, fp = analysis.tp_fp(report.support, truth.support)
    metrics = analysis.MetricsReport(
        rel_error=analysis.relative_error(store.posterior_mean(), truth.beta0),
        tp=tp,
        fp=fp,
        true_support_size=len(truth.support),
        K_posterior=analysis.k_posterior(store.K_draws) if store.K_draws is not None else None,
        extra={"method": report.method, "zeta": repr(args.zeta), "true_components": truth.n_components},
    )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    analysis.write_text(out / "metrics.txt", metrics.to_text())
    outputs = ["metrics.txt"]
    if metrics.K_posterior is not None:
        analysis.write_k_histogram(out / "k_histogram.csv", metrics.K_posterior)
        outputs.append("k_histogram.csv")
    write_manifest(out, args, outputs)
    print(metrics.to_text(), end="")


def cmd_network(args) -> None:
    models = _models(args.model)
    if args.gold and len(args.gold) != len(args.expression):
        raise UsageError("give one --gold file per --expression file, or none")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    outputs = []
    losses = {}
    n_genes = 0
    for k, path in enumerate(args.expression):
        expr, names = load_expression_matrix(path, genes_as_rows=args.genes_as_rows)
        n_genes = max(n_genes, len(names))
        gold = load_gold_standard(args.gold[k], names) if args.gold else None
        label = f"N{k + 1}"
        for model in models:
            cfg = _config(args, model)
            P = edge_probabilities(expr, cfg, args.threshold, args.workers)
            fname = f"edges_{label}_{model}.csv"
            with open(out / fname, "w") as fh:
                fh.write("target," + ",".join(names) + "\n")
                for i, row in enumerate(P):
                    fh.write(names[i] + "," + ",".join(repr(float(v)) for v in row) + "\n")
            outputs.append(fname)
            if gold is not None:
                losses[(label, model)] = analysis.log_loss(P, gold)
    if losses:
        with open(out / "log_loss.csv", "w") as fh:
            fh.write("network," + ",".join(models) + "\n")
            for k in range(len(args.expression)):
                label = f"N{k + 1}"
                fh.write(label + "," + ",".join(f"{losses[(label, m)]:.4f}" for m in models) + "\n")
        outputs.append("log_loss.csv")
        for (label, model), value in losses.items():
            print(f"{label} {model} log_loss={value:.4f}")
    streams = {f"gene_{g}": gene_stream_id(g) for g in range(n_genes)}
    write_manifest(out, args, outputs, streams)
    print(f"wrote {len(outputs)} file(s) to {out}")


def _sweep_task(task):
    spec, model, cfg, zeta = task
    data = gen_scenario(spec)
    store = run_chain(data, cfg)
    report = analysis.select(store, None, zeta)
    tp, fp = analysis.tp_fp(report.support, data.truth.support)
    k_mode = analysis.k_posterior(store.K_draws)["mode"] if store.K_draws is not None else ""
    return spec.seed, model, analysis.relative_error(store.posterior_mean(), data.truth.beta0), tp, fp, k_mode


def cmd_sweep(args) -> None:
    models = _models(args.model)
    tasks = []
    for seed in range(args.seed, args.seed + args.replicates):
        try:
            spec = ScenarioSpec(args.scenario, args.likelihood, args.n, args.p, seed, args.nu)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        for model in models:
            tasks.append((spec, model, _config(args, model, seed=seed), args.zeta))
    if args.workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_sweep_task, tasks))
    else:
        rows = [_sweep_task(t) for t in tasks]
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sweep.csv", "w") as fh:
        fh.write("seed,model,rel_error,tp,fp,K_mode\n")
        for seed, model, err, tp, fp, k in rows:
            fh.write(f"{seed},{model},{err!r},{tp},{fp},{k}\n")
    print("model  median_rel_error  median_tp  median_fp")
    for model in models:
        sel = [r for r in rows if r[1] == model]
        print(
            f"{model:5s}  {np.median([r[2] for r in sel]):.4f}  "
            f"{np.median([r[3] for r in sel]):g}  {np.median([r[4] for r in sel]):g}"
        )
    write_manifest(out, args, ["sweep.csv"])


def cmd_replay(args) -> None:
    try:
        record = json.loads(Path(args.manifest).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read manifest {args.manifest}: {exc}") from None
    replayed = argparse.Namespace(command=record["command"], **record["args"])
    if args.out_dir is not None:
        replayed.out_dir = args.out_dir
    COMMANDS[replayed.command](replayed)


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "select": cmd_select,
    "evaluate": cmd_evaluate,
    "network": cmd_network,
    "sweep": cmd_sweep,
    "replay": cmd_replay,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"dpvarsel {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, OSError) as exc:
        print(f"dpvarsel {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericalError as exc:
        print(f"dpvarsel {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except RuntimeError as exc:
        # aggregated per-gene failures
        print(f"dpvarsel {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
