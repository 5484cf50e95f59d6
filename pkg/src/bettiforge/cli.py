"""Command-line entry point.

Subcommands: generate, betti, estimate, sweep, simulate, dequantize, verify.
Outputs are canonical JSON (sorted keys) or RFC-4180 CSV with LF endings and
17-significant-digit floats; every artifact embeds the resolved configuration
and seed, so identical config + seed means byte-identical files.

Exit status: 0 success, 1 verification failure, 2 invalid input, 3 desk-scale
limit exceeded.

The environment variable BETTIFORGE_THREADS caps internal parallelism (it is
applied to the BLAS thread pools before numerics are imported).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys


def _apply_thread_cap() -> None:
    cap = os.environ.get("BETTIFORGE_THREADS")
    if not cap:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, cap)


def _json_dump(payload: dict, path: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if path:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def parse_generator_spec(spec: str, seed: int):
    """family:param,param mini-grammar: kpartite:m,k | er:n,p | rips:n,k[,threshold]."""
    from . import graphs

    family, _, rest = spec.partition(":")
    args = [a for a in rest.split(",") if a]
    if family == "kpartite":
        if len(args) != 2:
            raise ValueError("kpartite spec needs m,k")
        return graphs.gen_kpartite(int(args[0]), int(args[1]))
    if family == "er":
        if len(args) != 2:
            raise ValueError("er spec needs n,p")
        return graphs.gen_erdos_renyi(int(args[0]), float(args[1]), seed)
    if family == "rips":
        if len(args) not in (2, 3):
            raise ValueError("rips spec needs n,k[,threshold]")
        pts = graphs.gen_rips_points(int(args[0]), int(args[1]))
        threshold = float(args[2]) if len(args) == 3 else 1.0
        return graphs.rips_graph(pts, threshold)
    raise ValueError(f"unknown generator family {family!r}")


def _load_graph(args):
    from . import graphs

    if getattr(args, "gen", None) and getattr(args, "graph", None):
        raise ValueError("give exactly one of --gen and --graph")
    if getattr(args, "gen", None):
        return parse_generator_spec(args.gen, getattr(args, "seed", 0))
    if getattr(args, "graph", None):
        try:
            with open(args.graph) as fh:
                return graphs.graph_from_json(fh.read())
        except OSError as exc:
            raise ValueError(f"cannot read graph file: {exc}") from exc
    raise ValueError("a graph source is required (--gen or --graph)")


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate(args) -> int:
    from . import graphs

    g = _load_graph(args)
    text = graphs.graph_to_json(g) + "\n"
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_betti(args) -> int:
    from . import graphs, homology

    g = _load_graph(args)
    beta = homology.betti_exact(g, args.k)
    summary = homology.spectrum(g, args.k)
    payload = {
        "n": g.n,
        "k": args.k,
        "cl_k": len(graphs.enumerate_cliques(g, args.k)),
        "betti": beta,
        "gap": summary.gap,
        "gamma_max": summary.top,
        "kappa": summary.kappa if math.isfinite(summary.kappa) else None,
        "config": {"gen": args.gen, "graph": args.graph, "k": args.k, "seed": args.seed},
    }
    _json_dump(payload, args.out)
    return 0


def _params_from_args(args):
    from . import resources

    if args.gen:
        family, _, rest = args.gen.partition(":")
        if family != "kpartite":
            raise ValueError("estimate --gen supports only the kpartite family")
        m, k = (int(x) for x in rest.split(","))
        if args.k is not None and args.k != k:
            raise ValueError("--k disagrees with the kpartite spec")
        return resources.kpartite_params(m, k, args.r, args.delta, c=args.c)
    needed = dict(n=args.n, k=args.k, edges=args.edges, cliques=args.cliques, betti=args.betti, gap=args.gap)
    missing = [name for name, val in needed.items() if val is None]
    if missing:
        raise ValueError(f"explicit estimate needs --{' --'.join(missing)}")
    return resources.ResourceParams(
        n=args.n,
        k=args.k,
        edge_count=args.edges,
        clique_count=args.cliques,
        betti=args.betti,
        lambda_min=args.gap,
        r=args.r,
        delta=args.delta,
        c=args.c,
    )


def cmd_estimate(args) -> int:
    from . import resources

    params = _params_from_args(args)
    est = resources.total_toffoli(params, refined_kaiser=args.refined_kaiser)
    payload = {
        "total_toffoli": est.total_toffoli,
        "dicke_toffoli": est.dicke_toffoli,
        "clique_reflect_toffoli": est.clique_reflect_toffoli,
        "block_encode_toffoli": est.block_encode_toffoli,
        "chebyshev_degree": est.chebyshev_degree,
        "amp_est_steps": est.amp_est_steps,
        "amp_amp_steps": est.amp_amp_steps,
        "breakdown": est.breakdown,
        "config": {
            "n": params.n,
            "k": params.k,
            "edges": params.edge_count,
            "cliques": params.clique_count,
            "betti": params.betti,
            "gap": params.lambda_min,
            "r": params.r,
            "delta": params.delta,
            "c": params.c,
            "refined_kaiser": args.refined_kaiser,
        },
    }
    _json_dump(payload, args.out)
    return 0


def _parse_range(spec: str) -> list[int]:
    parts = spec.split(":")
    if len(parts) != 3:
        raise ValueError("range spec is start:stop:step")
    start, stop, step = (int(p) for p in parts)
    if step <= 0 or stop < start:
        raise ValueError("range needs stop >= start and step > 0")
    return list(range(start, stop + 1, step))


def cmd_sweep(args) -> int:
    from . import resources

    if args.family != "kpartite":
        raise ValueError("only the kpartite family is implemented")
    rows = resources.sweep(
        args.k,
        _parse_range(args.n),
        args.r,
        args.delta,
        refined_kaiser=args.refined_kaiser,
        warn=lambda msg: print(f"warning: {msg}", file=sys.stderr),
    )
    text = resources.sweep_to_csv(rows)
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_simulate(args) -> int:
    import numpy as np

    if args.what in ("walk", "filter", "pipeline") and args.k is None:
        raise ValueError(f"simulate {args.what} needs --k")
    if args.what == "dicke":
        from .qsim import dicke

        res = dicke.dicke_success_prob(args.n, args.k, args.c, args.trials, args.seed)
        payload = {
            "failure_rate": res.failure_rate,
            "exact_failure": float(res.exact_failure) if res.exact_failure is not None else None,
            "config": {"what": "dicke", "n": args.n, "k": args.k, "c": args.c, "trials": args.trials, "seed": args.seed},
        }
    elif args.what == "walk":
        from .qsim import walkenc

        g = _load_graph(args)
        spec = walkenc.walk_spectrum(g, args.k)
        matched = np.sort(np.abs(np.sin(spec.walk_eigenphases)) * spec.lam)
        payload = {
            "hamiltonian_eigs": sorted(float(e) for e in spec.hamiltonian_eigs),
            "walk_eigenphases": [float(p) for p in spec.walk_eigenphases],
            "abs_sin_scaled": [float(v) for v in matched],
            "config": {"what": "walk", "gen": args.gen, "graph": args.graph, "k": args.k, "seed": args.seed},
        }
    elif args.what == "filter":
        from .qsim import filters
        from . import resources

        g = _load_graph(args)
        eps = args.epsilon
        ell = args.ell or resources.chebyshev_degree(eps, filters.dirac_gap(g, args.k), float(g.n))
        res = filters.apply_filter_to_state(g, args.k, ell, eps)
        payload = {
            "amplitude_sq": res.amplitude_sq,
            "ell": ell,
            "epsilon": eps,
            "config": {"what": "filter", "gen": args.gen, "graph": args.graph, "k": args.k, "epsilon": eps, "ell": ell, "seed": args.seed},
        }
    elif args.what == "qae":
        from .qsim import kaiser

        est = kaiser.amplitude_estimate_sim(args.amplitude, args.epsilon, args.delta, args.seed)
        alpha, n_win = kaiser.window_size(args.epsilon, args.delta)
        payload = {
            "estimate": est,
            "alpha": alpha,
            "N": n_win,
            "config": {"what": "qae", "amplitude": args.amplitude, "epsilon": args.epsilon, "delta": args.delta, "seed": args.seed},
        }
    else:  # pipeline
        from .qsim import pipeline

        g = _load_graph(args)
        res = pipeline.end_to_end_normalized_betti(g, args.k, args.r, args.delta, args.seed)
        payload = {
            "estimate": res.estimate,
            "target": res.target,
            "amplification_rounds": res.amplification_rounds,
            "filter_degree": res.filter_degree,
            "config": {"what": "pipeline", "gen": args.gen, "graph": args.graph, "k": args.k, "r": args.r, "delta": args.delta, "seed": args.seed},
        }
    _json_dump(payload, args.out)
    return 0


def cmd_dequantize(args) -> int:
    from .dequant import estimator

    g = _load_graph(args)
    cfg = estimator.PIMCConfig(
        t=args.t,
        r_t=args.slices,
        n_samp=args.samples,
        burn_in=args.burn_in,
        chain_thin=args.thin,
        seed=args.seed,
        chains=args.chains,
        sampler=args.sampler,
    )
    res = estimator.estimate_normalized_betti(g, args.k, cfg)
    payload = {
        "estimate": res.estimate,
        "stderr": res.stderr,
        "acceptance_rate": res.acceptance_rate,
        "clique_acceptance": res.clique_rejection_rate,
        "autocorr_time": res.autocorr_time,
        "D": res.D,
        "r_T": res.r_t,
        "n_samples": res.n_samples,
        "d_k": res.d_k,
        "config": {
            "gen": args.gen,
            "graph": args.graph,
            "k": args.k,
            "t": args.t,
            "slices": args.slices,
            "samples": args.samples,
            "burn_in": args.burn_in,
            "thin": args.thin,
            "chains": args.chains,
            "sampler": args.sampler,
            "seed": args.seed,
        },
    }
    _json_dump(payload, args.out)
    return 0


# ---------------------------------------------------------------------------
# verify


def _verify_props() -> list[tuple[str, bool, str]]:
    import numpy as np

    from . import graphs, homology

    out = []
    for m in (2, 3, 4):
        for k in (2, 3, 4):
            g = graphs.gen_kpartite(m, k)
            cl = len(graphs.enumerate_cliques(g, k))
            beta = homology.betti_exact(g, k)
            summary = homology.spectrum(g, k)
            lattice = bool(
                np.all(np.abs(summary.eigenvalues / m - np.round(summary.eigenvalues / m)) < 1e-8)
            )
            ok = (
                cl == m**k
                and beta == (m - 1) ** k
                and abs(summary.gap - m) < 1e-8
                and lattice
            )
            out.append(
                (
                    f"kpartite m={m} k={k}",
                    ok,
                    f"cliques {cl}, betti {beta}, gap {summary.gap:.6f}",
                )
            )
    for m in (2, 3, 4):
        pts = graphs.gen_rips_points(2 * m, 1)
        g = graphs.rips_graph(pts, 1.0)
        beta = homology.betti_exact(g, 2)
        out.append((f"rips m={m}", beta == m - 1, f"betti_1 {beta} want {m - 1}"))
    return out


def _verify_dicke() -> list[tuple[str, bool, str]]:
    from .qsim import dicke

    run1 = dicke.dicke_threshold_run([0b0110, 0b1110, 0b0111, 0b0010], 2, n_seed=4)
    ok1 = run1.success and run1.bits == (0, 1, 1, 1) and run1.selected == 0b0110
    run2 = dicke.dicke_threshold_run([0b0110, 0b1110, 0b0110, 0b0010], 2, n_seed=4)
    ok2 = not run2.success
    res = dicke.dicke_success_prob(64, 8, 8, 10**6, seed=2026)
    sig = math.sqrt(1 / 16 * 15 / 16 / 10**6)
    ok3 = abs(res.failure_rate - 1 / 16) <= 3 * sig
    return [
        ("worked example (success trace)", ok1, f"bits {run1.bits}, selected {run1.selected:04b}"),
        ("worked example (duplicate fails)", ok2, f"success {run2.success}"),
        (
            "failure rate vs 1/(2c)",
            ok3,
            f"rate {res.failure_rate:.5f} vs 0.0625 +- {3 * sig:.5f}",
        ),
    ]


def _verify_dequant_toy() -> list[tuple[str, bool, str]]:
    from . import graphs
    from .dequant import estimator

    g = graphs.gen_kpartite(2, 2)
    cfg = estimator.PIMCConfig(t=3.0, r_t=1, n_samp=20000, seed=7, chains=4)
    res = estimator.estimate_normalized_betti(g, 2, cfg)
    dev = abs(res.estimate - 1 / 6)
    ok = dev <= 3 * res.stderr
    return [
        (
            "toy normalized Betti (1/6)",
            ok,
            f"estimate {res.estimate:.5f} +- {res.stderr:.5f}",
        )
    ]


def cmd_verify(args) -> int:
    checks: list[tuple[str, bool, str]] = []
    if args.props or args.all:
        checks += _verify_props()
    if args.dicke or args.all:
        checks += _verify_dicke()
    if args.dequant_toy or args.all:
        checks += _verify_dequant_toy()
    if not checks:
        raise ValueError("nothing selected: use --props, --dicke, --dequant-toy or --all")
    failed = 0
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        failed += 0 if ok else 1
    if args.out:
        _json_dump(
            {"checks": [{"name": n, "passed": ok, "detail": d} for n, ok, d in checks]},
            args.out,
        )
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bettiforge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_graph_source(p):
        p.add_argument("--gen", help="generator spec family:params (kpartite:5,6 | er:60,0.12 | rips:12,2)")
        p.add_argument("--graph", help="path to a graph JSON file")

    p = sub.add_parser("generate", help="emit a graph in canonical JSON form")
    add_graph_source(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("betti", help="exact Betti number and Laplacian spectrum summary")
    add_graph_source(p)
    p.add_argument("--k", type=int, required=True, help="Hamming weight (clique size); reports beta_{k-1}")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_betti)

    p = sub.add_parser("estimate", help="Toffoli cost of one instance")
    p.add_argument("--gen", help="kpartite:m,k for analytic family parameters")
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--edges", type=int)
    p.add_argument("--cliques", type=int)
    p.add_argument("--betti", type=int)
    p.add_argument("--gap", type=float)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--c", type=int, default=8)
    p.add_argument("--refined-kaiser", action="store_true", dest="refined_kaiser")
    p.add_argument("--out")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("sweep", help="CSV cost table over the kpartite family")
    p.add_argument("--family", default="kpartite")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", required=True, help="range start:stop:step")
    p.add_argument("--r", type=float, default=1 / 20)
    p.add_argument("--delta", type=float, default=1 / 20)
    p.add_argument("--refined-kaiser", action="store_true", dest="refined_kaiser")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="desk-scale simulation of one subroutine")
    p.add_argument("what", choices=("dicke", "walk", "filter", "qae", "pipeline"))
    add_graph_source(p)
    p.add_argument("--k", type=int)
    p.add_argument("--n", type=int, default=64)
    p.add_argument("--c", type=int, default=8)
    p.add_argument("--trials", type=int, default=10**5)
    p.add_argument("--amplitude", type=float, default=0.3)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--r", type=float, default=0.1)
    p.add_argument("--ell", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("dequantize", help="path-integral Monte Carlo Betti estimation")
    add_graph_source(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--t", type=float, required=True, help="imaginary time")
    p.add_argument("--slices", type=int, required=True, help="Trotter slices r_T")
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--burn-in", type=int, default=2000, dest="burn_in")
    p.add_argument("--thin", type=int, default=8)
    p.add_argument("--chains", type=int, default=4)
    p.add_argument("--sampler", choices=("exact", "mh"), default="exact")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_dequantize)

    p = sub.add_parser("verify", help="run built-in verification suites")
    p.add_argument("--props", action="store_true", help="Betti/gap/clique-count propositions")
    p.add_argument("--dicke", action="store_true", help="threshold-preparation worked examples")
    p.add_argument("--dequant-toy", action="store_true", dest="dequant_toy")
    p.add_argument("--all", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    _apply_thread_cap()
    parser = build_parser()
    args = parser.parse_args(argv)
    from .errors import DeskScaleError

    try:
        return args.func(args)
    except DeskScaleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
