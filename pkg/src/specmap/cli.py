"""Command-line interface.

Subcommands: basis, convert, zoomout, icp, eval, synth, experiment.
Every randomized command takes an explicit --seed (default 0; never
wall-clock seeded), every report echoes the resolved configuration and
the package version, and reruns with identical flags and seeds write
byte-identical map, basis, and report files. Trace files additionally
carry measured wall-clock millis per iteration, which is the one field
that varies between reruns.

Map direction: the point-to-point map goes source -> target; the
functional map transfers functions target -> source.

Exit codes: 0 success, 1 computation error, 2 usage or I/O error.
"""

import argparse
import json
import sys

import numpy as np

from . import __version__
from ._accel import backend_name, set_threads
from .errors import MeshError, SpecmapError
from .fmap import (
    FunctionalMap,
    fmap_to_pointmap,
    load_fmap,
    load_pointmap,
    pointmap_to_fmap,
    save_fmap,
    save_pointmap,
)
from .mesh import load_mesh, save_mesh, total_area
from .metrics import map_report
from .refine import RefineConfig, icp_refine, zoomout
from .spectral import cotan_laplacian, load_basis, save_basis, spectral_basis
from .testbed import (
    make_asymmetric_blob,
    make_bent_pair,
    make_permutation_pair,
    run_energy_trace_experiment,
    run_stability_experiment,
    run_subsample_experiment,
)


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed the usage error
        return int(exc.code or 0)
    set_threads(getattr(args, "threads", 0))
    try:
        return args.run(args)
    except (MeshError, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SpecmapError, ValueError, IndexError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser():
    p = argparse.ArgumentParser(
        prog="specmap",
        description="Spectral shape correspondence: eigenbases, map "
        "conversion, iterative spectral upsampling, evaluation, and a "
        "synthetic testbed.",
    )
    p.add_argument("--version", action="version", version=f"specmap {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("basis", help="compute a Laplacian eigenbasis cache file")
    q.add_argument("--mesh", required=True)
    q.add_argument("--k", type=int, required=True, help="number of eigenpairs")
    q.add_argument("--out", required=True, help="basis cache output path")
    _common(q)
    q.set_defaults(run=_cmd_basis)

    q = sub.add_parser(
        "convert", help="convert between pointwise and functional maps"
    )
    _pair_args(q)
    g = q.add_mutually_exclusive_group(required=True)
    g.add_argument("--init-fmap", help="functional map input (writes --out-p2p)")
    g.add_argument("--init-p2p", help="pointwise map input (writes --out-fmap)")
    q.add_argument("--k", type=int, default=20,
                   help="functional map size for p2p input")
    q.add_argument("--nn", choices=("exact", "approx"), default="exact")
    q.add_argument("--out-p2p")
    q.add_argument("--out-fmap")
    _common(q)
    q.set_defaults(run=_cmd_convert)

    q = sub.add_parser("zoomout", help="refine a map by spectral upsampling")
    _pair_args(q)
    g = q.add_mutually_exclusive_group(required=True)
    g.add_argument("--init-fmap")
    g.add_argument("--init-p2p")
    q.add_argument("--k0", type=int, default=20, help="initial size")
    q.add_argument("--kmax", type=int, default=120, help="final size")
    q.add_argument("--step", type=int, default=1,
                   help="size increment per iteration (5 is the fast preset)")
    q.add_argument("--rectangular", action="store_true",
                   help="grow rows and columns at spectra-derived rates")
    q.add_argument("--rank-k", type=int, default=100,
                   help="probe size for the rectangular rank estimate")
    q.add_argument("--samples", type=int, default=0,
                   help="FPS sample count per shape (0 = all vertices)")
    q.add_argument("--nn", choices=("exact", "approx"), default="exact")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--probe", type=int, default=0,
                   help="energy probe size for the trace (0 = kmax)")
    q.add_argument("--out-p2p")
    q.add_argument("--out-fmap")
    q.add_argument("--trace", help="write per-level trace JSON")
    _common(q)
    q.set_defaults(run=_cmd_zoomout)

    q = sub.add_parser("icp", help="fixed-dimension refinement baseline")
    _pair_args(q)
    g = q.add_mutually_exclusive_group(required=True)
    g.add_argument("--init-fmap")
    g.add_argument("--init-p2p")
    q.add_argument("--k", type=int, default=120, help="refinement dimension")
    q.add_argument("--iters", type=int, default=15)
    q.add_argument("--nn", choices=("exact", "approx"), default="exact")
    q.add_argument("--probe", type=int, default=0)
    q.add_argument("--out-p2p")
    q.add_argument("--out-fmap")
    q.add_argument("--trace")
    _common(q)
    q.set_defaults(run=_cmd_icp)

    q = sub.add_parser("eval", help="measure map quality")
    _pair_args(q)
    q.add_argument("--map", required=True, help="pointwise map source -> target")
    q.add_argument("--map-reverse", help="target -> source map (enables bijectivity)")
    q.add_argument("--gt", help="ground-truth map (enables accuracy)")
    q.add_argument("--uncoverage-variant", choices=("vertex", "area"),
                   default="vertex")
    q.add_argument("--normalizer", type=float, default=0.0,
                   help="error normalizer (0 = sqrt of each shape's area)")
    q.add_argument("--report", required=True, help="report JSON output")
    _common(q)
    q.set_defaults(run=_cmd_eval)

    q = sub.add_parser("synth", help="generate a synthetic test pair")
    q.add_argument("--kind", choices=("perm", "bend"), required=True)
    q.add_argument("--n", type=int, default=642, help="target vertex count")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--bend", type=float, default=0.3,
                   help="bend angle in radians for --kind bend")
    q.add_argument("--out-prefix", required=True)
    _common(q)
    q.set_defaults(run=_cmd_synth)

    q = sub.add_parser("experiment", help="run a testbed experiment")
    q.add_argument("--name", choices=("stability", "energy-trace", "subsample"),
                   required=True)
    q.add_argument("--n", type=int, default=642)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--sigma", type=float, default=0.3, help="init noise level")
    q.add_argument("--trials", type=int, default=10)
    q.add_argument("--k0", type=int, default=4)
    q.add_argument("--kmax", type=int, default=50)
    q.add_argument("--step", type=int, default=1)
    q.add_argument("--icp-iters", type=int, default=15)
    q.add_argument("--samples", type=int, default=300)
    q.add_argument("--probe", type=int, default=0)
    q.add_argument("--report", required=True)
    _common(q)
    q.set_defaults(run=_cmd_experiment)

    return p


def _common(q):
    q.add_argument("--threads", type=int, default=0,
                   help="kernel threads (0 = implementation default)")


def _pair_args(q):
    q.add_argument("--source", required=True, help="source mesh (OFF/OBJ)")
    q.add_argument("--target", required=True, help="target mesh (OFF/OBJ)")
    q.add_argument("--basis-source", help="reuse a basis cache for the source")
    q.add_argument("--basis-target", help="reuse a basis cache for the target")


def _nn_mode(flag):
    return "approximate" if flag == "approx" else "exact"


def _load_pair(args, k_needed):
    mesh_M = load_mesh(args.source)
    mesh_N = load_mesh(args.target)
    lap_M = cotan_laplacian(mesh_M)
    lap_N = cotan_laplacian(mesh_N)
    if getattr(args, "basis_source", None):
        bM = load_basis(args.basis_source, lap_M.mass)
    else:
        bM = spectral_basis(lap_M, min(k_needed, mesh_M.n))
    if getattr(args, "basis_target", None):
        bN = load_basis(args.basis_target, lap_N.mass)
    else:
        bN = spectral_basis(lap_N, min(k_needed, mesh_N.n))
    if bM.k < k_needed or bN.k < k_needed:
        raise ValueError(
            f"need bases of size {k_needed}, have ({bM.k}, {bN.k})"
        )
    return mesh_M, mesh_N, bM, bN, lap_M


def _load_init(args, bM, bN, k0_M, k0_N):
    if args.init_fmap:
        return load_fmap(args.init_fmap)
    pm = load_pointmap(args.init_p2p, n_target=bN.n)
    return pointmap_to_fmap(pm, bM, bN, k0_M, k0_N)


def _write_json(path, payload):
    with open(path, "w", encoding="ascii") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _report(payload, args, **resolved):
    return {
        "version": __version__,
        "backend": backend_name(),
        "config": {"command": args.command, **resolved},
        **payload,
    }


# ---------------------------------------------------------------------------
# subcommands


def _cmd_basis(args):
    mesh = load_mesh(args.mesh)
    basis = spectral_basis(cotan_laplacian(mesh), args.k)
    save_basis(basis, args.out)
    print(f"wrote basis n={basis.n} k={basis.k} to {args.out}")
    return 0


def _cmd_convert(args):
    if args.init_fmap and not args.out_p2p:
        raise ValueError("--init-fmap needs --out-p2p")
    if args.init_p2p and not args.out_fmap:
        raise ValueError("--init-p2p needs --out-fmap")
    k = args.k
    if args.init_fmap:
        fm = load_fmap(args.init_fmap)
        k = max(fm.k_M, fm.k_N)
    _, _, bM, bN, _ = _load_pair(args, k)
    if args.init_fmap:
        pm = fmap_to_pointmap(fm, bM, bN, _nn_mode(args.nn))
        save_pointmap(pm, args.out_p2p)
        print(f"wrote pointwise map ({len(pm)} vertices) to {args.out_p2p}")
    else:
        pm = load_pointmap(args.init_p2p, n_target=bN.n)
        fm = pointmap_to_fmap(pm, bM, bN, args.k, args.k)
        save_fmap(fm, args.out_fmap)
        print(f"wrote {fm.k_M}x{fm.k_N} functional map to {args.out_fmap}")
    return 0


def _cmd_zoomout(args):
    cfg = RefineConfig(
        k0_M=args.k0, k0_N=args.k0, kmax_M=args.kmax, kmax_N=args.kmax,
        step=args.step, nn_mode=_nn_mode(args.nn), sample_count=args.samples,
        seed=args.seed, rectangular=args.rectangular,
        rank_estimate_K=args.rank_k,
    )
    cfg.validate()
    mesh_M, mesh_N, bM, bN, _ = _load_pair(args, args.kmax)
    init = _load_init(args, bM, bN, cfg.k0_M, cfg.k0_N)
    probe = args.probe or None
    fm, pm, trace = zoomout(init, bM, bN, cfg, probe_k=probe,
                            mesh_M=mesh_M, mesh_N=mesh_N)
    if args.out_p2p:
        save_pointmap(pm, args.out_p2p)
    if args.out_fmap:
        save_fmap(fm, args.out_fmap)
    if args.trace:
        _write_json(args.trace, trace.to_json())
    print(
        f"refined to {fm.k_M}x{fm.k_N} over {len(trace)} levels, "
        f"final energy {trace.records[-1]['energy']:.6g}"
    )
    return 0


def _cmd_icp(args):
    mesh_M, mesh_N, bM, bN, _ = _load_pair(args, args.k)
    init = _load_init(args, bM, bN, args.k, args.k)
    if init.k_M != args.k or init.k_N != args.k:
        init = FunctionalMap(init.C[: args.k, : args.k])
    probe = args.probe or None
    fm, pm, trace = icp_refine(init, bM, bN, args.iters, probe_k=probe,
                               nn_mode=_nn_mode(args.nn))
    if args.out_p2p:
        save_pointmap(pm, args.out_p2p)
    if args.out_fmap:
        save_fmap(fm, args.out_fmap)
    if args.trace:
        _write_json(args.trace, trace.to_json())
    print(
        f"{args.iters} iterations at size {args.k}, "
        f"final energy {trace.records[-1]['energy']:.6g}"
    )
    return 0


def _cmd_eval(args):
    mesh_M = load_mesh(args.source)
    mesh_N = load_mesh(args.target)
    pm = load_pointmap(args.map, n_target=mesh_N.n)
    if len(pm) != mesh_M.n:
        raise ValueError(
            f"map covers {len(pm)} vertices, source mesh has {mesh_M.n}"
        )
    rev = load_pointmap(args.map_reverse, n_target=mesh_M.n) if args.map_reverse else None
    gt = load_pointmap(args.gt, n_target=mesh_N.n) if args.gt else None
    norm = args.normalizer if args.normalizer > 0 else None
    report = map_report(
        mesh_M, mesh_N, pm, map_NM=rev, gt=gt,
        normalizer_M=norm, normalizer_N=norm,
        uncoverage_variant=args.uncoverage_variant,
    )
    payload = _report(
        report.to_dict(), args,
        source=args.source, target=args.target, map=args.map,
        map_reverse=args.map_reverse, gt=args.gt,
        uncoverage_variant=args.uncoverage_variant,
        normalizer=args.normalizer if args.normalizer > 0 else "sqrt(total_area)",
    )
    _write_json(args.report, payload)
    print(json.dumps(report.to_dict(), indent=2))
    return 0


def _cmd_synth(args):
    mesh = make_asymmetric_blob(args.n, args.seed)
    if args.kind == "perm":
        pair = make_permutation_pair(mesh, args.seed)
    else:
        pair = make_bent_pair(mesh, args.bend, args.seed)
    prefix = args.out_prefix
    save_mesh(pair.mesh_M, f"{prefix}_source.off")
    save_mesh(pair.mesh_N, f"{prefix}_target.off")
    save_pointmap(pair.gt_map, f"{prefix}_gt.txt")
    save_pointmap(pair.gt_map_rev, f"{prefix}_gt_rev.txt")
    print(
        f"wrote {pair.kind} pair (n={pair.mesh_M.n}, "
        f"area {total_area(pair.mesh_M):.4f}) to {prefix}_*"
    )
    return 0


def _cmd_experiment(args):
    mesh = make_asymmetric_blob(args.n, args.seed)
    pair = make_permutation_pair(mesh, args.seed)
    probe = args.probe or None
    cfg = RefineConfig(
        k0_M=args.k0, k0_N=args.k0, kmax_M=args.kmax, kmax_N=args.kmax,
        step=args.step, seed=args.seed,
    )
    cfg.validate()
    if args.name == "stability":
        result = run_stability_experiment(
            pair, args.sigma, args.trials, cfg, probe_k=probe,
            measure_init_error=True,
        )
    elif args.name == "energy-trace":
        result = run_energy_trace_experiment(
            pair, cfg, args.icp_iters, sigma=args.sigma,
            noise_seed=args.seed, probe_k=probe,
        )
    else:
        result = run_subsample_experiment(pair, cfg, args.samples, probe_k=probe)
    payload = _report(
        result.to_dict(), args,
        name=args.name, n=args.n, seed=args.seed, sigma=args.sigma,
        trials=args.trials, k0=args.k0, kmax=args.kmax, step=args.step,
        icp_iters=args.icp_iters, samples=args.samples, probe=args.probe,
    )
    _write_json(args.report, payload)
    summary = result.records[-1] if result.records else {}
    print(f"experiment {args.name}: {json.dumps(summary)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
