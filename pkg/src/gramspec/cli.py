"""Configuration-driven command line front end.

One JSON config file describes the model (profile, limit measure, ratio,
ensemble, noise, grids, solver options); subcommands run the workflows:

    gramspec solve    --config cfg.json --out outdir
    gramspec density  --config cfg.json --out outdir
    gramspec simulate --config cfg.json --out outdir [--seeds 1,2,3]
    gramspec compare  --config cfg.json --out outdir [--sim-dir dir]
    gramspec capacity --config cfg.json --out outdir [--bits]

Numeric tables are CSV, reports are JSON; every output embeds a hash of
the canonical config so downstream steps can refuse mismatched artifacts.
Reruns with identical configs and seeds are byte-identical.

Exit codes: 0 success, 2 config validation, 3 no convergence, 4 numerical
failure.
"""

import argparse
import concurrent.futures
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import capacity as cap
from . import master_solver, measures, simulator, spectra
from .errors import (ConfigError, DegenerateDenominator, InvalidInput,
                     NoConvergence, NumericalFailure)

DEFAULT_QUAD_NODES = 256
DEFAULT_EPSILON = 1e-3
DEFAULT_X_POINTS = 2000


def config_hash(cfg):
    """Stable short hash of the canonical JSON form."""
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def load_config(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"line {exc.lineno}, col {exc.colno}: {exc.msg}") from exc


def _require(cfg, field, types, where=""):
    if field not in cfg:
        raise ConfigError(where + field, "missing required field")
    value = cfg[field]
    if types is not None and not isinstance(value, types):
        raise ConfigError(where + field, f"expected {types}, got {type(value).__name__}")
    return value


def build_profile(cfg):
    spec = _require(cfg, "profile", dict)
    kind = _require(spec, "kind", str, "profile.")
    try:
        if kind == "constant":
            return measures.VarianceProfile.constant(_require(spec, "value", (int, float), "profile."))
        if kind in ("separable", "separable-product"):
            return measures.VarianceProfile.separable(
                _require(spec, "g_values", list, "profile."),
                _require(spec, "h_values", list, "profile."))
        if kind in ("bilinear", "bilinear-grid"):
            return measures.VarianceProfile.bilinear(_require(spec, "values", list, "profile."))
        if kind in ("blocks", "piecewise-constant-blocks"):
            return measures.VarianceProfile.blocks(_require(spec, "values", list, "profile."))
    except InvalidInput as exc:
        raise ConfigError("profile", str(exc)) from exc
    raise ConfigError("profile.kind", f"unknown kind {kind!r}")


def build_H(cfg):
    spec = _require(cfg, "H", dict)
    kind = _require(spec, "type", str, "H.")
    try:
        if kind == "diagonal":
            return measures.empirical_H_from_diagonal(_require(spec, "lambda_diag", list, "H."))
        if kind == "product":
            pairs = [tuple(p) for p in _require(spec, "h_lambda", list, "H.")]
            return measures.product_H(pairs, int(spec.get("M", 256)))
        if kind == "uniform":
            return measures.uniform_H(int(spec.get("M", 256)), float(spec.get("lambda", 0.0)))
        if kind == "atoms":
            atoms = _require(spec, "atoms", list, "H.")
            u, lam, w = (np.asarray(col, dtype=float) for col in zip(*atoms))
            return measures.JointLimitMeasure(u, lam, w)
    except (InvalidInput, TypeError, ValueError) as exc:
        raise ConfigError("H", str(exc)) from exc
    raise ConfigError("H.type", f"unknown type {kind!r}")


def resolve_ratio(cfg):
    """Ratio c in (0, 1]; c > 1 needs an explicit transpose directive."""
    transposed = bool(cfg.get("transpose", False))
    if "c" in cfg:
        c = cfg["c"]
        if not isinstance(c, (int, float)) or not c > 0:
            raise ConfigError("c", "must be a number > 0")
        c = float(c)
        if c > 1.0:
            if not transposed:
                raise ConfigError("c", f"c={c} > 1; set \"transpose\": true to "
                                       "relabel the two Gram sides")
            c = 1.0 / c
    elif "ensemble" in cfg:
        n_rows, n_cols = _ensemble_dims(cfg)
        c = n_rows / n_cols
        if c > 1.0:
            c, transposed = 1.0 / c, True
    else:
        raise ConfigError("c", "missing (give c or an ensemble)")
    if "ensemble" in cfg and "c" in cfg:
        n_rows, n_cols = _ensemble_dims(cfg)
        ratio = min(n_rows, n_cols) / max(n_rows, n_cols)
        if abs(c - ratio) > 1e-12:
            raise ConfigError("c", f"c={c} conflicts with ensemble N/n={ratio}")
    return c, transposed


def _ensemble_dims(cfg):
    ens = _require(cfg, "ensemble", dict)
    n_rows = _require(ens, "N", int, "ensemble.")
    n_cols = _require(ens, "n", int, "ensemble.")
    if n_rows < 1 or n_cols < 1:
        raise ConfigError("ensemble", "dimensions must be >= 1")
    return n_rows, n_cols


def build_quad(cfg, c):
    return measures.QuadratureRule.midpoint(c, int(cfg.get("quadrature_nodes", DEFAULT_QUAD_NODES)))


def build_solver_opts(cfg):
    spec = cfg.get("solver", {})
    try:
        return master_solver.SolverOptions(
            tol=float(spec.get("tol", 1e-12)),
            max_iters=int(spec.get("max_iters", 10000)),
            damping=spec.get("damping"),
            min_denominator=float(spec.get("min_denominator", 1e-14)),
        )
    except InvalidInput as exc:
        raise ConfigError("solver", str(exc)) from exc


def build_z_grid(cfg):
    raw = _require(cfg, "z_grid", list)
    try:
        zs = [complex(float(re), float(im)) for re, im in raw]
    except (TypeError, ValueError) as exc:
        raise ConfigError("z_grid", "expected a list of [re, im] pairs") from exc
    if not zs:
        raise ConfigError("z_grid", "must be nonempty")
    if any(z.imag <= 0 for z in zs):
        raise ConfigError("z_grid", "all points need Im(z) > 0")
    return zs


def build_x_grid(cfg, profile, H, c):
    spec = cfg.get("x_grid", {})
    if isinstance(spec, list):
        grid = np.asarray(spec, dtype=float)
        if grid.size < 2 or np.any(np.diff(grid) <= 0):
            raise ConfigError("x_grid", "explicit grid must be increasing, length >= 2")
        return grid
    points = int(spec.get("points", DEFAULT_X_POINTS))
    if "max" in spec:
        return np.linspace(float(spec.get("min", 0.0)), float(spec["max"]), points)
    return spectra.default_x_grid(profile, H, c, points=points)


def resolve_seeds(cfg, override):
    if override is not None:
        return override
    seeds = cfg.get("seeds", [0])
    if not isinstance(seeds, list) or not seeds:
        raise ConfigError("seeds", "must be a nonempty list of integers")
    return [int(s) for s in seeds]


def build_lambda_diag(cfg, n_rows):
    spec = _require(cfg, "H", dict)
    kind = spec.get("type")
    if kind == "diagonal":
        lam = np.asarray(_require(spec, "lambda_diag", list, "H."), dtype=float)
        if lam.size != n_rows:
            raise ConfigError("H.lambda_diag", f"length {lam.size} != N={n_rows}")
        return lam
    if kind == "uniform":
        return np.full(n_rows, np.sqrt(float(spec.get("lambda", 0.0))))
    if kind == "product":
        pairs = [tuple(p) for p in _require(spec, "h_lambda", list, "H.")]
        try:
            return np.sqrt(measures.product_H(pairs, n_rows).lam)
        except InvalidInput as exc:
            raise ConfigError("H.h_lambda", str(exc)) from exc
    raise ConfigError("H.type", f"type {kind!r} cannot drive a simulation "
                                "(use diagonal, uniform or product)")


def build_ensemble(cfg, seed):
    spec = _require(cfg, "ensemble", dict)
    law = _require(spec, "entry_law", str, "ensemble.")
    n_rows, n_cols = _ensemble_dims(cfg)
    transposed = n_rows > n_cols
    if transposed:
        n_rows, n_cols = n_cols, n_rows
    try:
        return simulator.EnsembleSpec(law, seed, n_rows, n_cols), transposed
    except InvalidInput as exc:
        raise ConfigError("ensemble", str(exc)) from exc


def _write_csv(path, header_meta, columns, rows):
    lines = [f"# {k}: {v}" for k, v in header_meta.items()]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(repr(v) if isinstance(v, float) else str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _meta(cfg):
    return {"config_hash": config_hash(cfg), "rng": simulator.RNG_NAME,
            "config": json.dumps(cfg, sort_keys=True, separators=(",", ":"))}


def cmd_solve(cfg, out_dir, threads):
    profile = build_profile(cfg)
    H = build_H(cfg)
    c, _ = resolve_ratio(cfg)
    quad = build_quad(cfg, c)
    opts = build_solver_opts(cfg)
    zs = build_z_grid(cfg)

    def one(z):
        rep = master_solver.solve_with_continuation([z], c, H, profile, quad, opts)[z]
        f, ft, dual = spectra.stieltjes_pair(rep, c, z)
        return (z.real, z.imag, f.real, f.imag, ft.real, ft.imag, dual, rep.iterations)

    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(one, zs))
    else:
        rows = [one(z) for z in zs]
    rows.sort(key=lambda r: (r[0], r[1]))
    _write_csv(out_dir / "solve.csv", _meta(cfg),
               ["z_re", "z_im", "f_re", "f_im", "ft_re", "ft_im", "dual_resid", "iters"],
               rows)
    return 0


def _limit_curve(cfg, profile, H, c, quad, opts):
    epsilon = float(cfg.get("epsilon", DEFAULT_EPSILON))
    x_grid = build_x_grid(cfg, profile, H, c)
    transpose = bool(cfg.get("transpose_curve", False))
    return spectra.limit_density(H, profile, quad, c, x_grid, epsilon, opts,
                                 transpose=transpose)


def cmd_density(cfg, out_dir, threads):
    profile = build_profile(cfg)
    H = build_H(cfg)
    c, _ = resolve_ratio(cfg)
    quad = build_quad(cfg, c)
    opts = build_solver_opts(cfg)
    curve = _limit_curve(cfg, profile, H, c, quad, opts)
    _write_csv(out_dir / "density.csv", _meta(cfg), ["x", "density"],
               list(zip(curve.x_grid.tolist(), curve.values.tolist())))
    summary = {
        "config_hash": config_hash(cfg),
        "rng": simulator.RNG_NAME,
        "epsilon": curve.epsilon,
        "atom_at_zero": curve.atom_at_zero,
        "mass": curve.mass(),
        "mass_defect": 1.0 - curve.mass(),
    }
    (out_dir / "density.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return 0


def _simulate_all(cfg, seeds, threads):
    profile = build_profile(cfg)

    def one(seed):
        spec, transposed = build_ensemble(cfg, seed)
        lam = build_lambda_diag(cfg, spec.N)
        sample = simulator.sample_spectrum(spec, profile, lam)
        return seed, sample, transposed

    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(one, seeds))
    else:
        results = [one(s) for s in seeds]
    return sorted(results, key=lambda r: r[0])


def cmd_simulate(cfg, out_dir, threads, seeds_override):
    seeds = resolve_seeds(cfg, seeds_override)
    meta = _meta(cfg)
    for seed, sample, transposed in _simulate_all(cfg, seeds, threads):
        extra = dict(meta)
        extra["transposed"] = transposed
        simulator.export_csv(sample, out_dir / f"eigenvalues_seed{seed}.csv", extra)
    return 0


def _pad_to_transposed(sample):
    n_rows, n_cols = sample.dims
    padded = np.concatenate([np.zeros(n_cols - n_rows), sample.eigenvalues])
    return simulator.SpectrumSample(padded, sample.seed, (n_cols, n_cols))


def cmd_compare(cfg, out_dir, threads, seeds_override, sim_dir):
    profile = build_profile(cfg)
    H = build_H(cfg)
    c, _ = resolve_ratio(cfg)
    quad = build_quad(cfg, c)
    opts = build_solver_opts(cfg)
    want_hash = config_hash(cfg)
    if sim_dir is not None:
        samples = []
        paths = sorted(Path(sim_dir).glob("eigenvalues_seed*.csv"))
        if not paths:
            raise ConfigError("sim-dir", f"no eigenvalue CSVs under {sim_dir}")
        for path in paths:
            sample, meta = simulator.load_csv(path)
            if meta.get("config_hash") != want_hash:
                raise ConfigError("sim-dir", f"{path.name} was produced by config "
                                             f"{meta.get('config_hash')}, expected {want_hash}")
            samples.append((sample.seed, sample))
    else:
        seeds = resolve_seeds(cfg, seeds_override)
        samples = [(seed, sample) for seed, sample, _ in _simulate_all(cfg, seeds, threads)]
    curve = _limit_curve(cfg, profile, H, c, quad, opts)
    cdf = spectra.cdf_with_atom(curve)
    if bool(cfg.get("transpose_curve", False)):
        # transposed Gram side: same nonzero spectrum plus n - N exact zeros
        samples = [(seed, _pad_to_transposed(sample)) for seed, sample in samples]
    per_seed = [{"seed": seed, "ks": simulator.ks_compare(sample, cdf)}
                for seed, sample in samples]
    report = {
        "config_hash": want_hash,
        "rng": simulator.RNG_NAME,
        "per_seed": per_seed,
        "median_ks": float(np.median([r["ks"] for r in per_seed])),
    }
    (out_dir / "compare.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    _write_csv(out_dir / "compare.csv", _meta(cfg), ["seed", "ks"],
               [(r["seed"], r["ks"]) for r in per_seed])
    _write_csv(out_dir / "limit_cdf.csv", _meta(cfg), ["x", "cdf"],
               list(zip(curve.x_grid.tolist(), np.asarray(cdf(curve.x_grid)).tolist())))
    return 0


def cmd_capacity(cfg, out_dir, threads, seeds_override, bits):
    profile = build_profile(cfg)
    H = build_H(cfg)
    c, _ = resolve_ratio(cfg)
    quad = build_quad(cfg, c)
    opts = build_solver_opts(cfg)
    noise_cfg = cfg.get("noise", {})
    noise = cap.NoiseLevel(float(noise_cfg.get("s_sq", 1.0)))
    seeds = resolve_seeds(cfg, seeds_override)
    values = [(seed, cap.capacity_from_spectrum(sample, noise, bits=bits))
              for seed, sample, _ in _simulate_all(cfg, seeds, threads)]
    curve = _limit_curve(cfg, profile, H, c, quad, opts)
    limit = cap.capacity_from_limit(curve, c, noise, bits=bits)
    report = {
        "config_hash": config_hash(cfg),
        "rng": simulator.RNG_NAME,
        "s_sq": noise.s_sq,
        "units": "bits" if bits else "nats",
        "per_seed": [{"seed": s, "capacity": v} for s, v in values],
        "empirical_mean": float(np.mean([v for _, v in values])),
        "limit": limit,
    }
    (out_dir / "capacity.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return 0


def _parse_seeds(text):
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError("--seeds", "expected comma-separated integers") from exc


def build_parser():
    parser = argparse.ArgumentParser(prog="gramspec",
                                     description="limiting Gram-matrix spectra: "
                                                 "solve, invert, simulate, compare")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("solve", "density", "simulate", "compare", "capacity"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--seeds", default=None, help="comma-separated seed list")
        if name == "compare":
            p.add_argument("--sim-dir", default=None,
                           help="reuse eigenvalue CSVs from a previous simulate run")
        if name == "capacity":
            p.add_argument("--bits", action="store_true", help="report log2 capacity")
    return parser


def run(argv=None):
    args = build_parser().parse_args(argv)
    cfg = load_config(args.config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    seeds = _parse_seeds(args.seeds) if args.seeds else None
    if args.threads < 1:
        raise ConfigError("--threads", "must be >= 1")
    if args.command == "solve":
        return cmd_solve(cfg, out_dir, args.threads)
    if args.command == "density":
        return cmd_density(cfg, out_dir, args.threads)
    if args.command == "simulate":
        return cmd_simulate(cfg, out_dir, args.threads, seeds)
    if args.command == "compare":
        return cmd_compare(cfg, out_dir, args.threads, seeds, args.sim_dir)
    return cmd_capacity(cfg, out_dir, args.threads, seeds, args.bits)


def main(argv=None):
    try:
        code = run(argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        code = 2
    except InvalidInput as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        code = 2
    except NoConvergence as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        code = 3
    except (NumericalFailure, DegenerateDenominator) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        code = 4
    if argv is None:
        sys.exit(code)
    return code


if __name__ == "__main__":
    main()
