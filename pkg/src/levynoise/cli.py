"""Command-line entry point: ``levynoise <subcommand> [flags]``.

Every subcommand also reads ``--config run.json``; keys are flag names
with dashes replaced by underscores, and explicit flags win.  Failures
print a JSON error record to stderr and exit with status 1.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import io as rio
from .basis import build_jump_basis
from .greens import make_domain
from .measures import measure_from_dict
from .multiindex import cantor_pair
from .poisson import divergence_profile, solve_chaos, solve_mc
from .prm import (
    Box,
    RandomSource,
    TestFunction,
    eta_sample,
    mean_estimate,
    moment_formula,
    pair_raw,
    sample_batch,
    truncation_variance,
    variance_estimate,
)
from .verify import REPORT_COLUMNS, run_suite

DEFAULTS = {
    "measure": None,
    "M": 4,
    "dim": None,
    "box": None,
    "eps": None,
    "n": 1,
    "seed": None,
    "out": None,
    "report": None,
    "domain": None,
    "x": None,
    "K": 200,
    "mc_samples": 0,
    "summary": None,
    "suite": "all",
    "n_max": 4,
    "f": "count",
    "deltas": None,
    "levels": 20,
    "delta0": 0.5,
}


class UsageError(ValueError):
    pass


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="levynoise", description="Lévy white noise chaos and stochastic Poisson solver")
    p.add_argument("--config", help="JSON file of flag values (flags override it)")
    sub = p.add_subparsers(dest="command", required=True, metavar="{basis,sample,solve,verify,moments,divergence}")
    S = argparse.SUPPRESS

    def common(sp, *names):
        if "measure" in names:
            sp.add_argument("--measure", default=S, help="measure JSON: a file path or an inline object")
        if "dim" in names:
            sp.add_argument("--dim", type=int, default=S)
        if "seed" in names:
            sp.add_argument("--seed", type=int, default=S)
        if "eps" in names:
            sp.add_argument("--eps", type=float, default=S, help="jump truncation (default: the measure's)")
        if "box" in names:
            sp.add_argument("--box", default=S, help="side lengths L1,...,Ld of prod [0, L_i] (default: unit)")
        sp.add_argument("--out", default=S, help="output CSV (default: stdout)")

    b = sub.add_parser("basis", help="jump polynomial coefficients and Gram residuals")
    common(b, "measure")
    b.add_argument("--M", type=int, default=S)

    s = sub.add_parser("sample", help="sample Poisson random measure configurations")
    common(s, "measure", "dim", "seed", "eps", "box")
    s.add_argument("--n", type=int, default=S, help="number of configurations")
    s.add_argument("--report", default=S, help="MC report CSV (count and eta checks)")

    v = sub.add_parser("solve", help="chaos and Monte-Carlo solution of the stochastic Poisson equation")
    common(v, "measure", "dim", "seed")
    v.add_argument("--domain", choices=["interval", "disk", "ball", "hypercube"], default=S)
    v.add_argument("--x", default=S, help="evaluation point, comma separated")
    v.add_argument("--K", type=int, default=S)
    v.add_argument("--mc-samples", dest="mc_samples", type=int, default=S)
    v.add_argument("--summary", default=S, help="summary JSON (default: stdout)")

    r = sub.add_parser("verify", help="run acceptance checks")
    r.add_argument("--suite", default=S)
    r.add_argument("--seed", type=int, default=S)
    r.add_argument("--out", default=S)

    m = sub.add_parser("moments", help="moment formula against Monte-Carlo moments")
    common(m, "measure", "dim", "seed", "eps", "box")
    m.add_argument("--n-max", dest="n_max", type=int, default=S)
    m.add_argument("--mc-samples", dest="mc_samples", type=int, default=S)
    m.add_argument("--f", choices=["count", "jump"], default=S, help="pair with 1 (count) or z (jump sum)")

    d = sub.add_parser("divergence", help="I(delta) = int outside B_delta(x) of G(x, y)^2 dy")
    d.add_argument("--dim", type=int, default=S)
    d.add_argument("--domain", choices=["interval", "disk", "ball", "hypercube"], default=S)
    d.add_argument("--x", default=S)
    d.add_argument("--deltas", default=S, help="comma separated, decreasing")
    d.add_argument("--levels", type=int, default=S, help="dyadic levels below --delta0 when --deltas is absent")
    d.add_argument("--delta0", type=float, default=S)
    d.add_argument("--out", default=S)
    return p


def _settings(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        with open(args.config) as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise UsageError("config must be a JSON object")
        cfg.update({k.replace("-", "_"): v for k, v in loaded.items()})
    cfg.update({k: v for k, v in vars(args).items() if k not in ("config", "command")})
    return cfg


def _measure(spec):
    if spec is None:
        raise UsageError("--measure is required")
    if isinstance(spec, dict):
        return measure_from_dict(spec)
    text = str(spec)
    path = Path(text)
    data = json.loads(path.read_text()) if not text.lstrip().startswith("{") and path.exists() else json.loads(text)
    return measure_from_dict(data)


def _floats(v) -> list[float]:
    if v is None:
        return []
    if isinstance(v, (int, float)):
        return [float(v)]
    if isinstance(v, (list, tuple)):
        return [float(t) for t in v]
    return [float(t) for t in str(v).split(",") if t.strip()]


def _need_seed(cfg) -> int:
    if cfg["seed"] is None:
        raise UsageError("--seed is required for sampling")
    return int(cfg["seed"])


def _box(cfg, dim: int) -> Box:
    lengths = _floats(cfg["box"]) or [1.0] * dim
    if len(lengths) != dim:
        raise UsageError("--box needs one length per dimension")
    return Box.from_lengths(lengths)


def _dim(cfg, default: int = 1) -> int:
    d = int(cfg["dim"] if cfg["dim"] is not None else default)
    if d not in (1, 2, 3, 4):
        raise UsageError("dimension must be 1, 2, 3 or 4")
    return d


def cmd_basis(cfg) -> None:
    model = _measure(cfg["measure"])
    if int(cfg["M"]) < 1:
        raise UsageError("M must be >= 1")
    basis = build_jump_basis(model, int(cfg["M"]))
    header, rows = rio.basis_rows(basis, model)
    rio.write_csv(cfg["out"], header, rows)


def cmd_sample(cfg) -> None:
    model = _measure(cfg["measure"])
    d = _dim(cfg)
    box = _box(cfg, d)
    seed = _need_seed(cfg)
    eps = model.eps if cfg["eps"] is None else float(cfg["eps"])
    n = int(cfg["n"])
    if n < 1:
        raise UsageError("--n must be >= 1")
    batch = sample_batch(model, box, eps, n, RandomSource(seed))
    header = ["sample"] + [f"x{j}" for j in range(1, d + 1)] + ["z"]
    rows = [(int(s), *map(float, x), float(z)) for s, x, z in zip(batch.sample, batch.x, batch.z)]
    rio.write_csv(cfg["out"], header, rows)
    if cfg["report"]:
        trunc = truncation_variance(model, box, eps)
        meta = dict(seed=seed, eps=eps, truncation_var=trunc)
        corner = list(box.hi)
        est = [
            mean_estimate(batch.counts(), batch.mass, "mean point count", **meta),
            variance_estimate(batch.counts(), batch.mass, "variance point count", **meta),
            mean_estimate(eta_sample(batch, model, corner), 0.0, "mean eta(box corner)", **meta),
            variance_estimate(
                eta_sample(batch, model, corner), model.m2() * box.volume, "variance eta(box corner)", **meta
            ),
        ]
        rio.write_csv(cfg["report"], rio.MC_COLUMNS, [tuple(e.row().values()) for e in est])


def cmd_solve(cfg) -> dict:
    model = _measure(cfg["measure"])
    domain = make_domain(cfg["domain"] or "interval", cfg["dim"])
    x = _floats(cfg["x"]) or [0.5] * domain.dim
    if len(x) != domain.dim:
        raise UsageError(f"--x needs {domain.dim} coordinates")
    K = int(cfg["K"])
    if K < 1:
        raise UsageError("--K must be >= 1")
    sol = solve_chaos(domain, model, x, K)
    partial = sol.partial_variances()
    rows = [(k, cantor_pair(k, 1), c, partial[k - 1]) for k, c in enumerate(sol.coefficients, 1)]
    rio.write_csv(cfg["out"], ("k", "cantor_index", "coefficient", "partial_variance"), rows)
    summary = {
        "x": x,
        "K": K,
        "variance_partial": sol.variance_partial,
        "variance_exact": sol.variance_exact,
        "mc_var": None,
        "mc_se": None,
    }
    n_mc = int(cfg["mc_samples"] or 0)
    if n_mc:
        seed = _need_seed(cfg)
        lo, hi = domain.bounding_box()
        batch = sample_batch(model, Box(lo, hi), model.eps, n_mc, RandomSource(seed))
        est = variance_estimate(solve_mc(domain, model, batch, x), sol.variance_exact or math.nan, "Var U(x)")
        summary.update(mc_var=est.estimate, mc_se=est.std_error, seed=seed,
                       truncation_var=model.small_jump_variance() * float(np.prod(np.subtract(hi, lo))))
    rio.write_json(cfg["summary"], summary)
    return summary


def cmd_verify(cfg) -> int:
    seed = 7 if cfg["seed"] is None else int(cfg["seed"])
    results = run_suite(str(cfg["suite"]), seed)
    rows = [row for r in results for row in r.report_rows()]
    out = cfg["out"]
    rio.write_csv(out, REPORT_COLUMNS, rows)
    stream = sys.stderr if out in (None, "-") else sys.stdout
    for r in results:
        print(r.summary(), file=stream)
    return 0 if all(r.passed for r in results) else 1


def cmd_moments(cfg) -> None:
    model = _measure(cfg["measure"])
    d = _dim(cfg)
    box = _box(cfg, d)
    eps = model.eps if cfg["eps"] is None else float(cfg["eps"])
    n_max = int(cfg["n_max"])
    if not 1 <= n_max <= 8:
        raise UsageError("--n-max must be in 1..8")
    f = TestFunction.product(name="1") if cfg["f"] == "count" else TestFunction.product(jump=lambda z: z, name="z")
    theory = [moment_formula(model, box, f, n, eps) for n in range(1, n_max + 1)]
    n_mc = int(cfg["mc_samples"] or 0)
    rows = []
    if n_mc:
        seed = _need_seed(cfg)
        vals = pair_raw(sample_batch(model, box, eps, n_mc, RandomSource(seed)), f)
        trunc = truncation_variance(model, box, eps)
        for n, t in enumerate(theory, 1):
            e = mean_estimate(vals**n, t, f"M_{n}", seed=seed, eps=eps, truncation_var=trunc)
            rows.append(tuple(e.row().values()))
    else:
        rows = [(f"M_{n}", None, t, None, 0, None, eps, None) for n, t in enumerate(theory, 1)]
    rio.write_csv(cfg["out"], rio.MC_COLUMNS, rows)


def cmd_divergence(cfg) -> None:
    d = _dim(cfg, 1)
    name = cfg["domain"] or {1: "interval", 2: "disk", 3: "ball", 4: "hypercube"}[d]
    domain = make_domain(name, d)
    x = _floats(cfg["x"]) or ([0.5] * d if name in ("interval", "hypercube") else [0.0] * d)
    deltas = _floats(cfg["deltas"]) or [float(cfg["delta0"]) * 2.0**-j for j in range(int(cfg["levels"]) + 1)]
    prof = divergence_profile(d, x, deltas, domain=domain)
    rio.write_csv(cfg["out"], ("delta", "I_delta"), prof)


COMMANDS = {
    "basis": cmd_basis,
    "sample": cmd_sample,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "moments": cmd_moments,
    "divergence": cmd_divergence,
}


def run(argv: list[str] | None = None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)  # exits with status 2 and usage text on bad input
    try:
        cfg = _settings(args)
        status = COMMANDS[args.command](cfg)
        return status if isinstance(status, int) else 0
    except Exception as exc:  # noqa: BLE001 - every failure becomes an error record
        record = {"error": type(exc).__name__, "message": str(exc), "command": args.command}
        print(json.dumps(record, sort_keys=True), file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
