"""Command-line entry point: ``wiresecret <subcommand> ...``.

Inputs are JSON files; tables are written as CSV and reports as JSON.
Every output starts with a provenance record (tool version, seed and a
SHA-256 of the canonical run configuration), so reruns with the same
inputs and seed are byte-identical.

Exit codes: 0 success, 1 usage error, 2 validation failure, 3 numerical
non-convergence.
"""

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np

from . import __version__
from ._validation import ValidationError
from .access_structure import AccessStructure, OverlapError, validate
from .channels import (
    DegradednessError, DmcBroadcast, GaussianMimoBroadcast, GaussianSisoBroadcast,
    channel_from_dict, check_degraded_chain,
)
from .compound import GridConfig, build_compound, capacity_kK, compound_bounds
from .miso import MisoSharingInstance, chain_from_dict, limit_rate_tuple
from .region import (
    BoundaryConfig, CovarianceChain, dmc_rate_tuple, layered_rates, mimo_rate_tuple,
    siso_region_samples, weighted_boundary_search,
)
from .simulator import SimulationConfig, leakage_trend, validate_rates

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_NONCONVERGED = 0, 1, 2, 3
MAX_SEED = 2 ** 64 - 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    """Everything that determines a run's output."""
    subcommand: str
    inputs: dict = field(default_factory=dict)      # name -> parsed JSON content
    params: dict = field(default_factory=dict)
    seed: int = None
    output: str = None

    def __post_init__(self):
        for k, v in self.params.items():
            if k.endswith("tol") and not (isinstance(v, (int, float)) and v > 0):
                raise UsageError(f"{k} must be positive, got {v!r}")
        if self.seed is not None and not 0 <= self.seed <= MAX_SEED:
            raise UsageError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    def digest(self):
        blob = json.dumps({"subcommand": self.subcommand, "inputs": self.inputs,
                           "params": self.params, "seed": self.seed},
                          sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def provenance(self):
        seed = "none" if self.seed is None else str(self.seed)
        return f"wiresecret {__version__} seed={seed} config={self.digest()}"


# ---------------------------------------------------------------- output

def _atomic_write(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".wiresecret-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _num(v):
    """Shortest round-trip text for a float."""
    return repr(float(v))


def write_csv(cfg, header, rows, path=None):
    buf = io.StringIO()
    buf.write(f"# {cfg.provenance()}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(v) if isinstance(v, (float, np.floating)) else v for v in row])
    _atomic_write(cfg.output if path is None else path, buf.getvalue())


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (frozenset, set)):
        return sorted(int(x) for x in v)
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def write_json(cfg, payload, path=None):
    doc = {"provenance": cfg.provenance(), "result": _jsonable(payload)}
    _atomic_write(cfg.output if path is None else path,
                  json.dumps(doc, sort_keys=True, indent=2) + "\n")


# ---------------------------------------------------------------- input

def _load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise ValidationError(f"{path} is not valid JSON: {e}") from None


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _threads():
    raw = os.environ.get("WIRESECRET_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"WIRESECRET_THREADS must be an integer, got {raw!r}") from None
    return max(1, n)


def _channel_of(doc, kind):
    ch = channel_from_dict(doc)
    if not isinstance(ch, kind):
        raise ValidationError(f"expected a {kind.__name__} channel, got {type(ch).__name__}")
    return ch


# ---------------------------------------------------------------- subcommands

def cmd_compound(args):
    cfg = RunConfig("compound", {"structure": _load(args.structure), "channel": _load(args.channel)},
                    {"grid": args.grid, "u_size": args.u_size, "refine_rounds": args.refine_rounds,
                     "max_grid_points": args.max_grid_points}, output=args.out)
    spec = build_compound(AccessStructure.from_dict(cfg.inputs["structure"]))
    channel = _channel_of(cfg.inputs["channel"], DmcBroadcast)
    rep = compound_bounds(spec, channel, GridConfig(args.grid, args.u_size, args.refine_rounds,
                                                   args.max_grid_points))
    write_json(cfg, {
        "legitimate_sets": spec.legitimate_sets,
        "eavesdropper_sets": spec.eavesdropper_sets,
        "original_counts": spec.original_counts,
        "reduced_counts": spec.reduced_counts,
        "lower_bound": rep.lower.value,
        "lower_bound_raw": rep.lower.raw,
        "lower_distribution": rep.lower.distribution,
        "upper_bound": rep.upper,
        "upper_bound_raw": rep.upper_raw,
        "pairs": [{"legitimate": p.legitimate, "eavesdropper": p.eavesdropper,
                   "value": p.value, "raw": p.raw} for p in rep.pairs],
        "grid_steps_used": rep.grid_steps,
        "warnings": rep.lower.warnings,
    })
    return EXIT_OK


def cmd_region_siso(args):
    cfg = RunConfig("region siso", {"channel": _load(args.channel)},
                    {"grid": args.grid, "weights": args.weights}, output=args.out)
    channel = _channel_of(cfg.inputs["channel"], GaussianSisoBroadcast)
    samples = siso_region_samples(channel, args.grid)
    K = channel.K
    header = [f"P_{k}" for k in range(1, K + 1)] + [f"R_{k}" for k in range(1, K + 1)]
    write_csv(cfg, header, [list(p) + list(r.rates) for p, r in samples])
    if args.weights:
        best = weighted_boundary_search(_floats(args.weights), channel,
                                        BoundaryConfig(grid_steps=args.grid))
        write_json(cfg, {"allocation": best.point, "rates": best.rates.rates,
                         "objective": best.objective, "heuristic": best.heuristic},
                   path=args.boundary_out)
    return EXIT_OK


def cmd_region_mimo(args):
    inputs = {"channel": _load(args.channel)}
    if args.chain:
        inputs["chain"] = _load(args.chain)
    if args.weights and args.seed is None:
        raise UsageError("boundary search with --weights needs an explicit --seed")
    cfg = RunConfig("region mimo", inputs, {"alpha_grid": args.alpha_grid, "weights": args.weights,
                                            "perturbations": args.perturbations, "tol": args.tol},
                    seed=args.seed, output=args.out)
    channel = _channel_of(inputs["channel"], GaussianMimoBroadcast)
    channel.check_degraded(args.tol)
    K = channel.K
    rate_cols = [f"R_{k}" for k in range(1, K + 1)]
    if args.chain:
        chain = CovarianceChain.from_dict(inputs["chain"])
        write_json(cfg, {"rates": mimo_rate_tuple(chain, channel, args.tol).rates,
                         "chain": chain.to_dict()})
    else:
        # scaled-cap chains S_k = a_k S with 1 >= a_1 >= .. >= a_{K-1} >= 0
        S = channel.input_cap
        grid = np.linspace(1.0, 0.0, args.alpha_grid + 1)
        rows = []
        for alphas in combinations_with_replacement(grid, K - 1):
            mats = [S] + [a * S for a in alphas] + [np.zeros_like(S)]
            rates = np.maximum(layered_rates(channel.noise_covariances, mats), 0.0)
            rows.append(list(alphas) + list(rates))
        write_csv(cfg, [f"alpha_{k}" for k in range(1, K)] + rate_cols, rows)
    if args.weights:
        best = weighted_boundary_search(
            _floats(args.weights), channel,
            BoundaryConfig(alpha_grid=args.alpha_grid, perturbations=args.perturbations,
                           seed=args.seed))
        write_json(cfg, {"chain": best.point.to_dict(), "rates": best.rates.rates,
                         "objective": best.objective, "heuristic": best.heuristic,
                         "accepted_perturbations": best.accepted_perturbations},
                   path=args.boundary_out)
    return EXIT_OK


def cmd_region_dmc(args):
    cfg = RunConfig("region dmc", {"channel": _load(args.channel), "dists": _load(args.dists)},
                    output=args.out)
    channel = _channel_of(cfg.inputs["channel"], DmcBroadcast)
    dists = [np.asarray(m, dtype=float) for m in cfg.inputs["dists"]]
    rates = dmc_rate_tuple(dists, channel)
    write_json(cfg, {"rates": rates.rates, "raw": rates.raw})
    return EXIT_OK


def cmd_miso(args):
    cfg = RunConfig("miso", {"instance": _load(args.instance), "chain": _load(args.chain)},
                    {"t0": args.t0, "tol": args.tol, "max_doublings": args.max_doublings},
                    output=args.out)
    inst = MisoSharingInstance.from_dict(cfg.inputs["instance"])
    chain = chain_from_dict(cfg.inputs["chain"])
    res = limit_rate_tuple(inst, chain, t0=args.t0, tol=args.tol, max_doublings=args.max_doublings)
    K = inst.K
    write_csv(cfg, ["t"] + [f"R_{k}" for k in range(1, K + 1)],
              [[t] + list(r) for t, r in res.trace])
    if args.report:
        write_json(cfg, {"rates": res.rates.rates, "raw": res.rates.raw,
                         "converged": res.converged, "last_step": res.last_step,
                         "evaluations": len(res.trace),
                         "ordering_min_eigenvalues": res.ordering.min_eigenvalues,
                         "ordering_passed": res.ordering.passed,
                         "condition_number": inst.condition_number}, path=args.report)
    if not res.converged:
        print(f"error: no convergence after {len(res.trace) - 1} doublings "
              f"(last step {res.last_step:.3e}); trace written", file=sys.stderr)
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_simulate(args):
    ns = _ints(args.n)
    if not ns or any(n < 1 for n in ns):
        raise UsageError("--n needs positive blocklengths")
    if args.seeds < 1:
        raise UsageError("--seeds must be >= 1")
    cfg = RunConfig("simulate", {"config": _load(args.config)},
                    {"n": sorted(ns), "seeds": args.seeds}, seed=args.seed, output=args.out)
    sim = SimulationConfig.from_dict(cfg.inputs["config"])
    report = validate_rates(sim)
    for c in report.conditions:
        if not c.ok:
            print(f"warning: rate condition {c.name} fails (slack {c.slack:.6g})", file=sys.stderr)
    workers = _threads()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            table = leakage_trend(sim, ns, args.seeds, args.seed, map_fn=pool.map)
    else:
        table = leakage_trend(sim, ns, args.seeds, args.seed)
    write_csv(cfg, ["n", "seed", "receiver", "error_prob", "leakage_bits_per_symbol"],
              table.as_records())
    return EXIT_OK


def cmd_capacity_kk(args):
    N = _floats(args.N)
    cfg = RunConfig("capacity kk", {}, {"P": args.P, "N": N, "k": args.k}, output=args.out)
    value = capacity_kK(args.P, N, args.k)
    write_csv(cfg, ["k", "K", "P", "capacity_bits"], [[args.k, len(N), float(args.P), value]])
    return EXIT_OK


def cmd_validate(args):
    if not args.structure and not args.channel:
        raise UsageError("validate needs --structure and/or --channel")
    inputs = {}
    if args.structure:
        inputs["structure"] = _load(args.structure)
    if args.channel:
        inputs["channel"] = _load(args.channel)
    cfg = RunConfig("validate", inputs, output=args.out)
    out, code = {}, EXIT_OK
    if args.structure:
        structure = AccessStructure.from_dict(inputs["structure"])
        try:
            rep = validate(structure)
            spec = build_compound(structure)
            out["structure"] = {"valid": rep.valid, "qualified_closed": rep.qualified_closed,
                                "forbidden_closed": rep.forbidden_closed,
                                "closure_sizes": rep.closure_sizes, "anomalies": rep.anomalies,
                                "minimal_qualified": spec.legitimate_sets,
                                "maximal_forbidden": spec.eavesdropper_sets}
        except OverlapError as e:
            out["structure"] = {"valid": False, "error": str(e),
                                "conflicts": [[sorted(a), sorted(b)] for a, b in e.conflicts]}
            code = EXIT_INVALID
    if args.channel:
        channel = channel_from_dict(inputs["channel"])
        try:
            if isinstance(channel, DmcBroadcast):
                res = check_degraded_chain(channel)
                out["channel"] = {"degraded": True,
                                  "residuals": [r.residual for r in res]}
            else:
                channel.check_degraded()
                out["channel"] = {"degraded": True}
        except DegradednessError as e:
            out["channel"] = {"degraded": False, "error": str(e)}
            if e.result is not None:
                out["channel"]["lp_residual"] = e.result.residual
            code = EXIT_INVALID
    write_json(cfg, out)
    return code


# ---------------------------------------------------------------- parser

def build_parser():
    p = _Parser(prog="wiresecret", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"wiresecret {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("compound", help="lower/upper bounds for a single shared secret")
    c.add_argument("--structure", required=True)
    c.add_argument("--channel", required=True)
    c.add_argument("--grid", type=int, default=16, help="P_UX grid resolution 1/grid")
    c.add_argument("--u-size", type=int, default=None)
    c.add_argument("--refine-rounds", type=int, default=3)
    c.add_argument("--max-grid-points", type=int, default=100_000)
    c.add_argument("--out", default=None)
    c.set_defaults(func=cmd_compound)

    r = sub.add_parser("region", help="layered rate regions")
    rsub = r.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    rs = rsub.add_parser("siso", help="scalar Gaussian region samples")
    rs.add_argument("--channel", required=True)
    rs.add_argument("--grid", type=int, default=20)
    rs.add_argument("--weights", default=None, help="comma-separated weights for a boundary point")
    rs.add_argument("--boundary-out", default=None)
    rs.add_argument("--out", default=None)
    rs.set_defaults(func=cmd_region_siso)
    rm = rsub.add_parser("mimo", help="MIMO Gaussian region")
    rm.add_argument("--channel", required=True)
    rm.add_argument("--chain", default=None, help="covariance chain JSON; omitted: scaled-cap sweep")
    rm.add_argument("--alpha-grid", type=int, default=10)
    rm.add_argument("--weights", default=None)
    rm.add_argument("--perturbations", type=int, default=200)
    rm.add_argument("--seed", type=int, default=None)
    rm.add_argument("--tol", type=float, default=1e-9)
    rm.add_argument("--boundary-out", default=None)
    rm.add_argument("--out", default=None)
    rm.set_defaults(func=cmd_region_mimo)
    rd = rsub.add_parser("dmc", help="discrete region rate tuple for one auxiliary chain")
    rd.add_argument("--channel", required=True)
    rd.add_argument("--dists", required=True)
    rd.add_argument("--out", default=None)
    rd.set_defaults(func=cmd_region_dmc)

    m = sub.add_parser("miso", help="MISO sharing rates in the infinite-lift limit")
    m.add_argument("--instance", required=True)
    m.add_argument("--chain", required=True)
    m.add_argument("--t0", type=float, default=10.0)
    m.add_argument("--tol", type=float, default=1e-6)
    m.add_argument("--max-doublings", type=int, default=40)
    m.add_argument("--report", default=None)
    m.add_argument("--out", default=None, help="doubling trace CSV")
    m.set_defaults(func=cmd_miso)

    s = sub.add_parser("simulate", help="exact leakage of small binning codes")
    s.add_argument("--config", required=True)
    s.add_argument("--n", required=True, help="comma-separated blocklengths")
    s.add_argument("--seeds", type=int, required=True, help="codebooks per blocklength")
    s.add_argument("--seed", type=int, required=True, help="master seed")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_simulate)

    cap = sub.add_parser("capacity", help="closed-form capacities")
    csub = cap.add_subparsers(dest="kind", required=True, parser_class=_Parser)
    kk = csub.add_parser("kk", help="(k,K)-threshold Gaussian capacity")
    kk.add_argument("--P", type=float, required=True)
    kk.add_argument("--N", required=True, help="comma-separated noise variances")
    kk.add_argument("--k", type=int, required=True)
    kk.add_argument("--out", default=None)
    kk.set_defaults(func=cmd_capacity_kk)

    v = sub.add_parser("validate", help="check an access structure and/or channel")
    v.add_argument("--structure", default=None)
    v.add_argument("--channel", default=None)
    v.add_argument("--out", default=None)
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"wiresecret: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DegradednessError as e:
        print(f"wiresecret: not degraded: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (ValidationError, KeyError, TypeError) as e:
        print(f"wiresecret: invalid input: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
