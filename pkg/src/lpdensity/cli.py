"""Experiment runner.

    lpdensity <subcommand> --spec FILE [--out DIR] [--seed INT]

Subcommands: density, separate, pair, bessel, blowup-witness, cq-sweep,
localized-mass, mass-decay, haar-check, dichotomy, and `run` (command taken
from the spec file; a list spec chains several analyses).  Each run writes
<out>/<command>_report.json plus CSV tables where the analysis has one.

Exit codes: 0 success, 2 unresolvable input, 3 precondition violation,
4 a declared verdict check failed.
"""

import argparse
import datetime
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InputError, PreconditionError
from .haar_uncond import (
    HaarExpansion,
    HaarIndex,
    coefficient_sandwich_check,
    count_sandwich_violations,
    dual_fn,
    haar_fn,
    haar_indices_below,
    prop43_check,
    unconditional_constant_estimate,
)
from .io import (
    emit_json,
    file_digest,
    ingest_function,
    ingest_points,
    ingest_system,
    jsonable,
    write_csv,
)
from .lpfunc import Box, ExponentPair, PiecewiseFn, pair, pair_modulated, translate
from .pointset import Cube, Point, decompose_separated, density_profile
from .translate_system import (
    DichotomyConfig,
    Generator,
    TranslateSystem,
    bessel_bound_estimate,
    bessel_sum,
    blowup_witness,
    cq_indicator_sweep,
    dichotomy_report,
    localized_mass,
    mass_decay_sweep,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PRECONDITION = 3
EXIT_VERDICT = 4


class _RunContext:
    def __init__(self, base_dir: Path, out_dir: Path, seed):
        self.base_dir = base_dir
        self.out_dir = out_dir
        self.seed = seed
        self.digests = {}

    def track(self, spec_value):
        """Record digests for any {"path": ...} references inside a spec value."""
        if isinstance(spec_value, dict):
            if "path" in spec_value:
                self._digest(spec_value["path"])
            for v in spec_value.values():
                self.track(v)
        elif isinstance(spec_value, list):
            for v in spec_value:
                self.track(v)
        elif isinstance(spec_value, str) and spec_value.endswith((".csv", ".json")):
            self._digest(spec_value)

    def _digest(self, ref):
        path = Path(ref)
        if not path.is_absolute():
            path = self.base_dir / path
        if path.exists():
            self.digests[str(ref)] = file_digest(path)

    def rng(self):
        if self.seed is None:
            raise PreconditionError("this analysis samples randomly: a seed is mandatory")
        return np.random.default_rng(self.seed)


def _need(spec: dict, key: str):
    if key not in spec:
        raise InputError(f"spec is missing required key {key!r}")
    return spec[key]


def _cube_from_spec(spec: dict) -> Cube:
    return Cube(Point(tuple(spec["center"])), float(spec["side"]))


def _generator_from_spec(spec: dict, ctx: _RunContext) -> Generator:
    f = ingest_function(_need(spec, "f"), base_dir=ctx.base_dir)
    gamma = ingest_points(_need(spec, "gamma"), base_dir=ctx.base_dir)
    return Generator(f, gamma, str(spec.get("label", "gen")))


# ---------------------------------------------------------------------------
# command handlers: each returns (outputs, verdicts, csv_artifacts)


def _cmd_density(spec, ctx):
    points = ingest_points(_need(spec, "points"), base_dir=ctx.base_dir)
    profile = density_profile(points, _need(spec, "h_values"))
    rows = [
        (r.h, r.nu_lower, r.nu_upper, r.ratio_lower, r.ratio_upper) for r in profile.rows
    ]
    csvs = {
        "density_profile.csv": (
            ("h", "nu_lower", "nu_upper", "ratio_lower", "ratio_upper"),
            rows,
        )
    }
    return {"profile": jsonable(profile), "size": len(points)}, {}, csvs


def _cmd_separate(spec, ctx):
    points = ingest_points(_need(spec, "points"), base_dir=ctx.base_dir)
    report = decompose_separated(points, float(_need(spec, "delta")))
    return {"separation": jsonable(report)}, {}, {}


def _cmd_pair(spec, ctx):
    h = ingest_function(_need(spec, "h"), base_dir=ctx.base_dir)
    if "freq" in spec:
        value = pair_modulated(h, tuple(spec["freq"]))
        return {"modulated_pairing": jsonable(value)}, {}, {}
    f = ingest_function(_need(spec, "f"), base_dir=ctx.base_dir)
    return {"pairing": jsonable(pair(h, f))}, {}, {}


def _cmd_bessel(spec, ctx):
    sys_ = ingest_system(_need(spec, "system"), base_dir=ctx.base_dir)
    tests = [ingest_function(t, base_dir=ctx.base_dir) for t in _need(spec, "tests")]
    est = bessel_bound_estimate(sys_, tests, float(_need(spec, "p_prime")))
    return {"bessel": jsonable(est)}, {}, {}


def _cmd_blowup(spec, ctx):
    f = ingest_function(_need(spec, "f"), base_dir=ctx.base_dir)
    f_dual = ingest_function(_need(spec, "f_dual"), base_dir=ctx.base_dir)
    gamma = ingest_points(_need(spec, "points"), base_dir=ctx.base_dir)
    p_prime = float(_need(spec, "p_prime"))
    witness = blowup_witness(f, f_dual, gamma, float(_need(spec, "epsilon")), p_prime)
    system = TranslateSystem(
        (Generator(f, gamma, "gen"),), ExponentPair(float(spec.get("p", 2.0)))
    )
    direct = bessel_sum(system, translate(f_dual, witness.beta), p_prime)
    verdicts = {"witness_sound": witness.sum_lower_bound <= direct}
    return {"witness": jsonable(witness), "direct_bessel_sum": direct}, verdicts, {}


def _cmd_cq_sweep(spec, ctx):
    sys_ = ingest_system(_need(spec, "system"), base_dir=ctx.base_dir)
    sweep = cq_indicator_sweep(sys_, _need(spec, "h_values"))
    p = sys_.p.p
    ok = all(
        r.p_power_sum <= r.q_norm**p * r.localized_mass * (1 + 1e-12) for r in sweep.rows
    )
    rows = [
        (r.h, r.q_norm, r.p_power_sum, r.k_required, r.localized_mass) for r in sweep.rows
    ]
    csvs = {
        "cq_sweep.csv": (
            ("h", "q_norm", "p_power_sum", "K_required", "localized_mass"),
            rows,
        )
    }
    return {"sweep": jsonable(sweep)}, {"proof_inequality": ok}, csvs


def _cmd_localized_mass(spec, ctx):
    gen = _generator_from_spec(_need(spec, "generator"), ctx)
    report = localized_mass(gen, _cube_from_spec(_need(spec, "cube")), float(_need(spec, "p")))
    verdicts = {}
    if report.finiteness_bound is not None:
        verdicts["mass_within_bound"] = report.total <= report.finiteness_bound.value
    return {"localized_mass": jsonable(report)}, verdicts, {}


def _cmd_mass_decay(spec, ctx):
    gen = _generator_from_spec(_need(spec, "generator"), ctx)
    rows = mass_decay_sweep(
        gen,
        Point(tuple(_need(spec, "x"))),
        _need(spec, "h_values"),
        float(_need(spec, "p")),
    )
    verdicts = {"monotone": all(b <= a for (_, a), (_, b) in zip(rows, rows[1:]))}
    if "tolerance" in spec:
        verdicts["decays_below_tolerance"] = rows[-1][1] <= float(spec["tolerance"])
    return {"rows": jsonable(rows)}, verdicts, {}


def _cmd_haar_check(spec, ctx):
    p = float(_need(spec, "p"))
    cutoff = int(spec.get("cutoff", 6))
    rng = ctx.rng()
    # biorthogonality is always checked through level 6
    indices = haar_indices_below(7)
    fns = [haar_fn(i, p) for i in indices]
    duals = [dual_fn(i, p) for i in indices]
    max_offdiag = 0.0
    max_diag_err = 0.0
    for a, g in enumerate(duals):
        for b, f in enumerate(fns):
            v = pair(g, f)
            if a == b:
                max_diag_err = max(max_diag_err, abs(v - 1))
            else:
                max_offdiag = max(max_offdiag, abs(v))
    tests = [_random_test_fn(rng) for _ in range(int(spec.get("num_tests", 20)))]
    p43 = prop43_check(p, cutoff, tests)
    batch = [_random_expansion(rng, int(spec.get("terms", 12))) for _ in range(int(spec.get("batch_size", 200)))]
    held = [_random_expansion(rng, int(spec.get("terms", 12))) for _ in range(int(spec.get("batch_size", 200)))]
    fit = coefficient_sandwich_check(batch, p)
    held_rows = coefficient_sandwich_check(held, p).rows
    violations = count_sandwich_violations(
        held_rows, fit.lower_constant, fit.upper_constant, headroom=1.1
    )
    uncond = unconditional_constant_estimate(batch[:10], p, trials=int(spec.get("trials", 200)), seed=ctx.seed)
    outputs = {
        "biorthogonality": {"max_offdiag": max_offdiag, "max_diag_error": max_diag_err},
        "prop43": jsonable(p43),
        "sandwich_fit": {
            "lower_constant": fit.lower_constant,
            "upper_constant": fit.upper_constant,
            "held_out_violations": violations,
        },
        "unconditional_constant_estimate": uncond,
    }
    verdicts = {
        "biorthogonal_offdiag_zero": max_offdiag == 0.0,
        "sandwich_no_violations": violations == 0,
    }
    return outputs, verdicts, {}


def _cmd_dichotomy(spec, ctx):
    sys_ = ingest_system(_need(spec, "system"), base_dir=ctx.base_dir)
    tests = spec.get("bessel_tests")
    tol = {**spec.get("tolerances", {}), **spec}  # flat keys win over the block
    config = DichotomyConfig(
        truncation_radii=tuple(_need(spec, "truncation_radii")),
        sweep_h_values=tuple(_need(spec, "h_values")),
        p_prime=float(_need(spec, "p_prime")),
        bessel_tests=tuple(ingest_function(t, base_dir=ctx.base_dir) for t in tests)
        if tests
        else None,
        accumulation_radius=float(tol.get("accumulation_radius", 0.05)),
        accumulation_threshold=int(tol.get("accumulation_threshold", 10)),
        epsilon_fraction=float(tol.get("epsilon_fraction", 0.5)),
        bessel_variation_tol=float(tol.get("bessel_variation_tol", 0.10)),
        subadditivity_h_values=tuple(tol.get("subadditivity_h_values", (1.0, 2.0, 4.0))),
    )
    report = dichotomy_report(sys_, config)
    verdicts = {
        "dichotomy_holds": report.dichotomy_holds,
        "subadditivity_holds": report.subadditivity_holds,
    }
    return {"dichotomy": jsonable(report)}, verdicts, {}


def _random_test_fn(rng) -> PiecewiseFn:
    cuts = np.sort(rng.uniform(0.0, 1.0, size=rng.integers(3, 9)))
    pieces = []
    for a, b in zip(cuts, cuts[1:]):
        if b > a:
            pieces.append((Box((float(a),), (float(b),)), complex(rng.normal(), rng.normal())))
    if not pieces:
        pieces = [(Box((0.25,), (0.75,)), 1.0 + 0j)]
    return PiecewiseFn(tuple(pieces), 1)


def _random_expansion(rng, terms: int) -> HaarExpansion:
    coeffs = {}
    while len(coeffs) < terms:
        level = int(rng.integers(0, 6))
        offset = int(rng.integers(0, 2**level))
        coeffs[HaarIndex(level, offset)] = complex(rng.normal(), rng.normal())
    return HaarExpansion.from_mapping(coeffs)


COMMANDS = {
    "density": _cmd_density,
    "separate": _cmd_separate,
    "pair": _cmd_pair,
    "bessel": _cmd_bessel,
    "blowup-witness": _cmd_blowup,
    "cq-sweep": _cmd_cq_sweep,
    "localized-mass": _cmd_localized_mass,
    "mass-decay": _cmd_mass_decay,
    "haar-check": _cmd_haar_check,
    "dichotomy": _cmd_dichotomy,
}


def run(command: str, spec: dict, ctx: _RunContext) -> int:
    """Execute one analysis and write its report; returns the exit code."""
    ctx.track(spec)
    try:
        outputs, verdicts, csvs = COMMANDS[command](spec, ctx)
    except InputError as exc:
        print(f"lpdensity {command}: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PreconditionError as exc:
        print(f"lpdensity {command}: precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    report = {
        "command": command,
        "spec": spec,
        "outputs": outputs,
        "verdicts": verdicts,
        "provenance": {
            "inputs": ctx.digests,
            "toolkit_version": __version__,
            "seed": ctx.seed,
        },
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    ctx.out_dir.mkdir(parents=True, exist_ok=True)
    out_path = ctx.out_dir / f"{command.replace('-', '_')}_report.json"
    out_path.write_text(emit_json(report) + "\n")
    for name, (header, rows) in csvs.items():
        write_csv(ctx.out_dir / name, header, rows)
    if any(v is False for v in verdicts.values()):
        print(f"lpdensity {command}: verdict check failed: {verdicts}", file=sys.stderr)
        return EXIT_VERDICT
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="lpdensity", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in list(COMMANDS) + ["run"]:
        cmd = sub.add_parser(name)
        cmd.add_argument("--spec", required=True, help="JSON experiment spec")
        cmd.add_argument("--out", default=None, help="output directory")
        cmd.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)

    spec_path = Path(args.spec)
    if not spec_path.exists():
        print(f"lpdensity: spec file not found: {spec_path}", file=sys.stderr)
        return EXIT_INPUT
    try:
        spec = json.loads(spec_path.read_text())
    except json.JSONDecodeError as exc:
        print(f"lpdensity: cannot parse {spec_path}: {exc}", file=sys.stderr)
        return EXIT_INPUT

    out_dir = Path(args.out or os.environ.get("LPDENSITY_OUT", "."))
    chained = spec if isinstance(spec, list) else [spec]
    worst = EXIT_OK
    for entry in chained:
        if not isinstance(entry, dict):
            print("lpdensity: each spec entry must be a JSON object", file=sys.stderr)
            return EXIT_INPUT
        if args.command == "run":
            command = entry.get("command")
            if command not in COMMANDS:
                print(f"lpdensity: spec has unknown command {command!r}", file=sys.stderr)
                return EXIT_INPUT
        else:
            command = args.command
            if entry.get("command", command) != command:
                print(
                    f"lpdensity: spec command {entry['command']!r} does not match "
                    f"subcommand {command!r}",
                    file=sys.stderr,
                )
                return EXIT_INPUT
        seed = args.seed if args.seed is not None else entry.get("seed")
        ctx = _RunContext(spec_path.parent, out_dir, seed)
        worst = max(worst, run(command, entry, ctx))
    return worst


if __name__ == "__main__":
    raise SystemExit(main())
