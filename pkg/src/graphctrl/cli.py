"""Command-line front end: spectra, checker reports, moment solves, dynamics.

Every command writes its data files plus a manifest.json recording the
command, input digests, settings and produced files.  All floating output
uses 17 significant digits so reruns round-trip bit for bit; apart from the
manifest's wall-time stamp, outputs are deterministic.

Exit codes: 0 success, 2 validation failure, 3 numerical failure, 64 usage.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, dynamics, lowerbounds, moment, potentials, spectrum
from .errors import NumericalError, ValidationError
from .graph import check_length_set, load_problem

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_USAGE = 64


def fmt(x) -> str:
    """17-significant-digit decimal: lossless double round-trip."""
    return format(float(x), ".17g")


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


class Runner:
    def __init__(self, command: str, out_dir: Path, inputs: list[str], settings: dict):
        self.command = command
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.inputs = inputs
        self.settings = settings
        self.outputs: list[str] = []
        self.t0 = time.monotonic()

    def path(self, name: str) -> Path:
        self.outputs.append(name)
        return self.out_dir / name

    def write_json(self, name: str, payload: dict):
        with open(self.path(name), "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_csv(self, name: str, header: list[str], rows):
        with open(self.path(name), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow(row)

    def finish(self):
        manifest = {
            "command": self.command,
            "tool_version": __version__,
            "inputs": {str(p): _sha256(p) for p in self.inputs},
            "settings": self.settings,
            "outputs": sorted(self.outputs),
            "wall_time_s": round(time.monotonic() - self.t0, 6),
        }
        with open(self.out_dir / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _jsonable(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, complex):
        return {"re": float(x.real), "im": float(x.imag)}
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    return x


# ---------------------------------------------------------------------------
# commands

def _solve_from_problem(args):
    graph, control, settings = load_problem(args.problem)
    modes = args.modes if args.modes else settings.num_modes
    basis = spectrum.solve_spectrum(graph, modes, settings.scan_resolution)
    return graph, control, settings, basis


def cmd_spectrum(args, runner: Runner):
    graph, _, settings, basis = _solve_from_problem(args)
    header = ["k", "lambda", "omega", "multiplicity"] + [f"amp_{eid}" for eid in basis.edge_ids]
    counts = {}
    for m in basis.modes:
        if m.multiplicity_group is not None:
            counts[m.multiplicity_group] = counts.get(m.multiplicity_group, 0) + 1
    rows = []
    for m in basis.modes:
        mult = counts.get(m.multiplicity_group, 1)
        rows.append([m.index, fmt(m.lam), fmt(m.omega), mult] + [fmt(a) for a, _ in m.per_edge])
    runner.write_csv("spectrum.csv", header, rows)
    report = spectrum.validate_spectral_hypotheses(basis) if len(basis) >= 20 else None
    lengths = check_length_set(graph.lengths)
    runner.write_json("spectrum_summary.json", _jsonable({
        "num_modes": len(basis),
        "weyl": basis.weyl_report,
        "sqrt_gap": {"M": basis.gap_report[0], "delta": basis.gap_report[1]},
        "simple": report.simplicity if report else None,
        "center_decay_exponent": report.center_decay_exponent if report else None,
        "length_scan": {"independent": lengths.independence_flag,
                        "hits": lengths.rational_hits},
    }))


def cmd_check_assumptions(args, runner: Runner):
    graph, control, settings, basis = _solve_from_problem(args)
    rep = potentials.analyze_coupling(control, basis, len(basis),
                                      tol_res=args.tol_res, floor=args.floor)
    vertex = potentials.check_vertex_compatibility(control, graph)
    runner.write_json("assumptions.json", _jsonable({
        "decay_fit": {"exponent": rep.decay_fit[0], "constant": rep.decay_fit[1],
                      "rms_residual": rep.decay_fit[2]},
        "envelope_fit": {"exponent": rep.envelope_fit[0], "constant": rep.envelope_fit[1]},
        "zero_elements": rep.zero_elements,
        "resonant_quadruples": [
            {"pair1": q[0], "pair2": q[1], "frequency_defect": q[2], "diagonal_combination": q[3]}
            for q in rep.resonant_quadruples],
        "vertex_compatibility": {
            "preserves_h2": vertex.preserves_h2,
            "vanishing_order": vertex.vanishing_order,
            "nk_class_sup": vertex.nk_class_sup,
            "certified_d_max": vertex.certified_d_max,
            "boundary_class": vertex.boundary_class,
            "conditions": vertex.conditions,
        },
    }))


def cmd_lowerbounds(args, runner: Runner):
    graph, _, settings, basis = _solve_from_problem(args)
    sp = lowerbounds.build_secular_product(graph)
    fit = lowerbounds.fit_derivative_bound(sp, basis)
    rows = []
    for i, m in enumerate(basis.modes):
        model = fit.constant / (i + 1) ** (1 + fit.dtilde)
        rows.append([m.index, fmt(m.omega), fmt(fit.values[i]), fmt(model)])
    runner.write_csv("derivative_bound.csv", ["k", "sqrt_lambda", "abs_Gprime", "bound_model"], rows)
    runner.write_json("lowerbounds_summary.json", _jsonable({
        "dtilde_fit": fit.dtilde,
        "constant": fit.constant,
        "raw_slope": fit.raw_slope,
        "worst_k": fit.worst_k,
        "scaled_infimum_eps": {str(e): float(np.min(fit.values * np.arange(1, len(basis) + 1) ** (1 + e)))
                               for e in (0.05, 0.1, 0.25, 0.5)},
    }))


def cmd_moment_solve(args, runner: Runner):
    lambdas, targets = [], []
    with open(args.freqs) as fh:
        for row in csv.DictReader(fh):
            lambdas.append(float(row["lambda"]))
    with open(args.target) as fh:
        for row in csv.DictReader(fh):
            targets.append(complex(float(row["re_x"]), float(row["im_x"])))
    sol = moment.solve_moment(lambdas, targets, args.T, mode=args.mode)
    t, u = sol.samples(args.samples)
    runner.write_csv("control.csv", ["t", "u"], [[fmt(a), fmt(b)] for a, b in zip(t, u)])
    runner.write_json("moment_diagnostics.json", _jsonable({
        "mode": sol.mode,
        "max_residual": sol.max_residual,
        "gram_condition": sol.gram_condition,
        "imag_moment_defect": sol.imag_moment_defect,
        "residuals": [complex(r) for r in sol.residuals],
    }))


def _control_from_file(path) -> dynamics.TrigControl | dynamics.SampledControl:
    with open(path) as fh:
        doc = json.load(fh)
    kind = doc.get("kind", "trig")
    if kind == "resonant":
        return dynamics.resonant_pulse(float(doc["amplitude"]), float(doc["frequency"]),
                                       float(doc["T"]))
    if kind == "trig":
        return dynamics.TrigControl(horizon=float(doc["T"]), const=float(doc.get("const", 0.0)),
                                    terms=[(float(f), str(k), float(c))
                                           for f, k, c in doc.get("terms", [])])
    if kind == "samples":
        return dynamics.SampledControl(samples=np.asarray(doc["samples"], dtype=float),
                                       dt=float(doc["dt"]))
    raise ValidationError(f"unknown control kind {kind!r}")


def _galerkin_from_problem(args):
    graph, control, settings, basis = _solve_from_problem(args)
    B = potentials.build_matrix(control, basis)
    return basis, dynamics.GalerkinSystem(lam=basis.eigenvalues, B=B)


def cmd_simulate(args, runner: Runner):
    basis, system = _galerkin_from_problem(args)
    u = _control_from_file(args.control)
    psi0 = np.zeros(system.dim, dtype=complex)
    psi0[args.initial - 1] = 1.0
    traj = dynamics.propagate(system, psi0, u)
    header = (["t"] + [f"re_{k+1}" for k in range(system.dim)]
              + [f"im_{k+1}" for k in range(system.dim)]
              + ["norm"] + [f"pop_{k+1}" for k in range(system.dim)])
    rows = []
    for t, st in zip(traj.times, traj.states):
        rows.append([fmt(t)] + [fmt(v) for v in st.real] + [fmt(v) for v in st.imag]
                    + [fmt(np.linalg.norm(st))] + [fmt(abs(v) ** 2) for v in st])
    runner.write_csv("trajectory.csv", header, rows)
    runner.write_json("simulate_summary.json", _jsonable({
        "norm_drift": traj.norm_drift,
        "final_populations": np.abs(traj.final) ** 2,
    }))


def cmd_liealg(args, runner: Runner):
    basis, system = _galerkin_from_problem(args)
    rep = dynamics.lie_closure(system, resonance_tol=args.resonance_tol,
                               int_labels=basis.int_labels)
    runner.write_json("lie_closure.json", _jsonable({
        "dimension": rep.n1,
        "admissible_pairs": rep.admissible_pairs,
        "reached_dimension": rep.reached_dimension,
        "target_dimension": rep.target_dimension,
        "generated": rep.generated,
        "bracket_depth": rep.bracket_depth,
    }))


def cmd_report(args, runner: Runner):
    graph, control, settings, basis = _solve_from_problem(args)
    out: dict = {"spectrum": {
        "eigenvalues": [m.lam for m in basis.modes],
        "weyl": basis.weyl_report,
        "sqrt_gap": {"M": basis.gap_report[0], "delta": basis.gap_report[1]},
    }}
    hyp = spectrum.validate_spectral_hypotheses(basis) if len(basis) >= 20 else None
    if hyp:
        out["spectrum"]["simple"] = hyp.simplicity
    coupling = potentials.analyze_coupling(control, basis, len(basis))
    vertex = potentials.check_vertex_compatibility(control, graph)
    out["coupling"] = {
        "decay_exponent": coupling.decay_fit[0],
        "envelope_exponent": coupling.envelope_fit[0],
        "zero_elements": coupling.zero_elements,
        "num_resonant_quadruples": len(coupling.resonant_quadruples),
    }
    out["vertex_compatibility"] = {
        "preserves_h2": vertex.preserves_h2,
        "vanishing_order": vertex.vanishing_order,
        "certified_d_max": vertex.certified_d_max,
    }
    if hyp and hyp.simplicity:
        sp = lowerbounds.build_secular_product(graph)
        fit = lowerbounds.fit_derivative_bound(sp, basis)
        out["derivative_bound"] = {"dtilde": fit.dtilde, "constant": fit.constant,
                                   "raw_slope": fit.raw_slope}
        B = potentials.build_matrix(control, basis)
        system = dynamics.GalerkinSystem(lam=basis.eigenvalues, B=B)
        try:
            res = dynamics.resonant_transfer(system, 1, 2, args.eps)
            out["transfer_demo"] = {"fidelity": res.fidelity, "norm_drift": res.norm_drift,
                                    "boundary_population": res.boundary_population}
        except (ValidationError, NumericalError) as exc:
            out["transfer_demo"] = {"error": str(exc)}
    runner.write_json("report.json", _jsonable(out))


# ---------------------------------------------------------------------------
# dispatch

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="graphctrl", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out-dir", default="out", help="output directory (default: ./out)")
    ap.add_argument("--threads", type=int, default=0,
                    help="BLAS thread cap; GRAPHCTRL_THREADS overrides")
    sub = ap.add_subparsers(dest="command")

    p = sub.add_parser("spectrum", help="eigenvalues and eigenfunction amplitudes (CSV)")
    p.add_argument("--problem", required=True)
    p.add_argument("--modes", type=int, default=0)

    p = sub.add_parser("check-assumptions", help="coupling decay / resonances / vertex conditions")
    p.add_argument("--problem", required=True)
    p.add_argument("--modes", type=int, default=0)
    p.add_argument("--tol-res", dest="tol_res", type=float, default=1e-10)
    p.add_argument("--floor", type=float, default=None)

    p = sub.add_parser("lowerbounds", help="secular-derivative lower-bound fits")
    p.add_argument("--problem", required=True)
    p.add_argument("--modes", type=int, default=0)

    p = sub.add_parser("moment-solve", help="solve a truncated moment problem")
    p.add_argument("--freqs", required=True, help="CSV with columns k,lambda")
    p.add_argument("--target", required=True, help="CSV with columns k,re_x,im_x")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--mode", choices=["direct", "dd_preconditioned"], default="direct")
    p.add_argument("--samples", type=int, default=1001)

    p = sub.add_parser("simulate", help="propagate the truncated dynamics")
    p.add_argument("--problem", required=True)
    p.add_argument("--modes", type=int, default=0)
    p.add_argument("--control", required=True, help="control JSON file")
    p.add_argument("--initial", type=int, default=1)

    p = sub.add_parser("liealg", help="bracket-closure dimension report")
    p.add_argument("--problem", required=True)
    p.add_argument("--modes", type=int, default=0)
    p.add_argument("--resonance-tol", dest="resonance_tol", type=float, default=1e-8)

    p = sub.add_parser("report", help="combined spectral / coupling / bound / transfer report")
    p.add_argument("--problem", required=True)
    p.add_argument("--modes", type=int, default=0)
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--all", action="store_true", help="kept for interface compatibility")

    return ap


_HANDLERS = {
    "spectrum": cmd_spectrum,
    "check-assumptions": cmd_check_assumptions,
    "lowerbounds": cmd_lowerbounds,
    "moment-solve": cmd_moment_solve,
    "simulate": cmd_simulate,
    "liealg": cmd_liealg,
    "report": cmd_report,
}


def dispatch(argv) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    if not args.command:
        ap.print_usage(sys.stderr)
        return EXIT_USAGE

    threads = os.environ.get("GRAPHCTRL_THREADS")
    n_threads = int(threads) if threads else args.threads
    if n_threads > 0:
        os.environ.setdefault("OMP_NUM_THREADS", str(n_threads))
        os.environ.setdefault("OPENBLAS_NUM_THREADS", str(n_threads))

    inputs = [v for k, v in vars(args).items()
              if k in ("problem", "freqs", "target", "control") and v]
    settings = {k: v for k, v in vars(args).items() if k not in ("command", "out_dir")}
    runner = Runner(args.command, Path(args.out_dir), inputs, _jsonable(settings))
    try:
        _HANDLERS[args.command](args, runner)
        runner.finish()
        return EXIT_OK
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main():
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
