"""Command-line front end.

Exit codes: 0 success, 2 negative verdict (unphysical matrix, negative
weight function, channel without a Mueller matrix), 1 error.  Reports go
to standard output as JSON with 17 significant digits.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import channels as chn
from . import formats
from . import sim
from . import stokes as sc
from .errors import NegativeWeightFunction, NotMuellerRepresentable, NotPhysical

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _emit(doc, path=None) -> None:
    text = formats.dumps17(doc)
    if path:
        formats.Path(path).write_text(text)
    sys.stdout.write(text)


def _physicality(m, tol) -> dict:
    rep = sc.is_physical(m, tol)
    return {
        "verdict": "physical" if rep.physical else "unphysical",
        "tol": tol,
        "coherency_eigenvalues": list(rep.eigenvalues),
        "min_eigenvalue": rep.min_eigenvalue,
    }


def cmd_validate(args) -> int:
    m = formats.load_mueller(args.input[0])
    rep = _physicality(m, args.tol)
    _emit(rep, args.output)
    return EXIT_OK if rep["verdict"] == "physical" else EXIT_NEGATIVE


def cmd_decompose(args) -> int:
    m = formats.load_mueller(args.input[0])
    norm = float(np.linalg.norm(m))
    if args.method == "cloude":
        try:
            terms = sc.cloude_decompose(m, args.tol)
        except NotPhysical:
            _emit(_physicality(m, args.tol), args.output)
            return EXIT_NEGATIVE
        recon = sum(w * mk for w, mk in terms)
        doc = {
            "method": "cloude",
            "tol": args.tol,
            "weights": [w for w, _ in terms],
            "matrices": [mk for _, mk in terms],
            "reconstruction_residual": float(np.linalg.norm(recon - m)) / norm,
        }
    else:
        dep, dia, ret = sc.lu_chipman(m, args.tol)
        doc = {
            "method": "lu-chipman",
            "tol": args.tol,
            "order": "depolarizer @ diattenuator @ retarder",
            "depolarizer": dep,
            "diattenuator": dia,
            "retarder": ret,
            "reconstruction_residual": float(np.linalg.norm(dep @ dia @ ret - m)) / norm,
        }
    _emit(doc, args.output)
    return EXIT_OK


def cmd_compose(args) -> int:
    # inputs are listed in the order the elements act
    out = np.eye(4)
    for path in args.input:
        out = sc.compose(formats.load_mueller(path), out)
    _emit(formats.mueller_doc(out), args.output)
    return EXIT_OK


def _load_channel(args):
    doc = formats.read_json(args.input[0])
    return doc, formats.build_channel(doc, args.nmax)


def cmd_channel_extract(args) -> int:
    try:
        doc, ch = _load_channel(args)
    except NegativeWeightFunction as exc:
        _emit(_failure_doc(exc.failure), args.output)
        return EXIT_NEGATIVE
    fit = chn.mueller_fit(ch)
    cptp = chn.is_cptp(ch)
    if fit.residual > args.tol:
        err = NotMuellerRepresentable(fit.residual, int(np.argmax(fit.component_residuals)), fit.component_residuals)
        _emit(
            {
                "verdict": "not_mueller_representable",
                "message": str(err),
                "residual": fit.residual,
                "component_residuals": list(fit.component_residuals),
                "tol": args.tol,
            },
            args.output,
        )
        return EXIT_NEGATIVE
    out = formats.mueller_doc(
        fit.mueller,
        residual=fit.residual,
        tol=args.tol,
        n_max=ch.basis.n_max,
        kraus_count=len(ch),
        cptp_deviation=cptp.deviation,
        channel_type=doc.get("type"),
    )
    _emit(out, args.output)
    return EXIT_OK


def cmd_classify(args) -> int:
    doc = formats.read_json(args.input[0])
    evidence = {}
    if doc.get("schema") == formats.CHANNEL_SCHEMA:
        ch = formats.build_channel(doc, args.nmax)
        try:
            m = chn.extract_mueller(ch)
        except NotMuellerRepresentable as exc:
            _emit({"verdict": "not_mueller_representable", "residual": exc.residual}, args.output)
            return EXIT_NEGATIVE
        evidence["dilation_conserves_number"] = ch.dilation_conserves_number
    else:
        m = formats.load_mueller(args.input[0])
    c = sc.classify(m, args.tol)
    _emit(
        {
            "label": c.label,
            "tol": args.tol,
            "coherency_eigenvalues": list(c.eigenvalues),
            "eigen_ratio": c.eigen_ratio,
            "lorentz_residual": c.lorentz_residual,
            "mueller": m,
            **evidence,
        },
        args.output,
    )
    return EXIT_OK


def cmd_simulate(args) -> int:
    doc = formats.read_json(args.input[0])
    record = sim.run_experiment(doc, seed=args.seed, shots=args.shots)
    out = args.output or doc.get("output") or "experiment.record.json"
    sim.persist(record, out)
    lines = [f"record: {out}", "estimate +- stderr (row-major):"]
    for mu in range(4):
        cells = [f"{record.estimate[mu, nu]: .5f} +- {record.stderr[mu, nu]:.1e}" for nu in range(4)]
        lines.append("  " + "  ".join(cells))
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_random(args) -> int:
    seed = 0 if args.seed is None else args.seed
    seqs = np.random.SeedSequence(seed).spawn(args.count)
    ms = [chn.random_nondepolarizing_mueller(s) for s in seqs]
    if args.count == 1:
        _emit(formats.mueller_doc(ms[0], seed=seed), args.output)
    else:
        _emit({"seed": seed, "mueller": ms}, args.output)
    return EXIT_OK


def _failure_doc(f) -> dict:
    return {
        "verdict": "negative",
        "min_value": f.min_value,
        "n_violations": f.n_violations,
        "n_nodes": f.n_nodes,
        "violating_nodes": [list(v) for v in f.violating_nodes],
        "node_fields": ["phi", "theta", "psi", "f"],
    }


def cmd_weightfn_check(args) -> int:
    doc = formats.read_json(args.input[0])
    params = doc.get("params", doc)
    spec = chn.WeightFunctionSpec(**{k: float(params[k]) for k in "abcdefghij" if k in params})
    failure = chn.positivity_scan(spec, args.grid, args.tol)
    if failure is not None:
        out = _failure_doc(failure)
        out.update(grid=args.grid, tol=args.tol)
        _emit(out, args.output)
        return EXIT_NEGATIVE
    _emit(
        {
            "verdict": "nonnegative",
            "grid": args.grid,
            "tol": args.tol,
            "symmetric": spec.is_symmetric(),
            "mueller": chn.weighted_rotation_mueller(spec),
        },
        args.output,
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qmueller", description="Mueller polarimetry with Kraus channels on Fock space.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, inputs="+", tol=1e-9):
        s = sub.add_parser(name)
        if inputs:
            s.add_argument("-i", "--input", action="append", required=True)
        s.add_argument("-o", "--output")
        s.add_argument("--tol", type=float, default=tol)
        s.set_defaults(func=fn)
        return s

    add("validate", cmd_validate)
    add("decompose", cmd_decompose).add_argument("--method", choices=("cloude", "lu-chipman"), default="cloude")
    add("compose", cmd_compose)
    add("channel-extract", cmd_channel_extract, tol=1e-8).add_argument("--nmax", type=int)
    add("classify", cmd_classify).add_argument("--nmax", type=int)
    s = add("simulate", cmd_simulate)
    s.add_argument("--seed", type=int)
    s.add_argument("--shots", type=int)
    s = add("random", cmd_random, inputs=None)
    s.add_argument("--seed", type=int)
    s.add_argument("--count", type=int, default=1)
    add("weightfn-check", cmd_weightfn_check, tol=1e-12).add_argument("--grid", type=int, default=64)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "nmax", None) is not None and args.nmax < 1:
            raise _UsageError("--nmax must be >= 1")
        return args.func(args)
    except _UsageError as exc:
        sys.stderr.write(f"qmueller: {exc}\n")
        return EXIT_ERROR
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except Exception as exc:  # report, do not crash
        sys.stderr.write(f"qmueller: error: {type(exc).__name__}: {exc}\n")
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
