"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 configuration error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .bell import LAB_MODES, BellLabel, ModeSpace, bell_basis, overlap_matrix, pauli_x, symmetry_class
from .experiment import ExperimentConfig, fidelity_settings, match_exposure, run_experiment, sample_counts
from .noise import (
    NoiseModel,
    average_diagonal_fidelity,
    fit_crosstalk,
    noisy_state,
    predicted_witness,
)
from .optics import (
    GATE_KINDS,
    GATE_POWERS,
    PhotonSpace,
    RoutingConflictError,
    StructuralError,
    WindowOverflowError,
    build_cyclic_gate,
    circuit_to_json,
    gate_success_probabilities,
    verify_equivalence,
)
from .qudit import fidelity_pure
from .witness import certify_dimension, dense_coding_channel, derive_seed

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_VERIFY = 0, 1, 2, 3
GATE_TOL = 1e-8
MANIFEST = "manifest.json"
NEGATIVE_VALUE_FLAGS = ("--window",)
NOISE_PRESETS = ("none", "ideal", "measured", "measured-reciprocal", "paper", "paper-reciprocal")


class UsageError(Exception):
    pass


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def load_schema(name: str) -> dict:
    return json.loads(resources.files("oambell").joinpath("schemas", name).read_text())


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


class Outputs:
    """Writes files atomically into one directory and keeps the manifest list."""

    def __init__(self, out_dir: str, appendix_style: bool = False):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.written: list[str] = []
        self.appendix_style = appendix_style
        self.resolved: dict | None = None

    def _write(self, name: str, text: str) -> None:
        fd, tmp = tempfile.mkstemp(dir=self.dir, prefix=f".{name}.")
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, self.dir / name)
        if name != MANIFEST:
            self.written.append(name)

    def json(self, name: str, obj, schema: str | None = None) -> None:
        if schema is not None:
            jsonschema.validate(obj, load_schema(schema))
        self._write(name, dumps(obj))

    def fmt(self, x: float) -> str:
        s = f"{x:.3f}"
        return s.replace(".", ",") if self.appendix_style else s

    def csv(self, name: str, rows: list[list]) -> None:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        for row in rows:
            writer.writerow([self.fmt(v) if isinstance(v, float) else v for v in row])
        self._write(name, buf.getvalue())

    def manifest(self, command: str, config: dict, seed: int | None) -> None:
        obj = {"command": command, "config": config, "outputs": list(self.written),
               "seed": seed, "version": __version__}
        self.json(MANIFEST, obj, "manifest.schema.json")


def parse_window(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split("..")
        return int(lo), int(hi)
    except ValueError:
        raise UsageError(f"window must look like LO..HI, got {text!r}") from None


def resolve_noise(spec) -> NoiseModel | None:
    if spec is None or spec == "none":
        return None
    if spec == "ideal":
        return NoiseModel.ideal()
    if spec in ("measured", "paper"):
        return NoiseModel.measured()
    if spec in ("measured-reciprocal", "paper-reciprocal"):
        return NoiseModel.measured(reciprocal=True)
    if isinstance(spec, dict):
        try:
            return NoiseModel.from_dict(spec)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"noise: {exc}") from None
    raise ConfigError(f"noise: unknown preset {spec!r}")


def noise_echo(spec):
    return spec if not isinstance(spec, NoiseModel) else spec.to_dict()


def _clean(x: float) -> float:
    return 0.0 if abs(x) < 5e-16 else float(x)


# --- basis -----------------------------------------------------------------

def cmd_basis(args, out: Outputs) -> int:
    if not 2 <= args.dim <= 8:
        raise UsageError(f"--dim must be between 2 and 8, got {args.dim}")
    d = args.dim
    modes = ModeSpace.default(d)
    labels = BellLabel.all(d)
    states = bell_basis(d, modes)
    overlaps = overlap_matrix(states, states)
    census = {"antisymmetric": 0, "neither": 0, "symmetric": 0}
    entries = []
    for lab, psi in zip(labels, states):
        sym = symmetry_class(lab).value
        census[sym] += 1
        amps = [[int(a), int(b), _clean(c.real), _clean(c.imag)]
                for (a, b), c in zip(psi.labels, psi.amplitudes) if abs(c) > 1e-15]
        entries.append({"amplitudes": amps, "label": str(lab), "m": lab.m, "n": lab.n, "symmetry": sym})
    if args.format == "json":
        out.json("basis.json", {"dim": d, "lowest_oam": modes.lowest_oam, "overlap_matrix": overlaps.round(12).tolist(),
                                "states": entries, "symmetry_census": census}, "basis.schema.json")
    else:
        rows = [["label", "m", "n", "symmetry", "oam_a", "oam_b", "re", "im"]]
        for e in entries:
            for a, b, re, im in e["amplitudes"]:
                rows.append([e["label"], e["m"], e["n"], e["symmetry"], a, b, repr(re), repr(im)])
        out.csv("basis_states.csv", rows)
        names = [e["label"] for e in entries]
        out.csv("basis_overlap.csv", [[""] + names] + [[n] + [float(v) for v in row] for n, row in zip(names, overlaps)])
    print(f"{d * d} Bell states in dimension {d}; "
          f"{census['symmetric']} symmetric / {census['antisymmetric']} antisymmetric / {census['neither']} neither")
    print(f"max |overlap - identity| = {np.abs(overlaps - np.eye(d * d)).max():.2e}")
    return EXIT_OK


# --- verify-gates ------------------------------------------------------------

def cmd_verify_gates(args, out: Outputs) -> int:
    window = parse_window(args.window)
    try:
        space = PhotonSpace(("a", "b"), window)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    status = EXIT_OK
    report = []
    for kind in GATE_KINDS:
        power = GATE_POWERS[kind]
        entry = {"kind": kind, "power": power}
        try:
            circuit = build_cyclic_gate(kind, space, args.recombination, tuple(args.trim))
            dev = verify_equivalence(circuit, pauli_x(4, power))
            probs = gate_success_probabilities(circuit)
        except (WindowOverflowError, StructuralError, RoutingConflictError) as exc:
            entry.update(status="FAIL", error=f"{type(exc).__name__}: {exc}")
            print(f"FAIL {kind:8s} {entry['error']}")
            status = EXIT_VERIFY
            report.append(entry)
            continue
        ok = dev <= GATE_TOL
        entry.update(status="PASS" if ok else "FAIL", deviation=dev,
                     success_probability=float(probs.mean()),
                     success_spread=float(probs.max() - probs.min()))
        out.json(f"circuit_{kind}.json", json.loads(circuit_to_json(circuit)), "circuit.schema.json")
        print(f"{entry['status']} {kind:8s} deviation={dev:.2e} success_probability={probs.mean():.3f}")
        if not ok:
            status = EXIT_VERIFY
        report.append(entry)
    out.json("verify_gates.json", {"gates": report, "recombination": args.recombination,
                                   "trim": list(args.trim), "window": list(window)}, "verify_gates.schema.json")
    return status


# --- experiment --------------------------------------------------------------

EXPERIMENT_DEFAULTS = {
    "counts": None,
    "noise": None,
    "oam_window": [-4, 4],
    "recombination": "probabilistic",
    "replicas": 1000,
    "seed": 0,
    "targets": "all",
    "trim": [0.0, 0.0],
}


def load_experiment_config(args) -> dict:
    cfg = dict(EXPERIMENT_DEFAULTS)
    if args.config:
        try:
            user = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        schema = load_schema("experiment_config.schema.json")
        e = jsonschema.exceptions.best_match(jsonschema.Draft202012Validator(schema).iter_errors(user))
        if e is not None:
            where = "/".join(str(p) for p in e.absolute_path) or "<root>"
            raise ConfigError(f"config {where}: {e.message}")
        cfg.update(user)
    if args.all16:
        cfg["targets"] = "all"
    if args.target is not None:
        cfg["targets"] = [list(args.target)]
    if args.alpha is not None or args.gate is not None:
        gate = args.gate or "identity"
        alpha = (args.alpha or 0.0) * math.pi
        try:
            c = ExperimentConfig.from_angle(alpha, gate)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        cfg["targets"] = [[c.m, c.n]]
    for key in ("noise", "counts", "recombination", "replicas"):
        val = getattr(args, key)
        if val is not None:
            cfg[key] = val
    if args.seed is not None:
        cfg["seed"] = args.seed
    if cfg["counts"] is not None:
        cfg["counts"] = float(cfg["counts"])
        if cfg["counts"] <= 0:
            raise UsageError("--counts must be positive")
    return cfg


def _targets(spec) -> list[BellLabel]:
    if spec == "all":
        return BellLabel.all(4)
    try:
        return [BellLabel(4, int(m), int(n)) for m, n in spec]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"targets: {exc}") from None


def cmd_experiment(args, out: Outputs) -> int:
    cfg = load_experiment_config(args)
    noise = resolve_noise(cfg["noise"])
    targets = _targets(cfg["targets"])
    seed = int(cfg["seed"])
    ideal = bell_basis(4, LAB_MODES)
    shape = LAB_MODES.shape
    states = []
    rows_by_label = {}
    for i, lab in enumerate(targets):
        try:
            ecfg = ExperimentConfig(lab.m, lab.n, cfg["recombination"], noise, None,
                                    tuple(cfg["trim"]), tuple(cfg["oam_window"]))
            res = run_experiment(ecfg)
        except (ValueError, WindowOverflowError) as exc:
            raise ConfigError(f"{lab}: {exc}") from None
        target = ideal[lab.message]
        row = [fidelity_pure(res.rho, t) for t in ideal]
        rows_by_label[lab] = row
        entry = {"config": ecfg.to_dict(), "fidelity": res.fidelity, "label": str(lab),
                 "overlap_row": row, "seed": seed, "success_probability": res.success_probability}
        if cfg["counts"] is not None:
            settings = fidelity_settings(lab, LAB_MODES)
            cm = sample_counts(res.rho, settings, cfg["counts"], derive_seed(seed, i))
            wit = certify_dimension(res.rho, target, shape, cm, settings.from_counts,
                                    int(cfg["replicas"]), derive_seed(seed, 10_000 + i))
            entry["counts"] = {"counts": [int(c) for c in cm.counts], "estimate": wit.f_wit,
                               "seed": cm.seed, "std_error": wit.std_error, "total_exposure": cm.total_exposure}
        else:
            wit = certify_dimension(res.rho, target, shape)
        entry["witness"] = wit.to_dict()
        states.append(entry)

    group_means = {}
    for m in range(4):
        group = [BellLabel(4, m, n) for n in range(4)]
        if not all(g in rows_by_label for g in group):
            continue
        header = [""] + [f"psi_{m}{n}" for n in range(4)]
        table = [[f"psi_{m}{n}"] + [float(rows_by_label[g][BellLabel(4, m, k).message]) for k in range(4)]
                 for n, g in enumerate(group)]
        out.csv(f"overlap_group{m}.csv", [header] + table)
        group_means[str(m)] = float(np.mean([rows_by_label[g][g.message] for g in group]))

    wrows = [["state", "f_wit", "std_error", "bound", "n_sigma", "certified_dimension"]]
    for e in states:
        w = e["witness"]
        wrows.append([e["label"], float(w["f_wit"]), float(w["std_error"]), float(w["bound"]),
                      "inf" if w["n_sigma"] is None else f"{w['n_sigma']:.2f}", w["certified_dimension"]])
    out.csv("witness.csv", wrows)

    diag = [e["fidelity"] for e in states]
    summary = {"all_certified": all(e["witness"]["certified_dimension"] == 4 for e in states),
               "group_means": group_means, "mean_diagonal": float(np.mean(diag)),
               "min_witness": float(min(e["witness"]["f_wit"] for e in states))}
    echo = dict(cfg, noise=noise_echo(cfg["noise"]))
    out.resolved = echo
    out.json("experiment.json", {"config": echo, "seed": seed, "states": states, "summary": summary},
             "experiment_result.schema.json")
    for e in states:
        w = e["witness"]
        extra = f" +- {w['std_error']:.4f}" if w["std_error"] else ""
        print(f"{e['label']}  F={e['fidelity']:.4f}  F_wit={w['f_wit']:.4f}{extra}  "
              f"p_success={e['success_probability']:.3f}  certified d={w['certified_dimension']}")
    print(f"mean diagonal fidelity {summary['mean_diagonal']:.4f}; all certified: {summary['all_certified']}")
    return EXIT_OK


# --- witness -----------------------------------------------------------------

def cmd_witness(args, out: Outputs) -> int:
    d = args.dim
    if not 2 <= d <= 8:
        raise UsageError(f"--dim must be between 2 and 8, got {d}")
    noise = resolve_noise(args.noise) or NoiseModel.ideal()
    labels = BellLabel.all(d) if args.all16 or args.target is None else [BellLabel(d, *args.target)]
    modes = LAB_MODES if d == 4 else ModeSpace.default(d)
    results = []
    for i, lab in enumerate(labels):
        try:
            rho = noisy_state(noise, lab)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        target = bell_basis(d, modes)[lab.message]
        if args.counts:
            settings = fidelity_settings(lab, modes)
            cm = sample_counts(rho, settings, float(args.counts), derive_seed(args.seed, i))
            wit = certify_dimension(rho, target, modes.shape, cm, settings.from_counts,
                                    args.replicas, derive_seed(args.seed, 10_000 + i))
        else:
            wit = certify_dimension(rho, target, modes.shape)
        results.append({"label": str(lab), "m": lab.m, "n": lab.n, **wit.to_dict()})
        print(f"{lab}  F_wit={wit.f_wit:.4f}  bound={wit.bound:.4f}  certified d={wit.certified_dimension}")
    if args.format == "json":
        out.json("witness.json", {"counts": args.counts, "dim": d, "noise": noise.to_dict(),
                                  "results": results, "seed": args.seed}, "witness.schema.json")
    else:
        rows = [["state", "f_wit", "std_error", "bound", "certified_dimension"]]
        rows += [[r["label"], float(r["f_wit"]), float(r["std_error"]), float(r["bound"]), r["certified_dimension"]]
                 for r in results]
        out.csv("witness.csv", rows)
    return EXIT_OK


# --- dense-code --------------------------------------------------------------

def cmd_dense_code(args, out: Outputs) -> int:
    noise = resolve_noise(args.noise)
    report = dense_coding_channel(4, noise, args.shots, args.seed)
    names = [str(BellLabel.from_message(4, k)) for k in range(16)]
    out.csv("confusion.csv", [["sent\\decoded"] + names] +
            [[n] + [float(v) for v in row] for n, row in zip(names, report.confusion)])
    out.json("dense_code.json", {"all_correct": report.all_correct, "bits": report.bits,
                                 "confusion": report.confusion.tolist(), "decoded": list(report.decoded),
                                 "noise": None if noise is None else noise.to_dict(),
                                 "seed": args.seed, "shots": args.shots}, "dense_code.schema.json")
    print(f"decoded {sum(i == j for i, j in enumerate(report.decoded))}/16 messages; "
          f"channel carries {report.bits:.3f} bits")
    return EXIT_OK


# --- noise-fit ---------------------------------------------------------------

def cmd_noise_fit(args, out: Outputs) -> int:
    ceiling, witness, average = {}, {}, {}
    psi00 = BellLabel(4, 0, 0)
    for name, recip in (("default", False), ("reciprocal", True)):
        full = NoiseModel.measured(recip)
        spiral_only = NoiseModel(full.alpha_over_beta, full.alpha_over_gamma, reciprocal=recip)
        ceiling[name] = predicted_witness(spiral_only, psi00)
        witness[name] = predicted_witness(full, psi00)
        average[name] = average_diagonal_fidelity(full)
    order_gap = abs(predicted_witness(NoiseModel.measured(), psi00, "crosstalk-first")
                    - predicted_witness(NoiseModel.measured(), psi00, "dephase-first"))
    try:
        eps = fit_crosstalk(args.target_fidelity)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rho = noisy_state(NoiseModel.measured(), psi00)
    n_match = match_exposure(rho, fidelity_settings(psi00), args.target_std, args.seed, replicas=args.replicas)
    obj = {"average_diagonal": average, "crosstalk_for_target": eps, "matched_exposure": n_match,
           "order_difference": order_gap, "predicted_witness": witness, "seed": args.seed,
           "spiral_ceiling": ceiling, "target_fidelity": args.target_fidelity, "target_std": args.target_std}
    out.json("noise_fit.json", obj, "noise_fit.schema.json")
    print(f"spiral ceiling: {ceiling['default']:.4f} (reciprocal {ceiling['reciprocal']:.4f})")
    print(f"predicted F_wit: {witness['default']:.4f} (reciprocal {witness['reciprocal']:.4f})")
    print(f"cross-talk fraction giving F={args.target_fidelity}: {eps:.4f}")
    print(f"exposure for std {args.target_std}: N = {n_match:.0f}")
    return EXIT_OK


# --- parser ------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, seed_default=0) -> None:
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=seed_default, help="master seed (unsigned 64-bit)")
    p.add_argument("--appendix-style", action="store_true", help="comma decimal separator in CSV tables")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="oambell", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("basis", help="write the D^2 Bell states and their overlap matrix")
    _common(p)
    p.add_argument("--dim", type=int, default=4)
    p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("verify-gates", help="check the X, X^2, X^† interferometers against pauli_x")
    _common(p)
    p.add_argument("--recombination", choices=("probabilistic", "deterministic"), default="probabilistic")
    p.add_argument("--window", default="-4..4", help="OAM window LO..HI")
    p.add_argument("--trim", type=float, nargs=2, default=[0.0, 0.0], metavar=("ARM_A", "ARM_B"))

    p = sub.add_parser("experiment", help="simulate Bell-state preparations, overlaps and witnesses")
    _common(p, seed_default=None)
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--all16", action="store_true")
    p.add_argument("--target", type=int, nargs=2, metavar=("M", "N"))
    p.add_argument("--alpha", type=float, help="Dove prism angle in units of pi")
    p.add_argument("--gate", choices=tuple(GATE_POWERS))
    p.add_argument("--noise", choices=NOISE_PRESETS)
    p.add_argument("--counts", type=float, help="expected coincidences per setting group")
    p.add_argument("--replicas", type=int)
    p.add_argument("--recombination", choices=("probabilistic", "deterministic"))

    p = sub.add_parser("witness", help="entanglement-dimensionality witness")
    _common(p)
    p.add_argument("--dim", type=int, default=4)
    p.add_argument("--all16", action="store_true")
    p.add_argument("--target", type=int, nargs=2, metavar=("M", "N"))
    p.add_argument("--noise", choices=NOISE_PRESETS)
    p.add_argument("--counts", type=float)
    p.add_argument("--replicas", type=int, default=1000)
    p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("dense-code", help="16-message dense-coding confusion matrix")
    _common(p)
    p.add_argument("--noise", choices=NOISE_PRESETS)
    p.add_argument("--shots", type=int, default=0, help="sampled measurements per message (0 = exact)")

    p = sub.add_parser("noise-fit", help="noise-budget numbers and fitted parameters")
    _common(p)
    p.add_argument("--target-fidelity", type=float, default=0.91)
    p.add_argument("--target-std", type=float, default=0.016)
    p.add_argument("--replicas", type=int, default=1000)
    return parser


COMMANDS = {
    "basis": cmd_basis,
    "verify-gates": cmd_verify_gates,
    "experiment": cmd_experiment,
    "witness": cmd_witness,
    "dense-code": cmd_dense_code,
    "noise-fit": cmd_noise_fit,
}


def _join_negative_values(argv: list[str]) -> list[str]:
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in NEGATIVE_VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv: list[str] | None = None) -> int:
    argv = _join_negative_values(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "seed", None) is not None and not 0 <= args.seed < 2 ** 64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_USAGE
    out = Outputs(args.out, args.appendix_style)
    try:
        status = COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "command")}
    if out.resolved is not None:
        config = out.resolved
    seed = config.get("seed")
    out.manifest(args.command, config, seed)
    return status


if __name__ == "__main__":
    sys.exit(main())
