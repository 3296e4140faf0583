"""Command-line entry point.

One binary with subcommands wiring ingestion, fingerprinting, training,
evaluation, gradient checking, and synthetic-data generation. Every run
prints its fully resolved configuration to stderr as one JSON object, so an
experiment can be reproduced from its log alone. A JSON config file can
supply any flag's value; explicit flags override the file.

Exit codes: 0 success, 1 check failure, 2 input error, 3 numeric failure,
64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

from .ecfp import EcfpConfig, ecfp, fingerprint_hex
from .errors import (
    MalformedLine,
    MolScreenError,
    NonFiniteLoss,
    ParseError,
    SdfError,
    SpecInfeasible,
)
from .evaluation import evaluate
from .io import load_manifest, parse_graph_jsonl, parse_sdf_v2000
from .neuralfp import _forward, GraphTensors
from .params_io import read_model_params, write_model_params
from .predictor import init_model_params
from .synthetic import SynthSpec, generate_synthetic
from .training import TrainConfig, train

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2
EXIT_NUMERIC_ERROR = 3
EXIT_USAGE = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class UsageError(MolScreenError):
    """A semantic usage problem argparse cannot catch (exit 64)."""


def _int_tuple(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part != "")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


_DEFAULTS: dict[str, dict] = {
    "fingerprint": {
        "method": "ecfp",
        "format": "jsonl",
        "params": None,
        "out": "-",
        "radius": 2,
        "width": 4096,
        "counted": False,
        "seed": 0,
        "threads": 1,
    },
    "train": {
        "fingerprint": "neural",
        "conv_layers": (64, 64),
        "fingerprint_size": 128,
        "ecfp_radius": 2,
        "ecfp_width": 4096,
        "mlp_hidden": (128,),
        "embedding_size": 32,
        "activation": "relu",
        "shared_fingerprint": False,
        "epochs": 30,
        "batch_size": 32,
        "learning_rate": 1e-3,
        "optimizer": "adam",
        "beta1": 0.9,
        "beta2": 0.999,
        "eps": 1e-8,
        "negative_ratio": 1.0,
        "negative_weight": 1.0,
        "exclude_known_positives": False,
        "holdout_fraction": 0.1,
        "early_stop_patience": None,
        "log": None,
        "seed": 0,
        "threads": 1,
    },
    "eval": {
        "table": None,
        "strict": False,
        "seed": 0,
        "threads": 1,
    },
    "grad-check": {
        "instances": 20,
        "activation": "sigmoid",
        "tolerance": 1e-4,
        "step": 1e-6,
        "seed": 0,
        "threads": 1,
    },
    "gen-synthetic": {
        "targets": 12,
        "compounds": 6000,
        "actives": 50,
        "decoys": 950,
        "motif_length": 4,
        "decoy_sharing": "per-target",
        "n_motifs": None,
        "decoy_pool_size": 2000,
        "compound_atoms": (10, 18),
        "pocket_atoms": (5, 8),
        "seed": 0,
        "threads": 1,
    },
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="molscreen", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--config", default=None, help="JSON file of flag values")

    p = sub.add_parser("fingerprint", help="emit fingerprints, one line per graph")
    p.add_argument("--input", required=True)
    p.add_argument("--method", choices=("ecfp", "neural"), default=None)
    p.add_argument("--format", choices=("jsonl", "sdf"), default=None)
    p.add_argument("--params", default=None, help="model parameter file (neural)")
    p.add_argument("--out", default=None)
    p.add_argument("--radius", type=int, default=None)
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--counted", action=argparse.BooleanOptionalAction, default=None)
    common(p)

    p = sub.add_parser("train", help="train the dual-tower model on a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="output parameter file")
    p.add_argument("--log", default=None, help="CSV epoch log")
    p.add_argument("--fingerprint", choices=("neural", "ecfp"), default=None)
    p.add_argument("--conv-layers", type=_int_tuple, default=None)
    p.add_argument("--fingerprint-size", type=int, default=None)
    p.add_argument("--ecfp-radius", type=int, default=None)
    p.add_argument("--ecfp-width", type=int, default=None)
    p.add_argument("--mlp-hidden", type=_int_tuple, default=None)
    p.add_argument("--embedding-size", type=int, default=None)
    p.add_argument("--activation", choices=("relu", "sigmoid", "tanh"), default=None)
    p.add_argument("--shared-fingerprint", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--optimizer", choices=("sgd", "adam"), default=None)
    p.add_argument("--beta1", type=float, default=None)
    p.add_argument("--beta2", type=float, default=None)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--negative-ratio", type=float, default=None)
    p.add_argument("--negative-weight", type=float, default=None)
    p.add_argument(
        "--exclude-known-positives", action=argparse.BooleanOptionalAction, default=None
    )
    p.add_argument("--holdout-fraction", type=float, default=None)
    p.add_argument("--early-stop-patience", type=int, default=None)
    common(p)

    p = sub.add_parser("eval", help="score eval pairs and write an AUC report")
    p.add_argument("--manifest", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--report", required=True, help="output report JSON")
    p.add_argument("--table", default=None, help="output human-readable table")
    p.add_argument("--strict", action=argparse.BooleanOptionalAction, default=None)
    common(p)

    p = sub.add_parser("grad-check", help="finite-difference gradient verification")
    p.add_argument("--instances", type=int, default=None)
    p.add_argument("--activation", choices=("relu", "sigmoid", "tanh"), default=None)
    p.add_argument("--tolerance", type=float, default=None)
    p.add_argument("--step", type=float, default=None)
    common(p)

    p = sub.add_parser("gen-synthetic", help="generate a planted-rule benchmark")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--targets", type=int, default=None)
    p.add_argument("--compounds", type=int, default=None)
    p.add_argument("--actives", type=int, default=None)
    p.add_argument("--decoys", type=int, default=None)
    p.add_argument("--motif-length", type=int, default=None)
    p.add_argument("--decoy-sharing", choices=("per-target", "shared-pool"), default=None)
    p.add_argument("--n-motifs", type=int, default=None)
    p.add_argument("--decoy-pool-size", type=int, default=None)
    p.add_argument("--compound-atoms", type=_int_tuple, default=None)
    p.add_argument("--pocket-atoms", type=_int_tuple, default=None)
    common(p)

    return parser


def _resolve(args: argparse.Namespace) -> dict:
    """Defaults < config file < explicit flags; rejects unknown config keys."""
    defaults = dict(_DEFAULTS[args.command])
    resolved = dict(defaults)
    if getattr(args, "config", None):
        try:
            with open(args.config, "r", encoding="utf-8") as handle:
                loaded = json.load(handle)
        except OSError as exc:
            raise ParseError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid config JSON: {exc.msg}") from exc
        if not isinstance(loaded, dict):
            raise ParseError("config file must hold a JSON object")
        for key, value in loaded.items():
            name = key.replace("-", "_")
            if name not in defaults:
                raise ParseError(f"unknown config key {key!r} for {args.command}")
            if isinstance(value, list):
                value = tuple(value)
            resolved[name] = value
    for name in defaults:
        given = getattr(args, name, None)
        if given is not None:
            resolved[name] = given
    for name in ("manifest", "params", "out", "input", "report", "table", "log"):
        if hasattr(args, name) and name not in resolved:
            resolved[name] = getattr(args, name)
    return resolved


def _echo_config(command: str, resolved: dict) -> None:
    printable = {"command": command}
    printable.update(sorted(resolved.items()))
    print(json.dumps(printable, default=str), file=sys.stderr)


def _open_out(path: str):
    if path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8"), True


def _cmd_fingerprint(cfg: dict) -> int:
    if cfg["format"] == "sdf":
        graphs = parse_sdf_v2000(cfg["input"])
    else:
        graphs = parse_graph_jsonl(cfg["input"])
    lines = []
    if cfg["method"] == "ecfp":
        config = EcfpConfig(radius=cfg["radius"], width=cfg["width"], counted=bool(cfg["counted"]))
        for g in graphs:
            fp = ecfp(g, config)
            if config.counted:
                body = "\t".join(str(int(v)) for v in fp.values)
            else:
                body = fingerprint_hex(fp.values)
            lines.append(f"{g.id}\t{body}")
    else:
        if not cfg.get("params"):
            raise UsageError("--method neural requires --params")
        model = read_model_params(cfg["params"])
        if model.fingerprint_method != "neural":
            raise ParseError("parameter file does not hold neural fingerprint weights")
        for g in graphs:
            fp_params = model.ligand_fp if g.kind == "compound" else model.pocket_fp
            values = _forward(GraphTensors.from_graph(g), fp_params)[0]
            body = "\t".join(repr(float(v)) for v in values)
            lines.append(f"{g.id}\t{body}")
    handle, owned = _open_out(cfg["out"])
    try:
        for line in lines:
            handle.write(line + "\n")
    finally:
        if owned:
            handle.close()
    return EXIT_OK


def _cmd_train(cfg: dict) -> int:
    dataset = load_manifest(cfg["manifest"])
    model = init_model_params(
        seed=cfg["seed"],
        fingerprint=cfg["fingerprint"],
        conv_layers=tuple(cfg["conv_layers"]),
        fingerprint_size=cfg["fingerprint_size"],
        ecfp_radius=cfg["ecfp_radius"],
        ecfp_width=cfg["ecfp_width"],
        mlp_hidden=tuple(cfg["mlp_hidden"]),
        embedding_size=cfg["embedding_size"],
        activation=cfg["activation"],
        shared_fingerprint=bool(cfg["shared_fingerprint"]),
    )
    config = TrainConfig(
        epochs=cfg["epochs"],
        batch_size=cfg["batch_size"],
        learning_rate=cfg["learning_rate"],
        optimizer=cfg["optimizer"],
        beta1=cfg["beta1"],
        beta2=cfg["beta2"],
        eps=cfg["eps"],
        seed=cfg["seed"],
        negative_ratio=cfg["negative_ratio"],
        negative_weight=cfg["negative_weight"],
        exclude_known_positives=bool(cfg["exclude_known_positives"]),
        holdout_fraction=cfg["holdout_fraction"],
        early_stop_patience=cfg["early_stop_patience"],
    )
    result = train(dataset, model, config)
    write_model_params(cfg["out"], result.model, seed=cfg["seed"])
    if cfg.get("log"):
        with open(cfg["log"], "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["epoch", "objective", "heldout_objective", "wall_ms"])
            for record in result.history:
                writer.writerow(
                    [
                        record.epoch,
                        repr(record.objective),
                        repr(record.heldout_objective),
                        f"{record.wall_ms:.3f}",
                    ]
                )
    print(f"trained {len(result.history)} epochs -> {cfg['out']}", file=sys.stderr)
    return EXIT_OK


def _cmd_eval(cfg: dict) -> int:
    dataset = load_manifest(cfg["manifest"])
    if not dataset.eval_pairs:
        raise ParseError("manifest has no eval_pairs to evaluate")
    model = read_model_params(cfg["params"])
    report = evaluate(
        model,
        dataset,
        strict=bool(cfg["strict"]),
        threads=max(1, int(cfg["threads"])),
    )
    with open(cfg["report"], "w", encoding="utf-8") as handle:
        handle.write(report.to_json())
    if cfg.get("table"):
        with open(cfg["table"], "w", encoding="utf-8") as handle:
            handle.write(report.to_table())
    for target in report.skipped_targets:
        print(f"warning: target {target} skipped (single-class)", file=sys.stderr)
    print(report.to_table(), end="", file=sys.stderr)
    return EXIT_OK


def _cmd_grad_check(cfg: dict) -> int:
    from .gradcheck import SMOOTH_ACTIVATIONS, gradient_check

    activation = cfg["activation"]
    if activation not in SMOOTH_ACTIVATIONS:
        print(
            f"warning: {activation} has kinks; forcing sigmoid for the check",
            file=sys.stderr,
        )
        activation = "sigmoid"
    result = gradient_check(
        seed=cfg["seed"],
        instances=cfg["instances"],
        activation=activation,
        h=cfg["step"],
        tolerance=cfg["tolerance"],
    )
    for block, err in sorted(result.per_block.items()):
        print(f"{block}: max rel err {err:.3e}")
    print(
        f"overall: max rel err {result.max_rel_error:.3e} "
        f"({'PASS' if result.passed else 'FAIL'} at {result.tolerance:g})"
    )
    return EXIT_OK if result.passed else EXIT_CHECK_FAILED


def _cmd_gen_synthetic(cfg: dict) -> int:
    spec = SynthSpec(
        n_targets=cfg["targets"],
        n_compounds=cfg["compounds"],
        actives_per_target=cfg["actives"],
        decoys_per_target=cfg["decoys"],
        motif_length=cfg["motif_length"],
        decoy_sharing=cfg["decoy_sharing"],
        seed=cfg["seed"],
        n_motifs=cfg["n_motifs"],
        decoy_pool_size=cfg["decoy_pool_size"],
        compound_atoms=tuple(cfg["compound_atoms"]),
        pocket_atoms=tuple(cfg["pocket_atoms"]),
    )
    manifest = generate_synthetic(spec, cfg["out"])
    print(f"wrote {manifest}", file=sys.stderr)
    return EXIT_OK


_COMMANDS = {
    "fingerprint": _cmd_fingerprint,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "grad-check": _cmd_grad_check,
    "gen-synthetic": _cmd_gen_synthetic,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        resolved = _resolve(args)
        _echo_config(args.command, resolved)
        return _COMMANDS[args.command](resolved)
    except UsageError as exc:
        parser.exit(EXIT_USAGE, f"{parser.prog}: error: {exc}\n")
    except MalformedLine as exc:
        input_path = getattr(args, "input", getattr(args, "manifest", "?"))
        print(f"{input_path}:{exc.line_no}: {exc.reason}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except SdfError as exc:
        input_path = getattr(args, "input", "?")
        print(f"{input_path}: record {exc.record_index}: {exc.reason}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except NonFiniteLoss as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC_ERROR
    except (SpecInfeasible, MolScreenError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
