"""Model parameter files: one JSON document with named parameter blocks.

The header records the format version, fingerprint method, dimension
summary, activation, and the seed that produced the parameters. Arrays are
stored as nested lists of decimals using Python's shortest round-tripping
float representation, so reading a file back reproduces the exact values
and rewriting it reproduces the exact bytes.
"""

from __future__ import annotations

import json

import numpy as np

from .ecfp import EcfpConfig
from .errors import ParseError
from .neuralfp import ConvLayerParams, NeuralFpParams
from .predictor import MlpLayer, MlpParams, ModelParams

FORMAT_VERSION = 1


def _fp_block(fp) -> dict:
    if isinstance(fp, EcfpConfig):
        return {"radius": fp.radius, "width": fp.width, "counted": fp.counted}
    return {
        "activation": fp.activation,
        "pool_per_layer": fp.pool_per_layer,
        "layers": [
            {"W": l.W.tolist(), "H": [h.tolist() for h in l.H], "b": l.b.tolist()}
            for l in fp.layers
        ],
        "V": fp.V.tolist(),
        "c": fp.c.tolist(),
    }


def _fp_from_block(block: dict, method: str):
    if method == "ecfp":
        return EcfpConfig(
            radius=int(block["radius"]),
            width=int(block["width"]),
            counted=bool(block.get("counted", False)),
        )
    layers = [
        ConvLayerParams(
            np.array(l["W"], dtype=np.float64),
            tuple(np.array(h, dtype=np.float64) for h in l["H"]),
            np.array(l["b"], dtype=np.float64),
        )
        for l in block["layers"]
    ]
    return NeuralFpParams(
        layers=layers,
        V=np.array(block["V"], dtype=np.float64),
        c=np.array(block["c"], dtype=np.float64),
        activation=block["activation"],
        pool_per_layer=bool(block.get("pool_per_layer", False)),
    )


def _mlp_block(mlp: MlpParams) -> dict:
    return {
        "layers": [
            {"W": l.W.tolist(), "b": l.b.tolist(), "activation": l.activation}
            for l in mlp.layers
        ]
    }


def _mlp_from_block(block: dict) -> MlpParams:
    return MlpParams(
        [
            MlpLayer(
                np.array(l["W"], dtype=np.float64),
                np.array(l["b"], dtype=np.float64),
                l["activation"],
            )
            for l in block["layers"]
        ]
    )


def model_to_dict(model: ModelParams, seed: int | None = None) -> dict:
    method = model.fingerprint_method
    dims: dict = {"embedding_size": model.ligand_mlp.out_width}
    if method == "neural":
        dims["feature_width"] = model.ligand_fp.feature_width
        dims["conv_layers"] = [l.out_width for l in model.ligand_fp.layers]
        dims["fingerprint_size"] = model.ligand_fp.fingerprint_size
        dims["mlp_hidden"] = [l.W.shape[0] for l in model.ligand_mlp.layers[:-1]]
        activation = model.ligand_fp.activation
    else:
        dims["fingerprint_size"] = model.ligand_fp.width
        dims["mlp_hidden"] = [l.W.shape[0] for l in model.ligand_mlp.layers[:-1]]
        activation = model.ligand_mlp.layers[0].activation
    return {
        "format_version": FORMAT_VERSION,
        "fingerprint_method": method,
        "dims": dims,
        "activation": activation,
        "seed": seed,
        "shared_fingerprint": model.shared_fingerprint,
        "ligand_fp": _fp_block(model.ligand_fp),
        "pocket_fp": _fp_block(model.pocket_fp),
        "ligand_mlp": _mlp_block(model.ligand_mlp),
        "pocket_mlp": _mlp_block(model.pocket_mlp),
    }


def model_from_dict(doc: dict) -> ModelParams:
    if doc.get("format_version") != FORMAT_VERSION:
        raise ParseError(
            f"unsupported parameter file version {doc.get('format_version')!r}"
        )
    method = doc["fingerprint_method"]
    ligand_fp = _fp_from_block(doc["ligand_fp"], method)
    if doc.get("shared_fingerprint"):
        pocket_fp = ligand_fp
    else:
        pocket_fp = _fp_from_block(doc["pocket_fp"], method)
    return ModelParams(
        ligand_fp=ligand_fp,
        pocket_fp=pocket_fp,
        ligand_mlp=_mlp_from_block(doc["ligand_mlp"]),
        pocket_mlp=_mlp_from_block(doc["pocket_mlp"]),
    )


def write_model_params(path, model: ModelParams, seed: int | None = None) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(model_to_dict(model, seed), handle)
        handle.write("\n")


def read_model_params(path) -> ModelParams:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid parameter JSON: {exc.msg}") from exc
    try:
        return model_from_dict(doc)
    except (KeyError, TypeError) as exc:
        raise ParseError(f"parameter file is missing fields: {exc}") from exc
