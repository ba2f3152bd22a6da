"""JSON model and run-config ingestion, validated against the bundled schemas.

A model document looks like::

    {"sites": 3, "local_dim": 2, "params": {"omega": 1.2, "gamma": 1.2},
     "hamiltonian_terms": [{"ops": "Z", "sites": [1], "all_sites": true,
                            "coeff": {"param": "omega", "factor": 0.5}}],
     "jump_terms": [{"ops": "+-", "sites": [1, 2], "all_sites": true,
                     "coeff": {"param": "gamma", "power": 0.5}}]}

Each Hamiltonian term adds ``coeff * ops`` (and nothing else, so the caller is
responsible for Hermiticity). Each jump term is one jump operator. With
``all_sites`` a term is repeated on every translate ``sites + k`` of the ring.
"""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .operator_core import HilbertSpace, LindbladModel, pauli_string


class ConfigError(ValueError):
    """Document does not match its schema or references an unknown parameter."""


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    text = resources.files("lindred").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def _validate(doc: dict, name: str) -> None:
    try:
        jsonschema.validate(doc, load_schema(name))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{name} document invalid at {where}: {exc.message}") from None


def _coefficient(c, params: dict) -> complex:
    if c is None:
        return 1.0
    if isinstance(c, (int, float)):
        return complex(c)
    if "param" in c:
        try:
            base = params[c["param"]]
        except KeyError:
            raise ConfigError(f"unknown parameter {c['param']!r}") from None
        return complex(c.get("factor", 1.0) * base ** c.get("power", 1.0))
    return complex(c["re"], c.get("im", 0.0))


def _expand(term: dict, n_sites: int):
    sites = list(term["sites"])
    if len(sites) != len(term["ops"]):
        raise ConfigError(f"term {term['ops']!r} needs one site per operator")
    shifts = range(n_sites) if term.get("all_sites") else [0]
    for k in shifts:
        yield [((s - 1 + k) % n_sites) + 1 for s in sites]


def model_from_dict(doc: dict) -> LindbladModel:
    _validate(doc, "model")
    N = doc["sites"]
    params = doc.get("params", {})
    space = HilbertSpace.spins(N)
    H = np.zeros((space.dim, space.dim), dtype=complex)
    for term in doc["hamiltonian_terms"]:
        c = _coefficient(term.get("coeff"), params)
        for sites in _expand(term, N):
            H += c * pauli_string(term["ops"], sites, space)
    jumps = []
    for term in doc.get("jump_terms", []):
        c = _coefficient(term.get("coeff"), params)
        for sites in _expand(term, N):
            jumps.append(c * pauli_string(term["ops"], sites, space))
    try:
        return LindbladModel(space, H, tuple(jumps))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_model(path: str | Path) -> LindbladModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))


def load_run_config(path: str | Path) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    _validate(doc, "run_config")
    return doc


def xxz_document(N: int, omega: float, A_xy: float, A_z: float, gamma: float) -> dict:
    """Model document for the dissipative XXZ ring (used in tests and docs)."""
    return {
        "sites": N,
        "local_dim": 2,
        "params": {"omega": omega, "A_xy": A_xy, "A_z": A_z, "gamma": gamma},
        "hamiltonian_terms": [
            {"ops": "Z", "sites": [1], "all_sites": True, "coeff": {"param": "omega", "factor": 0.5}},
            {"ops": "XX", "sites": [1, 2], "all_sites": True, "coeff": {"param": "A_xy", "factor": 0.5}},
            {"ops": "YY", "sites": [1, 2], "all_sites": True, "coeff": {"param": "A_xy", "factor": 0.5}},
            {"ops": "ZZ", "sites": [1, 2], "all_sites": True, "coeff": {"param": "A_z"}},
        ],
        "jump_terms": [
            {"ops": "+-", "sites": [1, 2], "all_sites": True, "coeff": {"param": "gamma", "power": 0.5}},
        ],
    }
