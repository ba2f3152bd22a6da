import json

import numpy as np
import pytest

from lindred.ingest import (
    ConfigError, load_model, load_run_config, load_schema, model_from_dict, xxz_document,
)
from lindred.models import XXZSpec, build_xxz
from lindred.operator_core import liouvillian


def test_xxz_document_matches_builder():
    m = model_from_dict(xxz_document(3, 1.2, 2.0, 4.6, 1.2))
    ref = build_xxz(XXZSpec(3))
    assert np.allclose(m.hamiltonian, ref.hamiltonian)
    assert np.allclose(liouvillian(m), liouvillian(ref))


def test_complex_and_plain_coefficients():
    doc = {"sites": 1, "hamiltonian_terms": [{"ops": "Z", "sites": [1], "coeff": 0.5}],
           "jump_terms": [{"ops": "-", "sites": [1], "coeff": {"re": 0.0, "im": 2.0}}]}
    m = model_from_dict(doc)
    assert np.allclose(m.hamiltonian, np.diag([0.5, -0.5]))
    assert np.allclose(m.jumps[0], [[0, 0], [2j, 0]])


def test_unknown_key_rejected():
    doc = xxz_document(2, 1.0, 1.0, 1.0, 1.0)
    doc["extra"] = 1
    with pytest.raises(ConfigError, match="extra"):
        model_from_dict(doc)


def test_bad_operator_letter_rejected():
    doc = {"sites": 2, "hamiltonian_terms": [{"ops": "Q", "sites": [1]}]}
    with pytest.raises(ConfigError):
        model_from_dict(doc)


def test_unknown_parameter_rejected():
    doc = {"sites": 2, "hamiltonian_terms": [{"ops": "Z", "sites": [1], "coeff": {"param": "w"}}]}
    with pytest.raises(ConfigError, match="unknown parameter"):
        model_from_dict(doc)


def test_site_count_mismatch_rejected():
    doc = {"sites": 2, "hamiltonian_terms": [{"ops": "ZZ", "sites": [1]}]}
    with pytest.raises(ConfigError):
        model_from_dict(doc)


def test_non_hermitian_hamiltonian_rejected():
    doc = {"sites": 1, "hamiltonian_terms": [{"ops": "+", "sites": [1]}]}
    with pytest.raises(ConfigError):
        model_from_dict(doc)


def test_too_many_sites_rejected():
    with pytest.raises(ConfigError):
        model_from_dict({"sites": 7, "hamiltonian_terms": []})


def test_files(tmp_path):
    p = tmp_path / "m.json"
    p.write_text(json.dumps(xxz_document(2, 1.0, 0.5, 1.0, 1.0)))
    assert load_model(p).space.dim == 4
    c = tmp_path / "c.json"
    c.write_text(json.dumps({"model": "xxz", "N": 3, "eps": [0.1]}))
    assert load_run_config(c)["N"] == 3
    c.write_text(json.dumps({"model": "xxz", "colour": "red"}))
    with pytest.raises(ConfigError):
        load_run_config(c)


def test_schemas_are_bundled():
    assert load_schema("model")["additionalProperties"] is False
    assert load_schema("run_config")["additionalProperties"] is False
