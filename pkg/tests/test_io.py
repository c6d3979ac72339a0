"""Canonical JSON round-trips and schema policing."""

import json

import numpy as np
import pytest

from matrange.feasibility import (
    CertificateError,
    MatPoint,
    SolverOptions,
    sample_range,
    solve_free,
)
from matrange.io import (
    AFFINE_TAG,
    FLATTEN_TAG,
    ParseError,
    SchemaError,
    canonical_dumps,
    load_certificate,
    load_cloud,
    load_report,
    load_tuple,
    save_certificate,
    save_cloud,
    save_report,
    save_tuple,
)
from matrange.linalg import HermitianTuple
from matrange.ranges import affine_image
from matrange.verify import SuiteReport, random_hermitian_tuple


def herm(n, seed):
    return random_hermitian_tuple(2, n, seed)


# ---------------------------------------------------------------------------
# tuples


def test_tuple_roundtrip_hermitian(tmp_path):
    A = herm(5, seed=1)
    f = tmp_path / "a.json"
    save_tuple(A, f)
    B = load_tuple(f)
    assert isinstance(B, HermitianTuple)
    assert np.array_equal(A.mats, B.mats)


def test_tuple_roundtrip_is_byte_stable(tmp_path):
    A = herm(4, seed=2)
    f1, f2 = tmp_path / "a.json", tmp_path / "b.json"
    save_tuple(A, f1)
    save_tuple(load_tuple(f1), f2)
    assert f1.read_bytes() == f2.read_bytes()
    # canonical form: no spaces, trailing newline
    raw = f1.read_bytes()
    assert raw.endswith(b"\n")
    assert b": " not in raw and b", " not in raw


def test_tuple_nonhermitian_comes_back_raw(tmp_path):
    T = np.array([[0.0, 2.0], [0.0, 0.0]], dtype=complex)
    f = tmp_path / "t.json"
    save_tuple([T], f)
    out = load_tuple(f)
    assert isinstance(out, tuple)
    assert np.array_equal(out[0], T)
    emb = load_tuple(f, embed=True)
    assert isinstance(emb, HermitianTuple)
    assert emb.m == 2
    assert np.allclose(emb.mats[0], (T + T.conj().T) / 2)


def test_tuple_hermitian_flag_violation_names_entry(tmp_path):
    A = herm(3, seed=3)
    f = tmp_path / "a.json"
    save_tuple(A, f)
    doc = json.loads(f.read_text())
    doc["matrices"][1][0][2] = [99.0, 1.0]  # break Hermitian symmetry
    f.write_text(canonical_dumps(doc))
    with pytest.raises(SchemaError, match=r"matrix 1 .* \(0, 2\)"):
        load_tuple(f)


def test_tuple_schema_errors(tmp_path):
    f = tmp_path / "bad.json"
    f.write_text('{"schema_version":"1","kind":"cloud"}\n')
    with pytest.raises(SchemaError, match="expected kind 'tuple'"):
        load_tuple(f)
    f.write_text('{"schema_version":"2","kind":"tuple"}\n')
    with pytest.raises(SchemaError, match="schema_version"):
        load_tuple(f)
    f.write_text('{"schema_version":"1","kind":"tuple","m":1,"n":2}\n')
    with pytest.raises(SchemaError, match="missing keys"):
        load_tuple(f)


def test_truncated_file_is_parse_error(tmp_path):
    A = herm(3, seed=4)
    f = tmp_path / "a.json"
    save_tuple(A, f)
    raw = f.read_text()
    f.write_text(raw[: len(raw) // 2])
    with pytest.raises(ParseError) as exc:
        load_tuple(f)
    assert exc.value.pos > 0


def test_nonfinite_rejection_both_paths(tmp_path):
    f = tmp_path / "nan.json"
    # the JSON constant path
    f.write_text('{"schema_version":"1","kind":"tuple","m":1,"n":1,'
                 '"hermitian":true,"matrices":[[[[NaN,0.0]]]]}\n')
    with pytest.raises(SchemaError, match="non-finite"):
        load_tuple(f)
    # the overflow-to-inf path: 1e999 parses as a float but is not finite
    f.write_text('{"schema_version":"1","kind":"tuple","m":1,"n":1,'
                 '"hermitian":true,"matrices":[[[[1e999,0.0]]]]}\n')
    with pytest.raises(SchemaError, match="non-finite"):
        load_tuple(f)


def test_save_rejects_nonfinite_values(tmp_path):
    M = np.array([[np.nan]], dtype=complex)
    with pytest.raises(ValueError):
        save_tuple([M], tmp_path / "x.json")


# ---------------------------------------------------------------------------
# certificates


def test_certificate_roundtrip_with_revalidation(tmp_path):
    A = herm(8, seed=5)
    cert = solve_free(A, 2, 1, SolverOptions(seed=0))
    f = tmp_path / "c.json"
    save_certificate(cert, f)
    back = load_certificate(f, A=A)
    assert back.p == cert.p and back.q == cert.q
    assert back.residual == cert.residual
    assert np.array_equal(back.witness.mat, cert.witness.mat)
    # byte stability through a load-save cycle
    f2 = tmp_path / "c2.json"
    save_certificate(back, f2)
    assert f.read_bytes() == f2.read_bytes()


def test_certificate_revalidation_catches_stale_residual(tmp_path):
    A = herm(8, seed=6)
    cert = solve_free(A, 2, 1, SolverOptions(seed=0))
    f = tmp_path / "c.json"
    save_certificate(cert, f)
    doc = json.loads(f.read_text())
    doc["residual"] = doc["residual"] + 1e-3
    f.write_text(canonical_dumps(doc))
    load_certificate(f)          # loads fine without the tuple
    with pytest.raises(CertificateError):
        load_certificate(f, A=A)


def test_certificate_block_shape_check(tmp_path):
    A = herm(8, seed=7)
    cert = solve_free(A, 1, 2, SolverOptions(seed=0))
    f = tmp_path / "c.json"
    save_certificate(cert, f)
    doc = json.loads(f.read_text())
    doc["q"] = 3
    f.write_text(canonical_dumps(doc))
    with pytest.raises(SchemaError):
        load_certificate(f)


# ---------------------------------------------------------------------------
# clouds


def test_cloud_roundtrip_with_certificates(tmp_path):
    A = herm(7, seed=8)
    cloud = sample_range(A, 1, 1, 4, SolverOptions(seed=0))
    f = tmp_path / "cl.json"
    save_cloud(cloud, f)
    back = load_cloud(f, A=A)
    assert np.array_equal(back.coords, cloud.coords)
    assert back.kind == "matpoint"
    assert back.meta == cloud.meta
    assert len(back.certificates) == len(cloud.certificates)
    f2 = tmp_path / "cl2.json"
    save_cloud(back, f2)
    assert f.read_bytes() == f2.read_bytes()


def test_cloud_affine_drops_certificates(tmp_path):
    A = herm(7, seed=9)
    cloud = sample_range(A, 1, 1, 4, SolverOptions(seed=0))
    W = np.array([[1.0, 0.5]])
    img = affine_image(cloud, W, np.array([0.25]))
    assert img.kind == "affine"
    f = tmp_path / "af.json"
    save_cloud(img, f)
    raw = json.loads(f.read_text())
    assert raw["flattening"] == AFFINE_TAG
    assert raw["certificates"] is None
    back = load_cloud(f)
    assert back.kind == "affine"
    assert back.certificates is None
    assert np.allclose(back.coords, img.coords)


def test_cloud_flattening_tag_policing(tmp_path):
    A = herm(7, seed=10)
    cloud = sample_range(A, 1, 1, 2, SolverOptions(seed=0))
    f = tmp_path / "cl.json"
    save_cloud(cloud, f)
    doc = json.loads(f.read_text())
    doc["flattening"] = "row-major"
    f.write_text(canonical_dumps(doc))
    with pytest.raises(SchemaError, match="flattening"):
        load_cloud(f)


def test_cloud_certificate_count_mismatch(tmp_path):
    A = herm(7, seed=11)
    cloud = sample_range(A, 1, 1, 3, SolverOptions(seed=0))
    f = tmp_path / "cl.json"
    save_cloud(cloud, f)
    doc = json.loads(f.read_text())
    doc["certificates"] = doc["certificates"][:-1]
    f.write_text(canonical_dumps(doc))
    with pytest.raises(SchemaError, match="count"):
        load_cloud(f)


def test_cloud_coordinate_width_check(tmp_path):
    f = tmp_path / "cl.json"
    doc = {"schema_version": "1", "kind": "cloud", "m": 2, "p": 1, "q": 1,
           "flattening": FLATTEN_TAG, "points": [[1.0, 2.0, 3.0]],
           "certificates": None, "meta": {}}
    f.write_text(canonical_dumps(doc))
    with pytest.raises(SchemaError, match="m\\*q"):
        load_cloud(f)


# ---------------------------------------------------------------------------
# reports


def test_report_roundtrip_and_no_wall_time(tmp_path):
    rep = SuiteReport(suite="demo", trials=3, passes=2,
                      failures=((17, "one bad"),),
                      tolerances={"b": 2.0, "a": 1.0}, wall_time=123.4)
    f = tmp_path / "r.json"
    save_report(rep, f)
    raw = json.loads(f.read_text())
    assert "wall_time" not in raw
    assert list(raw["tolerances"]) == ["a", "b"]
    back = load_report(f)
    assert back.wall_time == 0.0
    assert (back.suite, back.trials, back.passes) == ("demo", 3, 2)
    assert back.failures == ((17, "one bad"),)
    f2 = tmp_path / "r2.json"
    save_report(back, f2)
    assert f.read_bytes() == f2.read_bytes()


def test_report_schema_error(tmp_path):
    f = tmp_path / "r.json"
    f.write_text('{"schema_version":"1","kind":"report","suite":"x"}\n')
    with pytest.raises(SchemaError, match="missing"):
        load_report(f)
