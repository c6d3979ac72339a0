"""End-to-end tests of the command line interface.

Every invocation goes through matrange.cli.main(argv) in-process, so exit
codes and emitted documents are checked without spawning subprocesses.
"""

import json

import numpy as np
import pytest

from matrange.cli import main
from matrange.io import save_tuple, save_report
from matrange.linalg import HermitianTuple
from matrange.verify import SuiteReport, pauli_tuple


def gue(m, n, seed):
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((m, n, n)) + 1j * rng.standard_normal((m, n, n))
    return HermitianTuple((G + np.conj(np.transpose(G, (0, 2, 1)))) / (2 * np.sqrt(n)))


@pytest.fixture
def diag12(tmp_path):
    path = tmp_path / "diag12.json"
    save_tuple(HermitianTuple(np.diag(np.arange(1.0, 13.0))[None]), path)
    return str(path)


@pytest.fixture
def diag9(tmp_path):
    path = tmp_path / "diag9.json"
    save_tuple(HermitianTuple(np.diag(np.arange(1.0, 10.0))[None]), path)
    return str(path)


@pytest.fixture
def pair10(tmp_path):
    path = tmp_path / "pair10.json"
    save_tuple(gue(2, 10, 5), path)
    return str(path)


@pytest.fixture
def pauli_file(tmp_path):
    path = tmp_path / "pauli.json"
    save_tuple(pauli_tuple(), path)
    return str(path)


# ---------------------------------------------------------------------------
# compute numrange


class TestNumrange:
    def test_boundary_doc(self, tmp_path):
        rng = np.random.default_rng(3)
        M = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        src = tmp_path / "m.json"
        save_tuple((M,), src)
        out = tmp_path / "bd.json"
        rc = main(["compute", "numrange", "--input", str(src),
                   "--angles", "64", "--out", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert doc["kind"] == "numrange-boundary"
        assert len(doc["angles"]) == 64
        assert len(doc["support"]) == 64
        # every vertex satisfies all the supporting half-planes it came from
        verts = np.array([complex(x, y) for x, y in doc["vertices"]])
        for theta, s in zip(doc["angles"], doc["support"]):
            assert np.max((np.exp(-1j * theta) * verts).real) <= s + 1e-9

    def test_svg_written(self, tmp_path):
        rng = np.random.default_rng(4)
        M = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        src = tmp_path / "m.json"
        save_tuple((M,), src)
        svg = tmp_path / "bd.svg"
        rc = main(["compute", "numrange", "--input", str(src),
                   "--angles", "32", "--svg", str(svg),
                   "--out", str(tmp_path / "bd.json")])
        assert rc == 0
        text = svg.read_text()
        assert text.startswith("<svg")
        assert "polyline" in text

    def test_identity_degenerates_to_point(self, tmp_path):
        src = tmp_path / "eye.json"
        save_tuple(HermitianTuple(np.eye(3)[None]), src)
        svg = tmp_path / "bd.svg"
        out = tmp_path / "bd.json"
        rc = main(["compute", "numrange", "--input", str(src),
                   "--svg", str(svg), "--out", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert doc["degenerate"] == "point"
        assert all(abs(x - 1.0) < 1e-12 and abs(y) < 1e-12
                   for x, y in doc["vertices"])
        assert "circle" in svg.read_text()

    def test_rejects_tuple_of_two(self, tmp_path, pair10):
        rc = main(["compute", "numrange", "--input", pair10,
                   "--out", str(tmp_path / "bd.json")])
        assert rc == 3


# ---------------------------------------------------------------------------
# sample pq


class TestSamplePQ:
    def test_rank_two_diagonal(self, tmp_path):
        src = tmp_path / "d4.json"
        save_tuple(HermitianTuple(np.diag([1.0, 2.0, 3.0, 4.0])[None]), src)
        out = tmp_path / "cloud.json"
        rc = main(["sample", "pq", "--input", str(src), "--p", "2", "--q", "1",
                   "--count", "8", "--out", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert doc["kind"] == "cloud"
        assert len(doc["points"]) == 8
        assert len(doc["certificates"]) == 8
        # rank-2 range of diag(1,2,3,4) is [2, 3]
        for pt in doc["points"]:
            assert 2.0 - 1e-6 <= pt[0] <= 3.0 + 1e-6

    def test_embed_flag_for_non_hermitian(self, tmp_path):
        rng = np.random.default_rng(9)
        T = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        src = tmp_path / "t.json"
        save_tuple((T,), src)
        args = ["sample", "pq", "--input", str(src), "--p", "1", "--q", "1",
                "--count", "4", "--out", str(tmp_path / "c.json")]
        assert main(args) == 3
        rc = main(args + ["--embed"])
        assert rc == 0
        doc = json.loads((tmp_path / "c.json").read_text())
        # the embedding splits T into two Hermitian members
        assert all(len(pt) == 2 for pt in doc["points"])

    def test_structural_infeasibility(self, tmp_path, diag9):
        rc = main(["sample", "pq", "--input", diag9, "--p", "5", "--q", "2",
                   "--count", "2", "--out", str(tmp_path / "c.json")])
        assert rc == 3


# ---------------------------------------------------------------------------
# construct


class TestConstruct:
    def test_star_center_scalar(self, tmp_path, diag9):
        out = tmp_path / "sc.json"
        rc = main(["construct", "star-center", "--input", diag9,
                   "--p", "1", "--q", "1", "--restarts", "8",
                   "--out", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert doc["kind"] == "star-center"
        assert doc["style"] == "scalar"
        assert doc["level"] == 3
        center = doc["certificate"]["point"][0][0][0][0]
        # rank-3 range of diag(1..9) is [3, 7]
        assert 3.0 - 1e-6 <= center <= 7.0 + 1e-6
        assert doc["restricted"]["p"] == 1

    def test_star_center_rejection(self, tmp_path, pauli_file):
        # sigma_j (x) I_3 admits no scalar compression at level 5
        P = pauli_tuple()
        padded = HermitianTuple(np.stack([np.kron(P.mats[j], np.eye(3))
                                          for j in range(3)]))
        src = tmp_path / "padded.json"
        save_tuple(padded, src)
        out = tmp_path / "sc.json"
        with pytest.warns(UserWarning, match="below the star-center guarantee"):
            rc = main(["construct", "star-center", "--input", str(src),
                       "--p", "1", "--q", "1", "--restarts", "6",
                       "--out", str(out)])
        assert rc == 4
        doc = json.loads(out.read_text())
        assert doc["kind"] == "rejection"
        assert doc["best_residual"] > 0.5
        assert doc["restarts"] == 6

    def test_segment(self, tmp_path, pair10):
        out = tmp_path / "seg.json"
        rc = main(["construct", "segment", "--input", pair10, "--p", "1",
                   "--q", "1", "--t", "0.25", "--restarts", "8",
                   "--out", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert doc["kind"] == "segment"
        assert doc["t"] == 0.25
        assert len(doc["endpoints"]) == 2
        assert doc["certificate"]["residual"] <= 1e-8
        # the certified point is t*first + (1-t)*second
        mid = doc["certificate"]["point"][0][0][0][0]
        a = doc["endpoints"][0]["point"][0][0][0][0]
        b = doc["endpoints"][1]["point"][0][0][0][0]
        assert abs(mid - (0.25 * a + 0.75 * b)) <= 1e-7

    def test_tverberg(self, tmp_path, diag12):
        out = tmp_path / "tv.json"
        rc = main(["construct", "tverberg", "--input", diag12, "--p", "2",
                   "--q", "1", "--restarts", "8", "--out", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert doc["kind"] == "tverberg-lift"
        assert doc["d"] == 3
        assert doc["partitions_scanned"] <= 3
        assert len(doc["parts"]) == 2
        assert doc["certificate"]["p"] == 2
        value = doc["certificate"]["point"][0][0][0][0]
        assert 2.0 - 1e-6 <= value <= 11.0 + 1e-6

    def test_essential(self, tmp_path, diag12):
        out = tmp_path / "ess.json"
        rc = main(["construct", "essential", "--input", diag12, "--q", "1",
                   "--r-max", "1", "--n-free", "2", "--restarts", "6",
                   "--out", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert doc["kind"] == "essential-estimate"
        assert "interval" in doc
        lo, hi = doc["interval"]
        assert 1.0 - 1e-6 <= lo <= hi <= 12.0 + 1e-6


# ---------------------------------------------------------------------------
# verify


class TestVerify:
    def test_star_planted_passes(self, tmp_path):
        out = tmp_path / "r.json"
        rc = main(["verify", "star", "--planted", "--m", "2", "--blocks", "3",
                   "--restarts", "6", "--out", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert doc["kind"] == "report"
        assert doc["passes"] == doc["trials"]

    def test_star_needs_a_source(self, tmp_path):
        rc = main(["verify", "star", "--out", str(tmp_path / "r.json")])
        assert rc == 2

    def test_bounds(self, tmp_path):
        out = tmp_path / "r.json"
        rc = main(["verify", "bounds", "--m", "1", "--k", "2", "--trials", "3",
                   "--restarts", "8", "--out", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert doc["passes"] == 3

    def test_inclusions(self, tmp_path):
        rc = main(["verify", "inclusions", "--m", "1", "--n", "8", "--p", "2",
                   "--q", "1", "--r", "1", "--trials", "2", "--corners", "2",
                   "--restarts", "8", "--out", str(tmp_path / "r.json")])
        assert rc == 0

    def test_perturbation(self, tmp_path):
        rc = main(["verify", "perturbation", "--n", "8", "--trials", "2",
                   "--restarts", "8", "--out", str(tmp_path / "r.json")])
        assert rc == 0

    def test_convexity_needs_a_source(self, tmp_path):
        rc = main(["verify", "convexity", "--out", str(tmp_path / "r.json")])
        assert rc == 2

    def test_convexity_pauli_ensemble(self, tmp_path):
        out = tmp_path / "r.json"
        rc = main(["verify", "convexity", "--ensemble", "pauli",
                   "--restarts", "10", "--out", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert doc["passes"] == 2

    def test_convexity_failure_exit_code(self, tmp_path, pauli_file):
        # midpoints of sphere points are interior, so membership must fail
        out = tmp_path / "r.json"
        rc = main(["verify", "convexity", "--input", pauli_file,
                   "--p", "1", "--q", "1", "--pairs", "3", "--restarts", "5",
                   "--out", str(out)])
        assert rc == 5
        doc = json.loads(out.read_text())
        assert doc["passes"] == 0
        assert len(doc["failures"]) == 3


# ---------------------------------------------------------------------------
# error handling


class TestErrors:
    def test_missing_file(self, tmp_path):
        rc = main(["compute", "numrange", "--input", str(tmp_path / "no.json"),
                   "--out", str(tmp_path / "bd.json")])
        assert rc == 2

    def test_corrupt_json(self, tmp_path):
        src = tmp_path / "bad.json"
        src.write_text("{oops")
        rc = main(["compute", "numrange", "--input", str(src),
                   "--out", str(tmp_path / "bd.json")])
        assert rc == 2

    def test_wrong_document_kind(self, tmp_path):
        src = tmp_path / "report.json"
        save_report(SuiteReport(suite="s", trials=1, passes=1, failures=(),
                                tolerances={}, wall_time=0.0), src)
        rc = main(["compute", "numrange", "--input", str(src),
                   "--out", str(tmp_path / "bd.json")])
        assert rc == 2


# ---------------------------------------------------------------------------
# output discipline


class TestOutputs:
    def test_stdout_matches_out_file(self, tmp_path, capsys):
        src = tmp_path / "d4.json"
        save_tuple(HermitianTuple(np.diag([1.0, 2.0, 3.0, 4.0])[None]), src)
        argv = ["sample", "pq", "--input", str(src), "--p", "2", "--q", "1",
                "--count", "4"]
        out = tmp_path / "cloud.json"
        assert main(argv + ["--out", str(out)]) == 0
        capsys.readouterr()
        assert main(argv) == 0
        assert capsys.readouterr().out == out.read_text()

    def test_byte_identical_reruns(self, tmp_path, diag12, diag9, pair10,
                                   pauli_file):
        d4 = tmp_path / "d4.json"
        save_tuple(HermitianTuple(np.diag([1.0, 2.0, 3.0, 4.0])[None]), d4)
        cases = [
            ["compute", "numrange", "--input", diag9, "--angles", "64"],
            ["sample", "pq", "--input", str(d4), "--p", "2", "--q", "1",
             "--count", "6"],
            ["construct", "star-center", "--input", diag9,
             "--p", "1", "--q", "1", "--restarts", "8"],
            ["construct", "segment", "--input", pair10, "--p", "1", "--q", "1",
             "--restarts", "8"],
            ["construct", "tverberg", "--input", diag12, "--p", "2", "--q", "1",
             "--restarts", "8"],
            ["construct", "essential", "--input", diag12, "--q", "1",
             "--r-max", "1", "--n-free", "2", "--restarts", "6"],
            ["verify", "star", "--planted", "--m", "2", "--blocks", "3",
             "--restarts", "6"],
            ["verify", "bounds", "--m", "1", "--k", "2", "--trials", "3",
             "--restarts", "8"],
            ["verify", "convexity", "--input", pauli_file, "--p", "1",
             "--q", "1", "--pairs", "2", "--restarts", "5"],
        ]
        for i, argv in enumerate(cases):
            f1 = tmp_path / f"run{i}_a.json"
            f2 = tmp_path / f"run{i}_b.json"
            rc1 = main(argv + ["--out", str(f1)])
            rc2 = main(argv + ["--out", str(f2)])
            assert rc1 == rc2
            assert f1.read_bytes() == f2.read_bytes(), argv

    def test_svg_byte_identical(self, tmp_path, diag9):
        svgs = []
        for name in ("a.svg", "b.svg"):
            svg = tmp_path / name
            rc = main(["compute", "numrange", "--input", diag9,
                       "--svg", str(svg), "--out", str(tmp_path / "bd.json")])
            assert rc == 0
            svgs.append(svg.read_bytes())
        assert svgs[0] == svgs[1]
