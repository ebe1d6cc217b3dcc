import csv
import io
import json
import subprocess
import sys

import pytest

from pqam.cli import main


@pytest.fixture
def files(tmp_path):
    def write(name, text):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)
    return write


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestStore:
    def test_reports_size_and_deviation(self, capsys, files, tmp_path):
        pats = files("p.txt", "# two patterns\n01\n10\n")
        dump = tmp_path / "state.json"
        code, out, _ = run(capsys, "store", "--patterns", pats, "--dump", str(dump))
        assert code == 0
        payload = json.loads(out)
        assert payload["p"] == 2 and payload["n"] == 2 and payload["deviation"] < 1e-9
        state = json.loads(dump.read_text())
        assert [row[0] for row in state["amplitudes"]] == ["01", "10"]

    def test_duplicate_line(self, capsys, files):
        pats = files("p.txt", "01\n10\n01\n")
        code, _, err = run(capsys, "store", "--patterns", pats)
        assert code == 2
        assert "line 3" in err

    def test_empty_file(self, capsys, files):
        code, _, _ = run(capsys, "store", "--patterns", files("p.txt", ""))
        assert code == 2

    def test_missing_patterns_flag(self, capsys):
        assert run(capsys, "store")[0] == 2

    def test_max_qubits_enforced(self, capsys, files):
        pats = files("p.txt", "0101\n1010\n")
        # the reference storage circuit needs 2n+2 = 10 qubits
        assert run(capsys, "store", "--patterns", pats, "--max-qubits", "8")[0] == 2


class TestReport:
    def test_two_patterns(self, capsys, files):
        pats = files("p.txt", "000\n111\n")
        code, out, _ = run(capsys, "report", "--patterns", pats, "--input", "001")
        assert code == 0
        payload = json.loads(out)
        assert payload["gate_level"]["p0"] == pytest.approx(0.5, abs=1e-9)
        assert payload["analytic"]["p0"] == pytest.approx(0.5, abs=1e-9)
        assert payload["gate_level"]["source"] == "gate_level"
        assert payload["max_deviation"] < 1e-9

    def test_all_patterns(self, capsys, files):
        pats = files("p.txt", "00\n01\n10\n11\n")
        code, out, _ = run(capsys, "report", "--patterns", pats, "--input", "10")
        assert json.loads(out)["gate_level"]["p0"] == pytest.approx(0.5, abs=1e-12)

    def test_full_mask_identical(self, capsys, files):
        pats = files("p.txt", "0011\n0101\n1110\n")
        _, plain, _ = run(capsys, "report", "--patterns", pats, "--input", "0111")
        _, masked, _ = run(capsys, "report", "--patterns", pats, "--input", "0111", "--mask", "1111")
        a, b = json.loads(plain), json.loads(masked)
        assert json.dumps(a["gate_level"]["per_pattern"]) == json.dumps(b["gate_level"]["per_pattern"])
        assert json.dumps(a["analytic"]["per_pattern"]) == json.dumps(b["analytic"]["per_pattern"])

    def test_unknown_bits_need_seed(self, capsys, files):
        pats = files("p.txt", "0000\n1111\n")
        assert run(capsys, "report", "--patterns", pats, "--input", "01??", "--mask", "1100")[0] == 2
        code, out, _ = run(capsys, "report", "--patterns", pats, "--input", "01??", "--mask", "1100",
                           "--seed", "3")
        assert code == 0
        assert json.loads(out)["gate_level"]["p0"] == pytest.approx(0.853553, abs=1e-6)

    def test_f_table(self, capsys, files):
        pats = files("p.txt", "000\n011\n111\n")
        table = files("f.txt", "0 2 3\n3\n")
        code, out, _ = run(capsys, "report", "--patterns", pats, "--input", "001", "--f-table", table)
        assert code == 0
        payload = json.loads(out)
        assert payload["analytic"]["f_table"] == [0, 2, 3, 3]
        assert payload["max_deviation"] < 1e-9

    def test_bad_f_table(self, capsys, files):
        pats = files("p.txt", "000\n111\n")
        table = files("f.txt", "1 1 2 3\n")
        assert run(capsys, "report", "--patterns", pats, "--input", "001", "--f-table", table)[0] == 2

    def test_length_mismatch(self, capsys, files):
        pats = files("p.txt", "000\n111\n")
        assert run(capsys, "report", "--patterns", pats, "--input", "01")[0] == 2

    def test_csv(self, capsys, files):
        pats = files("p.txt", "000\n111\n")
        code, out, _ = run(capsys, "report", "--patterns", pats, "--input", "001", "--format", "csv")
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == 0
        assert {r["source"] for r in rows} == {"gate_level", "analytic"}
        analytic = {r["pattern"]: float(r["probability"]) for r in rows if r["source"] == "analytic"}
        assert analytic["000"] == pytest.approx(0.75)


class TestRecognize:
    def test_unrecognizable(self, capsys, files):
        pats = files("p.txt", "11\n")
        code, out, _ = run(capsys, "recognize", "--patterns", pats, "--input", "00",
                           "--threshold", "5", "--seed", "1")
        payload = json.loads(out)
        assert code == 0
        assert payload["recognized"] is False and payload["trials_used"] == 5

    def test_auto_threshold(self, capsys, files):
        pats = files("p.txt", "000\n111\n")
        code, out, _ = run(capsys, "recognize", "--patterns", pats, "--input", "000", "--seed", "4")
        assert json.loads(out)["threshold"] == 2

    def test_seed_required(self, capsys, files):
        pats = files("p.txt", "000\n111\n")
        assert run(capsys, "recognize", "--patterns", pats, "--input", "000")[0] == 2

    def test_bad_threshold(self, capsys, files):
        pats = files("p.txt", "000\n111\n")
        assert run(capsys, "recognize", "--patterns", pats, "--input", "000", "--seed", "1",
                   "--threshold", "zero")[0] == 2


class TestExperiment:
    def test_byte_identical_outputs(self, capsys, files, tmp_path):
        pats = files("p.txt", "000\n111\n")
        outs = []
        for k, fmt in enumerate(["json", "json", "csv", "csv"]):
            path = tmp_path / f"out{k}.{fmt}"
            code, _, _ = run(capsys, "experiment", "--patterns", pats, "--input", "001",
                             "--trials", "2000", "--seed", "7", "--format", fmt, "--output", str(path))
            assert code == 0
            outs.append(path.read_bytes())
        assert outs[0] == outs[1] and outs[2] == outs[3]
        payload = json.loads(outs[0])
        for entry in payload["per_pattern"].values():
            assert {"empirical", "stderr", "analytic", "count"} <= set(entry)
        assert {"empirical", "stderr", "analytic"} <= set(payload["p0"])
        header = outs[2].decode().splitlines()[0]
        assert header == "source,pattern,probability,empirical_frequency,stderr"

    def test_requires_trials_and_seed(self, capsys, files):
        pats = files("p.txt", "000\n111\n")
        assert run(capsys, "experiment", "--patterns", pats, "--input", "001", "--seed", "1")[0] == 2
        assert run(capsys, "experiment", "--patterns", pats, "--input", "001", "--trials", "10")[0] == 2


class TestThresholdAndWorstCase:
    def test_threshold(self, capsys, files):
        pats = files("p.txt", "000\n111\n")
        code, out, _ = run(capsys, "threshold", "--patterns", pats)
        payload = json.loads(out)
        assert code == 0 and payload["T"] == 2
        assert payload["self_recognition"] == {"000": 0.5, "111": 0.5}

    def test_worst_case(self, capsys):
        code, out, _ = run(capsys, "worst-case", "--n", "4", "--x", "1")
        payload = json.loads(out)
        assert code == 0
        assert payload["p"] == 6 and payload["T"] == 4
        assert payload["bound_holds"] is False

    def test_worst_case_invalid(self, capsys):
        assert run(capsys, "worst-case", "--n", "4", "--x", "4")[0] == 2
        assert run(capsys, "worst-case", "--n", "4")[0] == 2

    def test_worst_case_csv(self, capsys):
        code, out, _ = run(capsys, "worst-case", "--n", "10", "--x", "1", "--format", "csv")
        rows = dict(csv.reader(io.StringIO(out)))
        assert rows["T"] == "10"


def test_module_entry_point(files):
    pats = files("p.txt", "01\n10\n")
    proc = subprocess.run([sys.executable, "-m", "pqam", "store", "--patterns", pats],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["p"] == 2
