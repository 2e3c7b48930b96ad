"""End-to-end tests of the command line through dispatch and main."""

import json

import pytest

from ciscurv.config import THREADS_ENV
from ciscurv.main import dispatch, error_object, main
from ciscurv.errors import InputParseError
from ciscurv.polynomial import PolynomialMap

DONALDSON = ["donaldson", "--n", "1", "--m", "1", "--l", "1", "--radius", "4", "--D", "3",
             "--oracle", "transversality", "--seed", "7", "--budget", "8"]


@pytest.fixture(autouse=True)
def single_thread(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "1")


def write_map(path, F):
    path.write_text(json.dumps(F.to_dict()))
    return str(path)


@pytest.fixture
def quadric_map(tmp_path):
    F = PolynomialMap.from_terms(3, 1, [(0, (0, 0, 1), 1), (0, (2, 0, 0), -1), (0, (0, 2, 0), -1)])
    return write_map(tmp_path / "quadric.json", F)


def last_error(captured):
    return json.loads(captured.err.strip().splitlines()[-1])["error"]


class TestCodim:
    def test_text_table(self, capsys):
        assert dispatch(["codim", "--d", "1", "--n", "3", "--table", "--format", "text"]) == 0
        out = capsys.readouterr().out
        assert out.splitlines()[0].startswith("locus")
        assert "Inflection" in out

    def test_json_report(self, capsys):
        assert dispatch(["codim", "--d", "2", "--n", "7", "--locus", "HolBisecDegenerate"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["artifact"] == "ciscurv"
        assert report["command"] == "codim"
        assert "threads" not in report["config"]
        [entry] = report["result"]
        assert entry["codim_lower_bound"] == 3
        assert entry["jet_space_dim"] == 7 * 6 - 2 * 5

    def test_missing_selection(self, capsys):
        assert dispatch(["codim", "--d", "1", "--n", "3"]) == 2
        assert last_error(capsys.readouterr())["type"] == "InvalidArgumentError"


class TestGermCommands:
    def test_curvature(self, quadric_map, capsys):
        assert dispatch(["curvature", "--map", quadric_map, "--point", "0,0;0,0;0,0",
                         "--vector", "1;0"]) == 0
        values = json.loads(capsys.readouterr().out)["result"]["values"]
        assert values["scalar"] == pytest.approx(-32)
        assert values["ricci"] == pytest.approx(-8)

    def test_certify_ricci(self, quadric_map, capsys):
        assert dispatch(["certify", "--map", quadric_map, "--point", "0;0;0",
                         "--kind", "ricci"]) == 0
        report = json.loads(capsys.readouterr().out)["result"]["report"]
        assert report["negativity_certificate"] == "certified_negative"

    def test_exterior_needs_order(self, quadric_map, capsys):
        assert dispatch(["certify", "--map", quadric_map, "--point", "0;0;0",
                         "--kind", "exterior"]) == 2
        assert "--l" in last_error(capsys.readouterr())["message"]

    def test_missing_map(self, tmp_path, capsys):
        missing = str(tmp_path / "missing.json")
        assert dispatch(["curvature", "--map", missing, "--point", "0;0"]) == 2
        error = last_error(capsys.readouterr())
        assert error["type"] == "FileNotFoundError"
        assert error["location"]["path"] == missing

    def test_malformed_map(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text('{"n": 3,\n "m": 1,,\n}')
        assert dispatch(["curvature", "--map", str(path), "--point", "0;0;0"]) == 2
        error = last_error(capsys.readouterr())
        assert error["type"] == "InputParseError"
        assert error["location"]["line"] == 2

    def test_off_zero_set(self, quadric_map, capsys):
        assert dispatch(["curvature", "--map", quadric_map, "--point", "0;0;1"]) == 2
        assert last_error(capsys.readouterr())["type"] == "DegenerateGermError"

    def test_bad_point_syntax(self, quadric_map, capsys):
        assert dispatch(["curvature", "--map", quadric_map, "--point", "0;x;0"]) == 2
        assert "coordinate 2" in last_error(capsys.readouterr())["message"]


class TestDonaldson:
    def test_smoke(self, capsys):
        assert dispatch(DONALDSON) == 0
        result = json.loads(capsys.readouterr().out)["result"]
        assert result["lattice"]["points"] == 61
        assert result["classes"] == 9
        assert result["globalization"]["uniform_margin"] > 0
        assert result["transversality_margin"]["margin"] >= 0
        assert len(result["radius_series"]) == 1

    def test_byte_identical_across_threads(self, monkeypatch, capsys):
        assert dispatch(DONALDSON) == 0
        first = capsys.readouterr().out
        monkeypatch.setenv(THREADS_ENV, "3")
        assert dispatch(DONALDSON) == 0
        assert capsys.readouterr().out == first

    def test_output_file_and_csv(self, tmp_path, capsys):
        output = tmp_path / "report.json"
        csv_path = tmp_path / "series.csv"
        args = ["donaldson", "--n", "1", "--m", "1", "--l", "1", "--radius", "1", "--D", "1",
                "--budget", "4", "--csv", str(csv_path), "--output", str(output)]
        assert dispatch(args) == 0
        assert capsys.readouterr().out == ""
        assert json.loads(output.read_text())["command"] == "donaldson"
        assert csv_path.read_text().splitlines()[0].startswith("radius,uniform_margin")

    def test_family_replay(self, tmp_path, capsys):
        family_path = tmp_path / "family.json"
        args = ["donaldson", "--n", "1", "--m", "1", "--l", "1", "--radius", "2", "--D", "3",
                "--budget", "4", "--family-out", str(family_path)]
        assert dispatch(args) == 0
        original = json.loads(capsys.readouterr().out)["result"]["globalization"]
        assert dispatch(["donaldson", "--replay", str(family_path)]) == 0
        replay = json.loads(capsys.readouterr().out)["result"]
        assert replay["uniform_margin"] == pytest.approx(original["uniform_margin"])

    def test_missing_arguments_listed(self, capsys):
        assert dispatch(["donaldson", "--n", "1"]) == 2
        message = last_error(capsys.readouterr())["message"]
        assert "--m" in message and "--radius" in message

    def test_schedule_error(self, capsys):
        args = ["donaldson", "--n", "2", "--m", "1", "--l", "1", "--radius", "1.5", "--D", "3",
                "--budget", "2"]
        assert dispatch(args) == 2
        assert last_error(capsys.readouterr())["type"] == "ScheduleError"


class TestOtherCommands:
    def test_brody_on_polynomial(self, tmp_path, capsys):
        F = PolynomialMap.from_terms(1, 2, [(0, (1,), 1), (1, (2,), 1)])
        path = write_map(tmp_path / "disk.json", F)
        assert dispatch(["brody", "--map", path, "--deg-max", "8"]) == 0
        result = json.loads(capsys.readouterr().out)["result"]
        assert result["poincare_jacobian_at_0"] == pytest.approx(0.5)
        assert result["certificate"]["holds"] is True

    def test_linescan(self, tmp_path, capsys):
        F = PolynomialMap.from_terms(2, 1, [(0, (2, 0), 1), (0, (0, 2), 1), (0, (0, 0), -1)])
        path = write_map(tmp_path / "circle.json", F)
        assert dispatch(["linescan", "--map", path, "--point", "1;0", "--l", "2"]) == 0
        result = json.loads(capsys.readouterr().out)["result"]
        assert result["order_max"] == 2
        assert result["contact_at_least_l"] is True

    def test_hyperbolic_rejects_bad_scale(self, capsys):
        assert dispatch(["hyperbolic-experiment", "--scales", "0,4"]) == 2
        assert "scales" in last_error(capsys.readouterr())["message"]

    def test_hyperbolic_linear_control(self, tmp_path, capsys):
        csv_path = tmp_path / "scales.csv"
        assert dispatch(["hyperbolic-experiment", "--scales", "1", "--family", "linear",
                         "--csv", str(csv_path)]) == 0
        [row] = json.loads(capsys.readouterr().out)["result"]["scales"]
        assert row["normalized"] == pytest.approx(1.0)
        assert csv_path.read_text().startswith("k,best_derivative")

    def test_invalid_config_value(self, capsys):
        assert dispatch(["--restarts", "0", "codim", "--d", "1", "--n", "3", "--table"]) == 2
        assert "restarts" in last_error(capsys.readouterr())["message"]


class TestMain:
    def test_unexpected_error_exit_code(self, mocker, capsys):
        mocker.patch("ciscurv.main.dispatch", side_effect=RuntimeError("boom"))
        assert main() == 1
        assert "Fatal error: boom" in capsys.readouterr().err

    def test_interrupt(self, mocker, capsys):
        mocker.patch("ciscurv.main.dispatch", side_effect=KeyboardInterrupt)
        assert main() == 1
        assert "Interrupted" in capsys.readouterr().err

    def test_error_object_location(self):
        error = InputParseError("bad", path="x.json", line=3, column=4)
        assert error_object(error) == {
            "error": {
                "type": "InputParseError",
                "message": "bad",
                "location": {"path": "x.json", "line": 3, "column": 4},
            }
        }
