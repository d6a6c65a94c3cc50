import json

import numpy as np
import pytest

from twocenter.cli import ConfigError, RunConfig, main, parse_config, run


def write(tmp_path, name, payload):
    p = tmp_path / name
    p.write_text(json.dumps(payload), encoding="utf-8")
    return str(p)


class TestParseConfig:
    def test_minimal_solve_config(self):
        cfg = parse_config(json.dumps({
            "subcommand": "solve", "a": 1.0, "Z1": 1.0, "Z2": 1.0, "m": 0,
            "n_xi": 0, "n_eta": 0}))
        assert cfg.subcommand == "solve"
        assert cfg.geometry().a == 1.0

    def test_unknown_key_is_error(self):
        with pytest.raises(ConfigError, match="Zz1"):
            parse_config(json.dumps({
                "subcommand": "solve", "a": 1.0, "Zz1": 1.0,
                "n_xi": 0, "n_eta": 0}))

    def test_a_and_R_both_set_is_error(self):
        with pytest.raises(ConfigError, match="exactly one"):
            parse_config(json.dumps({
                "subcommand": "solve", "a": 1.0, "R": 2.0,
                "n_xi": 0, "n_eta": 0}))

    def test_missing_required(self):
        with pytest.raises(ConfigError, match="n_eta"):
            parse_config(json.dumps({"subcommand": "solve", "a": 1.0, "n_xi": 0}))

    def test_all_violations_reported(self):
        with pytest.raises(ConfigError) as err:
            parse_config(json.dumps({
                "subcommand": "solve", "a": 1.0, "R": 2.0, "bogus": 1,
                "n_xi": 0}))
        msg = str(err.value)
        assert "bogus" in msg and "n_eta" in msg and "exactly one" in msg

    def test_type_mismatch(self):
        with pytest.raises(ConfigError, match="n_xi"):
            parse_config(json.dumps({
                "subcommand": "solve", "a": 1.0,
                "n_xi": "zero", "n_eta": 0}))

    def test_round_trip(self):
        raw = {"subcommand": "curve", "Z1": 1.0, "Z2": 0.5, "m": 1,
               "n_xi": 0, "n_eta": 1, "R_values": [1.0, 2.0]}
        cfg = parse_config(json.dumps(raw))
        again = parse_config(json.dumps(
            {"subcommand": cfg.subcommand, "format": cfg.fmt, **cfg.options}))
        assert again == cfg


class TestCoords(object):
    def test_round_trip_row(self, tmp_path, capsys):
        path = write(tmp_path, "c.json", {
            "a": 1.0, "direction": "cartesian-to-prolate",
            "points": [[0.6, 0.0, 0.75]]})
        assert main(["coords", path]) == 0
        out = capsys.readouterr().out
        rows = out.strip().splitlines()
        assert rows[0].startswith("alpha,beta,phi,x,y,z,xi,eta,r1,r2")
        vals = dict(zip(rows[0].split(","), rows[1].split(",")))
        assert abs(float(vals["xi"]) - 1.25) < 1e-12
        assert abs(float(vals["r1"]) - 1.85) < 1e-12

    def test_bad_direction_exit_code(self, tmp_path):
        path = write(tmp_path, "c.json", {
            "a": 1.0, "direction": "sideways", "points": [[0, 0, 1]]})
        assert main(["coords", path]) == 1


class TestDeterminism:
    def test_identical_runs_byte_identical(self, tmp_path):
        path = write(tmp_path, "q.json", {
            "family": "h1",
            "params": {"Ac": 2.0, "As": 0.0, "A2": 4.0, "A1": -12.0},
            "k": 1, "format": "json"})
        out1, out2 = tmp_path / "o1.json", tmp_path / "o2.json"
        assert main(["qes", path, "--output", str(out1)]) == 0
        assert main(["qes", path, "--output", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_set_override(self, tmp_path, capsys):
        path = write(tmp_path, "s.json", {
            "family": "pt-hyperbolic", "params": {"Ac": 2.0}, "count": 1})
        assert main(["spectrum-1d", path, "--set", 'params={"Ac": 6.0}',
                     "--format", "csv"]) == 0
        out = capsys.readouterr().out
        assert out.splitlines()[1].split(",")[1] == "-4"


class TestSpectrumAndQes:
    def test_qes_json_two_levels(self, tmp_path, capsys):
        path = write(tmp_path, "q.json", {
            "family": "h1",
            "params": {"Ac": 2.0, "As": 0.0, "A2": 4.0, "A1": -12.0},
            "k": 1, "format": "json"})
        assert main(["qes", path]) == 0
        data = json.loads(capsys.readouterr().out)
        assert len(data["levels"]) == 2
        assert all(r < 1e-10 for r in data["residuals"])
        assert data["constraint"]["parameter"] == "A1"

    def test_qes_closure_failure_exit_2(self, tmp_path):
        path = write(tmp_path, "q.json", {
            "family": "h1",
            "params": {"Ac": 2.0, "As": 0.0, "A2": 4.0, "A1": 3.0},
            "k": 1})
        assert main(["qes", path]) == 2

    def test_spectrum_pt_trig(self, tmp_path, capsys):
        path = write(tmp_path, "s.json", {
            "family": "pt-trigonometric", "params": {}, "count": 3})
        assert main(["spectrum-1d", path]) == 0
        out = capsys.readouterr().out.splitlines()
        assert [row.split(",")[1] for row in out[1:]] == ["1", "4", "9"]


class TestVerifySubcommand:
    def test_e3_row(self, tmp_path, capsys):
        path = write(tmp_path, "v.json", {"a": 1.0, "checks": ["e3"]})
        assert main(["verify", path]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0] == "check,h,residual_l2,residual_max,est_order"
        assert float(out[1].split(",")[3]) < 1e-9

    def test_laplacian_orders(self, tmp_path, capsys):
        path = write(tmp_path, "v.json", {
            "a": 1.0, "checks": ["laplacian_z"], "grids": [65, 129, 257]})
        assert main(["verify", path]) == 0
        rows = capsys.readouterr().out.strip().splitlines()[1:]
        orders = [row.split(",")[4] for row in rows]
        assert orders[0] == ""
        assert all(float(o) > 1.8 for o in orders[1:])

    def test_periodicity_rows(self, tmp_path, capsys):
        path = write(tmp_path, "v.json", {"a": 1.0, "checks": ["periodicity"]})
        assert main(["verify", path]) == 0
        rows = capsys.readouterr().out.strip().splitlines()[1:]
        assert len(rows) == 3
        assert all(float(r.split(",")[2]) < 1e-13 for r in rows)
