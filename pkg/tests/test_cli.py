import io

import numpy as np
import pytest

from rumorlab import cli, export
from rumorlab.equilibrium import NoEquilibriumError
from rumorlab.model import params_from_mapping


def run(argv, capsys):
    code = cli.main(argv)
    return code, capsys.readouterr().out


def rows_of(text):
    return export.read_csv(io.StringIO(text).getvalue())


def test_equilibrium_row(capsys):
    code, out = run(["equilibrium", "--y", "0.94", "--c", "0.04", "--beta", "0.7"], capsys)
    assert code == 0
    assert out.splitlines()[0] == ",".join(export.SOLUTION_COLUMNS)
    row = rows_of(out)[0]
    assert row["kind"] == "OpposingOnly" and float(row["ttr"]) == pytest.approx(6.0)
    assert row["cond_y_ok"] == "true"


def test_csv_round_trips_through_config(tmp_path, capsys):
    out = tmp_path / "sol.csv"
    assert cli.main(["equilibrium", "--y", "0.88", "--c", "0.1", "--beta", "0.95",
                     "--xbar", "0.3", "-o", str(out)]) == 0
    row = export.read_csv(out)[0]
    params, fn = params_from_mapping(row)
    assert (params.y, params.c, params.beta, fn.x_bar) == (0.88, 0.1, 0.95, 0.3)
    code, again = run(["equilibrium", "--config", str(out)], capsys)
    assert code == 0 and rows_of(again)[0] == row


def test_key_value_config(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# case IV\ny = 0.88\nc = 0.1\nbeta = 0.95\n")
    code, out = run(["equilibrium", "--config", str(cfg)], capsys)
    assert code == 0 and rows_of(out)[0]["kind"] == "Both"
    code, out = run(["equilibrium", "--config", str(cfg), "--c", "0.3"], capsys)
    assert rows_of(out)[0]["kind"] == "NoVerification"


def test_validation_exit_code(capsys):
    assert cli.main(["equilibrium", "--y", "0.3"]) == cli.EXIT_INVALID
    assert cli.main(["equilibrium", "--config", "/nonexistent/file.cfg"]) == cli.EXIT_INVALID


def test_nonconvergence_exit_code(monkeypatch, capsys):
    def boom(*a, **k):
        raise NoEquilibriumError("none")
    monkeypatch.setattr(cli, "solve_equilibrium", boom)
    assert cli.main(["equilibrium"]) == cli.EXIT_NONCONVERGED


def test_disagreement_exit_code(monkeypatch, capsys):
    real = cli.classify_and_solve

    def shifted(c, y, beta, x_bar):
        r = real(c, y, beta, x_bar)
        r.h = r.h * 0.5
        return r
    monkeypatch.setattr(cli, "classify_and_solve", shifted)
    code = cli.main(["region-map", "--beta", "0.65", "--y-range", "0.9", "0.99",
                     "--nc", "5", "--ny", "5"])
    assert code == cli.EXIT_DISAGREE


def test_region_map_small_grid(tmp_path, capsys):
    ppm = tmp_path / "map.ppm"
    code, out = run(["region-map", "--beta", "0.65", "--nc", "2", "--ny", "2",
                     "--ppm", str(ppm)], capsys)
    assert code == 0
    assert out.splitlines()[0] == ",".join(export.REGION_COLUMNS)
    assert len(out.splitlines()) == 5
    assert export.read_ppm(ppm).shape == (2, 2, 3)


def test_region_map_capped_cases(capsys):
    code, out = run(["region-map", "--beta", "0.75", "--xbar", "0.3", "--nc", "30", "--ny",
                     "30", "--workers", "2"], capsys)
    assert code == 0
    rows = rows_of(out)
    cases = {r["case"].split("|")[0] for r in rows}
    assert {"III", "V", "VI"} <= cases
    assert all(r["agree"] == "true" for r in rows if r["boundary"] == "false")


def test_region_map_requires_exp_family(capsys):
    assert cli.main(["region-map", "--fn", "other"]) == cli.EXIT_INVALID


def test_sweep_meetings(capsys):
    code, out = run(["sweep", "--y", "0.88", "--c", "0.1", "--beta", "0.95",
                     "--sweep", "nu=0.0375,0.05,0.075,0.125"], capsys)
    assert code == 0
    rows = rows_of(out)
    ttr = [float(r["ttr"]) for r in rows]
    assert max(ttr) - min(ttr) <= 1e-9
    assert [float(r["lam"]) * int(r["k"]) for r in rows] == pytest.approx([1.5, 2, 3, 5])


def test_sweep_homophily_decreasing(capsys):
    code, out = run(["sweep", "--y", "0.94", "--c", "0.04", "--sweep", "beta=0.55:0.9:8"],
                    capsys)
    rows = rows_of(out)
    assert all(r["kind"] == "OpposingOnly" for r in rows)
    ttr = [float(r["ttr"]) for r in rows]
    assert all(b < a for a, b in zip(ttr, ttr[1:]))


def test_sweep_two_axes_and_row_errors(capsys):
    code, out = run(["sweep", "--sweep", "y=0.3,0.9", "--sweep", "c=0.01,0.02"], capsys)
    assert code == 0
    rows = rows_of(out)
    assert len(rows) == 4
    assert sum(bool(r["error"]) for r in rows) == 2


def test_sweep_partisans(capsys):
    code, out = run(["sweep", "--y", "0.9", "--c", "0.095", "--beta", "0.7",
                     "--sweep", "gamma=0,0.25,0.5"], capsys)
    ttr = [float(r["ttr"]) for r in rows_of(out)]
    assert max(ttr) - min(ttr) <= 1e-8


def test_sweep_rejects_unknown(capsys):
    assert cli.main(["sweep", "--sweep", "foo=1,2"]) == cli.EXIT_INVALID
    assert cli.main(["sweep"]) == cli.EXIT_INVALID


def test_partisan_check(capsys):
    code, out = run(["partisan-check", "--y", "0.9", "--c", "0.095", "--beta", "0.7"], capsys)
    assert code == 0
    rows = rows_of(out)
    assert [r["cap_violation"] for r in rows] == ["false"] * 3


def test_steady(capsys):
    code, out = run(["steady", "--k", "1", "--nu", "0.2", "--l", "0.2", "--h", "0.5"], capsys)
    row = rows_of(out)[0]
    assert float(row["ttr"]) == pytest.approx(2.28)
    assert row["stability"] == "zero-unstable-positive-stable"


def test_trajectory(capsys):
    code, out = run(["trajectory", "--l", "0.2", "--h", "0.5", "--horizon", "20"], capsys)
    assert code == 0
    assert out.splitlines()[0] == ",".join(export.TRAJECTORY_COLUMNS)
    rows = rows_of(out)
    assert float(rows[0]["iota"]) == pytest.approx(0.01)


def test_trajectory_uses_equilibrium_by_default(capsys):
    code, out = run(["trajectory", "--y", "0.94", "--c", "0.04", "--beta", "0.7",
                     "--gamma", "0.2", "--horizon", "10"], capsys)
    assert code == 0


def test_abm_outputs(tmp_path, capsys):
    summary = tmp_path / "summary.csv"
    code, out = run(["abm", "--l", "0.2", "--h", "0.5", "--N", "2000", "--horizon", "10",
                     "--seeds", "3,4", "--summary", str(summary)], capsys)
    assert code == 0
    rows = rows_of(out)
    assert {r["seed"] for r in rows} == {"3", "4"}
    srows = export.read_csv(summary)
    assert srows[0].keys() == set(export.ABM_SUMMARY_COLUMNS)
    assert int(srows[-1]["n_seeds"]) == 2


def test_parse_values():
    assert cli._parse_values("0:1:3") == pytest.approx([0, 0.5, 1])
    assert cli._parse_values("1,2.5") == [1.0, 2.5]
    with pytest.raises(ValueError):
        cli._parse_values("0:1:1")


def test_solver_case_labels():
    assert cli.solver_case(0.0, 0.0, True, 0.3) == "I"
    assert cli.solver_case(0.0, 0.2, True, 0.3) == "II"
    assert cli.solver_case(0.0, 0.3, True, 0.3) == "III"
    assert cli.solver_case(0.1, 0.2, True, 0.3) == "IV"
    assert cli.solver_case(0.1, 0.3, True, 0.3) == "V"
    assert cli.solver_case(0.3, 0.3, True, 0.3) == "VI"
    assert cli.solver_case(0.3, 0.3, False, 0.3) == "Invalid"


def test_csv_uses_lf(tmp_path):
    path = tmp_path / "x.csv"
    export.write_csv([[1.0, np.inf, True]], ("a", "b", "c"), path)
    assert path.read_bytes() == b"a,b,c\n1.0,inf,true\n"
