"""CLI tests: output formats, benchmark values through the command surface,
exit codes, config files and the seed fallback."""

import json
import subprocess
import sys

import pytest

from dos_lab.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_csv(text):
    lines = [line for line in text.strip().splitlines() if line]
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


def test_solve_perfect_prints_threshold(capsys):
    code, out, _ = run_cli(capsys, "solve-perfect", "--rho", "1",
                           "--delta", "0.1", "--ps", "0.367879441171")
    assert code == 0
    header, rows = parse_csv(out)
    assert header == ["x_star"]
    assert rows[0][0] == "0.610442"


def test_solve_perfect_usage_error():
    with pytest.raises(SystemExit) as excinfo:
        main(["solve-perfect"])
    assert excinfo.value.code == 2


def test_solve_perfect_domain_error(capsys):
    code, _, err = run_cli(capsys, "solve-perfect", "--rho", "0")
    assert code == 3
    assert "error" in err


def test_optimize_trace_matches_benchmark(capsys):
    code, out, _ = run_cli(capsys, "optimize", "--rho", "0.5", "--alpha", "1",
                           "--x0", "0.5")
    assert code == 0
    header, rows = parse_csv(out)
    assert header == ["k", "x_k", "sigma_k"]
    xs = [float(r[1]) for r in rows]
    assert xs[0] == 0.5
    assert xs[1] == pytest.approx(0.177, abs=0.002)
    assert xs[2] == pytest.approx(0.246, abs=0.002)
    assert xs[3] == pytest.approx(0.254, abs=0.002)
    assert float(rows[-1][1]) == pytest.approx(0.254, abs=0.002)
    assert float(rows[-1][2]) == pytest.approx(0.407, abs=0.002)
    assert rows[0][2] == ""  # the starting row has no sigma yet


def test_optimize_routes_perfect_csi(capsys):
    code, out, _ = run_cli(capsys, "optimize", "--rho", "1", "--alpha", "0")
    assert code == 0
    _, rows = parse_csv(out)
    assert float(rows[-1][1]) == pytest.approx(0.610, abs=0.002)
    assert float(rows[-1][2]) == 1.0


def test_table_one(capsys):
    code, out, _ = run_cli(capsys, "table", "I")
    assert code == 0
    header, rows = parse_csv(out)
    assert header == ["rho", "x0", "x1", "x2", "x3", "x_star", "sigma_star"]
    assert len(rows) == 5
    by_rho = {float(r[0]): r for r in rows}
    assert float(by_rho[1.0][5]) == pytest.approx(0.301, abs=0.002)
    assert float(by_rho[1.0][6]) == pytest.approx(0.285, abs=0.002)
    assert float(by_rho[10.0][6]) == pytest.approx(0.049, abs=0.002)


def test_table_two_has_perfect_row(capsys):
    code, out, _ = run_cli(capsys, "table", "II")
    assert code == 0
    _, rows = parse_csv(out)
    first = rows[0]
    assert float(first[0]) == 0.0
    assert float(first[2]) == pytest.approx(0.604, abs=0.002)  # x1
    assert float(first[-2]) == pytest.approx(0.610, abs=0.002)
    assert float(first[-1]) == 1.0


def test_table_four_gain_column(capsys):
    code, out, _ = run_cli(capsys, "table", "IV")
    assert code == 0
    header, rows = parse_csv(out)
    assert header[-1] == "gain_percent"
    gains = [float(r[-1]) for r in rows]
    assert gains[0] == pytest.approx(35.2, abs=1.0)
    assert gains[-1] == pytest.approx(38.8, abs=1.0)
    assert all(b > a for a, b in zip(gains, gains[1:]))


def test_table_rejects_unknown_id(capsys):
    code, _, err = run_cli(capsys, "table", "V")
    assert code == 3
    assert "unknown table" in err


def test_figure_one_endpoints(capsys):
    code, out, _ = run_cli(capsys, "figure", "1", "--x", "0.1", "--rho", "1",
                           "--alpha", "1", "--points", "101")
    assert code == 0
    _, rows = parse_csv(out)
    phis = [float(r[1]) for r in rows]
    assert phis[0] == 0.0
    assert phis[-1] == 0.0
    assert max(phis) > 0.05


def test_figure_three_monotone(capsys):
    code, out, _ = run_cli(capsys, "figure", "3", "--rho", "1")
    assert code == 0
    _, rows = parse_csv(out)
    sigmas = [float(r[1]) for r in rows]
    assert all(b < a for a, b in zip(sigmas, sigmas[1:]))


def test_figure_four_requires_flags(capsys):
    code, _, err = run_cli(capsys, "figure", "4")
    assert code == 2
    assert "requires" in err


def test_figure_four_two_series(capsys):
    code, out, err = run_cli(capsys, "figure", "4", "--rho", "1", "--rho", "10",
                             "--T", "10", "--tau-points", "7",
                             "--tau-min", "0.05", "--tau-max", "6")
    assert code == 0
    header, rows = parse_csv(out)
    assert header == ["tau", "x_star_rho1", "x_star_rho10"]
    assert len(rows) == 7
    assert "peaks at" in err
    series_one = [float(r[1]) for r in rows]
    peak_index = series_one.index(max(series_one))
    assert 0 < peak_index < len(series_one) - 1


def test_simulate_auto_policy_tracks_fixed_point(capsys):
    code, out, _ = run_cli(capsys, "simulate", "--rho", "1", "--alpha", "1",
                           "--episodes", "200000", "--seed", "42", "--auto-policy")
    assert code == 0
    header, rows = parse_csv(out)
    record = dict(zip(header, rows[0]))
    assert abs(float(record["empirical_throughput"]) - 0.301357) / 0.301357 < 0.01
    assert record["seed"] == "42"


def test_simulate_deterministic_output_bytes(capsys):
    argv = ["simulate", "--rho", "1", "--alpha", "1", "--episodes", "5000",
            "--seed", "42", "--auto-policy"]
    code1, out1, _ = run_cli(capsys, *argv)
    code2, out2, _ = run_cli(capsys, *argv)
    assert code1 == code2 == 0
    assert out1 == out2


def test_simulate_parallel_matches_serial_bytes(capsys):
    base = ["simulate", "--rho", "1", "--alpha", "1", "--episodes", "5000",
            "--seed", "9", "--replications", "4", "--auto-policy"]
    _, serial, _ = run_cli(capsys, *base)
    _, threaded, _ = run_cli(capsys, *base, "--parallel")
    assert serial == threaded


def test_simulate_starvation_exit_code(capsys):
    code, _, err = run_cli(capsys, "simulate", "--rho", "1", "--alpha", "1",
                           "--episodes", "100", "--seed", "1",
                           "--sigma", "0.285", "--threshold", "1e9")
    assert code == 5
    assert "probe" in err


def test_simulate_requires_policy(capsys):
    code, _, err = run_cli(capsys, "simulate", "--rho", "1", "--alpha", "1",
                           "--episodes", "100")
    assert code == 2
    assert "policy" in err


def test_simulate_json_format(capsys):
    code, out, _ = run_cli(capsys, "simulate", "--rho", "1", "--alpha", "1",
                           "--episodes", "2000", "--seed", "3", "--auto-policy",
                           "--format", "json")
    assert code == 0
    record = json.loads(out)
    assert set(record) >= {"empirical_throughput", "ci_halfwidth_95",
                           "outage_fraction", "mean_probes_per_transmission"}


def test_simulate_perfect_csi_channel(capsys):
    code, out, _ = run_cli(capsys, "simulate", "--rho", "1", "--episodes", "50000",
                           "--seed", "11", "--auto-policy")
    assert code == 0
    header, rows = parse_csv(out)
    record = dict(zip(header, rows[0]))
    assert abs(float(record["empirical_throughput"]) - 0.610442) / 0.610442 < 0.02
    assert float(record["outage_fraction"]) == 0.0


def test_simulate_config_file_with_flag_override(tmp_path, capsys):
    config = tmp_path / "run.conf"
    config.write_text(
        "# benchmark operating point\n"
        "rho = 1\n"
        "alpha = 1\n"
        "episodes = 4000\n"
        "seed = 5\n"
        "auto_policy = true\n"
    )
    code, out, _ = run_cli(capsys, "simulate", "--config", str(config))
    assert code == 0
    _, rows = parse_csv(out)
    assert rows[0][6] == "5"  # seed from the file

    code, out, _ = run_cli(capsys, "simulate", "--config", str(config),
                           "--seed", "99")
    assert code == 0
    _, rows = parse_csv(out)
    assert rows[0][6] == "99"  # flag wins


def test_simulate_config_rejects_unknown_key(tmp_path, capsys):
    config = tmp_path / "bad.conf"
    config.write_text("rho = 1\nbogus_knob = 3\n")
    code, _, err = run_cli(capsys, "simulate", "--config", str(config))
    assert code == 2
    assert "unknown config key" in err


def test_simulate_seed_env_fallback(capsys, monkeypatch):
    monkeypatch.setenv("DOS_LAB_SEED", "777")
    code, out, _ = run_cli(capsys, "simulate", "--rho", "1", "--alpha", "1",
                           "--episodes", "2000", "--auto-policy")
    assert code == 0
    _, rows = parse_csv(out)
    assert rows[0][6] == "777"


def test_out_file_option(tmp_path, capsys):
    target = tmp_path / "table.csv"
    code, out, _ = run_cli(capsys, "solve-perfect", "--rho", "1",
                           "--out", str(target))
    assert code == 0
    assert out == ""
    assert target.read_text().startswith("x_star\n0.610442")


def test_subprocess_entry_point_is_byte_stable():
    argv = [sys.executable, "-m", "dos_lab.cli", "simulate", "--rho", "1",
            "--alpha", "1", "--episodes", "3000", "--seed", "4", "--auto-policy"]
    first = subprocess.run(argv, capture_output=True, check=True)
    second = subprocess.run(argv, capture_output=True, check=True)
    assert first.stdout == second.stdout
