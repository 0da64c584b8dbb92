import math
from dataclasses import replace

import numpy as np
import pytest

from gradpath import InputError, InvariantViolation
from gradpath.cli import main
from gradpath.harness import (
    CSV_HEADER,
    ExperimentConfig,
    ResultRow,
    _verify_sandwich,
    default_config,
    emit_csv,
    emit_plot_script,
    f1_dimension_grid,
    parse_config_text,
    render_csv,
    render_plot_script,
    run_experiment,
    run_property_suite,
)

GOLDEN_ROW = ResultRow(
    experiment="quad-lower-gf", d=6, omega=11.0, kappa_nominal=161051.0,
    kappa_effective=161051.0, mu_mode="", dist0=2.449489742783178,
    zeta=4.837, ratio=1.9747, bound_upper=2.449489742783178,
    bound_lower=1.5582, steps=585, runtime_s=0.25, seed=None,
    stop_reason="quadrature",
)

GOLDEN_CSV = (
    "experiment,d,omega,kappa_nominal,kappa_effective,mu_mode,dist0,zeta,"
    "ratio,bound_upper,bound_lower,steps,runtime_s,seed,stop_reason\n"
    "quad-lower-gf,6,11.0,161051.0,161051.0,,2.449489742783178,4.837,"
    "1.9747,2.449489742783178,1.5582,585,0.25,,quadrature\n"
)


def strip_runtime(csv_text: str) -> str:
    lines = []
    for line in csv_text.splitlines():
        cells = line.split(",")
        del cells[12]
        lines.append(",".join(cells))
    return "\n".join(lines)


class TestDimensionGrid:
    def test_default_grid(self):
        grid = f1_dimension_grid()
        assert grid[0] == 8  # ceil(e^2); 7 would fall outside [e^2, e^5]
        assert grid[-1] == 148
        assert len(grid) == 15
        assert all(a < b for a, b in zip(grid, grid[1:]))

    def test_extension_range(self):
        grid = f1_dimension_grid(high=math.e**6, count=5)
        assert grid[-1] == math.floor(math.e**6)

    def test_validation(self):
        with pytest.raises(InputError):
            f1_dimension_grid(low=2.0)


class TestConfig:
    def test_defaults_per_experiment(self):
        cfg = default_config("pkl-lower-gd")
        assert cfg.dims == f1_dimension_grid()
        assert cfg.mu_mode == "min"
        cfg = default_config("quad-random")
        assert cfg.seeds == tuple(range(10))
        with pytest.raises(InputError):
            default_config("nonsense")

    def test_parse_round_trip(self):
        text = """
        # comment
        experiment = quad-lower-gf
        dims = 6, 20
        omegas = 1.5, 2.0
        quad_abs_tol = 1e-10
        workers = 3
        out = somewhere.csv
        """
        cfg = parse_config_text(text)
        assert cfg.experiment == "quad-lower-gf"
        assert cfg.dims == (6, 20)
        assert cfg.omegas == (1.5, 2.0)
        assert cfg.quad_abs_tol == 1e-10
        assert cfg.workers == 3
        assert cfg.out == "somewhere.csv"

    def test_unknown_key_rejected(self):
        with pytest.raises(InputError, match="unknown key"):
            parse_config_text("experiment = quad-random\nbogus = 3\n")

    def test_missing_experiment_rejected(self):
        with pytest.raises(InputError, match="experiment"):
            parse_config_text("dims = 6\n")

    def test_tolerances_validated(self):
        with pytest.raises(InputError):
            ExperimentConfig("quad-random", dims=(2,), kappas=(10.0,), quad_abs_tol=0.0)
        with pytest.raises(InputError):
            ExperimentConfig("quad-random", mu_mode="median")
        with pytest.raises(InputError):
            ExperimentConfig("nope")

    def test_empty_grid_rejected_at_run(self):
        with pytest.raises(InputError, match="empty grid"):
            run_experiment(ExperimentConfig("quad-lower-gf", dims=(), omegas=(2.0,)))


class TestCsv:
    def test_golden_row(self):
        assert render_csv([GOLDEN_ROW]) == GOLDEN_CSV

    def test_header_only_for_no_rows(self):
        assert render_csv([]) == CSV_HEADER + "\n"

    def test_emit_writes_lf(self, tmp_path):
        path = tmp_path / "out" / "rows.csv"
        emit_csv([GOLDEN_ROW], path)
        data = path.read_bytes()
        assert b"\r" not in data
        assert data.decode() == GOLDEN_CSV

    def test_shortest_roundtrip_floats(self):
        row = replace(GOLDEN_ROW, zeta=0.1, ratio=1 / 3)
        text = render_csv([row])
        assert ",0.1," in text
        assert ",0.3333333333333333," in text


class TestSandwich:
    def test_within_bounds_passes(self):
        _verify_sandwich(GOLDEN_ROW)

    def test_below_lower_aborts(self):
        with pytest.raises(InvariantViolation, match="below lower"):
            _verify_sandwich(replace(GOLDEN_ROW, ratio=1.0))

    def test_above_upper_aborts(self):
        with pytest.raises(InvariantViolation, match="above upper"):
            _verify_sandwich(replace(GOLDEN_ROW, ratio=3.0))

    def test_capped_rows_exempt(self):
        _verify_sandwich(replace(GOLDEN_ROW, ratio=3.0, stop_reason="cap"))


class TestExperiments:
    def test_quad_lower_gf_rows_sorted_and_sandwiched(self):
        cfg = ExperimentConfig("quad-lower-gf", dims=(6, 12), omegas=(2.0, 1.3))
        rows = run_experiment(cfg)
        keys = [(r.d, r.omega) for r in rows]
        assert keys == sorted(keys)
        for row in rows:
            assert row.ratio == pytest.approx(row.zeta / row.dist0, rel=1e-12)
            assert row.bound_upper >= row.ratio

    def test_quad_lower_gd_small_instance(self):
        cfg = ExperimentConfig("quad-lower-gd", dims=(4,), omegas=(11.0,))
        rows = run_experiment(cfg)
        assert len(rows) == 1
        assert rows[0].stop_reason == "coords_below_except_last"
        assert rows[0].bound_lower <= rows[0].ratio <= rows[0].bound_upper

    def test_quad_lower_gd_cap_projection(self):
        cfg = ExperimentConfig(
            "quad-lower-gd", dims=(40,), omegas=(2.0,), safety_cap=10_000
        )
        rows = run_experiment(cfg)
        assert rows[0].stop_reason == "cap"
        assert rows[0].zeta is None

    def test_pkl_lower_gd_small_grid(self):
        cfg = ExperimentConfig("pkl-lower-gd", dims=(6, 9))
        rows = run_experiment(cfg)
        assert [r.d for r in rows] == [6, 9]
        for row in rows:
            assert row.kappa_nominal == 3 * row.d**2
            assert row.kappa_effective <= row.kappa_nominal
            assert row.ratio >= 0.3 * (row.d - 1) / row.dist0
            assert row.bound_lower <= row.ratio <= row.bound_upper
            assert row.stop_reason == "norm_below"
            assert row.mu_mode == "min"

    def test_pkl_lower_gd_single_point_deterministic(self):
        cfg = ExperimentConfig("pkl-lower-gd", dims=(7,))
        a = render_csv(run_experiment(cfg))
        b = render_csv(run_experiment(cfg))
        assert strip_runtime(a) == strip_runtime(b)

    def test_quad_lower_single_dimension_is_trivial(self):
        gf = run_experiment(ExperimentConfig("quad-lower-gf", dims=(1,), omegas=(7.0,)))
        assert gf[0].ratio == pytest.approx(1.0, abs=1e-9)
        gd = run_experiment(ExperimentConfig("quad-lower-gd", dims=(1,), omegas=(7.0,)))
        assert gd[0].ratio == pytest.approx(1.0, abs=1e-12)
        assert gd[0].steps == 0  # the stop rule is vacuous in one dimension

    def test_paper_max_mode_degenerates(self):
        # the max aggregate is reached on the quadratic branch, where the
        # ratio equals the smoothness constant, so kappa collapses to 1
        cfg = ExperimentConfig("pkl-lower-gd", dims=(6,), mu_mode="paper_max")
        rows = run_experiment(cfg)
        assert rows[0].kappa_effective == pytest.approx(1.0, rel=1e-9)

    def test_quad_random_deterministic(self):
        cfg = ExperimentConfig("quad-random", dims=(6,), kappas=(1e4,), seeds=(0, 1))
        a = render_csv(run_experiment(cfg))
        b = render_csv(run_experiment(cfg))
        assert strip_runtime(a) == strip_runtime(b)

    def test_worker_count_independence(self):
        base = ExperimentConfig("quad-lower-gf", dims=(6, 10, 14), omegas=(1.5, 3.0))
        serial = render_csv(run_experiment(base))
        parallel = render_csv(run_experiment(replace(base, workers=4)))
        assert strip_runtime(serial) == strip_runtime(parallel)

    def test_bound_sweep(self):
        cfg = ExperimentConfig("bound-sweep", dims=(6, 20), omegas=(2.0, 11.0))
        rows = run_experiment(cfg)
        assert len(rows) == 4
        assert all(r.zeta is None for r in rows)
        assert all(r.bound_upper is not None for r in rows)

    def test_property_suite_vacuous_on_empty_grid(self):
        report = run_property_suite(ExperimentConfig("property-suite", dims=()))
        assert report.ok
        assert report.results == []

    def test_property_suite_default_passes(self):
        report = run_property_suite(ExperimentConfig("property-suite", dims=(6,)))
        assert report.ok, report.render()
        assert len(report.results) >= 15


GOLDEN_F1_EMPTY = '''\
#!/usr/bin/env python3
"""Standalone plot script generated by gradpath (f1-ratio-vs-kappa)."""
import csv
import math

import matplotlib.pyplot as plt

CSV_PATH = 'demo.csv'

rows = []
with open(CSV_PATH) as fh:
    for record in csv.DictReader(fh):
        rows.append(record)

xs = [float(r["kappa_effective"]) for r in rows if r["ratio"]]
ys = [float(r["ratio"]) for r in rows if r["ratio"]]
plt.figure(figsize=(6, 4))
if xs:
    plt.plot(xs, ys, "o", label="measured ratio")
lo = min(xs) if xs else 10.0
hi = max(xs) if xs else 1e7
ref_x = [lo * (hi / lo) ** (i / 200) for i in range(201)]
ref_y = [3.0 * k ** 0.25 / math.log(k) for k in ref_x]
plt.plot(ref_x, ref_y, "-", label="3 k^(1/4) / log k")
plt.xscale("log")
plt.xlabel("effective condition number")
plt.ylabel("path length ratio")

plt.legend()
plt.tight_layout()
plt.savefig('demo.png', dpi=150)
print("wrote", 'demo.png')
'''


GOLDEN_F2_THREE = '''\
#!/usr/bin/env python3
"""Standalone plot script generated by gradpath (f2-ratio-vs-logkappa)."""
import csv
import math

import matplotlib.pyplot as plt

CSV_PATH = 'three.csv'

rows = []
with open(CSV_PATH) as fh:
    for record in csv.DictReader(fh):
        rows.append(record)

xs = [math.log(float(r["kappa_nominal"])) for r in rows if r["ratio"]]
ys = [float(r["ratio"]) for r in rows if r["ratio"]]
DIM = 6
plt.figure(figsize=(6, 4))
if xs:
    plt.plot(xs, ys, "o", label="measured ratio")
lo = min(xs) if xs else 1.0
hi = max(xs) if xs else 30.0
ref_x = [lo + (hi - lo) * i / 200 for i in range(201)]
plt.plot(ref_x, [1 + 2.5 * math.sqrt(v) for v in ref_x], "-", label="upper bound")
lower = [0.45 * math.sqrt(v) for v in ref_x]
if DIM is not None:
    lower = [min(v, 0.7 * math.sqrt(DIM)) for v in lower]
plt.plot(ref_x, lower, "--", label="lower bound")
plt.xlabel("log condition number")
plt.ylabel("path length ratio")

plt.legend()
plt.tight_layout()
plt.savefig('three.png', dpi=150)
print("wrote", 'three.png')
'''


class TestPlotScripts:
    def test_f1_empty_rows_golden(self):
        assert render_plot_script([], "f1-ratio-vs-kappa", "demo.csv") == GOLDEN_F1_EMPTY

    def test_f2_embeds_dimension(self):
        text = render_plot_script([GOLDEN_ROW], "f2-ratio-vs-logkappa", "demo.csv")
        assert "DIM = 6" in text
        assert "0.45 * math.sqrt(v)" in text
        assert "1 + 2.5 * math.sqrt(v)" in text

    def test_f2_three_row_golden(self):
        rows = [replace(GOLDEN_ROW, omega=w, kappa_nominal=w**5) for w in (2.0, 3.0, 11.0)]
        assert render_plot_script(rows, "f2-ratio-vs-logkappa", "three.csv") == GOLDEN_F2_THREE

    def test_f2_without_rows_has_no_truncation(self):
        text = render_plot_script([], "f2-ratio-vs-logkappa", "demo.csv")
        assert "DIM = None" in text

    def test_unknown_figure_rejected(self):
        with pytest.raises(InputError, match="unknown figure"):
            render_plot_script([], "f3-something", "demo.csv")

    def test_emitted_script_runs_headless(self, tmp_path):
        pytest.importorskip("matplotlib")
        import subprocess
        import sys

        csv_path = tmp_path / "rows.csv"
        emit_csv([GOLDEN_ROW], csv_path)
        script = tmp_path / "plot.py"
        emit_plot_script([GOLDEN_ROW], "f2-ratio-vs-logkappa", csv_path, script)
        proc = subprocess.run(
            [sys.executable, str(script)], capture_output=True, text=True,
            env={"MPLBACKEND": "Agg", "PATH": "/usr/bin:/bin"},
        )
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "rows.png").exists()


class TestCli:
    def test_run_gd(self, capsys, tmp_path):
        out = tmp_path / "traj.csv"
        code = main([
            "run-gd", "--objective", "quad-geom:d=3,omega=4",
            "--stop", "norm_below:1e-6", "--csv-out", str(out),
        ])
        assert code == 0
        assert out.exists()
        assert "path length" in capsys.readouterr().out

    def test_run_gf(self, capsys):
        code = main(["run-gf", "--objective", "fsep-quartic:d=2", "--stop", "grad_below:1e-8"])
        assert code == 0
        assert "arc length" in capsys.readouterr().out

    def test_bounds_subcommand(self, capsys):
        assert main(["bounds", "pkl-gd", "--mu", "1", "--L", "4"]) == 0
        assert "4.0" in capsys.readouterr().out

    def test_bounds_bad_input_is_exit_two(self, capsys):
        assert main(["bounds", "pkl-gd", "--mu", "4", "--L", "1"]) == 2

    def test_unknown_objective_is_exit_two(self, capsys):
        assert main(["run-gd", "--objective", "mystery", "--stop", "max_steps:1"]) == 2

    def test_check_self_contracted(self, tmp_path, capsys):
        pts = tmp_path / "pts.txt"
        pts.write_text("8\n-6\n4.5\n")
        assert main(["check", "self-contracted", "--points", str(pts)]) == 1
        out = capsys.readouterr().out
        assert "10.5" in out and "3.5" in out
        pts.write_text("1 0\n0.5 0\n0.25 0\n")
        assert main(["check", "self-contracted", "--points", str(pts)]) == 0

    def test_experiment_subcommand(self, tmp_path, capsys):
        code = main([
            "experiment", "quad-lower-gf", "--out", str(tmp_path),
            "--config", str(_write_config(tmp_path)),
        ])
        assert code == 0
        assert (tmp_path / "quad-lower-gf.csv").exists()
        assert (tmp_path / "quad-lower-gf_plot.py").exists()

    def test_experiment_config_mismatch(self, tmp_path):
        cfg = _write_config(tmp_path)
        assert main(["experiment", "quad-random", "--out", str(tmp_path), "--config", str(cfg)]) == 2

    def test_suite_small(self, capsys):
        assert main(["suite", "--dims", "6"]) == 0
        out = capsys.readouterr().out
        assert "OK" in out

    def test_experiment_seed_offset(self, tmp_path, capsys):
        cfg = tmp_path / "rand.cfg"
        cfg.write_text("experiment = quad-random\ndims = 4\nkappas = 100.0\nseeds = 0, 1\n")
        args = ["experiment", "quad-random", "--out", str(tmp_path), "--config", str(cfg)]
        assert main(args) == 0
        base = (tmp_path / "quad-random.csv").read_text()
        assert main(args + ["--seed", "100"]) == 0
        shifted = (tmp_path / "quad-random.csv").read_text()
        assert ",100," in shifted and ",101," in shifted
        assert strip_runtime(base) != strip_runtime(shifted)


def _write_config(tmp_path):
    cfg = tmp_path / "exp.cfg"
    cfg.write_text("experiment = quad-lower-gf\ndims = 6\nomegas = 2.0, 3.0\n")
    return cfg
