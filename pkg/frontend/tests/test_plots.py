"""Tests for the figure recipes and the ``plots`` command line tool."""

import json

import matplotlib.pyplot as plt
import numpy as np
import pytest

from dualplots import RECIPES, RecipeError, render
from dualplots.main import main
from dualplots.recipes import VOLUME_LAW_DENSITY, group_mean, load_csv

COLUMNS = "experiment,seed,realization,param_name,param_value,L,t,observable,value,sem"


def make_csv(path, experiment, rows, param_name="lambda"):
    """Write a result CSV with the self-describing metadata header."""
    lines = [
        "# config: " + json.dumps({"experiment": experiment, "base_seed": 0}),
        "# version: 0.0-test",
        "# stats: {}",
        COLUMNS,
    ]
    for i, (param_value, size, t, observable, value) in enumerate(rows):
        lines.append(
            f"{experiment},0,{i},{param_name},{param_value},{size},{t},"
            f"{observable},{value},0.01"
        )
    path.write_text("\n".join(lines) + "\n")
    return path


def curve_rows(observable, sizes=(8, 16), xs=(0.1, 0.3, 0.5), reps=2):
    rows = []
    for size in sizes:
        for x in xs:
            for r in range(reps):
                rows.append((x, size, 4 * size, observable, x * size + 0.1 * r))
    return rows


OBSERVABLE_FOR = {
    "aa-unitary": "entropy_density",
    "aa-dual": "entropy",
    "clifford2d": "entropy_per_l",
    "clifford2d-dual": "entropy_per_l",
    "mbl-eigen": "entropy_ratio",
    "mbl-dual": "entropy_ratio",
    "mbl-ancilla": "purification_time",
    "correlator": "correlator",
    "ipr": "ipr_mean",
}


def write_inputs(tmp_path, experiments):
    paths = []
    for name in experiments:
        if name == "spectrum":
            rows = []
            for k, obs in enumerate(
                ("window_fraction", "half_width_closed", "window_fraction_equal")
            ):
                for x in (0.5, 1.0, 1.5):
                    rows.append((x, 0, 0, obs, 0.5 * np.exp(-2 * x) + 0.01 * k))
            paths.append(make_csv(tmp_path / "spectrum.csv", name, rows, "alpha_h"))
        elif name == "aa-dual":
            rows = curve_rows("entropy") + curve_rows("entropy_density")
            paths.append(make_csv(tmp_path / "aa-dual.csv", name, rows))
        else:
            rows = curve_rows(OBSERVABLE_FOR[name])
            paths.append(make_csv(tmp_path / f"{name}.csv", name, rows))
    return paths


class TestLoading:
    def test_round_trip(self, tmp_path):
        path = make_csv(tmp_path / "a.csv", "ipr", curve_rows("ipr_mean"))
        records, meta = load_csv(path)
        assert meta["config"]["experiment"] == "ipr"
        assert records[0]["L"] == 8
        assert isinstance(records[0]["value"], float)

    def test_missing_column_named(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("experiment,seed,value\nipr,0,1.0\n")
        with pytest.raises(RecipeError, match="param_value"):
            load_csv(path)

    def test_empty_csv_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text(COLUMNS + "\n")
        with pytest.raises(RecipeError, match="no data"):
            load_csv(path)

    def test_group_mean_matches_numpy(self, tmp_path):
        path = make_csv(tmp_path / "a.csv", "ipr", curve_rows("ipr_mean"))
        records, _ = load_csv(path)
        curves = group_mean(records, "ipr_mean")
        for size in (8, 16):
            x, y = curves[size]
            assert list(x) == [0.1, 0.3, 0.5]
            for xi, yi in zip(x, y):
                vals = [
                    r["value"]
                    for r in records
                    if r["L"] == size and r["param_value"] == xi
                ]
                assert yi == np.mean(vals)

    def test_unknown_observable_lists_present(self, tmp_path):
        path = make_csv(tmp_path / "a.csv", "ipr", curve_rows("ipr_mean"))
        records, _ = load_csv(path)
        with pytest.raises(RecipeError, match="ipr_mean"):
            group_mean(records, "nope")


class TestRecipes:
    @pytest.mark.parametrize("figure_id", sorted(RECIPES))
    def test_render_each(self, tmp_path, figure_id):
        _, needs = RECIPES[figure_id]
        paths = write_inputs(tmp_path, needs)
        out = render(figure_id, paths, tmp_path / "figs")
        assert out.name == f"{figure_id}.png"
        assert out.stat().st_size > 0

    def test_rerun_byte_identical(self, tmp_path):
        paths = write_inputs(tmp_path, ("ipr",))
        first = render("fig7", paths, tmp_path / "a").read_bytes()
        second = render("fig7", paths, tmp_path / "b").read_bytes()
        assert first == second

    def test_plotted_arrays_equal_csv(self, tmp_path):
        (path,) = write_inputs(tmp_path, ("aa-unitary",))
        records, _ = load_csv(path)
        curves = group_mean(records, "entropy_density")
        fig, ax = plt.subplots()
        try:
            RECIPES["fig2a"][0]({"aa-unitary": records}, ax)
            by_label = {ln.get_label(): ln for ln in ax.lines}
            for size, (x, y) in curves.items():
                line = by_label[f"L={size}"]
                assert np.array_equal(line.get_xdata(), x)
                assert np.array_equal(line.get_ydata(), y)
        finally:
            plt.close(fig)

    def test_fig2a_reference_line(self, tmp_path):
        (path,) = write_inputs(tmp_path, ("aa-unitary",))
        records, _ = load_csv(path)
        fig, ax = plt.subplots()
        try:
            RECIPES["fig2a"][0]({"aa-unitary": records}, ax)
            levels = [
                ln.get_ydata()[0]
                for ln in ax.lines
                if len(set(np.asarray(ln.get_ydata()))) == 1
            ]
            assert VOLUME_LAW_DENSITY in levels
        finally:
            plt.close(fig)

    def test_wrong_experiment_rejected(self, tmp_path):
        paths = write_inputs(tmp_path, ("ipr",))
        with pytest.raises(RecipeError, match="aa-unitary"):
            render("fig2a", paths, tmp_path)

    def test_unknown_figure_id(self, tmp_path):
        paths = write_inputs(tmp_path, ("ipr",))
        with pytest.raises(RecipeError, match="unknown figure id"):
            render("fig9", paths, tmp_path)

    def test_error_leaves_no_file(self, tmp_path):
        bad = tmp_path / "empty.csv"
        bad.write_text(COLUMNS + "\n")
        out_dir = tmp_path / "figs"
        with pytest.raises(RecipeError):
            render("fig7", [bad], out_dir)
        assert not (out_dir / "fig7.png").exists()


class TestCli:
    def test_success(self, tmp_path, capsys):
        paths = write_inputs(tmp_path, ("correlator",))
        argv = ["fig6", str(paths[0]), "-o", str(tmp_path / "figs")]
        assert main(argv) == 0
        assert "fig6.png" in capsys.readouterr().out
        assert (tmp_path / "figs" / "fig6.png").exists()

    def test_all(self, tmp_path, capsys):
        paths = write_inputs(tmp_path, sorted({
            n for _, needs in RECIPES.values() for n in needs
        }))
        argv = ["all", *map(str, paths), "-o", str(tmp_path / "figs")]
        assert main(argv) == 0
        names = {p.name for p in (tmp_path / "figs").iterdir()}
        assert names == {f"{fid}.png" for fid in RECIPES}

    def test_error_exit_code(self, tmp_path, capsys):
        paths = write_inputs(tmp_path, ("ipr",))
        argv = ["fig2a", str(paths[0]), "-o", str(tmp_path)]
        assert main(argv) == 2
        assert "aa-unitary" in capsys.readouterr().err
