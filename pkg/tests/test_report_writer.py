import json

import numpy as np
import pandas as pd
import pytest

from singular_mass_lab.core.grid_field import ComplexField, Grid, RealField
from singular_mass_lab.core.rates import rate_report
from singular_mass_lab.core.report_writer import (
    gnuplot_script,
    read_field_csv,
    write_field_csv,
    write_report,
)
from singular_mass_lab.errors import GridError

EPSILONS = [0.5, 0.25, 0.125, 0.0625]


def _ladder_frame():
    return pd.DataFrame({"epsilon": EPSILONS, "w1inf": [e**-2 for e in EPSILONS]})


class TestFieldFiles:
    def test_complex_field_1d(self, tmp_path, gaussian_1d):
        path = write_field_csv(gaussian_1d, tmp_path / "u.csv")
        assert path.read_text().splitlines()[0] == "# d=1, half_width=4.0, n=64"
        loaded = read_field_csv(path)
        assert isinstance(loaded, ComplexField)
        assert loaded.grid == gaussian_1d.grid
        np.testing.assert_array_equal(loaded.values, gaussian_1d.values)

    def test_real_field_2d(self, tmp_path, grid_2d, rng):
        field = RealField(grid_2d, rng.standard_normal(grid_2d.shape))
        path = write_field_csv(field, tmp_path / "g.csv")
        assert path.read_text().splitlines()[1] == "i,j,value"
        loaded = read_field_csv(path)
        assert isinstance(loaded, RealField)
        np.testing.assert_array_equal(loaded.values, field.values)

    def test_forced_types(self, tmp_path, grid_1d, gaussian_1d):
        real_path = write_field_csv(RealField(grid_1d, np.ones(grid_1d.shape)), tmp_path / "r.csv")
        assert isinstance(read_field_csv(real_path, complex_valued=True), ComplexField)
        complex_path = write_field_csv(gaussian_1d, tmp_path / "c.csv")
        with pytest.raises(GridError, match="complex values"):
            read_field_csv(complex_path, complex_valued=False)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("i,value\n0,1.0\n")
        with pytest.raises(GridError, match="first line"):
            read_field_csv(path)

    def test_wrong_row_count(self, tmp_path):
        path = tmp_path / "short.csv"
        path.write_text("# d=1, half_width=1.0, n=8\ni,value\n0,1.0\n1,1.0\n")
        with pytest.raises(GridError, match="expected 8 rows"):
            read_field_csv(path)

    def test_missing_value_columns(self, tmp_path):
        path = tmp_path / "cols.csv"
        path.write_text("# d=1, half_width=1.0, n=8\ni,other\n" + "".join(f"{i},1.0\n" for i in range(8)))
        with pytest.raises(GridError, match="columns"):
            read_field_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(GridError, match="cannot read"):
            read_field_csv(tmp_path / "absent.csv")


class TestReports:
    def test_files_and_metadata(self, tmp_path):
        files = write_report(_ladder_frame(), tmp_path / "out" / "moderateness", {"campaign": "moderateness", "eps": 0.5})
        assert [f.name for f in files] == ["moderateness.csv", "moderateness.meta.json"]
        assert files[0].read_text().splitlines()[0] == "epsilon,w1inf"
        assert json.loads(files[1].read_text()) == {"campaign": "moderateness", "eps": 0.5}

    def test_floats_round_trip_exactly(self, tmp_path):
        frame = pd.DataFrame({"epsilon": [0.1, 1 / 3], "value": [np.pi, 1e-300]})
        files = write_report(frame, tmp_path / "r", {})
        pd.testing.assert_frame_equal(pd.read_csv(files[0], float_precision="round_trip"), frame)

    def test_gnuplot_only_when_asked(self, tmp_path):
        rate = rate_report("w1inf", list(zip(EPSILONS, [e**-2 for e in EPSILONS])))
        without = write_report(_ladder_frame(), tmp_path / "a", {}, [rate], plots=False)
        with_plots = write_report(_ladder_frame(), tmp_path / "b", {}, [rate], plots=True)
        assert len(without) == 2
        assert with_plots[-1].name == "b.gp"
        assert "slope 2.000" in with_plots[-1].read_text()

    def test_no_gnuplot_without_epsilon_column(self, tmp_path):
        frame = pd.DataFrame({"t": [0.0, 0.1], "l2": [1.0, 1.0]})
        assert len(write_report(frame, tmp_path / "energy", {}, plots=True)) == 2

    def test_gnuplot_skips_absent_quantities(self):
        rate = rate_report("missing", list(zip(EPSILONS, [1.0, 2.0, 4.0, 8.0])))
        script = gnuplot_script("x.csv", _ladder_frame(), [rate])
        assert "plot" not in script.splitlines()[-1]

    def test_byte_identical_reruns(self, tmp_path):
        meta = {"campaign": "energy", "b": [1, 2], "a": 0.1}
        first = write_report(_ladder_frame(), tmp_path / "one" / "r", meta)
        second = write_report(_ladder_frame(), tmp_path / "two" / "r", dict(reversed(list(meta.items()))))
        for a, b in zip(first, second):
            assert a.read_bytes() == b.read_bytes()
