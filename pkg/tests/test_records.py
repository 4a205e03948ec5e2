import math

import numpy as np
import pytest

from ledfit import __version__
from ledfit.errors import LedFitError
from ledfit.records import (
    FIT_COLUMNS,
    ResultsStore,
    comment_header,
    fit_frame,
    read_params_csv,
    read_value_list,
    with_header,
)
from ledfit.state import FitResult, ModelParams, Termination

from conftest import make_record


def test_comment_header_lines():
    header = comment_header(7, {"configs": "table1", "scale": 0.01})
    assert header[0] == f"ledfit {__version__}"
    assert header[1] == "seed: 7"
    assert header[2] == "config: configs=table1 scale=0.01"
    assert header[3].startswith("timestamp: ")
    assert len(comment_header(None, {"report": "rank"}, timestamp=False)) == 2


def test_store_save_and_load(tmp_path):
    store = ResultsStore(comment_header(3, {"configs": "short"}, timestamp=False))
    store.add_record(make_record("S-Newton", "lens_a", 0.123456789, pre_newton_rmsp=2.5))
    store.extend([make_record("IF10", "lens_a", 1e-5, repeat=1, seed=2**63 + 5)])
    path = tmp_path / "results.csv"
    store.save(path)

    loaded = ResultsStore.load(path)
    assert loaded.header == ["ledfit 0.1.0", "seed: 3", "config: configs=short"]
    assert loaded.records[0] == store.records[0]
    second = loaded.records[1]
    assert second.seed == 2**63 + 5
    assert second.best_rmsp == 1e-5
    assert math.isnan(second.pre_newton_rmsp)


def test_store_without_wall_times(tmp_path):
    store = ResultsStore()
    store.add_record(make_record("A", "i1", 1.0))
    text = store.format(wall_times=False)
    assert "0.5" not in text.splitlines()[1].split(",")
    path = tmp_path / "r.csv"
    path.write_text(text)
    assert math.isnan(ResultsStore.load(path).records[0].wall_seconds)


def test_load_semicolons_and_decimal_commas(tmp_path):
    path = tmp_path / "table.csv"
    path.write_text("# exported\nconfig;instance;best_rmsp\nL-Newton;CP12632;7,6908\n")
    record = ResultsStore.load(path).records[0]
    assert record.config_name == "L-Newton"
    assert record.best_rmsp == 7.6908
    assert record.seed == 0


def test_load_rejects_missing_columns(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("config,rmsp\nA,1.0\n")
    with pytest.raises(LedFitError, match="best_rmsp"):
        ResultsStore.load(path)


def test_store_stats_and_clear():
    store = ResultsStore()
    store.extend([make_record("A", "i1", 2.0), make_record("B", "i1", 0.5)])
    stats = store.get_stats()
    assert stats == {"total_records": 2, "configs": 2, "instances": 1, "best_rmsp": 0.5}
    store.clear()
    assert store.get_stats()["total_records"] == 0


def test_fit_rows_reusable_as_initial_params(tmp_path):
    params = ModelParams(a=(0.25, 0.5, 0.125), b=(-12.5, 0.0, 33.3), c=(1.0, 17.0, 99.5))
    result = FitResult(params, 1.5, 0.75, 2.25, 4, Termination.CONVERGED, evaluations=12)
    frame = fit_frame([("lens", "newton", result)])
    assert list(frame.columns) == FIT_COLUMNS
    assert frame.loc[0, "termination"] == "Converged"
    path = tmp_path / "fit.csv"
    path.write_text(with_header(["ledfit 0.1.0"], frame))
    assert read_params_csv(path) == params
    with pytest.raises(LedFitError):
        read_params_csv(path, row=1)


def test_read_value_list(tmp_path):
    path = tmp_path / "before.csv"
    path.write_text("instance,rmsp\nCP12632,27.996\nCP12634,45.8986\n")
    labels, values = read_value_list(path)
    assert labels == ["CP12632", "CP12634"]
    np.testing.assert_array_equal(values, [27.996, 45.8986])


def test_read_value_list_needs_value_column(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("instance,other\na,1\n")
    with pytest.raises(LedFitError):
        read_value_list(path)
