import numpy as np
import pytest

from ledfit.errors import EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE
from ledfit.main import main
from ledfit.photometry import format_samples_csv
from ledfit.records import PARAM_NAMES, ResultsStore, read_table
from ledfit.state import IntensitySamples

from conftest import PHI


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def data_rows(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


def test_gen_writes_files_and_manifest(tmp_path, capsys):
    code, _, err = run(capsys, "gen", "--count", "3", "--seed", "7", "--out", str(tmp_path / "d"))
    assert code == EXIT_OK
    assert len(list((tmp_path / "d").glob("*.ies"))) == 3
    manifest = (tmp_path / "d" / "manifest.csv").read_text(encoding="utf-8").splitlines()
    assert manifest[0] == "# ledfit 0.1.0"
    assert "# seed: 7" in manifest
    assert any(line.startswith("# timestamp") for line in manifest)
    assert "=" * 70 in err


def test_convert_emits_samples_csv(dataset_dir, capsys):
    code, out, _ = run(capsys, "convert", str(dataset_dir / "artificial_000.ies"), "--no-timestamp")
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "# ledfit 0.1.0"
    assert not any(line.startswith("# timestamp") for line in lines)
    assert data_rows(out)[0] == "phi_deg,candela"
    assert len(data_rows(out)) == 92


def test_convert_to_ies(dataset_dir, tmp_path, capsys):
    target = tmp_path / "copy.ies"
    source = dataset_dir / "artificial_001.ies"
    code, _, _ = run(capsys, "convert", str(source), "--to", "ies", "--out", str(target))
    assert code == EXIT_OK
    assert "TILT=NONE" in target.read_text()


def test_fit_s_newton_row(dataset_dir, tmp_path, capsys):
    out_path = tmp_path / "fit.csv"
    code, _, err = run(
        capsys,
        "fit",
        "--method", "s-newton",
        "--budget", "10000",
        "--pool-size", "10",
        "--seed", "1",
        "--out", str(out_path),
        str(dataset_dir / "artificial_000.ies"),
    )
    assert code == EXIT_OK
    assert "✅" in err
    comments, frame = read_table(out_path)
    assert "seed: 1" in comments
    assert len(frame) == 1
    assert set(PARAM_NAMES) <= set(frame.columns)
    assert float(frame.loc[0, "rmsp"]) >= 0.0


def test_fit_is_reproducible_without_timestamp(dataset_dir, capsys):
    argv = [
        "fit", "--method", "if", "--budget", "2000", "--starts", "2", "--seed", "3",
        "--no-timestamp", str(dataset_dir / "artificial_002.ies"),
    ]
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second


def test_fit_newton_from_params_file(dataset_dir, tmp_path, capsys):
    source = dataset_dir / "artificial_000.ies"
    fitted = tmp_path / "seed.csv"
    run(capsys, "fit", "--method", "random", "--budget", "500", "--out", str(fitted), str(source))
    code, out, _ = run(capsys, "fit", "--method", "newton", "--init", str(fitted), str(source))
    assert code == EXIT_OK
    header = data_rows(out)[0].split(",")
    row = data_rows(out)[1].split(",")
    assert row[header.index("method")] == "newton"


def test_experiment_and_stats(dataset_dir, tmp_path, capsys):
    results = tmp_path / "results.csv"
    code, _, _ = run(
        capsys,
        "experiment",
        "--configs", "short",
        "--dataset", str(dataset_dir),
        "--scale", "1e-4",
        "--seed", "4",
        "--no-timestamp",
        "--out", str(results),
    )
    assert code == EXIT_OK
    store = ResultsStore.load(results)
    assert len(store.records) == 15
    assert all(np.isnan(r.wall_seconds) for r in store.records)

    for report in ("summary", "rank", "wilcoxon", "scatter"):
        code, out, _ = run(capsys, "stats", "--in", str(results), "--report", report)
        assert code == EXIT_OK, report
        assert len(data_rows(out)) > 1

    code, out, _ = run(
        capsys, "stats", "--in", str(results), "--report", "improvement", "--from-records"
    )
    assert code == EXIT_OK
    assert "delta_pct" in data_rows(out)[0]


def test_stats_improvement_from_lists(tmp_path, capsys):
    before = tmp_path / "before.csv"
    after = tmp_path / "after.csv"
    before.write_text("instance;rmsp\nCP12632;27,996\nCP12634;45,8986\n")
    after.write_text("instance;rmsp\nCP12632;7,6908\nCP12634;9,05513\n")
    code, out, _ = run(
        capsys, "stats", "--report", "improvement", "--before", str(before), "--after", str(after)
    )
    assert code == EXIT_OK
    header, *rows = data_rows(out)
    column = header.split(",").index("delta_pct")
    deltas = [round(float(row.split(",")[column]), 2) for row in rows]
    assert deltas == [72.53, 80.27]


def test_usage_error_exit_code(capsys):
    assert main(["fit", "--method", "annealing", "x.ies"]) == EXIT_USAGE
    assert main(["transmogrify"]) == EXIT_USAGE


def test_help_returns_success(capsys):
    assert main(["--help"]) == EXIT_OK
    assert "usage" in capsys.readouterr().out


def test_missing_file_exit_code(tmp_path, capsys):
    code, _, err = run(capsys, "convert", str(tmp_path / "absent.ies"))
    assert code == EXIT_INPUT
    assert "❌ Error" in err
    assert "absent.ies" in err


def test_dark_instance_exit_code(tmp_path, capsys):
    path = tmp_path / "dark.csv"
    path.write_text(format_samples_csv(IntensitySamples(PHI, np.zeros(91))))
    code, _, err = run(capsys, "fit", "--method", "newton", str(path))
    assert code == EXIT_NUMERICAL
    assert "dark instance" in err


def test_stats_needs_input(capsys):
    code, _, _ = run(capsys, "stats", "--report", "summary")
    assert code == EXIT_INPUT


def test_config_file_supplies_defaults(dataset_dir, tmp_path, capsys):
    config = tmp_path / "ledfit.conf"
    config.write_text("method=random\nbudget=300\nseed=8\n")
    code, out, _ = run(
        capsys, "fit", "--config", str(config), "--no-timestamp",
        str(dataset_dir / "artificial_000.ies"),
    )
    assert code == EXIT_OK
    assert "# seed: 8" in out.splitlines()
    assert "method=random" in out
