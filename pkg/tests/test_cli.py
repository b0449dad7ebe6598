"""
Command-line tests driven through click's CliRunner.
"""

import json
import logging
import os

import pytest
from click.testing import CliRunner

from src.cli.commands import cli
from src.credal.simplex import LabelSpace
from src.data.models import DatasetHeader
from src.data.processors import Dataset, DatasetProcessor

pytestmark = pytest.mark.cli


@pytest.fixture(autouse=True)
def reset_package_logger():
    yield
    package_logger = logging.getLogger("src")
    for handler in list(package_logger.handlers):
        package_logger.removeHandler(handler)
        handler.close()


@pytest.fixture
def runner():
    return CliRunner(mix_stderr=False)


def _invoke(runner, *args):
    return runner.invoke(cli, ['--log-level', 'WARNING'] + [str(a) for a in args])


@pytest.fixture
def nine_file(nine_records, temp_dir):
    dataset = Dataset(DatasetHeader(LabelSpace(2)), nine_records)
    return DatasetProcessor().emit_dataset(dataset, os.path.join(temp_dir, "nine.jsonl"))


@pytest.fixture
def fixture_file(fixture_dataset, temp_dir):
    return DatasetProcessor().emit_dataset(fixture_dataset, os.path.join(temp_dir, "fixture.jsonl"))


@pytest.fixture
def fixture_artifact(runner, temp_dir):
    """Artifact with tau = 0.25 calibrated on a K = 3 file."""
    path = os.path.join(temp_dir, "cal3.jsonl")
    with open(path, 'w', encoding='utf-8') as f:
        f.write('{"schema": "credal-v1", "k": 3}\n')
        # Scores 0.25, 0.5 and 0.75; alpha 0.25 picks the smallest.
        f.write('{"id": "c1", "model_probs": [0.25, 0.5, 0.25], "plausibility": [1, 0, 0]}\n')
        f.write('{"id": "c2", "model_probs": [0.5, 0.25, 0.25], "plausibility": [1, 0, 0]}\n')
        f.write('{"id": "c3", "model_probs": [0.75, 0.125, 0.125], "plausibility": [1, 0, 0]}\n')
    out = os.path.join(temp_dir, "cal3.json")
    result = _invoke(runner, 'calibrate', '--input', path, '--alpha', 0.25, '--out', out)
    assert result.exit_code == 0, result.stderr
    return out


def _read_rows(path):
    with open(path, encoding='utf-8') as f:
        return [json.loads(line) for line in f if line.strip()]


def test_calibrate_nine_rows(runner, nine_file, temp_dir):
    out = os.path.join(temp_dir, "artifact.json")
    result = _invoke(runner, 'calibrate', '--input', nine_file, '--alpha', 0.1, '--out', out)
    assert result.exit_code == 0, result.stderr
    summary = json.loads(result.stdout)
    assert summary['n'] == 9
    assert summary['k_index'] == 1
    assert summary['tau'] == pytest.approx(0.1)
    with open(out, encoding='utf-8') as f:
        assert json.load(f)['tau'] == pytest.approx(0.1)


def test_calibrate_zero_alpha_is_vacuous(runner, nine_file, temp_dir):
    out = os.path.join(temp_dir, "artifact.json")
    result = _invoke(runner, 'calibrate', '--input', nine_file, '--alpha', 0, '--out', out)
    assert result.exit_code == 0
    with open(out, encoding='utf-8') as f:
        assert json.load(f)['tau'] == float('-inf')


def test_calibrate_missing_plausibility(runner, temp_dir):
    path = os.path.join(temp_dir, "bad.jsonl")
    with open(path, 'w', encoding='utf-8') as f:
        f.write('{"schema": "credal-v1", "k": 2}\n{"id": "a", "model_probs": [0.5, 0.5]}\n')
    result = _invoke(runner, 'calibrate', '--input', path, '--alpha', 0.1, '--out', os.path.join(temp_dir, "x"))
    assert result.exit_code == 2
    assert "line 2" in result.stderr


def test_calibrate_empty_file(runner, temp_dir):
    path = os.path.join(temp_dir, "empty.jsonl")
    with open(path, 'w', encoding='utf-8') as f:
        f.write('{"schema": "credal-v1", "k": 2}\n')
    result = _invoke(runner, 'calibrate', '--input', path, '--alpha', 0.1, '--out', os.path.join(temp_dir, "x"))
    assert result.exit_code == 3


def test_calibrate_rejects_alpha_one(runner, nine_file, temp_dir):
    result = _invoke(runner, 'calibrate', '--input', nine_file, '--alpha', 1.0, '--out', os.path.join(temp_dir, "x"))
    assert result.exit_code == 2


def test_predict_fixture_point(runner, fixture_artifact, fixture_file, temp_dir):
    out = os.path.join(temp_dir, "pred.jsonl")
    result = _invoke(runner, 'predict', '--artifact', fixture_artifact, '--input', fixture_file,
                     '--delta', 0.8, '--resolution', 50, '--out', out)
    assert result.exit_code == 0, result.stderr
    header, *rows = _read_rows(out)
    assert header['schema'] == 'credal-predictions-v1'
    assert header['tau'] == 0.25
    row = rows[0]
    assert row['id'] == 'a'
    assert row['ihds'] == [0, 1]
    assert row['prps'] == [0, 1, 2]
    assert row['au'] == 0.0
    assert len(rows) == 3


def test_predict_zero_delta(runner, fixture_artifact, fixture_file, temp_dir):
    out = os.path.join(temp_dir, "pred.jsonl")
    result = _invoke(runner, 'predict', '--artifact', fixture_artifact, '--input', fixture_file,
                     '--delta', 0, '--resolution', 10, '--no-uncertainty', '--out', out)
    assert result.exit_code == 0
    for row in _read_rows(out)[1:]:
        if not row['empty_region']:
            assert row['ihds'] == [0, 1, 2]
        assert row['tu'] is None


def test_predict_empty_input(runner, fixture_artifact, temp_dir):
    path = os.path.join(temp_dir, "none.jsonl")
    with open(path, 'w', encoding='utf-8') as f:
        f.write('{"schema": "credal-v1", "k": 3}\n')
    out = os.path.join(temp_dir, "pred.jsonl")
    result = _invoke(runner, 'predict', '--artifact', fixture_artifact, '--input', path, '--delta', 0.1, '--out', out)
    assert result.exit_code == 0
    assert len(_read_rows(out)) == 1


def test_predict_rejects_delta_one(runner, fixture_artifact, fixture_file, temp_dir):
    result = _invoke(runner, 'predict', '--artifact', fixture_artifact, '--input', fixture_file,
                     '--delta', 1.0, '--out', os.path.join(temp_dir, "p.jsonl"))
    assert result.exit_code == 2


def test_predict_dimension_mismatch(runner, fixture_artifact, nine_file, temp_dir):
    result = _invoke(runner, 'predict', '--artifact', fixture_artifact, '--input', nine_file,
                     '--delta', 0.1, '--out', os.path.join(temp_dir, "p.jsonl"))
    assert result.exit_code == 2


def test_predict_is_byte_identical(runner, fixture_artifact, fixture_file, temp_dir):
    outputs = []
    for name in ("p1.jsonl", "p2.jsonl"):
        out = os.path.join(temp_dir, name)
        result = _invoke(runner, 'predict', '--artifact', fixture_artifact, '--input', fixture_file,
                         '--delta', 0.2, '--resolution', 30, '--out', out)
        assert result.exit_code == 0
        with open(out, 'rb') as f:
            outputs.append(f.read())
    assert outputs[0] == outputs[1]


def test_generate_then_evaluate(runner, temp_dir):
    data = os.path.join(temp_dir, "synthetic.jsonl")
    result = _invoke(runner, 'generate', '--n', 120, '--seed', 3, '--out', data)
    assert result.exit_code == 0, result.stderr
    assert json.loads(result.stdout)['n'] == 120
    assert len(_read_rows(data)) == 121

    out_dir = os.path.join(temp_dir, "results")
    result = _invoke(runner, 'evaluate', '--input', data, '--epsilons', '0.1,0.2', '--seeds', 2,
                     '--resolution', 20, '--alpha-policy', 'grid', '--grid-steps', 2, '--no-timing',
                     '--out', out_dir)
    assert result.exit_code == 0, result.stderr
    summary = json.loads(result.stdout)
    assert summary['configurations'] == 2
    for name in ("metrics.csv", "metrics.json", "grid.csv"):
        assert os.path.exists(os.path.join(out_dir, name))


def test_evaluate_rejects_bad_epsilons(runner, nine_file, temp_dir):
    result = _invoke(runner, 'evaluate', '--input', nine_file, '--epsilons', '0.1,1.5', '--seeds', 1,
                     '--out', os.path.join(temp_dir, "r"))
    assert result.exit_code == 2


def test_generate_is_byte_identical(runner, temp_dir):
    payloads = []
    for name in ("a.jsonl", "b.jsonl"):
        out = os.path.join(temp_dir, name)
        assert _invoke(runner, 'generate', '--n', 50, '--seed', 9, '--out', out).exit_code == 0
        with open(out, 'rb') as f:
            payloads.append(f.read())
    assert payloads[0] == payloads[1]


def test_plot(runner, fixture_artifact, fixture_file, temp_dir):
    out = os.path.join(temp_dir, "a.svg")
    result = _invoke(runner, 'plot', '--artifact', fixture_artifact, '--input', fixture_file,
                     '--point-id', 'a', '--out', out)
    assert result.exit_code == 0, result.stderr
    assert json.loads(result.stdout)['vertices'] == 3
    assert os.path.exists(out)


def test_plot_defaults_to_calibration_dataset(runner, fixture_artifact, temp_dir):
    result = _invoke(runner, 'plot', '--artifact', fixture_artifact, '--point-id', 'c3',
                     '--out', os.path.join(temp_dir, "c3.svg"))
    assert result.exit_code == 0, result.stderr


def test_plot_unknown_point(runner, fixture_artifact, fixture_file, temp_dir):
    result = _invoke(runner, 'plot', '--artifact', fixture_artifact, '--input', fixture_file,
                     '--point-id', 'zzz', '--out', os.path.join(temp_dir, "z.svg"))
    assert result.exit_code == 2


def test_missing_config_file(runner, temp_dir):
    result = runner.invoke(cli, ['--config', os.path.join(temp_dir, "absent.yaml"), 'generate',
                                 '--out', os.path.join(temp_dir, "x.jsonl")])
    assert result.exit_code == 2
