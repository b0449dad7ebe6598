"""
Unit tests for the evaluation report writer.
"""

import json
import os

import pandas as pd
import pytest

from src.analysis.experiments import ExperimentConfig, run_experiment
from src.analysis.reports import HAS_VISUALIZATION, ReportGenerator


@pytest.fixture
def small_reports(small_synthetic):
    return [run_experiment(ExperimentConfig(epsilon=eps, seeds=[0, 1], resolution=20), small_synthetic.records)
            for eps in (0.1, 0.2)]


def test_export_metrics(small_reports, temp_dir):
    exported = ReportGenerator(temp_dir).export_metrics(small_reports)
    frame = pd.read_csv(exported['csv'])
    # two epsilons x two seeds x two methods
    assert len(frame) == 8
    assert {'epsilon', 'seed', 'method', 'label_coverage', 'runtime_ms'} <= set(frame.columns)

    with open(exported['json'], encoding='utf-8') as f:
        documents = json.load(f)
    assert [d['epsilon'] for d in documents] == [0.1, 0.2]
    assert 'type2_estimates' in documents[0]
    assert isinstance(documents[0]['type2_violations'], dict)


def test_export_metrics_without_timing(small_reports, temp_dir):
    exported = ReportGenerator(temp_dir).export_metrics(small_reports, timing=False)
    assert 'runtime_ms' not in pd.read_csv(exported['csv']).columns
    with open(exported['json'], encoding='utf-8') as f:
        assert 'runtime_per_point_ms' not in json.load(f)[0]


def test_export_metrics_is_repeatable(small_reports, temp_dir):
    first = ReportGenerator(os.path.join(temp_dir, "a")).export_metrics(small_reports, timing=False)
    second = ReportGenerator(os.path.join(temp_dir, "b")).export_metrics(small_reports, timing=False)
    for kind in ('csv', 'json'):
        with open(first[kind], 'rb') as f1, open(second[kind], 'rb') as f2:
            assert f1.read() == f2.read()


def test_export_grid(temp_dir):
    grid = pd.DataFrame([
        {'epsilon': 0.2, 'alpha': 0.05, 'delta': 0.157894, 'ihds_inefficiency': 1.4, 'prps_inefficiency': 1.6},
        {'epsilon': 0.2, 'alpha': 0.1, 'delta': 0.111111, 'ihds_inefficiency': 1.3, 'prps_inefficiency': 1.5},
    ])
    exported = ReportGenerator(temp_dir).export_grid(grid)
    assert len(pd.read_csv(exported['csv'])) == 2
    if HAS_VISUALIZATION:
        assert os.path.exists(exported['svg'])


def test_heatmap_skips_empty_grid(temp_dir):
    generator = ReportGenerator(temp_dir)
    assert generator.render_grid_heatmap(pd.DataFrame(), os.path.join(temp_dir, "x.svg")) is None


def test_format_summary(small_reports, temp_dir):
    text = ReportGenerator(temp_dir).format_summary(small_reports)
    assert "distribution_coverage" in text
    assert len(text.splitlines()) == 3
    assert ReportGenerator(temp_dir).format_summary([]) == "(no results)"


def test_export_runtime(temp_dir):
    path = ReportGenerator(temp_dir).export_runtime(pd.DataFrame([{'k': 3, 'median_ms': 1.5}]))
    assert path.endswith("runtime_by_k.csv")
