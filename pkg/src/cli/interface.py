"""
Command orchestration.

Each method implements one CLI command on top of the library and returns the
JSON-serializable summary the command prints. Click wiring, flag parsing and
exit codes live in ``src.cli.commands``.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from src.analysis.experiments import ExperimentConfig, alpha_delta_grid, predict_point, run_experiment
from src.analysis.reports import ReportGenerator
from src.analysis.ternary import render_ternary
from src.credal.calibration import calibrate
from src.credal.region import CredalRegion
from src.data.processors import CalibrationArtifact, Dataset, DatasetProcessor
from src.data.synthetic import GeneratorSpec, generate_synthetic
from src.utils.config import Settings
from src.utils.data_helpers import PathLike, file_digest, write_json_lines
from src.utils.exceptions import DimensionMismatch, UnsupportedDimension, ValidationError


class CredalInterface:
    """Runs calibrate, predict, evaluate, plot and generate against files on disk."""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or Settings()
        self.processor = DatasetProcessor()
        self.logger = logging.getLogger(__name__)

    def _load(self, path: PathLike, labels: Optional[Sequence[int]] = None,
              require_plausibility: bool = False) -> Dataset:
        dataset = self.processor.load_dataset(path, require_plausibility=require_plausibility)
        if labels:
            dataset = self.processor.select_labels(dataset, labels)
        return dataset

    def calibrate(self, input_path: PathLike, alpha: float, out: PathLike,
                  labels: Optional[Sequence[int]] = None, conformity: Optional[str] = None) -> Dict:
        dataset = self._load(input_path, labels, require_plausibility=True)
        digest = file_digest(input_path)

        if Path(out).is_file():
            try:
                previous = self.processor.load_artifact(out)
                if previous.dataset_digest and previous.dataset_digest != digest:
                    self.logger.warning(f"Overwriting artifact {out} calibrated on a different dataset "
                                        f"({previous.dataset_path})")
            except ValidationError:
                self.logger.warning(f"Overwriting unreadable artifact {out}")

        threshold = calibrate(dataset.records, alpha, conformity or self.settings.calibration.conformity)
        artifact = CalibrationArtifact(threshold, dataset.label_space, digest, str(input_path))
        self.processor.save_artifact(artifact, out)
        return {'n': threshold.n_calibration, 'tau': threshold.tau, 'k_index': threshold.k_index,
                'alpha': threshold.alpha, 'artifact': str(out)}

    def _check_space(self, artifact: CalibrationArtifact, dataset: Dataset):
        if artifact.label_space.k_count != dataset.k:
            raise DimensionMismatch(f"artifact was calibrated for K={artifact.label_space.k_count}, "
                                    f"dataset has K={dataset.k}")

    def predict(self, artifact_path: PathLike, input_path: PathLike, delta: float, out: PathLike,
                resolution: Optional[int] = None, labels: Optional[Sequence[int]] = None,
                with_uncertainty: bool = True) -> Dict:
        """One output row per test point; any per-point failure aborts before writing."""
        artifact = self.processor.load_artifact(artifact_path)
        dataset = self._load(input_path, labels)
        self._check_space(artifact, dataset)

        resolution = resolution or self.settings.prediction.resolution
        uncertainty = self.settings.uncertainty
        rows: List[Dict] = []
        for record in dataset.records:
            prediction = predict_point(record, artifact.threshold, delta, resolution,
                                       self.settings.prediction.k_cap, dataset.label_space,
                                       with_uncertainty=with_uncertainty, uncertainty_tol=uncertainty.tol,
                                       max_iterations=uncertainty.max_iterations)
            rows.append(prediction.to_row(delta))

        header = {'schema': 'credal-predictions-v1', 'k': dataset.k, 'tau': artifact.threshold.tau,
                  'alpha': artifact.threshold.alpha, 'delta': delta}
        write_json_lines(out, [header] + rows)
        empty = sum(1 for row in rows if row['empty_region'])
        if empty:
            self.logger.warning(f"{empty} of {len(rows)} points have an empty credal region")
        self.logger.info(f"Wrote {len(rows)} predictions to {out}")
        return {'points': len(rows), 'empty_regions': empty, 'out': str(out)}

    def evaluate(self, input_path: PathLike, epsilons: Sequence[float], seeds: int, out_dir: PathLike,
                 alpha_policy: str = "half", grid_steps: Optional[int] = None,
                 resolution: Optional[int] = None, labels: Optional[Sequence[int]] = None,
                 split_fraction: Optional[float] = None, timing: bool = True) -> Dict:
        dataset = self._load(input_path, labels, require_plausibility=True)
        evaluation = self.settings.evaluation
        seed_list = list(range(seeds))
        options = {
            'split_fraction': split_fraction or evaluation.split_fraction,
            'resolution': resolution or self.settings.prediction.resolution,
            'k_cap': self.settings.prediction.k_cap,
            'conformity': self.settings.calibration.conformity,
        }
        reporter = ReportGenerator(out_dir)

        reports = [run_experiment(ExperimentConfig(epsilon=eps, seeds=seed_list, **options),
                                  dataset.records, dataset.label_space)
                   for eps in epsilons]
        exported = reporter.export_metrics(reports, timing=timing)

        if alpha_policy == "grid":
            grid = alpha_delta_grid(dataset.records, epsilons, grid_steps or evaluation.grid_steps,
                                    seeds=seed_list, label_space=dataset.label_space, **options)
            exported.update({f'grid_{kind}': path for kind, path in reporter.export_grid(grid).items()})

        self.logger.info("\n" + reporter.format_summary(reports))
        return {'configurations': len(reports), 'seeds': seeds, 'files': exported,
                'summary': [r.summary() if timing else {k: v for k, v in r.summary().items()
                                                          if k != 'runtime_per_point_ms'} for r in reports]}

    def plot(self, artifact_path: PathLike, point_id: str, out: PathLike,
             input_path: Optional[PathLike] = None, labels: Optional[Sequence[int]] = None) -> Dict:
        """Ternary plot of one point's region; the dataset defaults to the one the artifact was calibrated on."""
        artifact = self.processor.load_artifact(artifact_path)
        if input_path is None:
            if not artifact.dataset_path:
                raise ValidationError("the artifact records no dataset; pass --input")
            input_path = artifact.dataset_path
            self.processor.check_digest(artifact, input_path)
        dataset = self._load(input_path, labels)
        self._check_space(artifact, dataset)
        if dataset.k != 3:
            raise UnsupportedDimension(f"ternary plots need K = 3, got K = {dataset.k}")

        record = dataset.find(point_id)
        region = CredalRegion.from_threshold(record.model_probs, artifact.threshold, dataset.label_space)
        path = render_ternary(region, out, lam=record.plausibility, title=f"point {point_id}")
        return {'point_id': point_id, 'vertices': len(region.extreme_points()), 'out': path}

    def generate(self, n: int, seed: int, out: PathLike, temperature: Optional[float] = None) -> Dict:
        spec = GeneratorSpec.from_settings(self.settings.synthetic, temperature)
        data = generate_synthetic(spec, n, seed)
        path = self.processor.emit_dataset(data.to_dataset(), out)
        return {'n': n, 'k': spec.k, 'seed': seed, 'temperature': spec.temperature, 'out': path}
