import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import pandas as pd

from src.analysis.experiments import MetricsReport
from src.utils.data_helpers import PathLike, atomic_write_bytes, atomic_write_text, to_json

# Optional visualization imports
try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    import seaborn as sns
    HAS_VISUALIZATION = True
except ImportError:
    HAS_VISUALIZATION = False
    logging.warning("Matplotlib/Seaborn not available. Heatmaps will be disabled.")

from src.analysis.ternary import render_svg  # noqa: E402


class ReportGenerator:
    """Writes evaluation results: per-seed metric tables, summaries and the alpha/delta heatmap."""

    def __init__(self, output_dir: PathLike = "data_output/evaluation"):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.logger = logging.getLogger(__name__)

    def metrics_frame(self, reports: Sequence[MetricsReport]) -> pd.DataFrame:
        """Rows for every (epsilon, seed, method)."""
        frames = [r.to_frame() for r in reports]
        if not frames:
            return pd.DataFrame()
        return pd.concat(frames, ignore_index=True)

    def summary_frame(self, reports: Sequence[MetricsReport]) -> pd.DataFrame:
        return pd.DataFrame([r.summary() for r in reports])

    def export_metrics(self, reports: Sequence[MetricsReport], timing: bool = True) -> Dict[str, str]:
        """metrics.csv (per seed and method) and metrics.json (seed-aggregated, with type-2 estimates)."""
        frame = self.metrics_frame(reports)
        if not timing and 'runtime_ms' in frame.columns:
            frame = frame.drop(columns=['runtime_ms'])
        exported = {'csv': self._write_csv(frame, 'metrics.csv')}

        documents: List[Dict] = []
        for report in reports:
            summary = report.summary()
            if not timing:
                summary.pop('runtime_per_point_ms', None)
            summary['std'] = report.std
            summary['type2_estimates'] = report.type2_estimates
            summary['type2_violations'] = report.type2_violations()
            documents.append(summary)
        exported['json'] = atomic_write_text(self.output_dir / 'metrics.json', to_json(documents) + "\n")

        self.logger.info(f"Exported metrics for {len(reports)} configurations to {self.output_dir}")
        return exported

    def export_grid(self, grid: pd.DataFrame) -> Dict[str, str]:
        exported = {'csv': self._write_csv(grid, 'grid.csv')}
        heatmap = self.render_grid_heatmap(grid, self.output_dir / 'grid_heatmap.svg')
        if heatmap:
            exported['svg'] = heatmap
        return exported

    def export_runtime(self, runtime: pd.DataFrame) -> str:
        return self._write_csv(runtime, 'runtime_by_k.csv')

    def render_grid_heatmap(self, grid: pd.DataFrame, out: PathLike,
                            value: str = 'ihds_inefficiency') -> Optional[str]:
        """Heatmap of a grid metric over (epsilon, alpha step)."""
        if not HAS_VISUALIZATION:
            self.logger.warning("Visualization libraries not available, skipping heatmap")
            return None
        if grid.empty:
            self.logger.warning("Empty grid, skipping heatmap")
            return None

        table = grid.copy()
        table['alpha / epsilon'] = (table['alpha'] / table['epsilon']).round(3)
        pivot = table.pivot_table(index='epsilon', columns='alpha / epsilon', values=value, aggfunc='mean')

        fig, ax = plt.subplots(figsize=(8, 4.5))
        try:
            sns.heatmap(pivot, annot=True, fmt='.2f', cmap='viridis', ax=ax, cbar_kws={'label': value})
            ax.set_title(f'{value} over the alpha grid')
            ax.set_ylabel('epsilon')
            payload = render_svg(fig)
        finally:
            plt.close(fig)
        path = atomic_write_bytes(out, payload)
        self.logger.info(f"Wrote heatmap to {path}")
        return path

    def format_summary(self, reports: Sequence[MetricsReport]) -> str:
        """Plain-text summary table for the terminal."""
        frame = self.summary_frame(reports)
        if frame.empty:
            return "(no results)"
        columns = ['epsilon', 'alpha', 'delta', 'distribution_coverage', 'ihds_label_coverage',
                   'prps_label_coverage', 'ihds_inefficiency', 'prps_inefficiency', 'inclusion_rate']
        return frame[columns].to_string(index=False, float_format=lambda v: f"{v:.4f}")

    def _write_csv(self, frame: pd.DataFrame, name: str) -> str:
        text = frame.to_csv(index=False, float_format='%.17g', lineterminator='\n')
        return atomic_write_text(self.output_dir / name, text)
