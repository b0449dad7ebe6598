import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.credal.calibration import CalibratedThreshold
from src.credal.simplex import SIMPLEX_TOL, LabelSpace, ProbabilityVector
from src.data.models import CalibrationRecord, DatasetHeader
from src.utils.data_helpers import PathLike, atomic_write_text, file_digest, to_json, write_json_lines
from src.utils.exceptions import DatasetValidationError, ValidationError

DATASET_SCHEMA = "credal-v1"
ARTIFACT_SCHEMA = "credal-artifact-v1"


@dataclass
class Dataset:
    """A parsed dataset file: header plus records in file order."""

    header: DatasetHeader
    records: List[CalibrationRecord] = field(default_factory=list)
    path: Optional[str] = None

    @property
    def label_space(self) -> LabelSpace:
        return self.header.label_space

    @property
    def k(self) -> int:
        return self.label_space.k_count

    @property
    def has_plausibility(self) -> bool:
        return bool(self.records) and all(r.plausibility is not None for r in self.records)

    def find(self, point_id: str) -> CalibrationRecord:
        for record in self.records:
            if record.id == point_id:
                return record
        raise ValidationError(f"no record with id '{point_id}' in {self.path or 'dataset'}")

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class CalibrationArtifact:
    """A calibrated threshold persisted with the context it was computed in."""

    threshold: CalibratedThreshold
    label_space: LabelSpace
    dataset_digest: Optional[str] = None
    dataset_path: Optional[str] = None
    schema: str = ARTIFACT_SCHEMA

    def to_dict(self) -> Dict[str, Any]:
        t = self.threshold
        return {
            'schema': self.schema,
            'tau': t.tau,
            'alpha': t.alpha,
            'n_calibration': t.n_calibration,
            'k_index': t.k_index,
            'conformity': t.conformity,
            'k': self.label_space.k_count,
            'names': list(self.label_space.names) if self.label_space.names else None,
            'dataset_digest': self.dataset_digest,
            'dataset_path': self.dataset_path,
            'score_trace': list(t.score_trace) if t.score_trace is not None else None,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "CalibrationArtifact":
        if data.get('schema') != ARTIFACT_SCHEMA:
            raise ValidationError(f"unsupported artifact schema {data.get('schema')!r}")
        try:
            trace = data.get('score_trace')
            threshold = CalibratedThreshold(
                tau=float(data['tau']),
                alpha=float(data['alpha']),
                n_calibration=int(data['n_calibration']),
                k_index=int(data['k_index']),
                conformity=str(data.get('conformity', 'identity')),
                score_trace=tuple(float(s) for s in trace) if trace is not None else None,
            )
            names = data.get('names')
            label_space = LabelSpace(int(data['k']), tuple(names) if names else None)
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"malformed calibration artifact: {e}")
        return cls(threshold, label_space, data.get('dataset_digest'), data.get('dataset_path'))


class DatasetProcessor:
    """Reads, validates, reshapes and writes credal datasets and artifacts."""

    def __init__(self, config: Optional[Dict] = None):
        self.config = config or {}
        self.logger = logging.getLogger(__name__)

    def load_dataset(self, file_path: PathLike, require_plausibility: bool = False) -> Dataset:
        """
        Parse a JSON-lines dataset file.

        The first non-blank line must be the header. Any malformed line raises
        DatasetValidationError naming its 1-based line number.
        """
        path = Path(file_path)
        if not path.is_file():
            raise ValidationError(f"dataset file not found: {path}")

        header: Optional[DatasetHeader] = None
        records: List[CalibrationRecord] = []
        seen_ids = set()
        with open(path, 'r', encoding='utf-8') as f:
            for line_no, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as e:
                    raise DatasetValidationError(f"invalid JSON: {e.msg}", line_no)
                if not isinstance(obj, dict):
                    raise DatasetValidationError("expected a JSON object", line_no)

                if header is None:
                    header = self._parse_header(obj, line_no)
                    continue

                record = self._parse_record(obj, header.label_space.k_count, line_no, require_plausibility)
                if record.id in seen_ids:
                    raise DatasetValidationError(f"duplicate id '{record.id}'", line_no)
                seen_ids.add(record.id)
                records.append(record)

        if header is None:
            raise DatasetValidationError("missing header line", 1)

        self.logger.info(f"Loaded {len(records)} records (K={header.label_space.k_count}) from {path}")
        return Dataset(header, records, str(path))

    def _parse_header(self, obj: Dict[str, Any], line_no: int) -> DatasetHeader:
        if obj.get('schema') != DATASET_SCHEMA:
            raise DatasetValidationError(
                f"header must declare schema '{DATASET_SCHEMA}', got {obj.get('schema')!r}", line_no)
        k = obj.get('k')
        if not isinstance(k, int) or isinstance(k, bool):
            raise DatasetValidationError("header 'k' must be an integer", line_no)
        names = obj.get('names')
        try:
            label_space = LabelSpace(k, tuple(names) if names else None)
        except ValidationError as e:
            raise DatasetValidationError(str(e), line_no)
        return DatasetHeader(label_space, DATASET_SCHEMA)

    def _parse_vector(self, values: Any, k: int, name: str, line_no: int) -> ProbabilityVector:
        if not isinstance(values, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
            raise DatasetValidationError(f"'{name}' must be a list of numbers", line_no)
        if len(values) != k:
            raise DatasetValidationError(f"'{name}' has {len(values)} entries, header declares {k}", line_no)
        try:
            # Stored vectors that already sum to one are kept bit-exact.
            if abs(float(np.sum(values)) - 1.0) <= SIMPLEX_TOL:
                return ProbabilityVector(tuple(float(v) for v in values))
            return ProbabilityVector.from_values(values)
        except ValidationError as e:
            raise DatasetValidationError(f"'{name}': {e}", line_no)

    def _parse_record(self, obj: Dict[str, Any], k: int, line_no: int,
                      require_plausibility: bool) -> CalibrationRecord:
        if 'id' not in obj:
            raise DatasetValidationError("row has no 'id'", line_no)
        if 'model_probs' not in obj:
            raise DatasetValidationError("row has no 'model_probs'", line_no)
        model_probs = self._parse_vector(obj['model_probs'], k, 'model_probs', line_no)

        plausibility = None
        if obj.get('plausibility') is not None:
            plausibility = self._parse_vector(obj['plausibility'], k, 'plausibility', line_no)
        elif require_plausibility:
            raise DatasetValidationError("row has no 'plausibility' vector", line_no)

        label = obj.get('label')
        if label is not None and (not isinstance(label, int) or isinstance(label, bool) or not 0 <= label < k):
            raise DatasetValidationError(f"'label' must be an integer in 0..{k - 1}", line_no)

        return CalibrationRecord(str(obj['id']), model_probs, plausibility, label)

    def emit_dataset(self, dataset: Dataset, output_path: PathLike) -> str:
        """Write header and records as JSON lines, atomically."""
        rows = [dataset.header.to_dict()] + [r.to_dict() for r in dataset.records]
        path = write_json_lines(output_path, rows)
        self.logger.info(f"Wrote {len(dataset.records)} records to {path}")
        return path

    def select_labels(self, dataset: Dataset, labels: Sequence[int]) -> Dataset:
        """
        Restrict a dataset to a label subset.

        Model probabilities and plausibilities are renormalized over the kept
        labels and realized labels re-indexed. Rows with no plausibility or model
        mass on the subset, or whose realized label is dropped, are removed.
        """
        labels = sorted(set(int(k) for k in labels))
        if len(labels) < 2:
            raise ValidationError("select at least 2 labels")
        if labels[0] < 0 or labels[-1] >= dataset.k:
            raise ValidationError(f"labels must lie in 0..{dataset.k - 1}")
        index = {old: new for new, old in enumerate(labels)}

        def restrict(vector: ProbabilityVector) -> Optional[ProbabilityVector]:
            kept = vector.array[labels]
            total = float(kept.sum())
            if total <= 0.0:
                return None
            return ProbabilityVector(tuple((kept / total).tolist()))

        kept_records = []
        dropped = 0
        for record in dataset.records:
            model_probs = restrict(record.model_probs)
            plausibility = restrict(record.plausibility) if record.plausibility is not None else None
            if model_probs is None or (record.plausibility is not None and plausibility is None) \
                    or (record.label is not None and record.label not in index):
                dropped += 1
                continue
            label = index[record.label] if record.label is not None else None
            kept_records.append(CalibrationRecord(record.id, model_probs, plausibility, label))

        if dropped:
            self.logger.warning(f"Dropped {dropped} records with no mass on labels {labels}")
        names = tuple(dataset.label_space.names[k] for k in labels) if dataset.label_space.names else None
        header = DatasetHeader(LabelSpace(len(labels), names), dataset.header.schema)
        return Dataset(header, kept_records, dataset.path)

    def to_frame(self, dataset: Dataset) -> pd.DataFrame:
        """One row per record with one column per label for each vector."""
        rows = []
        for record in dataset.records:
            row: Dict[str, Any] = {'id': record.id, 'label': record.label}
            for k, p in enumerate(record.model_probs):
                row[f'p_{k}'] = p
            if record.plausibility is not None:
                for k, lam in enumerate(record.plausibility):
                    row[f'lambda_{k}'] = lam
            rows.append(row)
        return pd.DataFrame(rows)

    def save_artifact(self, artifact: CalibrationArtifact, output_path: PathLike) -> str:
        path = atomic_write_text(output_path, to_json(artifact.to_dict()) + "\n")
        self.logger.info(f"Saved calibration artifact to {path}")
        return path

    def load_artifact(self, file_path: PathLike) -> CalibrationArtifact:
        path = Path(file_path)
        if not path.is_file():
            raise ValidationError(f"artifact not found: {path}")
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ValidationError(f"artifact {path} is not valid JSON: {e.msg}")
        return CalibrationArtifact.from_dict(data)

    def check_digest(self, artifact: CalibrationArtifact, dataset_path: PathLike) -> Tuple[bool, str]:
        """Compare an artifact's recorded digest with a dataset file; warn on mismatch."""
        digest = file_digest(dataset_path)
        matches = artifact.dataset_digest is None or artifact.dataset_digest == digest
        if not matches:
            self.logger.warning(f"Dataset {dataset_path} differs from the one the artifact was calibrated on "
                                f"(digest {digest[:12]} != {artifact.dataset_digest[:12]})")
        return matches, digest
