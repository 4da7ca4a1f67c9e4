"""Loaders for workflow files and benchmark datasets."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import pandas as pd

from vizbench.datagen.normalize import SPEC_FILENAME, StarSchemaSpec, denormalize, read_star
from vizbench.model.viz import Workflow


class WorkflowLoader:
    """Read workflow JSON files (one workflow per ``.json`` file, or one per
    line of a ``.jsonl`` file)."""

    def __init__(self, data_path=None):
        # Default to the shipped sample workflows
        self.data_path = Path(data_path) if data_path else Path(__file__).parent / "sample_workflows"

    def load_workflow(self, filename) -> Workflow:
        file_path = self.data_path / filename
        if not file_path.exists():
            raise FileNotFoundError(f"File not found: {file_path}")
        return Workflow.from_dict(json.loads(file_path.read_text(encoding="utf-8")))

    def load_lines(self, filename) -> list[Workflow]:
        file_path = self.data_path / filename
        if not file_path.exists():
            raise FileNotFoundError(f"File not found: {file_path}")

        workflows = []
        with open(file_path, "r", encoding="utf-8") as f:
            for line in f:
                if line.strip():
                    workflows.append(Workflow.from_dict(json.loads(line)))
        return workflows

    def load_all(self) -> list[Workflow]:
        """Every workflow under ``data_path``, in file-name order."""
        if not self.data_path.is_dir():
            raise FileNotFoundError(f"Directory not found: {self.data_path}")
        workflows = []
        for path in sorted(self.data_path.iterdir()):
            if path.suffix == ".json":
                workflows.append(self.load_workflow(path.name))
            elif path.suffix == ".jsonl":
                workflows.extend(self.load_lines(path.name))
        return workflows


@dataclass(frozen=True)
class DatasetSource:
    """A de-normalized CSV file or a star-schema directory.

    ``table`` is the name queries address: the file stem of a CSV, the
    fact table of a star schema.
    """

    path: Path
    table: str
    star: StarSchemaSpec | None = None

    @classmethod
    def from_path(cls, path: Path | str) -> "DatasetSource":
        file_path = Path(path)
        if not file_path.exists():
            raise FileNotFoundError(f"File not found: {file_path}")
        if file_path.is_dir():
            spec = StarSchemaSpec.load(file_path / SPEC_FILENAME)
            return cls(file_path, spec.fact, spec)
        return cls(file_path, file_path.stem)

    @property
    def is_star(self) -> bool:
        return self.star is not None

    def load_frame(self) -> pd.DataFrame:
        """The dataset as one table; star schemas are joined back."""
        if self.is_star:
            tables, spec = read_star(self.path)
            return denormalize(tables, spec)
        return pd.read_csv(self.path, keep_default_na=False, na_values=[""])
