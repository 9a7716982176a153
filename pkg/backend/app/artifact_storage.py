"""
Result file storage for scenario runs.

Writes report.json and the CSV tables of a run into its output directory,
remembering every file so that a failed run can remove what it left behind.
"""

import csv
import json
import logging
from pathlib import Path
from typing import List, Sequence, Union

from app.errors import FracAAAError
from app.utils import format_number, jsonable

logger = logging.getLogger(__name__)


class ArtifactStorageError(FracAAAError):
    """Base exception for artifact storage errors."""

    pass


class ArtifactStore:
    """Service for writing the result files of one scenario run."""

    def __init__(self, output_dir: Union[str, Path]):
        """Initialize the artifact store.

        Args:
            output_dir: Directory receiving the result files
        """
        self.output_dir = Path(output_dir)
        self.written: List[Path] = []

        # Initialize storage availability flag
        self._storage_available = True

        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
            logger.info(f"Artifact store initialized in {self.output_dir}")
        except (PermissionError, OSError) as e:
            self._storage_available = False
            logger.warning(
                f"Failed to create output directory {self.output_dir}: {e}. "
                "Result files will not be written."
            )

    def is_storage_available(self) -> bool:
        """Check if the output directory is usable.

        Returns:
            bool: True if result files can be written, False otherwise
        """
        return self._storage_available

    def _require_storage(self) -> None:
        if not self._storage_available:
            raise ArtifactStorageError(
                f"Output directory {self.output_dir} is not available. "
                "Check directory permissions."
            )

    def _commit(self, temp_file: Path, target: Path) -> Path:
        # Atomic rename
        temp_file.replace(target)
        if target not in self.written:
            self.written.append(target)
        return target

    def write_json(self, name: str, payload: dict) -> Path:
        """Write a JSON document with sorted keys.

        Args:
            name: File name inside the output directory
            payload: Nested result structure

        Returns:
            Path: The written file

        Raises:
            ArtifactStorageError: If writing fails
        """
        self._require_storage()
        target = self.output_dir / name
        temp_file = target.with_suffix(".tmp")
        try:
            with open(temp_file, "w", encoding="utf-8") as f:
                json.dump(
                    jsonable(payload),
                    f,
                    indent=2,
                    sort_keys=True,
                    allow_nan=False,
                    ensure_ascii=False,
                )
                f.write("\n")
            path = self._commit(temp_file, target)
        except (IOError, OSError, ValueError) as e:
            temp_file.unlink(missing_ok=True)
            raise ArtifactStorageError(f"Failed to write {target}: {e}")
        logger.info(f"Wrote {path}")
        return path

    def write_csv(
        self, name: str, header: Sequence[str], rows: Sequence[Sequence]
    ) -> Path:
        """Write a comma separated table with a header row.

        Numbers are written with 17 significant digits.

        Raises:
            ArtifactStorageError: If writing fails or a row has the wrong width
        """
        self._require_storage()
        target = self.output_dir / name
        temp_file = target.with_suffix(".tmp")
        try:
            with open(temp_file, "w", encoding="utf-8", newline="") as f:
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(header)
                for index, row in enumerate(rows):
                    if len(row) != len(header):
                        raise ValueError(
                            f"row {index} has {len(row)} fields, header has "
                            f"{len(header)}"
                        )
                    writer.writerow(
                        [v if isinstance(v, str) else format_number(v) for v in row]
                    )
            path = self._commit(temp_file, target)
        except (IOError, OSError, ValueError) as e:
            temp_file.unlink(missing_ok=True)
            raise ArtifactStorageError(f"Failed to write {target}: {e}")
        logger.info(f"Wrote {path} ({len(rows)} rows)")
        return path

    def cleanup(self) -> int:
        """Remove every file written so far.

        Returns:
            int: Number of files removed
        """
        removed = 0
        for path in self.written:
            try:
                path.unlink()
                removed += 1
            except FileNotFoundError:
                continue
            except OSError as e:
                logger.warning(f"Could not remove partial artifact {path}: {e}")
        if removed:
            logger.warning(
                f"Removed {removed} partial artifacts from {self.output_dir}"
            )
        self.written = []
        return removed
