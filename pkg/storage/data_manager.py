import hashlib
import json
import os
import logging
from typing import Iterable, List, Optional, Sequence

from config import LAB_VERSION
from utils.formatters import format_row, sanitize

logger = logging.getLogger(__name__)


def canonical_json(document: dict) -> str:
    """Key-sorted compact JSON used for hashing"""
    return json.dumps(sanitize(document), sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def config_hash(document: dict) -> str:
    """sha256 of the canonical config document"""
    return hashlib.sha256(canonical_json(document).encode("utf-8")).hexdigest()


class ArtifactManager:
    """
    Writes run artifacts into one output directory

    Every CSV starts with '# config_hash=...' and '# seed=...' comment
    lines; every JSON document carries config_hash, seed and lab_version.
    Nothing time-dependent is written, so identical config and seed give
    identical bytes.
    """

    def __init__(self, out_dir: str, config_hash: str, seed: int):
        self.out_dir = out_dir
        self.config_hash = config_hash
        self.seed = int(seed)
        self.written: List[str] = []
        os.makedirs(out_dir, exist_ok=True)

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def _header(self) -> List[str]:
        return [f"# config_hash={self.config_hash}", f"# seed={self.seed}"]

    def write_csv(self, name: str, columns: Sequence[str], rows: Iterable[Sequence]) -> str:
        """
        Write a CSV artifact

        Args:
            name: File name inside the output directory
            columns: Header row
            rows: Value rows (floats printed with 17 significant digits)

        Returns:
            Path of the written file
        """
        path = self.path(name)
        try:
            lines = self._header() + [",".join(columns)]
            count = 0
            for row in rows:
                if len(row) != len(columns):
                    raise ValueError(f"{name}: row has {len(row)} cells, expected {len(columns)}")
                lines.append(format_row(row))
                count += 1
            with open(path, "w", encoding="utf-8", newline="\n") as f:
                f.write("\n".join(lines) + "\n")
            logger.debug(f"Wrote {count} rows to {path}")
        except OSError as e:
            logger.error(f"Error writing {path}: {e}", exc_info=True)
            raise
        self.written.append(path)
        return path

    def write_json(self, name: str, payload: dict) -> str:
        """Write a JSON artifact; payload keys keep their insertion order"""
        path = self.path(name)
        document = {
            "config_hash": self.config_hash,
            "seed": self.seed,
            "lab_version": LAB_VERSION,
        }
        document.update(sanitize(payload))
        try:
            with open(path, "w", encoding="utf-8", newline="\n") as f:
                json.dump(document, f, ensure_ascii=False, indent=2, allow_nan=False)
                f.write("\n")
            logger.debug(f"Wrote {path}")
        except OSError as e:
            logger.error(f"Error writing {path}: {e}", exc_info=True)
            raise
        self.written.append(path)
        return path

    @staticmethod
    def read_json(path: str) -> Optional[dict]:
        """Load a JSON artifact written by write_json"""
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
