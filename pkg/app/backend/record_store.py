"""Append-only JSON-lines stores for meta-records, fine-tuning results and diagnostics.

Each store is `<root>/<name>.jsonl` with one pydantic record per line. A shared
`<root>/manifest.json` lists every store with its record count and the layout
hashes it holds.
"""

import json
import logging
from collections.abc import Iterable
from pathlib import Path
from typing import Generic, TypeVar
from pydantic import BaseModel, Field, ValidationError
from ..errors import StoreCorruptionError


logger = logging.getLogger(__name__)

META_STORE = "meta_records"
FINETUNE_STORE = "finetune_records"
DIAGNOSTIC_STORE = "diagnostics"

RecordT = TypeVar("RecordT", bound=BaseModel)


class StoreEntry(BaseModel):
    records: int = 0
    layout_hashes: list[str] = Field(default_factory=list)


class StoreManifest(BaseModel):
    stores: dict[str, StoreEntry] = Field(default_factory=dict)


class RecordStore(Generic[RecordT]):
    """Persist records of one pydantic type; appends skip record ids already present."""

    def __init__(self, root: Path, name: str, model: type[RecordT]) -> None:
        self.root = root
        self.name = name
        self.model = model
        self.path = root / f"{name}.jsonl"
        self.manifest_path = root / "manifest.json"

    @staticmethod
    def _fingerprint(record: BaseModel) -> str:
        record_id = getattr(record, "record_id", None)
        if record_id is not None:
            return str(record_id)
        return json.dumps(record.model_dump(mode="json"), sort_keys=True)

    def exists(self) -> bool:
        return self.path.exists()

    def load(self) -> list[RecordT]:
        """All records in file order; a line that does not parse raises StoreCorruptionError."""
        if not self.path.exists():
            return []
        records: list[RecordT] = []
        with self.path.open(encoding="utf-8") as handle:
            for line_number, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    records.append(self.model.model_validate_json(line))
                except ValidationError as e:
                    logger.error(
                        f"record_store_error_001: {self.path}:{line_number} is corrupt: \033[31m{e.error_count()} errors\033[0m"
                    )
                    raise StoreCorruptionError(
                        f"{self.path}:{line_number}: not a valid {self.model.__name__}"
                    )
        return records

    def _dedupe(self, records: Iterable[RecordT], seen: set[str]) -> list[RecordT]:
        unique: list[RecordT] = []
        for record in records:
            fingerprint = self._fingerprint(record)
            if fingerprint in seen:
                continue
            seen.add(fingerprint)
            unique.append(record)
        return unique

    def append(self, records: Iterable[RecordT]) -> int:
        """Append records in the given order; returns the number actually written."""
        existing = self.load()
        seen = {self._fingerprint(record) for record in existing}
        fresh = self._dedupe(records, seen)
        if fresh:
            self.root.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as handle:
                for record in fresh:
                    handle.write(record.model_dump_json() + "\n")
        self._update_manifest([*existing, *fresh])
        logger.info(
            f"record_store_001: Appended \033[33m{len(fresh)}\033[0m records to \033[36m{self.path}\033[0m "
            f"({len(existing) + len(fresh)} total)"
        )
        return len(fresh)

    def read_manifest(self) -> StoreManifest:
        if not self.manifest_path.exists():
            return StoreManifest()
        return StoreManifest.model_validate_json(self.manifest_path.read_text(encoding="utf-8"))

    def _update_manifest(self, records: list[RecordT]) -> None:
        manifest = self.read_manifest()
        hashes = sorted({str(value) for record in records if (value := getattr(record, "layout_hash", None))})
        manifest.stores[self.name] = StoreEntry(records=len(records), layout_hashes=hashes)
        manifest.stores = dict(sorted(manifest.stores.items()))
        self.root.mkdir(parents=True, exist_ok=True)
        self.manifest_path.write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
