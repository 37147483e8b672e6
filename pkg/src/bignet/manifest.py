"""Dataset manifests: JSON Lines, one record per sample."""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import ContractError

SPLITS = ("train", "test")


@dataclass(frozen=True)
class ManifestEntry:
    path: str            # relative to the manifest file
    label: int
    brand: str
    split: str
    seed: int


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]
    class_names: tuple[str, ...]
    base_dir: Path = Path(".")

    def __post_init__(self):
        for e in self.entries:
            if not 0 <= e.label < len(self.class_names):
                raise ContractError(f"label {e.label} out of range for {self.class_names}")
            if e.split not in SPLITS:
                raise ContractError(f"unknown split tag {e.split!r}")
            if self.class_names[e.label] != e.brand:
                raise ContractError(
                    f"entry brand {e.brand!r} does not match class {e.label}"
                )

    def resolve(self, entry: ManifestEntry) -> Path:
        return self.base_dir / entry.path

    def subset(self, split: str) -> tuple[ManifestEntry, ...]:
        return tuple(e for e in self.entries if e.split == split)

    def counts(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for e in self.entries:
            out[e.label] = out.get(e.label, 0) + 1
        return out


def save_manifest(manifest: DatasetManifest, path: Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as f:
        for e in manifest.entries:
            f.write(
                json.dumps(
                    {
                        "path": e.path,
                        "label": e.label,
                        "brand": e.brand,
                        "split": e.split,
                        "seed": e.seed,
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def load_manifest(path: Path) -> DatasetManifest:
    path = Path(path)
    entries = []
    names: dict[int, str] = {}
    with path.open("r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            entries.append(
                ManifestEntry(
                    path=row["path"],
                    label=int(row["label"]),
                    brand=row["brand"],
                    split=row["split"],
                    seed=int(row["seed"]),
                )
            )
            names[int(row["label"])] = row["brand"]
    class_names = tuple(names[i] for i in sorted(names))
    return DatasetManifest(
        entries=tuple(entries), class_names=class_names, base_dir=path.parent
    )


def with_entries(manifest: DatasetManifest, entries) -> DatasetManifest:
    return replace(manifest, entries=tuple(entries))
