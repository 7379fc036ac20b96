"""Corpus manifest: one JSON record per tile, line-delimited."""

import json
from collections import Counter
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from dataset.raster import AugmentSpec, RejectReason
from utils.errors import CorpusError
from utils.logging import get_logger

logger = get_logger(__name__)

MANIFEST_NAME = "manifest.jsonl"


@dataclass
class ManifestEntry:
    """Provenance of one cropped tile."""
    tile_id: str
    round: int
    row: int
    col: int
    source_transform: AugmentSpec
    kept: bool
    reject_reason: RejectReason = RejectReason.NONE
    low_ratio: float = 0.0
    sentinel_count: int = 0

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['source_transform'] = self.source_transform.to_dict()
        data['reject_reason'] = self.reject_reason.value
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ManifestEntry':
        data = dict(data)
        data['source_transform'] = AugmentSpec.from_dict(data['source_transform'])
        data['reject_reason'] = RejectReason(data['reject_reason'])
        return cls(**data)


@dataclass
class CorpusManifest:
    """Bookkeeping for a built corpus."""
    tile_size: int
    stride: int
    rounds: int
    target: int
    seed: int
    entries: List[ManifestEntry] = field(default_factory=list)

    @property
    def kept_count(self) -> int:
        return sum(1 for e in self.entries if e.kept)

    def kept_entries(self) -> List[ManifestEntry]:
        return [e for e in self.entries if e.kept]

    def get_stats(self) -> Dict[str, Any]:
        """Counts per round and reject reason."""
        reasons = Counter(e.reject_reason.value for e in self.entries)
        per_round = Counter(e.round for e in self.entries if e.kept)
        return {
            'total_tiles': len(self.entries),
            'kept_count': self.kept_count,
            'rejected': {k: v for k, v in sorted(reasons.items()) if k != RejectReason.NONE.value},
            'kept_per_round': dict(sorted(per_round.items())),
        }

    def header(self) -> Dict[str, Any]:
        return {
            'record': 'corpus',
            'tile_size': self.tile_size,
            'stride': self.stride,
            'rounds': self.rounds,
            'target': self.target,
            'seed': self.seed,
            'kept_count': self.kept_count,
        }

    def save(self, path: Union[str, Path]) -> Path:
        """Write the header line then one line per entry."""
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST_NAME
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(json.dumps(self.header(), sort_keys=True) + "\n")
            for entry in self.entries:
                f.write(json.dumps({'record': 'tile', **entry.to_dict()}, sort_keys=True) + "\n")
        logger.info(f"Wrote manifest with {len(self.entries)} entries to {path}")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> 'CorpusManifest':
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST_NAME
        if not path.exists():
            raise CorpusError(f"Manifest not found: {path}")

        header: Optional[Dict[str, Any]] = None
        entries: List[ManifestEntry] = []
        with open(path, 'r', encoding='utf-8') as f:
            for line_no, line in enumerate(f, 1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                    kind = record.pop('record')
                    if kind == 'corpus':
                        header = record
                    elif kind == 'tile':
                        entries.append(ManifestEntry.from_dict(record))
                    else:
                        raise ValueError(f"unknown record kind {kind!r}")
                except (ValueError, KeyError, TypeError) as e:
                    raise CorpusError(f"{path}:{line_no}: malformed manifest record ({e})") from e

        if header is None:
            raise CorpusError(f"{path}: missing corpus header record")
        declared = header.pop('kept_count')
        manifest = cls(entries=entries, **header)
        if manifest.kept_count != declared:
            raise CorpusError(f"{path}: header kept_count {declared} != {manifest.kept_count} kept entries")
        return manifest
