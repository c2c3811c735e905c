"""Run manifests: every artifact-producing CLI command writes exactly one
manifest describing the command, flags, seeds, dataset fingerprint, tool
version, and wall-clock timings.

Manifests are the only artifacts allowed to differ between otherwise
identical runs (their timing fields are real wall-clock measurements);
everything else the CLI writes is byte-reproducible.
"""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np


@dataclass(eq=False)
class RunManifest:
    command: str
    flags: dict
    seeds: list
    dataset_fingerprint: dict
    tool_version: str
    timings_seconds: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "command": self.command,
            "flags": self.flags,
            "seeds": list(self.seeds),
            "dataset_fingerprint": self.dataset_fingerprint,
            "tool_version": self.tool_version,
            "timings_seconds": self.timings_seconds,
        }


def _digest(*arrays):
    h = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(a)
        h.update(str(a.dtype).encode())
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()


def fingerprint_split(split):
    return {
        "rows": int(split.n),
        "n_features": int(split.features.shape[1]),
        "window_channels": int(split.windows.shape[1]),
        "window_len": int(split.windows.shape[2]),
        "sha256": _digest(split.features, split.windows, split.labels, split.subjects),
    }


def fingerprint_dataset(dataset):
    train = fingerprint_split(dataset.train)
    test = fingerprint_split(dataset.test)
    return {
        "train": train,
        "test": test,
        "total_rows": train["rows"] + test["rows"],
        "source": dataset.source,
    }


def write_manifest(path, manifest):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest.to_dict(), fh, sort_keys=True, indent=2, allow_nan=False)
        fh.write("\n")
