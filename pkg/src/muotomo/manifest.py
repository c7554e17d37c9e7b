"""Run manifest: the index of every artifact a generate run produced.

Plain text, round-trippable, written once at the end of the run.  Paths are
relative to the manifest's directory; writing validates that every
referenced file exists so a manifest is a reliable contract for consumers
(the evaluation verbs and the ML harness read datasets through it).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field


@dataclass
class SampleEntry:
    sample_id: str
    seed: int
    geometry: str
    labels: str
    day_dirs: list
    events: int = 0
    dropped: int = 0
    error: str = ""


@dataclass
class Manifest:
    version: str
    config_hash: str
    day_boundaries: list
    slices_per_day: int
    samples: list = field(default_factory=list)

    @property
    def failures(self) -> list:
        return [s for s in self.samples if s.error]


def write_manifest(path: str, manifest: Manifest) -> None:
    root = os.path.dirname(os.path.abspath(path))
    for entry in manifest.samples:
        if entry.error:
            continue
        for rel in [entry.geometry, entry.labels] + entry.day_dirs:
            if not os.path.exists(os.path.join(root, rel)):
                raise FileNotFoundError(f"manifest references missing path: {rel}")
    lines = [
        "[run]",
        f"version: {manifest.version}",
        f"config_hash: {manifest.config_hash}",
        f"day_boundaries: {' '.join(repr(b) for b in manifest.day_boundaries)}",
        f"slices_per_day: {manifest.slices_per_day}",
        "",
    ]
    for entry in manifest.samples:
        lines.append(f"[sample {entry.sample_id}]")
        lines.append(f"seed: {entry.seed}")
        if entry.error:
            lines.append(f"error: {entry.error}")
        else:
            lines.append(f"geometry: {entry.geometry}")
            lines.append(f"labels: {entry.labels}")
            lines.append(f"day_dirs: {' '.join(entry.day_dirs)}")
            lines.append(f"events: {entry.events}")
            lines.append(f"dropped: {entry.dropped}")
        lines.append("")
    with open(path, "w") as fh:
        fh.write("\n".join(lines))


def read_manifest(path: str) -> Manifest:
    sections: list[tuple[str, dict]] = []
    current = None
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                current = {}
                sections.append((line[1:-1], current))
                continue
            if current is None:
                raise ValueError(f"{path}: content before first section")
            key, sep, value = line.partition(":")
            if not sep:
                raise ValueError(f"{path}: malformed line {line!r}")
            current[key.strip()] = value.strip()

    if not sections or sections[0][0] != "run":
        raise ValueError(f"{path}: missing [run] section")
    head = sections[0][1]
    manifest = Manifest(
        version=head["version"],
        config_hash=head["config_hash"],
        day_boundaries=[float(b) for b in head["day_boundaries"].split()],
        slices_per_day=int(head["slices_per_day"]),
    )
    for name, body in sections[1:]:
        if not name.startswith("sample "):
            raise ValueError(f"{path}: unexpected section [{name}]")
        manifest.samples.append(
            SampleEntry(
                sample_id=name.split(" ", 1)[1],
                seed=int(body["seed"]),
                geometry=body.get("geometry", ""),
                labels=body.get("labels", ""),
                day_dirs=body.get("day_dirs", "").split(),
                events=int(body.get("events", 0)),
                dropped=int(body.get("dropped", 0)),
                error=body.get("error", ""),
            )
        )
    return manifest
