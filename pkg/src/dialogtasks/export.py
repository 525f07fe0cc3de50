"""Corpus export: instance serialization, task-balanced sampling, JSONL output.

Everything here is deterministic in (inputs, seed): records are written with
sorted keys, corpora are sorted canonically before writing, and no file
contains timestamps or absolute paths, so re-running an export produces
byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import random
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

from .evaluate import extract_constraints
from .ingest import ParseError, SchemaError
from .model import TaskInstance, instance_sort_key
from .prompts import RenderOptions, RenderedExample, render_corpus
from .seeding import stable_hash

SPLIT_NAMES = ("train", "dev", "test")


@dataclass(frozen=True)
class SamplingPlan:
    """Per-group instance caps.

    Atomic tasks are capped per task name across the whole corpus; composite
    tasks are capped per (task name, dataset). A cap of 0 or less means no
    cap for that class.
    """

    atomic_quota: int = 5000
    composite_quota: int = 1000

    def to_dict(self) -> Dict[str, int]:
        return {"atomic_quota": self.atomic_quota, "composite_quota": self.composite_quota}


@dataclass(frozen=True)
class ExportManifest:
    """One written file: name, record count, content checksum."""

    name: str
    count: int
    sha256: str

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "count": self.count, "sha256": self.sha256}


def _group_key(inst: TaskInstance) -> Tuple[str, ...]:
    if inst.signature.is_atomic:
        return ("atomic", inst.task_name)
    return ("composite", inst.task_name, inst.provenance.dataset)


def sample(instances: Iterable[TaskInstance], plan: SamplingPlan, seed: int) -> List[TaskInstance]:
    """Cap each sampling group at its quota, deterministically in (corpus, seed).

    Groups are sampled independently with a seed derived from the group key,
    over a canonically sorted population, so neither input order nor the
    presence of other groups changes what a group keeps.
    """
    groups: Dict[Tuple[str, ...], List[TaskInstance]] = {}
    for inst in instances:
        groups.setdefault(_group_key(inst), []).append(inst)
    kept: List[TaskInstance] = []
    for key in sorted(groups):
        population = sorted(groups[key], key=instance_sort_key)
        quota = plan.atomic_quota if key[0] == "atomic" else plan.composite_quota
        if quota > 0 and len(population) > quota:
            rng = random.Random(stable_hash(seed, "sample", *key))
            population = rng.sample(population, quota)
        kept.extend(population)
    kept.sort(key=instance_sort_key)
    return kept


def assign_splits(instances: Iterable[TaskInstance]) -> Dict[str, List[TaskInstance]]:
    """Group instances by the split recorded in their provenance."""
    by_split: Dict[str, List[TaskInstance]] = {name: [] for name in SPLIT_NAMES}
    for inst in instances:
        by_split.setdefault(inst.provenance.split, []).append(inst)
    return by_split


def write_jsonl(records: Iterable[Dict[str, Any]], path: str | Path) -> ExportManifest:
    """Write records one JSON object per line, sorted keys, ASCII only."""
    path = Path(path)
    lines = [json.dumps(record, sort_keys=True, ensure_ascii=True) for record in records]
    data = ("\n".join(lines) + "\n") if lines else ""
    path.write_text(data, encoding="utf-8")
    return ExportManifest(
        name=path.name,
        count=len(lines),
        sha256=hashlib.sha256(data.encode("utf-8")).hexdigest(),
    )


def write_instances(instances: Sequence[TaskInstance], path: str | Path) -> ExportManifest:
    return write_jsonl((inst.to_dict() for inst in instances), path)


def read_instances(path: str | Path) -> List[TaskInstance]:
    """Read an instance JSONL file written by write_instances."""
    instances: List[TaskInstance] = []
    text = Path(path).read_text(encoding="utf-8")
    for line_number, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(line_number, str(exc)) from exc
        try:
            instances.append(TaskInstance.from_dict(data))
        except (KeyError, ValueError) as exc:
            raise SchemaError(str(exc), line_number) from exc
    return instances


def instance_id(inst: TaskInstance) -> str:
    """Join key between rendered examples, constraint rows, and model outputs."""
    return inst.provenance.key()


def constraint_records(instances: Iterable[TaskInstance]) -> List[Dict[str, Any]]:
    """One row per instance: id, task, signature, checkable constraints."""
    records = []
    for inst in instances:
        records.append(
            {
                "id": instance_id(inst),
                "task": inst.task_name,
                "signature": inst.signature.canonical_string(),
                "constraints": extract_constraints(inst).to_dicts(),
            }
        )
    return records


@dataclass(frozen=True)
class CorpusStats:
    """Shape of a corpus: counts by task, signature, dimension, split, dataset."""

    n_instances: int
    n_atomic: int
    n_compositional: int
    by_task: Dict[str, int]
    by_signature: Dict[str, int]
    by_dimension: Dict[int, int]
    by_split: Dict[str, int]
    by_dataset: Dict[str, int]
    by_style: Dict[str, int]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_instances": self.n_instances,
            "n_atomic": self.n_atomic,
            "n_compositional": self.n_compositional,
            "by_task": dict(sorted(self.by_task.items())),
            "by_signature": dict(sorted(self.by_signature.items())),
            "by_dimension": {str(k): v for k, v in sorted(self.by_dimension.items())},
            "by_split": dict(sorted(self.by_split.items())),
            "by_dataset": dict(sorted(self.by_dataset.items())),
            "by_style": dict(sorted(self.by_style.items())),
        }


def corpus_stats(instances: Sequence[TaskInstance]) -> CorpusStats:
    by_task: Counter = Counter()
    by_signature: Counter = Counter()
    by_dimension: Counter = Counter()
    by_split: Counter = Counter()
    by_dataset: Counter = Counter()
    by_style: Counter = Counter()
    n_atomic = 0
    for inst in instances:
        by_task[inst.task_name] += 1
        by_signature[inst.signature.canonical_string()] += 1
        by_dimension[inst.signature.dimension()] += 1
        by_split[inst.provenance.split] += 1
        by_dataset[inst.provenance.dataset] += 1
        by_style[inst.style] += 1
        if inst.signature.is_atomic:
            n_atomic += 1
    return CorpusStats(
        n_instances=len(instances),
        n_atomic=n_atomic,
        n_compositional=len(instances) - n_atomic,
        by_task=dict(by_task),
        by_signature=dict(by_signature),
        by_dimension=dict(by_dimension),
        by_split=dict(by_split),
        by_dataset=dict(by_dataset),
        by_style=dict(by_style),
    )


def export_corpus(
    instances: Sequence[TaskInstance],
    out_dir: str | Path,
    seed: int,
    plan: Optional[SamplingPlan] = None,
    options: Optional[RenderOptions] = None,
    emit_constraints: bool = False,
) -> Dict[str, Any]:
    """Sample, split, render, and write a corpus; returns the export manifest.

    Writes <split>.jsonl for train/dev/test (plus constraints-<split>.jsonl
    when requested) and stats.json into out_dir. The manifest holds per-file
    counts and checksums and any render errors; the caller persists it.
    """
    plan = plan or SamplingPlan()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    sampled = sample(instances, plan, seed)
    by_split = assign_splits(sampled)
    files: Dict[str, Dict[str, Any]] = {}
    all_errors: List[Dict[str, Any]] = []
    for split in sorted(by_split):
        members = by_split[split]
        rendered, errors = render_corpus(members, seed, options)
        all_errors.extend(errors)
        manifest = write_jsonl(
            ({**example.to_record(), "id": example.provenance.key()} for example in rendered),
            out_dir / f"{split}.jsonl",
        )
        files[manifest.name] = manifest.to_dict()
        if emit_constraints:
            manifest = write_jsonl(constraint_records(members), out_dir / f"constraints-{split}.jsonl")
            files[manifest.name] = manifest.to_dict()
    stats = corpus_stats(sampled)
    stats_manifest = write_jsonl([stats.to_dict()], out_dir / "stats.json")
    files[stats_manifest.name] = stats_manifest.to_dict()
    return {
        "seed": seed,
        "plan": plan.to_dict(),
        "files": files,
        "render_errors": all_errors,
    }
