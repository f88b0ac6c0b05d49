"""Dataset assembly: per-sample seeding, balanced mixtures and 8:1:1 splits."""

from __future__ import annotations

import json
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from nag.synth.encodings import ALL_ENCODINGS, TextEncodingScheme, apply_text_encoding
from nag.synth.generators import ALL_TOPOLOGIES, MAX_NODES, MIN_NODES, TopologyKind, generate_graph
from nag.synth.tasks import (
    ALL_TASKS,
    BOOLEAN_TASKS,
    FocusError,
    TaskKind,
    TaskSample,
    make_sample,
    render_answer,
    solve_task,
)

SPLITS = ("train", "val", "test")
_MAX_ATTEMPTS = 24


@dataclass
class DatasetConfig:
    tasks: Sequence[str] = tuple(t.value for t in ALL_TASKS)
    per_task: int = 100
    min_nodes: int = MIN_NODES
    max_nodes: int = MAX_NODES
    topologies: Sequence[str] = tuple(t.value for t in ALL_TOPOLOGIES)
    encodings: Sequence[str] = tuple(e.value for e in ALL_ENCODINGS)
    balance_boolean: bool = True
    allow_disconnected_paths: bool = False
    ratio: Sequence[int] = (8, 1, 1)

    def __post_init__(self) -> None:
        self.tasks = tuple(TaskKind(t).value for t in self.tasks)
        self.topologies = tuple(TopologyKind(t).value for t in self.topologies)
        self.encodings = tuple(TextEncodingScheme(e).value for e in self.encodings)
        self.ratio = tuple(self.ratio)
        if not MIN_NODES <= self.min_nodes <= self.max_nodes <= MAX_NODES:
            raise ValueError(f"node range [{self.min_nodes}, {self.max_nodes}] outside [{MIN_NODES}, {MAX_NODES}]")
        if self.per_task < 0:
            raise ValueError("per_task must be non-negative")

    def to_dict(self) -> dict:
        d = asdict(self)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


def _sub_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def build_sample(config: DatasetConfig, seed: int, task_idx: int, index: int) -> TaskSample:
    """Generate sample ``index`` of task ``config.tasks[task_idx]``.

    Topology and encoding cycle through the configured lists so the mixture
    is in equal proportion. The sample depends only on its coordinates.
    """
    task = TaskKind(config.tasks[task_idx])
    topo = config.topologies[index % len(config.topologies)]
    enc = config.encodings[(index // len(config.topologies)) % len(config.encodings)]
    target: bool | None = None
    if config.balance_boolean and task in BOOLEAN_TASKS:
        target = random.Random(_sub_seed(seed, task_idx, index)).random() < 0.5

    last_error: Exception | None = None
    for attempt in range(_MAX_ATTEMPTS + 1):
        # the very last attempt gives up on the balancing target
        want = target if attempt < _MAX_ATTEMPTS else None
        rng = random.Random(_sub_seed(seed, task_idx, index, attempt + 1))
        n = rng.randint(config.min_nodes, config.max_nodes)
        g = generate_graph(topo, {"n": n}, seed=rng.getrandbits(32))
        g = apply_text_encoding(g, enc, seed=rng.getrandbits(32))
        if task is TaskKind.CYCLE_CHECK and want is not None and solve_task(g, task) != want:
            continue
        try:
            return make_sample(
                g,
                task,
                enc,
                seed=rng.getrandbits(32),
                sample_id=f"{task.value}-{index:06d}",
                target=want,
                allow_disconnected=config.allow_disconnected_paths,
                meta={"topology": topo, "encoding": enc},
            )
        except FocusError as exc:
            last_error = exc
    raise FocusError(f"could not pose {task.value} sample {index}: {last_error}")


def _build_chunk(args) -> list[TaskSample]:
    config, seed, task_idx, indices = args
    return [build_sample(config, seed, task_idx, i) for i in indices]


def split_sizes(n: int, ratio: Sequence[int] = (8, 1, 1)) -> tuple[int, int, int]:
    total = sum(ratio)
    n_train = round(n * ratio[0] / total)
    n_val = round(n * ratio[1] / total)
    n_val = min(n_val, n - n_train)
    return n_train, n_val, n - n_train - n_val


def generate_dataset(config: DatasetConfig, seed: int, workers: int = 1) -> dict[str, list[TaskSample]]:
    """Generate every task's samples and split each task 8:1:1.

    Output is independent of ``workers``: chunks are reassembled in sample
    index order.
    """
    jobs = []
    chunk = 64
    for t in range(len(config.tasks)):
        for start in range(0, config.per_task, chunk):
            jobs.append((config, seed, t, range(start, min(start + chunk, config.per_task))))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_build_chunk, jobs))
    else:
        chunks = [_build_chunk(j) for j in jobs]

    per_task: dict[int, list[TaskSample]] = {t: [] for t in range(len(config.tasks))}
    for job, samples in zip(jobs, chunks):
        per_task[job[2]].extend(samples)

    splits: dict[str, list[TaskSample]] = {name: [] for name in SPLITS}
    for t, samples in per_task.items():
        order = np.random.default_rng([seed, t, 0x5EED]).permutation(len(samples))
        n_train, n_val, _ = split_sizes(len(samples), config.ratio)
        bounds = {"train": order[:n_train], "val": order[n_train : n_train + n_val], "test": order[n_train + n_val :]}
        for name in SPLITS:
            splits[name].extend(samples[i] for i in sorted(bounds[name]))
    return splits


def sample_to_line(sample: TaskSample) -> str:
    return json.dumps(sample.to_dict(), ensure_ascii=False, separators=(",", ":"))


def write_jsonl(samples: Iterable[TaskSample], path: Path | str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in samples:
            fh.write(sample_to_line(s))
            fh.write("\n")


def read_jsonl(path: Path | str) -> list[TaskSample]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(TaskSample.from_dict(json.loads(line)))
            except (KeyError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return out


def write_dataset(splits: dict[str, list[TaskSample]], out_dir: Path | str, config: DatasetConfig, seed: int) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name in SPLITS:
        write_jsonl(splits[name], out / f"{name}.jsonl")
    resolved = {"seed": seed, **config.to_dict()}
    (out / "config.json").write_text(json.dumps(resolved, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_split(data_dir: Path | str, split: str) -> list[TaskSample]:
    return read_jsonl(Path(data_dir) / f"{split}.jsonl")


def verify_samples(samples: Iterable[TaskSample]) -> list[str]:
    """Ids of samples whose stored answer disagrees with a fresh oracle run."""
    bad = []
    for s in samples:
        if render_answer(solve_task(s.graph, s.task, s.focus)) != s.answer:
            bad.append(s.id)
    return bad
