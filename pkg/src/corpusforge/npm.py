"""Normalized Preferred Metric aggregation over the 14-task Portuguese benchmark.

Each task score is rescaled so its random baseline maps to 0 and its maximum
to 100; the aggregate is the plain mean. Below-random scores go negative on
purpose: the normalization has no clamp.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Sequence

# Built-in task metadata: (name, type, preferred metric, random score, few-shot count).
_BUILTIN_TASKS = [
    ("AG News", "Multiclass classification (4)", "Accuracy", 25.0, 12),
    ("ASSIN 2 RTE", "Binary classification", "F1", 50.0, 18),
    ("ASSIN 2 STS", "Regression", "Pearson", 0.0, 15),
    ("BLUEX", "Multiple choice (4)", "Accuracy", 25.0, 1),
    ("BoolQ", "Binary classification", "Accuracy", 50.0, 4),
    ("ENEM Challenge", "Multiple choice (5)", "Accuracy", 20.0, 1),
    ("ENEM 2022", "Multiple choice (5)", "Accuracy", 20.0, 1),
    ("FaQuAD", "Extractive QA", "F1", 0.0, 4),
    ("IMDB", "Binary classification", "Accuracy", 50.0, 2),
    ("MASSIVE", "Multiclass classification (18)", "F1-macro", 0.58, 36),
    ("MKQA", "Extractive QA", "F1", 0.0, 40),
    ("SST2", "Binary classification", "Accuracy", 50.0, 34),
    ("TweetSentBR", "Multiclass classification (3)", "F1-macro", 32.4, 30),
    ("WSC", "Binary classification", "Accuracy", 50.0, 18),
]

DEFAULT_MAX_SCORE = 100.0


@dataclass
class TaskSpec:
    name: str
    preferred_metric_name: str
    random_score: float
    max_score: float = DEFAULT_MAX_SCORE
    num_few_shot: int = 0
    task_type: str = ""

    def __post_init__(self):
        if self.max_score <= self.random_score:
            raise ValueError(
                f"task {self.name!r}: max_score ({self.max_score}) must exceed "
                f"random_score ({self.random_score})"
            )


@dataclass
class TaskResult:
    task: TaskSpec
    preferred_value: float


@dataclass
class NpmReport:
    npm: float
    per_task_normalized: list[tuple[str, float]]
    n_tasks: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "npm": self.npm,
                "n_tasks": self.n_tasks,
                "per_task": {name: value for name, value in self.per_task_normalized},
            },
            ensure_ascii=False,
            sort_keys=True,
        )

    def to_table(self) -> str:
        width = max([len("Task")] + [len(name) for name, _ in self.per_task_normalized])
        lines = [f"{'Task':<{width}}  Normalized"]
        for name, value in self.per_task_normalized:
            lines.append(f"{name:<{width}}  {value:>10.2f}")
        lines.append(f"{'NPM':<{width}}  {self.npm:>10.2f}")
        return "\n".join(lines)


def builtin_task_table() -> list[TaskSpec]:
    return [
        TaskSpec(
            name=name,
            preferred_metric_name=metric,
            random_score=random_score,
            num_few_shot=few_shot,
            task_type=task_type,
        )
        for name, task_type, metric, random_score, few_shot in _BUILTIN_TASKS
    ]


def load_task_table(path=None) -> list[TaskSpec]:
    """Built-in benchmark metadata, or an override file (JSON list of task objects)."""
    if path is None:
        return builtin_task_table()
    with open(path, encoding="utf-8") as fh:
        rows = json.load(fh)
    tasks = []
    for row in rows:
        tasks.append(
            TaskSpec(
                name=row["name"],
                preferred_metric_name=row.get("preferred_metric_name", ""),
                random_score=float(row["random_score"]),
                max_score=float(row.get("max_score", DEFAULT_MAX_SCORE)),
                num_few_shot=int(row.get("num_few_shot", 0)),
                task_type=row.get("task_type", ""),
            )
        )
    return tasks


def normalized_score(result: TaskResult) -> float:
    task = result.task
    return 100.0 * (result.preferred_value - task.random_score) / (task.max_score - task.random_score)


def npm(results: Sequence[TaskResult]) -> NpmReport:
    """Mean of per-task normalized scores."""
    if not results:
        raise ValueError("no task results given")
    names = [r.task.name for r in results]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise ValueError(f"duplicate task results: {dupes}")
    per_task = [(r.task.name, normalized_score(r)) for r in results]
    return NpmReport(
        npm=sum(v for _, v in per_task) / len(per_task),
        per_task_normalized=per_task,
        n_tasks=len(per_task),
    )


def load_results(path, tasks: Optional[Sequence[TaskSpec]] = None) -> list[TaskResult]:
    """Read a JSON list of {task, preferred_value} against a task table."""
    if tasks is None:
        tasks = load_task_table()
    by_name = {t.name: t for t in tasks}
    with open(path, encoding="utf-8") as fh:
        rows = json.load(fh)
    results = []
    for row in rows:
        name = row["task"]
        if name not in by_name:
            raise ValueError(f"unknown task {name!r}; known: {sorted(by_name)}")
        results.append(TaskResult(task=by_name[name], preferred_value=float(row["preferred_value"])))
    return results
