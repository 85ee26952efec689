"""Task detection: keyword/cue rules with a classifier fallback.

The rule stage is a priority-ordered keyword matcher; queries it misses go
to a pluggable classifier backend (embedding centroids or any service that
returns a category label). The hybrid cascade is total: it always yields a
label, falling back to a configured category on backend failure.
"""

from __future__ import annotations

import json
import math
import re
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Protocol

from .errors import (
    ConfigError,
    DetectionBackendError,
    InsufficientDataError,
    ProtocolError,
    ValidationError,
)

DEFAULT_CATEGORIES = [
    "code",
    "compliance",
    "terminal",
    "safety",
    "rewriting",
    "content-generation",
    "research",
    "comprehension",
    "retrieval",
    "analysis",
    "unknown",
]


class CategoryRegistry:
    """Set of known task category ids, lowercase-normalized and unique."""

    def __init__(self, ids: list[str] | None = None):
        ids = ids if ids is not None else DEFAULT_CATEGORIES
        seen: list[str] = []
        for raw in ids:
            cid = raw.strip().lower()
            if not cid:
                raise ConfigError("category ids must be non-empty")
            if cid in seen:
                raise ConfigError(f"duplicate category id: {cid!r}")
            seen.append(cid)
        self.ids = seen

    def __contains__(self, cid: str) -> bool:
        return cid in self.ids

    def validate(self, cid: str) -> str:
        norm = cid.strip().lower()
        if norm not in self.ids:
            raise ValidationError(f"unknown task category: {cid!r}")
        return norm


class Stage(Enum):
    RULE = "rule"
    CLASSIFIER = "classifier"
    FALLBACK = "fallback"


@dataclass(frozen=True)
class DetectionResult:
    category: str
    confidence: float
    stage: Stage
    elapsed_s: float = 0.0
    rule_id: str | None = None


# Structural cue predicates, referenced by name from rule configs.
def _contains_code_fence(text: str) -> bool:
    return "```" in text


def _contains_shell_prompt(text: str) -> bool:
    return bool(re.search(r"(?m)^\s*[$#]\s+\S", text))


def _is_question_form(text: str) -> bool:
    stripped = text.strip()
    return stripped.endswith("?") or bool(
        re.match(r"(?i)^(what|why|how|when|where|who|which|does|is|are|can)\b", stripped)
    )


def _contains_url(text: str) -> bool:
    return bool(re.search(r"https?://\S+", text))


def _contains_file_path(text: str) -> bool:
    return bool(re.search(r"(?:^|\s)(?:/|\./|~/)[\w.\-/]+", text))


STRUCTURAL_CUES: dict[str, Callable[[str], bool]] = {
    "contains-code-fence": _contains_code_fence,
    "contains-shell-prompt": _contains_shell_prompt,
    "is-question-form": _is_question_form,
    "contains-url": _contains_url,
    "contains-file-path": _contains_file_path,
}


def _pattern_to_regex(pattern: str) -> re.Pattern:
    # Literal keywords match on word boundaries; '*' widens to any word chars.
    parts = [re.escape(p) for p in pattern.lower().split("*")]
    body = r"\w*".join(parts)
    return re.compile(rf"\b{body}\b")


@dataclass(frozen=True)
class DetectionRule:
    category: str
    keyword_patterns: tuple[str, ...]
    structural_cues: tuple[str, ...]
    priority: int
    min_hits: int = 1
    rule_id: str = ""
    _compiled: tuple[re.Pattern, ...] = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        if not self.keyword_patterns and not self.structural_cues:
            raise ConfigError(f"rule {self.rule_id or self.category}: needs a pattern or cue")
        if self.min_hits < 1:
            raise ConfigError(f"rule {self.rule_id or self.category}: min_hits must be >= 1")
        for cue in self.structural_cues:
            if cue not in STRUCTURAL_CUES:
                raise ConfigError(f"unknown structural cue: {cue!r}")
        object.__setattr__(
            self, "_compiled", tuple(_pattern_to_regex(p) for p in self.keyword_patterns)
        )

    def hits(self, query: str) -> int:
        lowered = query.lower()
        n = sum(1 for rx in self._compiled if rx.search(lowered))
        n += sum(1 for cue in self.structural_cues if STRUCTURAL_CUES[cue](query))
        return n


class RuleSet:
    """Validated, priority-ordered collection of detection rules."""

    def __init__(self, rules: list[DetectionRule], registry: CategoryRegistry | None = None):
        registry = registry or CategoryRegistry()
        priorities = [r.priority for r in rules]
        if len(set(priorities)) != len(priorities):
            raise ConfigError("rule priorities must be unique within a rule set")
        for r in rules:
            if r.category not in registry:
                raise ConfigError(f"rule {r.rule_id!r} references unknown category {r.category!r}")
        self.rules = sorted(rules, key=lambda r: -r.priority)
        self.registry = registry

    @classmethod
    def from_json(cls, data: dict, registry: CategoryRegistry | None = None) -> "RuleSet":
        rules = []
        for i, obj in enumerate(data.get("rules", [])):
            rules.append(
                DetectionRule(
                    category=obj["category"],
                    keyword_patterns=tuple(obj.get("keywords", [])),
                    structural_cues=tuple(obj.get("cues", [])),
                    priority=int(obj["priority"]),
                    min_hits=int(obj.get("min_hits", 1)),
                    rule_id=obj.get("id", f"rule-{i}"),
                )
            )
        if registry is None and "categories" in data:
            registry = CategoryRegistry(data["categories"])
        return cls(rules, registry)

    @classmethod
    def load(cls, path: str | Path, registry: CategoryRegistry | None = None) -> "RuleSet":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot load rule set from {path}: {e}")
        return cls.from_json(data, registry)


def rule_detect(query: str, rules: RuleSet) -> DetectionResult | None:
    """First rule (descending priority) reaching its min_hits wins.

    Returns None when nothing fires, signaling classifier takeover.
    """
    start = time.perf_counter()
    for rule in rules.rules:
        if rule.hits(query) >= rule.min_hits:
            return DetectionResult(
                category=rule.category,
                confidence=1.0,
                stage=Stage.RULE,
                elapsed_s=time.perf_counter() - start,
                rule_id=rule.rule_id,
            )
    return None


class ClassifierClient(Protocol):
    def label(self, query: str) -> tuple[str, float]: ...


class EmbeddingBackend(Protocol):
    def embed(self, text: str) -> list[float]: ...


def _cosine(u: list[float], v: list[float]) -> float:
    dot = sum(a * b for a, b in zip(u, v))
    nu = math.sqrt(sum(a * a for a in u))
    nv = math.sqrt(sum(b * b for b in v))
    if nu == 0 or nv == 0:
        return 0.0
    return dot / (nu * nv)


class CentroidClassifier:
    """Nearest-centroid labeler over per-category seed-example embeddings.

    Confidence is cosine similarity mapped to [0, 1]; ties break to the
    lexicographically smallest category id.
    """

    def __init__(self, backend: EmbeddingBackend, seeds: dict[str, list[str]]):
        if not seeds:
            raise ConfigError("centroid classifier needs at least one seeded category")
        self.backend = backend
        self.centroids: dict[str, list[float]] = {}
        for category, examples in seeds.items():
            vecs = [backend.embed(ex) for ex in examples]
            dim = len(vecs[0])
            self.centroids[category] = [sum(v[i] for v in vecs) / len(vecs) for i in range(dim)]

    def label(self, query: str) -> tuple[str, float]:
        vec = self.backend.embed(query)
        best: str | None = None
        best_sim = -2.0
        for category in sorted(self.centroids):
            sim = _cosine(vec, self.centroids[category])
            if sim > best_sim:
                best, best_sim = category, sim
        assert best is not None
        return best, (best_sim + 1.0) / 2.0


class StubClassifier:
    """Deterministic test backend: fixed label, optional failure switch."""

    def __init__(self, category: str = "research", confidence: float = 0.91, fail: bool = False):
        self.category = category
        self.confidence = confidence
        self.fail = fail
        self.calls = 0

    def label(self, query: str) -> tuple[str, float]:
        self.calls += 1
        if self.fail:
            raise DetectionBackendError("stub classifier configured to fail")
        return self.category, self.confidence


class HashEmbeddingBackend:
    """Deterministic bag-of-words embedding for tests; no network."""

    def __init__(self, dim: int = 64):
        self.dim = dim

    def embed(self, text: str) -> list[float]:
        vec = [0.0] * self.dim
        for token in re.findall(r"\w+", text.lower()):
            h = sum(ord(c) * (i + 1) for i, c in enumerate(token))
            vec[h % self.dim] += 1.0
        return vec


def classifier_detect(
    query: str, client: ClassifierClient, registry: CategoryRegistry | None = None
) -> DetectionResult:
    start = time.perf_counter()
    try:
        category, confidence = client.label(query)
    except DetectionBackendError:
        raise
    except Exception as e:
        raise DetectionBackendError(f"classifier backend failed: {e}")
    if registry is not None and category not in registry:
        raise ProtocolError(f"classifier returned unknown category {category!r}")
    return DetectionResult(
        category=category,
        confidence=confidence,
        stage=Stage.CLASSIFIER,
        elapsed_s=time.perf_counter() - start,
    )


def hybrid_detect(
    query: str,
    rules: RuleSet,
    client: ClassifierClient | None,
    fallback_category: str = "unknown",
) -> DetectionResult:
    """Rule stage first, classifier on miss, fallback on classifier failure.

    Total by contract: routing must never stall on detection.
    """
    start = time.perf_counter()
    result = rule_detect(query, rules)
    if result is not None:
        return result
    if client is not None:
        try:
            return classifier_detect(query, client, rules.registry)
        except (DetectionBackendError, ProtocolError):
            pass
    return DetectionResult(
        category=fallback_category,
        confidence=0.0,
        stage=Stage.FALLBACK,
        elapsed_s=time.perf_counter() - start,
    )


@dataclass(frozen=True)
class ClassStats:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class DetectorReport:
    accuracy: float
    macro_f1: float
    avg_time_s: float
    per_class: dict[str, ClassStats]
    confusion: dict[str, dict[str, int]]
    total: int

    def to_json(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "avg_time_s": self.avg_time_s,
            "total": self.total,
            "per_class": {
                c: {
                    "precision": s.precision,
                    "recall": s.recall,
                    "f1": s.f1,
                    "support": s.support,
                }
                for c, s in self.per_class.items()
            },
            "confusion": self.confusion,
        }


def evaluate_detector(
    detector: Callable[[str], DetectionResult],
    corpus: list[tuple[str, str]],
) -> DetectorReport:
    """Run a detector over a labeled corpus and score it.

    Macro-F1 averages only classes with nonzero support.
    """
    if not corpus:
        raise InsufficientDataError("empty evaluation corpus")
    labels = sorted({gold for _, gold in corpus})
    confusion: dict[str, dict[str, int]] = {g: {} for g in labels}
    elapsed = 0.0
    for query, gold in corpus:
        t0 = time.perf_counter()
        result = detector(query)
        elapsed += time.perf_counter() - t0
        row = confusion.setdefault(gold, {})
        row[result.category] = row.get(result.category, 0) + 1

    predicted = {p for row in confusion.values() for p in row}
    all_classes = sorted(set(labels) | predicted)
    correct = sum(confusion.get(c, {}).get(c, 0) for c in all_classes)
    total = len(corpus)
    per_class: dict[str, ClassStats] = {}
    f1s = []
    for c in all_classes:
        tp = confusion.get(c, {}).get(c, 0)
        fn = sum(confusion.get(c, {}).values()) - tp
        fp = sum(confusion.get(g, {}).get(c, 0) for g in all_classes if g != c)
        support = tp + fn
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / support if support else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per_class[c] = ClassStats(precision, recall, f1, support)
        if support > 0:
            f1s.append(f1)
    return DetectorReport(
        accuracy=correct / total,
        macro_f1=sum(f1s) / len(f1s) if f1s else 0.0,
        avg_time_s=elapsed / total,
        per_class=per_class,
        confusion=confusion,
        total=total,
    )


def load_corpus(path: str | Path) -> list[tuple[str, str]]:
    """Line-delimited JSON records of {query, label}."""
    corpus = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            corpus.append((obj["query"], obj["label"]))
        except (json.JSONDecodeError, KeyError) as e:
            raise ValidationError(f"{path}:{lineno}: bad corpus record: {e}")
    return corpus
