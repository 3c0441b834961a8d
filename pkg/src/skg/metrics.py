"""Label normalization and extraction-consistency scoring.

Matching is deliberately strict: exact equality on normalized labels,
greedy one-to-one, no fuzzy credit. Known spelling variants belong in
the alias table (a ``variant = canonical`` config file), not in code.
"""

from __future__ import annotations

import hashlib
import re
import unicodedata
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .errors import ArityError

ALIAS_ENV_VAR = "SKG_ALIAS_FILE"

_BRACKETED = re.compile(r"\([^)]*\)|\[[^\]]*\]")
_NON_ALNUM = re.compile(r"[^0-9a-z]+")


def _base_normalize(name: str) -> str:
    text = unicodedata.normalize("NFKC", name).casefold()
    text = _BRACKETED.sub(" ", text)
    text = _NON_ALNUM.sub(" ", text)
    return " ".join(text.split())


def load_aliases(path: Path | str) -> dict[str, str]:
    """Parse a ``variant = canonical`` alias table; both sides are normalized."""
    table: dict[str, str] = {}
    for i, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{i}: expected 'variant = canonical'")
        variant, canonical = (part.strip() for part in line.split("=", 1))
        table[_base_normalize(variant)] = _base_normalize(canonical)
    return table


@lru_cache(maxsize=1)
def default_aliases() -> Mapping[str, str]:
    with resources.as_file(resources.files("skg.data") / "aliases.txt") as path:
        return load_aliases(path)


def normalize_label(name: str, aliases: Mapping[str, str] | None = None) -> str:
    """Lowercased, punctuation-stripped, whitespace-collapsed label.

    Bracketed qualifiers are dropped, Unicode is NFKC-normalized, and the
    optional alias table maps known variants to their canonical form.
    """
    base = _base_normalize(name)
    if aliases:
        return aliases.get(base, base)
    return base


def label_slug(name: str) -> str:
    """Normalized label with hyphens, safe for node id derivation."""
    return _base_normalize(name).replace(" ", "-")


@dataclass(frozen=True)
class MatchResult:
    true_positives: int
    false_positives: int
    false_negatives: int
    matched: tuple[tuple[str, str], ...]  # (reference name, candidate name)
    unmatched_reference: tuple[str, ...]
    unmatched_candidate: tuple[str, ...]


def match_failure_modes(
    reference: Iterable[str],
    candidate: Iterable[str],
    aliases: Mapping[str, str] | None = None,
) -> MatchResult:
    """Greedy one-to-one exact matching over normalized labels."""
    ref_map: dict[str, str] = {}
    for name in sorted(set(reference)):
        ref_map.setdefault(normalize_label(name, aliases), name)
    cand_map: dict[str, str] = {}
    for name in sorted(set(candidate)):
        cand_map.setdefault(normalize_label(name, aliases), name)
    shared = sorted(ref_map.keys() & cand_map.keys())
    matched = tuple((ref_map[key], cand_map[key]) for key in shared)
    unmatched_ref = tuple(ref_map[key] for key in sorted(ref_map.keys() - cand_map.keys()))
    unmatched_cand = tuple(cand_map[key] for key in sorted(cand_map.keys() - ref_map.keys()))
    return MatchResult(
        true_positives=len(shared),
        false_positives=len(unmatched_cand),
        false_negatives=len(unmatched_ref),
        matched=matched,
        unmatched_reference=unmatched_ref,
        unmatched_candidate=unmatched_cand,
    )


def f1(match: MatchResult) -> tuple[float, float, float]:
    """(precision, recall, f1) rounded to 4 decimals; zero denominators score 0."""
    tp, fp, fn = match.true_positives, match.false_positives, match.false_negatives
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    score = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return (round(precision, 4), round(recall, 4), round(score, 4))


@dataclass(frozen=True)
class PairScore:
    left: str
    right: str
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class ConsistencyReport:
    mode: str  # "within_agent" | "cross_agent"
    fm_precision: float
    fm_recall: float
    fm_f1: float
    fm_f1_variance: float
    method_alternative_recall: float | None
    run_digests: tuple[str, ...]
    comparisons: tuple[PairScore, ...]
    warnings: tuple[str, ...] = ()

    def to_jsonable(self) -> dict:
        return {
            "mode": self.mode,
            "fm_precision": self.fm_precision,
            "fm_recall": self.fm_recall,
            "fm_f1": self.fm_f1,
            "fm_f1_variance": self.fm_f1_variance,
            "method_alternative_recall": self.method_alternative_recall,
            "run_digests": list(self.run_digests),
            "comparisons": [
                {
                    "left": c.left,
                    "right": c.right,
                    "precision": c.precision,
                    "recall": c.recall,
                    "f1": c.f1,
                }
                for c in self.comparisons
            ],
            "warnings": list(self.warnings),
        }


def _extract_fm_names(run: object) -> set[str]:
    from . import seo  # late import: metrics stays importable on its own
    from .graph_core import Graph

    if isinstance(run, seo.SeoDocument):
        names = set()
        if run.protocol is not None:
            for step in run.protocol.steps:
                names.update(claim.name for claim in step.failure_modes)
        return names
    if isinstance(run, Graph):
        return {
            str(node.get("name", node.key.id)) for node in run.nodes(label="FailureMode")
        }
    raise TypeError(f"cannot extract failure modes from {type(run).__name__}")


def _extract_ma_names(run: object) -> set[str]:
    from . import seo
    from .graph_core import Graph

    if isinstance(run, seo.SeoDocument):
        if run.method_alternatives is None:
            return set()
        return {claim.name for claim in run.method_alternatives}
    if isinstance(run, Graph):
        return {
            str(node.get("name", node.key.id)) for node in run.nodes(label="MethodAlternative")
        }
    raise TypeError(f"cannot extract method alternatives from {type(run).__name__}")


def _digest(run: object) -> str:
    from . import seo
    from .graph_core import Graph, graph_hash

    if isinstance(run, seo.SeoDocument):
        return hashlib.sha256(seo.serialize_seo(run)).hexdigest()
    if isinstance(run, Graph):
        return graph_hash(run)
    raise TypeError(f"cannot digest {type(run).__name__}")


def compare_extractions(
    runs: list,
    reference: object | None = None,
    aliases: Mapping[str, str] | None = None,
) -> ConsistencyReport:
    """Score extraction consistency across runs.

    With a reference, each run is scored against it (cross-agent mode);
    without one, all run pairs are scored against each other
    (within-agent mode). Two identical empty extractions count as
    perfect agreement but add a warning, since vacuous agreement is
    cheap.

    Raises:
        ArityError: fewer than two comparable inputs.
    """
    if reference is not None:
        if len(runs) < 1:
            raise ArityError("cross-agent comparison needs at least one run")
        pairs = [("reference", f"run{i}", reference, run) for i, run in enumerate(runs)]
        mode = "cross_agent"
    else:
        if len(runs) < 2:
            raise ArityError("within-agent comparison needs at least two runs")
        pairs = [
            (f"run{i}", f"run{j}", runs[i], runs[j])
            for i in range(len(runs))
            for j in range(i + 1, len(runs))
        ]
        mode = "within_agent"

    warnings: list[str] = []
    scores: list[PairScore] = []
    ma_recalls: list[float] = []
    any_ma = False
    for left_name, right_name, left, right in pairs:
        left_fm = _extract_fm_names(left)
        right_fm = _extract_fm_names(right)
        if not left_fm and not right_fm:
            scores.append(PairScore(left_name, right_name, 1.0, 1.0, 1.0))
            warnings.append(f"{left_name}/{right_name}: both extractions empty")
        else:
            p, r, s = f1(match_failure_modes(left_fm, right_fm, aliases))
            scores.append(PairScore(left_name, right_name, p, r, s))
        left_ma = _extract_ma_names(left)
        right_ma = _extract_ma_names(right)
        if left_ma or right_ma:
            any_ma = True
            _, ma_recall, _ = f1(match_failure_modes(left_ma, right_ma, aliases))
            ma_recalls.append(ma_recall)

    n = len(scores)
    mean_f1 = sum(s.f1 for s in scores) / n
    variance = sum((s.f1 - mean_f1) ** 2 for s in scores) / n
    return ConsistencyReport(
        mode=mode,
        fm_precision=round(sum(s.precision for s in scores) / n, 4),
        fm_recall=round(sum(s.recall for s in scores) / n, 4),
        fm_f1=round(mean_f1, 4),
        fm_f1_variance=round(variance, 6),
        method_alternative_recall=(
            round(sum(ma_recalls) / len(ma_recalls), 4) if any_ma else None
        ),
        run_digests=tuple(_digest(run) for run in runs),
        comparisons=tuple(scores),
        warnings=tuple(warnings),
    )
