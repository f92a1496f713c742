"""Perceptual and question-answering scores, and their aggregation.

Two signals measure how faithfully generated code reproduces an image:

- an embedding similarity between the original image and the rendered code
  (``siglip_score``: 100 x cosine of unit vectors), and
- render-then-answer question accuracy: a policy model answers the item's
  question while seeing *only* the rendered image, and the answer is graded
  by a rule-based parser (MCQ / exact match) or an LLM judge with partial
  credit in [0, 1].

Per-item results live in :class:`ScoreCard` (scores stored on their natural
scales; reports multiply to the 0-100 scale at one decimal). Aggregation is
instance-weighted across domains and runs after a deterministic sort by
item_id so results never depend on completion order.
"""

import logging
import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from ._rounding import round_half_up
from .bench_dataset import DOMAINS, BenchmarkItem, DatasetManifest
from .model_gateway import (
    IMAGE_ROLE_RENDER,
    ModelEndpoint,
    PromptLog,
    embed_image,
    templated_chat,
)
from .svg_toolkit import compute_success_rate
from .svg_toolkit.document import RenderedImage

logger = logging.getLogger(__name__)

JUDGE_KINDS = frozenset({"rule_mcq", "llm_judge", "human"})

# Appended to multiple-choice questions before they reach the answering
# policy, so replies are gradable by the letter parser.
MCQ_DIRECT_INSTRUCTION = (
    "Answer with the option's letter from the given choices directly."
)


class ScoringError(Exception):
    """Base class for scoring failures."""


class DimensionMismatch(ScoringError):
    """Two embedding vectors cannot be compared."""

    def __init__(self, expected: int, got: int):
        self.expected = expected
        self.got = got
        super().__init__(f"embedding dims differ: {expected} vs {got}")


class MissingDomain(ScoringError):
    """Instance-weighted aggregation is missing a required domain."""

    def __init__(self, domain: str):
        self.domain = domain
        super().__init__(f"domain {domain!r} absent or empty in per-domain stats")


class JudgeUnparseable(ScoringError):
    """A judge reply did not contain a score in [0, 1]."""

    def __init__(self, raw: str):
        self.raw = raw
        super().__init__(f"no score in [0, 1] found in judge reply: {raw!r}")


# ---------------------------------------------------------------------------
# embedding similarity


def siglip_score(f_v: np.ndarray, f_vr: np.ndarray) -> float:
    """100 x cosine similarity of two unit embedding vectors.

    Symmetric in its arguments; identical vectors score 100.0. Raises
    :class:`DimensionMismatch` when the vectors' lengths differ.
    """
    a = np.asarray(f_v, dtype=np.float64)
    b = np.asarray(f_vr, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1:
        raise ValueError("embedding vectors must be one-dimensional")
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatch(a.shape[0], b.shape[0])
    return float(100.0 * np.dot(a, b))


def image_similarity(provider: str, image_a, image_b) -> float:
    """Embed two images with the named provider and return their siglip_score."""
    return siglip_score(embed_image(provider, image_a), embed_image(provider, image_b))


# ---------------------------------------------------------------------------
# render-then-answer policy


def mcq_question_text(question: str) -> str:
    """Question text as shown to the policy: MCQ items carry the direct-answer
    instruction as their final line (added only when not already present)."""
    if MCQ_DIRECT_INSTRUCTION in question:
        return question
    return question.rstrip() + "\n" + MCQ_DIRECT_INSTRUCTION


def policy_question_text(item: BenchmarkItem) -> str:
    """The exact question string sent to the answering policy for an item."""
    if item.answer_mode == "mcq":
        return mcq_question_text(item.question)
    return item.question


def codevqa_policy_answer(
    policy: ModelEndpoint,
    render: RenderedImage,
    question: str,
    *,
    log: Optional[PromptLog] = None,
    item_id: Optional[str] = None,
) -> str:
    """Ask the policy the question about the rendered image; return its answer.

    The policy sees exactly one image part — the render — and never the
    original input image; the recorded prompt carries the image role so the
    replay audit can verify this structurally.
    """
    result = templated_chat(
        policy,
        template_id="codevqa_policy",
        bindings={"question": question},
        images=[(IMAGE_ROLE_RENDER, render)],
        log=log,
        item_id=item_id,
    )
    return result.text.strip()


# ---------------------------------------------------------------------------
# answer evaluation: rule-based


_PAREN_LETTER = re.compile(r"\(([A-Za-z])\)")
_ANSWER_IS = re.compile(r"answer\s+is\s*:?\s*\(?([A-Za-z])\)?", re.IGNORECASE)
_LEADING_LETTER = re.compile(r"^\s*([A-Za-z])[.)](?:\s|$)")

_AMBIGUOUS = "ambiguous"


def _distinct_or_ambiguous(letters: Iterable[str]) -> Optional[str]:
    distinct = {letter.upper() for letter in letters}
    if not distinct:
        return None
    if len(distinct) > 1:
        return _AMBIGUOUS
    return distinct.pop()


def extract_mcq_letter(answer: str) -> Optional[str]:
    """Pull a single choice letter out of free-form answer text.

    Extraction precedence: the whole answer is one standalone letter; a
    parenthesized letter "(X)"; an "answer is X" phrase; a leading "X." or
    "X)". Multiple *different* letters at the deciding rule make the answer
    ambiguous (returns None). Matching is case-insensitive; the returned
    letter is uppercase.
    """
    stripped = answer.strip()
    if len(stripped) == 1 and stripped.isalpha():
        return stripped.upper()

    for pattern in (_PAREN_LETTER, _ANSWER_IS):
        verdict = _distinct_or_ambiguous(m.group(1) for m in pattern.finditer(answer))
        if verdict == _AMBIGUOUS:
            return None
        if verdict is not None:
            return verdict

    leading = _LEADING_LETTER.match(answer)
    if leading:
        return leading.group(1).upper()
    return None


def evaluate_answer_mcq(answer: str, gold: str) -> bool:
    """Rule-based multiple-choice grading; unparseable or ambiguous fails."""
    gold = gold.strip().upper()
    if len(gold) != 1 or not "A" <= gold <= "Z":
        raise ValueError(f"gold must be a single letter A-Z, got {gold!r}")
    return extract_mcq_letter(answer) == gold


# Unit words dropped from the tail of normalized answers so "42 cm" == "42".
_UNIT_WORDS = frozenset(
    {
        "cm", "mm", "m", "km", "kg", "g", "mg", "l", "ml",
        "s", "sec", "second", "seconds", "min", "minute", "minutes",
        "hour", "hours", "degree", "degrees", "percent",
        "meter", "meters", "metre", "metres", "feet", "foot",
        "inch", "inches", "usd", "dollar", "dollars",
    }
)


def normalize_open_answer(text: str) -> str:
    """Lowercase, strip punctuation and trailing unit words, collapse spaces."""
    lowered = text.lower().replace("°", " ")
    lowered = re.sub(r"[^\w\s.]", " ", lowered)
    tokens = [tok.rstrip(".") for tok in lowered.split()]
    tokens = [tok for tok in tokens if tok]
    while tokens and tokens[-1] in _UNIT_WORDS:
        tokens.pop()
    return " ".join(tokens)


def evaluate_answer_exact(answer: str, gold: str) -> bool:
    """Exact-match grading for open answers, after normalization."""
    return normalize_open_answer(answer) == normalize_open_answer(gold)


# ---------------------------------------------------------------------------
# answer evaluation: LLM judge


_FLOAT = re.compile(r"[-+]?(?:\d+\.?\d*|\.\d+)")


def _parse_judge_score(text: str) -> float:
    match = _FLOAT.search(text)
    if match is None:
        raise JudgeUnparseable(text)
    value = float(match.group(0))
    if not 0.0 <= value <= 1.0:
        raise JudgeUnparseable(text)
    return value


def evaluate_answer_open(
    judge: ModelEndpoint,
    question: str,
    gold: str,
    answer: str,
    *,
    log: Optional[PromptLog] = None,
    item_id: Optional[str] = None,
) -> float:
    """Grade an open answer with an LLM judge; returns a score in [0, 1].

    The judge sees the question, the gold answer, and the candidate, and is
    asked for a numeric score only. An unparseable reply triggers exactly one
    re-ask; a second failure logs the problem and scores 0.0.
    """
    last_error: Optional[JudgeUnparseable] = None
    for _ in range(2):
        result = templated_chat(
            judge,
            template_id="llm_judge",
            bindings={"question": question, "gold": gold, "answer": answer},
            log=log,
            item_id=item_id,
        )
        try:
            return _parse_judge_score(result.text)
        except JudgeUnparseable as exc:
            last_error = exc
    logger.warning(
        "judge reply unparseable after re-ask (item %s): %r", item_id, last_error.raw
    )
    return 0.0


def evaluate_item_answer(
    item: BenchmarkItem,
    answer: str,
    judge: Optional[ModelEndpoint] = None,
    *,
    log: Optional[PromptLog] = None,
) -> Tuple[Union[bool, float], str]:
    """Grade an answer by the item's protocol; returns (score, judge kind).

    Open-set domain items go to the LLM judge (partial credit); everything
    else is rule-based — letter parsing for MCQ, normalized exact match for
    open questions graded by string matching.
    """
    if item.domain == "mmvet":
        if judge is None:
            raise ValueError("mmvet items need a judge endpoint")
        score = evaluate_answer_open(
            judge, item.question, item.gold_answer, answer,
            log=log, item_id=item.item_id,
        )
        return score, "llm_judge"
    if item.answer_mode == "mcq":
        return evaluate_answer_mcq(answer, item.gold_answer), "rule_mcq"
    return evaluate_answer_exact(answer, item.gold_answer), "rule_mcq"


# ---------------------------------------------------------------------------
# score cards and aggregation


@dataclass(frozen=True)
class ScoreCard:
    """Everything measured for one item.

    ``siglip_score`` lives on the -100..100 scale (None only when no raster
    was produced at all, including no blank fallback); ``codevqa_correct``
    is a boolean for rule-graded items or a [0, 1] partial credit for
    judge-graded ones; ``judge`` names the grading route; ``judge_model``
    pins the judge identity for drift tracking.
    """

    item_id: str
    success: bool
    siglip_score: Optional[float]
    code_tokens: int
    codevqa_correct: Union[bool, float]
    policy_answer: str
    judge: str
    judge_model: str = ""

    def __post_init__(self):
        if self.judge not in JUDGE_KINDS:
            raise ValueError(f"judge must be one of {sorted(JUDGE_KINDS)}")
        value = float(self.codevqa_correct)
        if not 0.0 <= value <= 1.0:
            raise ValueError("codevqa_correct must lie in [0, 1]")
        if self.siglip_score is not None and not -100.0 <= self.siglip_score <= 100.0:
            raise ValueError("siglip_score must lie in [-100, 100]")
        if self.code_tokens < 0:
            raise ValueError("code_tokens must be >= 0")

    @property
    def codevqa_value(self) -> float:
        return float(self.codevqa_correct)


def scorecard_to_json(card: ScoreCard) -> dict:
    return {
        "item_id": card.item_id,
        "success": card.success,
        "siglip_score": card.siglip_score,
        "code_tokens": card.code_tokens,
        "codevqa_correct": card.codevqa_correct,
        "policy_answer": card.policy_answer,
        "judge": card.judge,
        "judge_model": card.judge_model,
    }


def scorecard_from_json(record: Mapping) -> ScoreCard:
    return ScoreCard(
        item_id=record["item_id"],
        success=bool(record["success"]),
        siglip_score=record["siglip_score"],
        code_tokens=int(record["code_tokens"]),
        codevqa_correct=record["codevqa_correct"],
        policy_answer=record["policy_answer"],
        judge=record["judge"],
        judge_model=record.get("judge_model", ""),
    )


@dataclass(frozen=True)
class AggregateReport:
    """Run-level numbers on the reported (0-100, one-decimal) scale.

    ``overall`` is the instance-weighted mean of per-domain question
    accuracy; ``failed_items`` counts items scored through the blank-render
    fallback (their embedding similarity is 0), making the fallback's
    influence visible.
    """

    per_domain: Dict[str, Dict[str, float]]
    per_capability: Dict[str, float]
    overall: float
    success_rate: float
    siglip_mean: float
    mean_code_tokens_k: float
    failed_items: int = 0
    failed_item_policy: str = "blank-render-scored-as-zero-similarity"

    def to_json_dict(self) -> dict:
        return {
            "per_domain": {
                d: dict(stats) for d, stats in sorted(self.per_domain.items())
            },
            "per_capability": dict(sorted(self.per_capability.items())),
            "overall": self.overall,
            "success_rate": self.success_rate,
            "siglip_mean": self.siglip_mean,
            "mean_code_tokens_k": self.mean_code_tokens_k,
            "failed_items": self.failed_items,
            "failed_item_policy": self.failed_item_policy,
        }


def _stat_pair(value) -> Tuple[float, int]:
    if isinstance(value, Mapping):
        return float(value["avg"]), int(value["n"])
    avg, n = value
    return float(avg), int(n)


def aggregate_overall(per_domain: Mapping[str, object]) -> float:
    """Instance-weighted mean over the three domains, one decimal.

    ``per_domain`` maps each domain to ``{"avg": x, "n": k}`` or ``(x, k)``.
    All three domains must be present with n > 0; the result is
    sum(avg*n)/sum(n) rounded half-up to one decimal, identical to the mean
    over the concatenated per-item scores when the avgs are unrounded.
    """
    for domain in sorted(DOMAINS):
        if domain not in per_domain:
            raise MissingDomain(domain)
        _, n = _stat_pair(per_domain[domain])
        if n <= 0:
            raise MissingDomain(domain)
    for domain in per_domain:
        if domain not in DOMAINS:
            raise ValueError(f"unknown domain {domain!r}")
    total = 0.0
    count = 0
    for domain in sorted(per_domain):
        avg, n = _stat_pair(per_domain[domain])
        total += avg * n
        count += n
    return round_half_up(total / count, 1)


def _join_cards(
    cards: Sequence[ScoreCard], items: Sequence[BenchmarkItem]
) -> List[Tuple[BenchmarkItem, ScoreCard]]:
    by_id = {card.item_id: card for card in cards}
    if len(by_id) != len(cards):
        raise ValueError("duplicate scorecards for one item")
    joined = []
    for item in sorted(items, key=lambda it: it.item_id):
        card = by_id.pop(item.item_id, None)
        if card is None:
            raise ValueError(f"no scorecard for item {item.item_id!r}")
        joined.append((item, card))
    if by_id:
        raise ValueError(f"scorecards without items: {sorted(by_id)}")
    return joined


def aggregate_capabilities(
    cards: Sequence[ScoreCard], items: Union[DatasetManifest, Sequence[BenchmarkItem]]
) -> Dict[str, float]:
    """Mean question accuracy per capability tag, on the 0-100 scale.

    A multi-tag item contributes its score to every tag it carries; tags
    with no items are absent from the result.
    """
    item_seq = items.items if isinstance(items, DatasetManifest) else items
    sums: Dict[str, float] = {}
    counts: Dict[str, int] = {}
    for item, card in _join_cards(cards, item_seq):
        for tag in sorted(item.capability_tags):
            sums[tag] = sums.get(tag, 0.0) + card.codevqa_value
            counts[tag] = counts.get(tag, 0) + 1
    return {
        tag: round_half_up(100.0 * sums[tag] / counts[tag], 1) for tag in sorted(sums)
    }


def build_aggregate_report(
    cards: Sequence[ScoreCard],
    items: Union[DatasetManifest, Sequence[BenchmarkItem]],
) -> AggregateReport:
    """Aggregate one card per item into the run-level report.

    Domain averages are question accuracy x100 at one decimal; ``overall``
    is computed from the unrounded per-domain means (equal to the mean over
    all items), so domains with few items do not suffer double rounding.
    ``mean_code_tokens_k`` averages over items that produced code.
    """
    item_seq = items.items if isinstance(items, DatasetManifest) else items
    joined = _join_cards(cards, item_seq)
    if not joined:
        raise ValueError("cannot aggregate an empty run")

    domain_sums: Dict[str, float] = {}
    domain_counts: Dict[str, int] = {}
    for item, card in joined:
        domain_sums[item.domain] = domain_sums.get(item.domain, 0.0) + card.codevqa_value
        domain_counts[item.domain] = domain_counts.get(item.domain, 0) + 1

    per_domain = {
        domain: {
            "avg": round_half_up(100.0 * domain_sums[domain] / domain_counts[domain], 1),
            "n": domain_counts[domain],
        }
        for domain in sorted(domain_sums)
    }
    overall = round_half_up(
        100.0 * sum(domain_sums.values()) / sum(domain_counts.values()), 1
    )

    success_rate = compute_success_rate([card.success for _, card in joined])
    siglip_values = [
        card.siglip_score if card.siglip_score is not None else 0.0
        for _, card in joined
    ]
    siglip_mean = round_half_up(sum(siglip_values) / len(siglip_values), 1)

    token_counts = [card.code_tokens for _, card in joined if card.code_tokens > 0]
    mean_tokens_k = (
        round_half_up(sum(token_counts) / len(token_counts) / 1000.0, 1)
        if token_counts
        else 0.0
    )

    return AggregateReport(
        per_domain=per_domain,
        per_capability=aggregate_capabilities(cards, item_seq),
        overall=overall,
        success_rate=success_rate,
        siglip_mean=siglip_mean,
        mean_code_tokens_k=mean_tokens_k,
        failed_items=sum(1 for _, card in joined if not card.success),
    )
