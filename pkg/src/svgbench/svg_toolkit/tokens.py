"""Token counting for SVG code under the cl100k_base byte-pair encoding.

The code-token cost metric counts tokens exactly as the reference cl100k_base
tokenizer would: text is split with the published regex, then each chunk is
merged bottom-up by pair rank. The mergeable-ranks table ships as package data
(100,256 entries, base64 token + rank per line).

Special-token literals such as "<|endoftext|>" are counted as ordinary text;
we only measure code length, we never feed these ids to a model.
"""

import base64
import functools
from importlib import resources
from typing import Dict, List

import regex

# Published split pattern for cl100k_base. Needs the `regex` package: the
# stdlib `re` has no \p{L}/\p{N} character classes.
_SPLIT_PATTERN = (
    r"(?i:'s|'t|'re|'ve|'m|'ll|'d)"
    r"|[^\r\n\p{L}\p{N}]?\p{L}+"
    r"|\p{N}{1,3}"
    r"| ?[^\s\p{L}\p{N}]+[\r\n]*"
    r"|\s*[\r\n]+"
    r"|\s+(?!\S)"
    r"|\s+"
)

_RANKS_RESOURCE = "data/cl100k_base.tiktoken"


@functools.lru_cache(maxsize=1)
def _split_regex() -> "regex.Pattern[str]":
    return regex.compile(_SPLIT_PATTERN)


@functools.lru_cache(maxsize=1)
def _mergeable_ranks() -> Dict[bytes, int]:
    raw = resources.files("svgbench").joinpath(_RANKS_RESOURCE).read_bytes()
    ranks: Dict[bytes, int] = {}
    for line in raw.splitlines():
        if not line:
            continue
        token_b64, rank = line.split()
        ranks[base64.b64decode(token_b64)] = int(rank)
    return ranks


def _merge_chunk(chunk: bytes, ranks: Dict[bytes, int]) -> List[bytes]:
    """Greedy lowest-rank-first pair merging; ties broken leftmost."""
    parts = [chunk[i : i + 1] for i in range(len(chunk))]
    while len(parts) > 1:
        best_rank = None
        best_idx = -1
        for i in range(len(parts) - 1):
            rank = ranks.get(parts[i] + parts[i + 1])
            if rank is not None and (best_rank is None or rank < best_rank):
                best_rank = rank
                best_idx = i
        if best_rank is None:
            break
        parts[best_idx : best_idx + 2] = [parts[best_idx] + parts[best_idx + 1]]
    return parts


def encode_text(text: str) -> List[int]:
    """Token ids for `text` (ordinary text; no special-token handling)."""
    ranks = _mergeable_ranks()
    ids: List[int] = []
    for match in _split_regex().finditer(text):
        chunk = match.group().encode("utf-8")
        whole = ranks.get(chunk)
        if whole is not None:
            ids.append(whole)
        else:
            ids.extend(ranks[part] for part in _merge_chunk(chunk, ranks))
    return ids


def count_code_tokens(source: str) -> int:
    """Number of cl100k_base tokens in `source`; 0 for the empty string."""
    if not source:
        return 0
    ranks = _mergeable_ranks()
    total = 0
    for match in _split_regex().finditer(source):
        chunk = match.group().encode("utf-8")
        if chunk in ranks:
            total += 1
        else:
            total += len(_merge_chunk(chunk, ranks))
    return total
