"""Answer-word to first-token reduction conventions.

A real tokenizer usually has distinct entries for "Yes" and " Yes"
(with a leading space); which one carries the answer's first-token
logit depends on how the chat template splices the answer in.  The
conventions here return the candidate spellings to probe, most
preferred first; the model wrapper takes the first candidate the
tokenizer knows and uses its first subtoken.
"""
from __future__ import annotations

from .config import TOKEN_REDUCTIONS
from .errors import ConfigError


def first_token_candidates(word: str, mode: str) -> tuple[str, ...]:
    if mode == "first_subtoken":
        return (word,)
    if mode == "leading_space_variant":
        return (" " + word, word)
    raise ConfigError(f"token_reduction must be one of {TOKEN_REDUCTIONS}, "
                      f"got {mode!r}")
