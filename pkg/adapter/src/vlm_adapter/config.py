from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError

TOKEN_REDUCTIONS = ("first_subtoken", "leading_space_variant")


@dataclass(frozen=True)
class AdapterConfig:
    """How the adapter wraps its model.

    token_reduction names the convention for mapping an answer word to
    one tokenizer entry whose logit is reported; the chosen convention
    is declared in the handshake capabilities so the harness side never
    has to guess it.
    """
    model: str
    device: str = "cpu"
    token_reduction: str = "leading_space_variant"
    mask_output_dir: str | None = None

    def __post_init__(self) -> None:
        if not self.model:
            raise ConfigError("model identifier must be a nonempty string")
        if self.token_reduction not in TOKEN_REDUCTIONS:
            raise ConfigError(
                f"token_reduction must be one of {TOKEN_REDUCTIONS}, "
                f"got {self.token_reduction!r}")

    @property
    def capabilities(self) -> list[str]:
        return ["detect", "segment", f"token_reduction:{self.token_reduction}"]
