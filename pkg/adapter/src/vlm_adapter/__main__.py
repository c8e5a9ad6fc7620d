"""Command-line entry point: speak the line protocol on stdio."""
from __future__ import annotations

import argparse
import sys

from .config import TOKEN_REDUCTIONS, AdapterConfig
from .errors import ConfigError
from .serve import serve


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="vlm-adapter",
        description="Serve a vision-language model over the NDJSON "
                    "detection/localization line protocol on stdio.")
    parser.add_argument("--model", required=True,
                        help="model identifier (fixed:<score>, table:<path>, "
                             "hash, probe)")
    parser.add_argument("--device", default="cpu",
                        help="device hint passed to the model (default: cpu)")
    parser.add_argument("--token-reduction", default="leading_space_variant",
                        choices=list(TOKEN_REDUCTIONS),
                        help="how multi-token answer words map to one "
                             "first-token logit")
    parser.add_argument("--mask-dir", default=None,
                        help="directory for segmentation masks (default: "
                             "a fresh temporary directory)")
    args = parser.parse_args(argv)

    try:
        config = AdapterConfig(
            model=args.model,
            device=args.device,
            token_reduction=args.token_reduction,
            mask_output_dir=args.mask_dir,
        )
    except ConfigError as exc:
        parser.error(str(exc))
    return serve(config)


if __name__ == "__main__":
    sys.exit(main())
