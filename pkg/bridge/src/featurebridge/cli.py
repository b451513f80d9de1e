"""featurebridge command line: encode, decode, stylize."""

from __future__ import annotations

import argparse
import sys

from .codec import BadImage, ShapeIncompatible
from .pipeline import CoreInvocationError, decode, encode, stylize
from .tensorfile import TensorFormatError


def cmd_encode(args) -> int:
    encode(args.image, args.output)
    return 0


def cmd_decode(args) -> int:
    decode(args.features, args.output)
    return 0


def cmd_stylize(args) -> int:
    stylize(
        args.content,
        args.style,
        args.output,
        mode=args.mode,
        content_mask=args.content_mask,
        style_mask=args.style_mask,
        k=args.k,
        iterations=args.iters,
        bidirectional=args.bidirectional,
        reverse_output_image=args.reverse_output,
        work_dir=args.work_dir,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="featurebridge",
        description="image <-> feature bridge for the orthoalign core",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="image file to feature tensor")
    p.add_argument("image")
    p.add_argument("--output", "-o", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="feature tensor to image file")
    p.add_argument("features")
    p.add_argument("--output", "-o", required=True)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("stylize", help="full image-to-image pipeline")
    p.add_argument("--content", required=True)
    p.add_argument("--style", required=True)
    p.add_argument("--output", "-o", required=True)
    p.add_argument("--mode", choices=("unsupervised", "user_edit", "semantic"),
                   default="unsupervised")
    p.add_argument("--content-mask")
    p.add_argument("--style-mask")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--bidirectional", action="store_true")
    p.add_argument("--reverse-output")
    p.add_argument("--work-dir")
    p.set_defaults(func=cmd_stylize)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CoreInvocationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code  # propagate the core's exit code unchanged
    except (BadImage, ShapeIncompatible, TensorFormatError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
