"""Command line interface.

Subcommands:
    encode   mosaic.pgm + meta.json -> stream.cmra
    decode   stream.cmra -> mosaic.pgm (+ metadata)
    analyze  decorrelation statistics as CSV, with optional figures
    bench    corpus comparison: CSV report plus rate-distortion figures

Exit codes: 0 ok, 2 usage, 3 I/O error, 4 file-format or stream error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import bench, cfa, codec, container, pgmio, plots, wavelet
from .decorrelate import (MatrixFitConfig, measure_decorrelation,
                          quantize_matrix, sumdiff_forward)
from .entropy import DecodeError
from .pipeline import PipelineParams
from .quantize import QuantizationSpec

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_FORMAT = 4

DEFAULT_LAMBDA = 0.1


class _CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _parse_matrix_arg(text):
    parts = text.split(",")
    if len(parts) != 4:
        raise _CliError("--fixed-m needs four comma-separated numbers", EXIT_USAGE)
    try:
        return np.array([float(p) for p in parts]).reshape(2, 2)
    except ValueError as e:
        raise _CliError(f"--fixed-m: {e}", EXIT_USAGE) from e


def _load_input(args, need_pipeline=False):
    try:
        image, params = pgmio.load_bayer(args.input, args.meta)
    except OSError as e:
        raise _CliError(f"cannot read input: {e}", EXIT_IO) from e
    except (pgmio.PgmFormatError, pgmio.MetadataError, ValueError) as e:
        raise _CliError(str(e), EXIT_FORMAT) from e
    if need_pipeline and params is None:
        raise _CliError("metadata lacks the pipeline parameters "
                        "(color_matrix / illuminant / gamma) required by "
                        "camra mode", EXIT_FORMAT)
    return image, params


def cmd_encode(args):
    image, params = _load_input(args, need_pipeline=(args.mode == "camra"))
    steps = QuantizationSpec.uniform(args.step)
    matrix = _parse_matrix_arg(args.fixed_m) if args.fixed_m else None
    fit = MatrixFitConfig(sparsity_weight=args.sparsity_weight,
                          objective_form=args.objective)
    kw = dict(matrix=matrix, fit_config=fit, levels=args.levels,
              diff_levels=args.diff_levels)
    try:
        if args.mode == "lossless":
            stream = codec.encode_lossless(image, levels=args.levels,
                                           diff_levels=args.diff_levels)
        elif args.mode == "lossy-a":
            stream = codec.encode_lossy_a(image, steps, **kw)
        elif args.mode == "lossy-b":
            stream = codec.encode_lossy_b(image, steps, **kw)
        else:
            stream = codec.encode_camra(image, steps, params, **kw)
    except (codec.EncodeError, ValueError) as e:
        raise _CliError(f"encode failed: {e}", EXIT_FORMAT) from e
    try:
        with open(args.output, "wb") as f:
            f.write(stream.to_bytes())
    except OSError as e:
        raise _CliError(f"cannot write output: {e}", EXIT_IO) from e
    print(f"{args.output}: mode={args.mode} {stream.bpp():.4f} bpp "
          f"({stream.total_bytes()} bytes)")
    return EXIT_OK


def cmd_decode(args):
    try:
        with open(args.input, "rb") as f:
            buf = f.read()
    except OSError as e:
        raise _CliError(f"cannot read input: {e}", EXIT_IO) from e
    try:
        stream = container.parse_stream(buf)
        image = codec.decode(stream)
    except (container.FormatError, DecodeError, ValueError) as e:
        raise _CliError(f"decode failed: {e}", EXIT_FORMAT) from e
    try:
        pgmio.write_pgm(args.output, image)
        if args.meta_out:
            params = None
            h = stream.header
            if h.color_matrix is not None:
                params = PipelineParams(color_matrix=h.color_matrix,
                                        illuminant=h.illuminant, gamma=h.gamma)
            pgmio.write_metadata(args.meta_out, image, params)
    except OSError as e:
        raise _CliError(f"cannot write output: {e}", EXIT_IO) from e
    print(f"{args.output}: {image.width}x{image.height} "
          f"{image.bit_depth}-bit {image.phase}")
    return EXIT_OK


def cmd_analyze(args):
    image, _ = _load_input(args)
    shifted = cfa.subtract_black_offset(cfa.normalize_to_rggb(image))
    rows = []
    figures = []
    for kernel in ("53", "97"):
        if kernel == "53":
            bands = wavelet.dwt53_forward(shifted)
            matrix = None
            band_sum, band_diff = sumdiff_forward(bands.lh, bands.hl)
        else:
            bands = wavelet.dwt97_forward(shifted.astype(np.float64))
            a = bands.lh.ravel()[::max(1, bands.lh.size // codec.MAX_FIT_SAMPLES)]
            b = bands.hl.ravel()[::max(1, bands.hl.size // codec.MAX_FIT_SAMPLES)]
            from .decorrelate import fit_matrix
            res = fit_matrix(a, b, MatrixFitConfig(
                sparsity_weight=args.sparsity_weight))
            matrix = quantize_matrix(res.matrix)
            band_sum = matrix[0, 0] * bands.lh + matrix[0, 1] * bands.hl
            band_diff = matrix[1, 0] * bands.lh + matrix[1, 1] * bands.hl
        stats = measure_decorrelation(bands.lh, bands.hl, matrix)
        rows.append({"image_id": os.path.basename(args.input),
                     "scheme": f"analyze-{kernel}", "mode": "",
                     "step": "", "bpp": "",
                     "psnr_cfa_db": "", "psnr_display_db": "",
                     "pearson_before": stats.pearson_before,
                     "pearson_after": stats.pearson_after,
                     "entropy_before": stats.entropy_before,
                     "entropy_after": stats.entropy_after})
        if args.figures:
            os.makedirs(args.figures, exist_ok=True)
            figures.append(plots.decorrelation_figure(
                os.path.join(args.figures, f"decorrelation_{kernel}.png"),
                bands.lh, bands.hl, band_sum, band_diff, stats))
    try:
        with open(args.output, "w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=bench.CSV_FIELDS)
            writer.writeheader()
            writer.writerows(rows)
    except OSError as e:
        raise _CliError(f"cannot write report: {e}", EXIT_IO) from e
    for r in rows:
        print(f"{r['scheme']}: r {r['pearson_before']:.4f} -> "
              f"{r['pearson_after']:.4f}, entropy {r['entropy_before']:.2f} -> "
              f"{r['entropy_after']:.2f} bits")
    for p in figures:
        print(f"wrote {p}")
    print(f"wrote {args.output}")
    return EXIT_OK


def cmd_bench(args):
    corpus = bench.generate_corpus(args.seed, args.count, args.size)
    steps = tuple(args.steps)
    rows = []
    mean_lossless = {}

    print(f"corpus: {args.count} images {args.size}x{args.size} seed {args.seed}")
    lossless_acc = {}
    for im in corpus:
        for scheme, bpp in bench.lossless_bpp_comparison(im.mosaic).items():
            lossless_acc.setdefault(scheme, []).append(bpp)
            rows.append(bench.BenchRow(image_id=im.image_id, scheme=scheme,
                                       mode="lossless", bpp=bpp))
        stats = bench.decorrelation_stats(im.mosaic, "53")
        rows.append(bench.BenchRow(
            image_id=im.image_id, scheme="analyze-53",
            pearson_before=stats.pearson_before,
            pearson_after=stats.pearson_after,
            entropy_before=stats.entropy_before,
            entropy_after=stats.entropy_after))
    for scheme, vals in lossless_acc.items():
        mean_lossless[scheme] = float(np.mean(vals))
        print(f"  lossless {scheme:9s} {mean_lossless[scheme]:.4f} bpp")

    curves = {}
    for mode in ("lossy-a", "lossy-b", "camra"):
        per_image = []
        for im in corpus:
            r = bench.rd_sweep(im.mosaic, mode, steps,
                               params=bench.EVAL_PIPELINE, image_id=im.image_id)
            per_image.append(r)
            rows.extend(r)
        curves[mode] = bench.average_curve(per_image)
        pts = ", ".join(f"{c['bpp']:.2f}bpp/{c['psnr_cfa_db']:.1f}dB"
                        for c in curves[mode])
        print(f"  {mode}: {pts}")

    bench.write_csv(args.output, rows)
    print(f"wrote {args.output}")
    if args.figures:
        paths = plots.render_bench_figures(
            args.figures, mean_lossless, curves,
            {m: curves[m] for m in ("lossy-a", "camra")})
        for p in paths:
            print(f"wrote {p}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="camra",
        description="Compression for Bayer CFA raw sensor images")
    sub = parser.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encode", help="compress a PGM mosaic")
    enc.add_argument("--mode", required=True,
                     choices=("lossless", "lossy-a", "lossy-b", "camra"))
    enc.add_argument("--in", dest="input", required=True, help="input PGM (P5)")
    enc.add_argument("--meta", required=True, help="metadata sidecar (JSON)")
    enc.add_argument("--out", dest="output", required=True, help="output stream")
    enc.add_argument("--step", type=float, default=4.0,
                     help="quantizer step for lossy modes (default 4)")
    enc.add_argument("--lambda", dest="sparsity_weight", type=float,
                     default=DEFAULT_LAMBDA,
                     help="sparsity weight of the matrix fit (default 0.1)")
    enc.add_argument("--fixed-m", default=None,
                     help="skip the fit; matrix as m00,m01,m10,m11")
    enc.add_argument("--objective", choices=("derivation", "literal"),
                     default="derivation", help="matrix-fit objective form")
    enc.add_argument("--levels", type=int, default=codec.DEFAULT_LEVELS,
                     help="packet levels (default 5)")
    enc.add_argument("--diff-levels", type=int,
                     default=codec.DEFAULT_DIFF_LEVELS,
                     help="packet levels of the difference branch (default 2)")
    enc.set_defaults(func=cmd_encode)

    dec = sub.add_parser("decode", help="decompress a stream")
    dec.add_argument("--in", dest="input", required=True, help="input stream")
    dec.add_argument("--out", dest="output", required=True, help="output PGM")
    dec.add_argument("--meta-out", default=None,
                     help="also write a metadata sidecar")
    dec.set_defaults(func=cmd_decode)

    ana = sub.add_parser("analyze", help="decorrelation statistics")
    ana.add_argument("--in", dest="input", required=True, help="input PGM")
    ana.add_argument("--meta", required=True, help="metadata sidecar")
    ana.add_argument("--out", dest="output", required=True, help="CSV report")
    ana.add_argument("--lambda", dest="sparsity_weight", type=float,
                     default=DEFAULT_LAMBDA)
    ana.add_argument("--figures", default=None,
                     help="directory for scatter/histogram figures")
    ana.set_defaults(func=cmd_analyze)

    ben = sub.add_parser("bench", help="scheme comparison on the corpus")
    ben.add_argument("--seed", type=int, default=bench.DEFAULT_SEED)
    ben.add_argument("--count", type=int, default=bench.DEFAULT_COUNT)
    ben.add_argument("--size", type=int, default=bench.DEFAULT_SIZE)
    ben.add_argument("--steps", type=float, nargs="+",
                     default=list(bench.DEFAULT_STEPS))
    ben.add_argument("--out", dest="output", required=True, help="CSV report")
    ben.add_argument("--figures", default=None,
                     help="directory for rendered figures")
    ben.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CliError as e:
        print(f"camra: {e}", file=sys.stderr)
        return e.code


if __name__ == "__main__":
    sys.exit(main())
