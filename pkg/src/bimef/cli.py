"""Command-line interface: ``bimef enhance | batch | metrics``."""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .camera import DEFAULT_A, DEFAULT_B, CameraModel
from .fusion import EnhanceConfig, enhance
from .illumination import SolverConfig
from .image import load_image, save_image
from .metrics import LoeConfig, loe
from .sampler import KSearchConfig

log = logging.getLogger("bimef")

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg"}


def _add_enhance_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mu", type=float, default=0.5, help="enhancement exponent of the weight map")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0, help="smoothness weight")
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--window", type=int, default=5, help="texture window length (odd)")
    p.add_argument("--pcg-tol", type=float, default=1e-5)
    p.add_argument("--pcg-max-iter", type=int, default=1000)
    p.add_argument("--preconditioner", choices=["lu", "amg", "jacobi"], default="lu")
    p.add_argument("--camera-a", type=float, default=DEFAULT_A)
    p.add_argument("--camera-b", type=float, default=DEFAULT_B)
    p.add_argument("--k", type=float, default=None, help="fixed exposure ratio (skips the search)")
    p.add_argument("--threshold", type=float, default=0.5, help="under-exposure illumination threshold")
    p.add_argument("--thumb-size", type=int, default=50)
    p.add_argument("--k-min", type=float, default=1.0)
    p.add_argument("--k-max", type=float, default=100.0)
    p.add_argument("--k-search", choices=["sweep", "golden"], default="sweep")


def config_from_args(args: argparse.Namespace) -> EnhanceConfig:
    return EnhanceConfig(
        mu=args.mu,
        solver=SolverConfig(lam=args.lam, epsilon=args.epsilon, window=args.window, pcg_tol=args.pcg_tol,
                            pcg_max_iter=args.pcg_max_iter, preconditioner=args.preconditioner),
        camera=CameraModel(a=args.camera_a, b=args.camera_b),
        ksearch=KSearchConfig(under_exposed_threshold=args.threshold, thumb_size=args.thumb_size,
                              k_min=args.k_min, k_max=args.k_max, method=args.k_search),
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bimef", description="Dual-exposure fusion for low-light images.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enhance", help="enhance a single image")
    p.add_argument("input", type=Path)
    p.add_argument("output", type=Path)
    _add_enhance_flags(p)
    p.add_argument("--report-k", action="store_true", help="print k_hat=<value>")
    p.add_argument("--dump-intermediates", action="store_true",
                   help="also write <stem>.T.png, <stem>.W.png and <stem>.synthetic.png")
    p.add_argument("--timings", action="store_true", help="print per-stage timings")

    p = sub.add_parser("batch", help="enhance every image in a directory")
    p.add_argument("input_dir", type=Path)
    p.add_argument("output_dir", type=Path)
    _add_enhance_flags(p)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)

    p = sub.add_parser("metrics", help="lightness order error between original and enhanced images")
    p.add_argument("original", type=Path)
    p.add_argument("enhanced", type=Path)
    p.add_argument("--loe-size", type=int, default=100)
    p.add_argument("--csv", action="store_true", help="emit path,loe rows")
    return parser


def enhance_file(src: Path, dst: Path, cfg: EnhanceConfig, k: float | None = None,
                 dump_intermediates: bool = False):
    out = enhance(load_image(src), cfg, k=k)
    t0 = time.perf_counter()
    save_image(out.result, dst)
    if dump_intermediates:
        stem = dst.with_suffix("")
        save_image(out.illumination, f"{stem}.T.png")
        save_image(out.weight, f"{stem}.W.png")
        save_image(out.synthetic, f"{stem}.synthetic.png")
    out.timings["save"] = time.perf_counter() - t0
    return out


def run_enhance(args: argparse.Namespace) -> int:
    cfg = config_from_args(args)
    t0 = time.perf_counter()
    out = enhance_file(args.input, args.output, cfg, k=args.k, dump_intermediates=args.dump_intermediates)
    if args.report_k:
        print(f"k_hat={out.k_hat:.6g}")
    if args.timings:
        for stage, seconds in out.timings.items():
            print(f"{stage}: {seconds:.3f}s")
        print(f"total: {time.perf_counter() - t0:.3f}s")
    return 0


def _batch_worker(src: Path, dst: Path, cfg: EnhanceConfig, k: float | None):
    t0 = time.perf_counter()
    try:
        out = enhance_file(src, dst, cfg, k=k)
    except Exception as exc:  # reported per file, the batch carries on
        return src.name, None, time.perf_counter() - t0, f"{type(exc).__name__}: {exc}"
    return src.name, out.k_hat, time.perf_counter() - t0, None


def list_images(directory: Path) -> list[Path]:
    return sorted(p for p in directory.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def run_batch(args: argparse.Namespace) -> int:
    cfg = config_from_args(args)
    if not args.input_dir.is_dir():
        raise NotADirectoryError(f"{args.input_dir} is not a directory")
    files = list_images(args.input_dir)
    if not files:
        log.warning("no images found in %s", args.input_dir)
        return 0
    if args.jobs < 1:
        raise ValueError("--jobs must be >= 1")
    args.output_dir.mkdir(parents=True, exist_ok=True)

    failed = 0
    jobs = [(f, args.output_dir / f"{f.stem}.png", cfg, args.k) for f in files]
    if args.jobs == 1:
        results = (_batch_worker(*job) for job in jobs)
        for name, k_hat, seconds, err in results:
            failed += _report(name, k_hat, seconds, err)
    else:
        with ProcessPoolExecutor(max_workers=min(args.jobs, len(jobs))) as pool:
            for name, k_hat, seconds, err in pool.map(_batch_worker, *zip(*jobs)):
                failed += _report(name, k_hat, seconds, err)
    return 1 if failed else 0


def _report(name: str, k_hat: float | None, seconds: float, err: str | None) -> int:
    if err is not None:
        print(f"{name}, error, {seconds:.3f}", flush=True)
        log.error("%s: %s", name, err)
        return 1
    print(f"{name}, {k_hat:.6g}, {seconds:.3f}", flush=True)
    return 0


def _pair_by_stem(original_dir: Path, enhanced_dir: Path) -> list[tuple[Path, Path]]:
    enhanced = {p.stem: p for p in list_images(enhanced_dir)}
    pairs = []
    for p in list_images(original_dir):
        if p.stem in enhanced:
            pairs.append((p, enhanced[p.stem]))
        else:
            log.warning("no enhanced counterpart for %s", p.name)
    return pairs


def run_metrics(args: argparse.Namespace) -> int:
    cfg = LoeConfig(sample_size=args.loe_size)
    if args.original.is_dir() and args.enhanced.is_dir():
        pairs = _pair_by_stem(args.original, args.enhanced)
        emit_csv = True
    elif args.original.is_dir() or args.enhanced.is_dir():
        raise ValueError("pass two files or two directories")
    else:
        pairs = [(args.original, args.enhanced)]
        emit_csv = args.csv

    writer = csv.writer(sys.stdout, lineterminator="\n") if emit_csv else None
    if writer:
        writer.writerow(["path", "loe"])
    for orig, enh in pairs:
        value = loe(load_image(orig), load_image(enh), cfg)
        if writer:
            writer.writerow([str(orig), f"{value:.6f}"])
        else:
            print(f"LOE={value:.6f}")
    return 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(name)s: %(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    if getattr(args, "mu", 0.0) > 1:
        log.warning("mu > 1 tends to saturate well-exposed regions")
    handlers = {"enhance": run_enhance, "batch": run_batch, "metrics": run_metrics}
    try:
        return handlers[args.command](args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"bimef: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
