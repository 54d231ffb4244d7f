"""Command-line entry point: ``candlecnn <fetch|build|train|evaluate|matrix>``.

Exit codes: 0 success, 1 usage or config error, 2 data error,
3 training divergence.
"""
import argparse
import logging
import sys

from candlecnn import config as config_mod
from candlecnn import dataset, market_data, pipeline, report
from candlecnn.imaging import ImagingError, Variant
from candlecnn.nn.checkpoint import CheckpointError
from candlecnn.nn.training import EmptyDataset, NonFiniteLoss

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DIVERGED = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="candlecnn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("fetch", "build", "train", "evaluate", "matrix"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="key = value experiment config")
        p.add_argument("--horizon", type=int)
        p.add_argument("--variant", choices=[v.value for v in Variant])
        p.add_argument("--split", choices=[s.value for s in dataset.Strategy])
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory (overrides out_dir)")
        if name == "fetch":
            p.add_argument("--force", action="store_true", help="re-download existing files")
        if name == "evaluate":
            p.add_argument("--checkpoint", help="defaults to the run directory's model.ckpt")
    return parser


def resolve_config(args):
    cfg = config_mod.load(args.config)
    changes = {}
    if args.horizon is not None:
        changes["horizons"] = (args.horizon,)
    if args.variant is not None:
        changes["variants"] = (Variant(args.variant),)
    if args.split is not None:
        changes["splits"] = (dataset.Strategy(args.split),)
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out is not None:
        changes["out_dir"] = args.out
    return cfg.replace(**changes) if changes else cfg


def _run(args):
    cfg = resolve_config(args)
    if args.command == "fetch":
        res = pipeline.cmd_fetch(cfg, force=args.force)
        print(f"downloaded {len(res.downloaded)}, skipped {len(res.skipped)}, failed {len(res.failed)}")
        for t, err in sorted(res.failed.items()):
            print(f"failed {t}: {err}", file=sys.stderr)
        return EXIT_DATA if res.failed else EXIT_OK
    if args.command == "build":
        built = pipeline.cmd_build(cfg)
        for (variant, horizon), (samples, skipped) in built.items():
            print(f"{variant.value} h={horizon}: {len(samples)} samples, {len(skipped)} tickers skipped")
        return EXIT_OK
    if args.command == "train":
        _, history, parts = pipeline.cmd_train(cfg)
        last = history[-1]
        print(f"trained on {len(parts.train)} samples: epoch {last.epoch} loss {last.loss:.6f} acc {last.accuracy:.4f}")
        return EXIT_OK
    if args.command == "evaluate":
        cell = pipeline.cmd_evaluate(cfg, args.checkpoint)
        banner = report.leakage_banner([cell.strategy])
        if banner:
            print(banner, file=sys.stderr)
        sys.stdout.write(report.results_tsv([cell]))
        return EXIT_OK
    rep = pipeline.cmd_matrix(cfg)
    sys.stdout.write(report.report_text(rep.cells, rep.provenance))
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _run(args)
    except config_mod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonFiniteLoss as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (
        market_data.MarketDataError,
        dataset.DatasetError,
        ImagingError,
        EmptyDataset,
        CheckpointError,
        OSError,
    ) as exc:
        print(f"data error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
