"""fetch -> build -> train -> evaluate, and the full experiment grid.

On-disk layout under ``config.out_dir``::

    build/<variant>/h<horizon>/manifest.tsv, images.npy, counts.tsv
    runs/<split>/<variant>/h<horizon>/model.ckpt, history.tsv, eval.tsv
    results.tsv, report.json, report.txt, figures/*.svg
"""
from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path

from candlecnn import __version__, dataset, market_data, metrics, report
from candlecnn._accel import backend_name
from candlecnn.imaging import ChartStyle, Variant
from candlecnn.ioutil import atomic_write_bytes, atomic_write_text
from candlecnn.nn import checkpoint
from candlecnn.nn.model import default_spec
from candlecnn.nn.training import EmptyDataset, train

log = logging.getLogger(__name__)


class EmptyTestSet(dataset.DatasetError):
    pass


class MissingData(dataset.DatasetError):
    pass


def store_dir(cfg, variant, horizon):
    return Path(cfg.out_dir) / "build" / Variant(variant).value / f"h{horizon}"


def run_dir(cfg, strategy, variant, horizon):
    return (
        Path(cfg.out_dir) / "runs" / dataset.Strategy(strategy).value
        / Variant(variant).value / f"h{horizon}"
    )


def style_for(cfg, variant):
    return ChartStyle(Variant(variant), cfg.image_width, cfg.image_height)


def model_spec(cfg):
    return default_spec((3, cfg.image_height, cfg.image_width))


def data_paths(cfg):
    data_dir = Path(cfg.data_dir)
    if cfg.tickers:
        return [data_dir / f"{t}.csv" for t in cfg.tickers]
    return sorted(data_dir.glob("*.csv"))


def data_hash(cfg):
    """SHA-256 over the input CSV names and bytes, in load order."""
    h = hashlib.sha256()
    for p in data_paths(cfg):
        h.update(p.name.encode("utf-8") + b"\0")
        h.update(p.read_bytes() if p.exists() else b"")
        h.update(b"\0")
    return h.hexdigest()


def provenance(cfg):
    return {
        "config_hash": cfg.config_hash(),
        "data_hash": data_hash(cfg),
        "code_version": __version__,
        "backend": backend_name(),
        "seed": cfg.seed,
    }


# ---------------------------------------------------------------------------
# fetch
# ---------------------------------------------------------------------------


@dataclass
class FetchResult:
    downloaded: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    failed: dict = field(default_factory=dict)


def cmd_fetch(cfg, force=False):
    """One CSV per ticker in ``data_dir``; a failing ticker does not stop the rest."""
    if not cfg.endpoint:
        raise MissingData("config has no endpoint to fetch from")
    if not cfg.tickers:
        raise MissingData("config lists no tickers to fetch")
    data_dir = Path(cfg.data_dir)
    result = FetchResult()
    for ticker in cfg.tickers:
        path = data_dir / f"{ticker}.csv"
        if path.exists() and not force:
            result.skipped.append(ticker)
            continue
        try:
            series = market_data.fetch_remote(ticker, cfg.train_start, cfg.test_end, cfg.endpoint)
        except market_data.MarketDataError as exc:
            log.error("fetch %s failed: %s", ticker, exc)
            result.failed[ticker] = str(exc)
            continue
        atomic_write_bytes(path, market_data.serialize_csv(series))
        result.downloaded.append(ticker)
    return result


# ---------------------------------------------------------------------------
# build
# ---------------------------------------------------------------------------


def load_series(cfg):
    paths = data_paths(cfg)
    if not paths:
        raise MissingData(f"no CSV files in {cfg.data_dir}")
    out = []
    for p in paths:
        if not p.exists():
            raise MissingData(f"missing data file {p}")
        series = market_data.load_csv(p).between(cfg.train_start, cfg.test_end)
        problems = market_data.validate(series)
        if problems:
            log.warning("%s: %d bar-invariant violations (first: %s)", series.ticker, len(problems), problems[0])
        out.append(series)
    return out


def build_cell(cfg, series_list, variant, horizon):
    style = style_for(cfg, variant)
    samples, skipped = dataset.build_dataset(series_list, horizon, style)
    d = store_dir(cfg, variant, horizon)
    dataset.write_store(d, samples)
    counts = {}
    for s in samples:
        counts[s.ticker] = counts.get(s.ticker, 0) + 1
    lines = ["ticker\tsamples\tnote"]
    for series in series_list:
        t = series.ticker
        lines.append(f"{t}\t{counts.get(t, 0)}\t{skipped.get(t, '')}")
        log.info("%s %s h=%d: %d samples", Variant(variant).value, t, horizon, counts.get(t, 0))
    atomic_write_text(d / "counts.tsv", "\n".join(lines) + "\n")
    return samples, skipped


def cmd_build(cfg):
    """Build and store samples for every requested (variant, horizon)."""
    series_list = load_series(cfg)
    built = {}
    for variant in cfg.variants:
        for horizon in cfg.horizons:
            built[(Variant(variant), horizon)] = build_cell(cfg, series_list, variant, horizon)
    return built


# ---------------------------------------------------------------------------
# train / evaluate
# ---------------------------------------------------------------------------


def split_samples(cfg, samples, strategy):
    return dataset.split(
        samples,
        strategy,
        test_ratio=cfg.test_ratio,
        train_ratio=cfg.train_ratio,
        cutoff=cfg.cutoff,
        seed=cfg.seed,
    )


def _load_store(cfg, variant, horizon):
    d = store_dir(cfg, variant, horizon)
    if not (d / "manifest.tsv").exists():
        raise MissingData(f"no manifest in {d}; run build first")
    return dataset.read_store(d)


def history_tsv(history):
    lines = ["epoch\tloss\taccuracy"]
    lines += [f"{h.epoch}\t{h.loss!r}\t{h.accuracy!r}" for h in history]
    return "\n".join(lines) + "\n"


def train_cell(cfg, samples, strategy, variant, horizon):
    parts = split_samples(cfg, samples, strategy)
    if not parts.train:
        raise EmptyDataset("training partition is empty")
    if not parts.test:
        log.warning("test partition is empty; training anyway")
    tc = cfg.train_config()
    x, y = dataset.stack(parts.train, tc.dtype)
    model, history = train(model_spec(cfg), x, y, tc)
    d = run_dir(cfg, strategy, variant, horizon)
    checkpoint.save(d / "model.ckpt", model)
    atomic_write_text(d / "history.tsv", history_tsv(history))
    return model, history, parts


def cmd_train(cfg):
    """Train the first (split, variant, horizon) of the config."""
    strategy, variant, horizon = cfg.splits[0], cfg.variants[0], cfg.horizons[0]
    samples = _load_store(cfg, variant, horizon)
    return train_cell(cfg, samples, strategy, variant, horizon)


def evaluate_cell(cfg, model, parts, strategy, variant, horizon):
    if not parts.test:
        raise EmptyTestSet("test partition is empty")
    x, y = dataset.stack(parts.test, model.dtype)
    pred, _ = model.predict(x)
    cell = report.Cell(
        dataset.Strategy(strategy).value,
        Variant(variant).value,
        horizon,
        metrics.confusion(pred, y),
        len(parts.train),
        len(parts.test),
    )
    atomic_write_text(
        run_dir(cfg, strategy, variant, horizon) / "eval.tsv", report.results_tsv([cell])
    )
    return cell


def cmd_evaluate(cfg, checkpoint_path=None):
    strategy, variant, horizon = cfg.splits[0], cfg.variants[0], cfg.horizons[0]
    path = checkpoint_path or run_dir(cfg, strategy, variant, horizon) / "model.ckpt"
    model = checkpoint.load(path, expected_spec=model_spec(cfg))
    parts = split_samples(cfg, _load_store(cfg, variant, horizon), strategy)
    return evaluate_cell(cfg, model, parts, strategy, variant, horizon)


# ---------------------------------------------------------------------------
# matrix
# ---------------------------------------------------------------------------


@dataclass
class MatrixReport:
    cells: list
    provenance: dict
    out_dir: Path


def cmd_matrix(cfg):
    """Every (split, variant, horizon) cell; failures are recorded, not raised."""
    series_list = load_series(cfg)
    cells = []
    cache = {}
    for strategy in cfg.splits:
        for variant in cfg.variants:
            for horizon in cfg.horizons:
                names = (dataset.Strategy(strategy).value, Variant(variant).value, horizon)
                try:
                    key = (Variant(variant), horizon)
                    if key not in cache:
                        cache[key] = build_cell(cfg, series_list, variant, horizon)[0]
                    samples = cache[key]
                    if not samples:
                        raise dataset.SeriesTooShort("no ticker is long enough for this horizon")
                    model, _, parts = train_cell(cfg, samples, strategy, variant, horizon)
                    cells.append(evaluate_cell(cfg, model, parts, strategy, variant, horizon))
                except (dataset.DatasetError, EmptyDataset, ValueError) as exc:
                    log.error("cell %s/%s/h%d failed: %s", *names, exc)
                    cells.append(report.Cell(*names, error=f"{type(exc).__name__}: {exc}"))
    out = Path(cfg.out_dir)
    prov = provenance(cfg)
    atomic_write_text(out / "results.tsv", report.results_tsv(cells))
    atomic_write_text(out / "report.json", report.report_json(cells, prov))
    atomic_write_text(out / "report.txt", report.report_text(cells, prov))
    atomic_write_text(out / "config.txt", cfg.dumps())
    report.write_figures(out / "results.tsv", out / "figures")
    return MatrixReport(cells, prov, out)
