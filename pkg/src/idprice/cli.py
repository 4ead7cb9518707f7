"""``idprice`` command line: explore, train, generate, evaluate.

Exit codes: 0 success, 1 usage/config, 2 data, 3 numerical divergence/quality.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from dataclasses import asdict, dataclass
from dataclasses import field as dc_field
from datetime import date, datetime, timedelta
from pathlib import Path
from typing import Optional

import numpy as np

from . import dcgan, lstm, nuts
from .checkpoint import Checkpoint, fingerprint
from .errors import ConfigError, DataError, DomainError, IdPriceError, UsageError
from .evaluation import DEFAULT_BINS, compare_report, empirical_pdf
from .market_data import (
    COLUMNS,
    FIELD_KINDS,
    MarketSeries,
    day_profiles,
    field_column,
    field_sequence,
    load_market_csv,
    price_variation,
    similar_price_fraction,
    sliding_windows,
    volume_share,
)
from .numerics import MinMaxScaler, SeededRng

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

CI_ENV = "IDPRICE_CI"
MODELS = ("lstm", "dcgan", "nuts")


# ---------------------------------------------------------------- config


@dataclass(frozen=True)
class DateRange:
    start: date
    end: date

    @classmethod
    def parse(cls, text: str) -> "DateRange":
        """``YYYY`` or ``YYYY-MM-DD:YYYY-MM-DD`` (both ends inclusive)."""
        text = str(text).strip()
        try:
            if ":" in text:
                a, b = text.split(":", 1)
                rng = cls(date.fromisoformat(a.strip()), date.fromisoformat(b.strip()))
            else:
                year = int(text)
                rng = cls(date(year, 1, 1), date(year, 12, 31))
        except ValueError:
            raise ConfigError(f"invalid date range {text!r}; use YYYY or YYYY-MM-DD:YYYY-MM-DD") from None
        if rng.end < rng.start:
            raise ConfigError(f"date range {text!r} ends before it starts")
        return rng

    def overlaps(self, other: "DateRange") -> bool:
        return self.start <= other.end and other.start <= self.end

    def __str__(self):
        return f"{self.start.isoformat()}:{self.end.isoformat()}"


@dataclass
class RunConfig:
    input: Optional[str] = None
    zone: Optional[str] = None
    field: str = "avg"
    train_range: DateRange = dc_field(default_factory=lambda: DateRange.parse("2020"))
    test_range: Optional[DateRange] = dc_field(default_factory=lambda: DateRange.parse("2021"))
    out: str = "."
    seed: Optional[int] = None
    lstm: dict = dc_field(default_factory=dict)
    dcgan: dict = dc_field(default_factory=dict)
    nuts: dict = dc_field(default_factory=dict)

    def validate(self):
        if self.field not in FIELD_KINDS:
            raise ConfigError(f"unknown price field {self.field!r}; choose from {sorted(FIELD_KINDS)}")
        if self.test_range is not None and self.train_range.overlaps(self.test_range):
            raise ConfigError(f"train range {self.train_range} and test range {self.test_range} overlap")
        if not self.out:
            raise ConfigError("output directory must be non-empty")
        if self.input is not None and not str(self.input):
            raise ConfigError("input path must be non-empty")


# flag name -> (model block or None, key inside the block)
_MODEL_FLAGS = {
    "epochs": ("lstm", "dcgan"),
    "hidden": ("lstm", "dcgan"),
    "window": ("lstm",),
    "learning_rate": ("lstm",),
    "latent": ("dcgan",),
    "architecture": ("dcgan",),
    "batch_size": ("dcgan",),
    "components": ("nuts",),
    "warmup": ("nuts",),
    "samples": ("nuts",),
    "target_accept": ("nuts",),
    "max_depth": ("nuts",),
    "hour": ("nuts",),
}


def load_config_file(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid config file {path}: {exc}") from None


def build_config(args: argparse.Namespace) -> RunConfig:
    """Merge the optional config file with command-line flags; flags win."""
    doc = load_config_file(args.config) if getattr(args, "config", None) else {}
    blocks = {m: dict(doc.get(m, {})) for m in MODELS}
    top = {k: v for k, v in doc.items() if k not in MODELS}
    unknown = set(top) - {"input", "zone", "field", "train_range", "test_range", "out", "seed"} - set(_MODEL_FLAGS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key, models in _MODEL_FLAGS.items():
        if key in top:
            for m in models:
                blocks[m].setdefault(key, top[key])
        flag = getattr(args, key, None)
        if flag is not None:
            for m in models:
                blocks[m][key] = flag

    def pick(name, default=None):
        v = getattr(args, name, None)
        return v if v is not None else top.get(name, default)

    test = pick("test_range", "2021")
    cfg = RunConfig(
        input=pick("input"),
        zone=pick("zone"),
        field=pick("field", "avg"),
        train_range=DateRange.parse(pick("train_range", "2020")),
        test_range=None if str(test).lower() == "none" else DateRange.parse(test),
        out=pick("out", "."),
        seed=pick("seed"),
        **blocks,
    )
    cfg.validate()
    return cfg


def _require_seed(args, what):
    if os.environ.get(CI_ENV) == "1" and getattr(args, "seed", None) is None:
        raise UsageError(f"{what} is randomized: --seed is required when {CI_ENV}=1")


# ---------------------------------------------------------------- helpers


def _fmt(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue(), encoding="utf-8")


def _outdir(cfg_out) -> Path:
    out = Path(cfg_out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_series(path) -> MarketSeries:
    if not path:
        raise UsageError("--input is required")
    try:
        series = load_market_csv(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    for w in series.warnings:
        print(f"warning: {path}: {w}", file=sys.stderr)
    return series


def _select_zone(series: MarketSeries, zone: Optional[str]) -> str:
    if zone is None:
        if len(series.zones) == 1:
            return series.zones[0]
        raise UsageError(f"--zone is required; input has zones {list(series.zones)}")
    if zone not in series.zones:
        raise DataError(f"no data for zone {zone!r}")
    return zone


def _subset(series, zone, rng: DateRange):
    return series.filter(zones={zone}, start=rng.start, end=rng.end)


# ---------------------------------------------------------------- explore


def cmd_explore(args) -> int:
    cfg = build_config(args)
    series = _load_series(cfg.input)
    if cfg.zone is not None:
        zones = [z.strip() for z in cfg.zone.split(",") if z.strip()]
        missing = [z for z in zones if z not in series.zones]
        if missing:
            raise DataError(f"no data for zone {', '.join(missing)}")
        series = series.filter(zones=set(zones))
    if len(series) == 0:
        raise DataError("no data for zone selection")
    out = _outdir(cfg.out)

    rows = []
    for r in series.records:
        var = ""
        if r.id_high is not None and r.id_low is not None and r.id_avg not in (None, 0.0):
            var = _fmt(price_variation(r.id_high, r.id_low, r.id_avg))
        rows.append([r.timestamp.isoformat(), r.zone, _fmt(r.id_high), _fmt(r.id_low), _fmt(r.id_avg), var])
    _write_csv(out / "variation.csv", ["timestamp", "zone", "id_high", "id_low", "id_avg", "variation_pct"], rows)

    kinds = ("da", "high", "low", "last", "avg")
    rows = []
    if len(series.zones) >= 2:
        years = sorted({r.timestamp.year for r in series.records})
        for y in years:
            sub = series.filter(start=date(y, 1, 1), end=date(y, 12, 31))
            row = [y]
            for k in kinds:
                zones_here = [z for z in series.zones if z in sub.zones]
                try:
                    res = similar_price_fraction(sub, zones_here, k)
                    row += [_fmt(res.percent), res.count, res.total]
                except (DataError, DomainError):
                    row += ["", "", ""]
            rows.append(row)
    header = ["year"] + [f"{k}_{c}" for k in kinds for c in ("pct", "same", "hours")]
    _write_csv(out / "similar_prices.csv", header, rows)

    da_volumes = _read_da_volumes(args.da_volumes) if getattr(args, "da_volumes", None) else {}
    rows = []
    for z in series.zones:
        recs = series.zone_records(z)
        for side, col in (("Buy", "buy_volume"), ("Sell", "sell_volume")):
            idv = sum(getattr(r, col) or 0.0 for r in recs)
            dav = da_volumes.get((z, side.lower()))
            share = _fmt(volume_share(idv, dav)) if dav is not None else ""
            rows.append([z, side, _fmt(dav), _fmt(idv), share])
    _write_csv(out / "volume_share.csv", ["zone", "type", "da_volume", "id_volume", "id_share_pct"], rows)

    rows = []
    for z in series.zones:
        vals = [r.get(cfg.field) for r in series.zone_records(z)]
        vals = [v for v in vals if v is not None]
        if not vals:
            continue
        h = empirical_pdf(vals, int(getattr(args, "bins", None) or DEFAULT_BINS))
        for i in range(h.density.size):
            rows.append([z, cfg.field, _fmt(h.edges[i]), _fmt(h.edges[i + 1]), _fmt(h.density[i])])
    _write_csv(out / "histograms.csv", ["zone", "field", "bin_left", "bin_right", "density"], rows)
    return 0


def _read_da_volumes(path) -> dict:
    """``zone,side,da_volume`` rows, side in buy/sell."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    out = {}
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or not {"zone", "side", "da_volume"} <= set(reader.fieldnames):
        raise DataError(f"{path}: header must contain zone,side,da_volume")
    for row in reader:
        try:
            out[(row["zone"].strip(), row["side"].strip().lower())] = float(row["da_volume"])
        except ValueError:
            raise DataError(f"{path}: line {reader.line_num}: invalid da_volume {row['da_volume']!r}") from None
    return out


# ---------------------------------------------------------------- train


def _nuts_config(block, seed) -> nuts.NutsConfig:
    kw = {"seed": 42 if seed is None else int(seed)}
    for src, dst in (("warmup", "warmup"), ("samples", "samples"), ("target_accept", "target_accept"), ("max_depth", "max_depth")):
        if block.get(src) is not None:
            kw[dst] = block[src]
    try:
        return nuts.NutsConfig(**kw)
    except DomainError as exc:
        raise ConfigError(f"invalid nuts configuration: {exc}") from None


def _lstm_hyper(block, seed) -> lstm.LstmHyper:
    kw = {"seed": 42 if seed is None else int(seed)}
    for src, dst in (("epochs", "epochs"), ("hidden", "hidden_dim"), ("window", "window"), ("learning_rate", "learning_rate")):
        if block.get(src) is not None:
            kw[dst] = block[src]
    try:
        return lstm.LstmHyper(**kw)
    except DomainError as exc:
        raise ConfigError(f"invalid lstm configuration: {exc}") from None


def _gan_hyper(block, seed) -> dcgan.GanHyper:
    kw = {"seed": 42 if seed is None else int(seed)}
    for src, dst in (("epochs", "epochs"), ("hidden", "hidden"), ("latent", "latent_dim"), ("architecture", "architecture"), ("batch_size", "batch_size")):
        if block.get(src) is not None:
            kw[dst] = block[src]
    try:
        return dcgan.GanHyper(**kw)
    except DomainError as exc:
        raise ConfigError(f"invalid dcgan configuration: {exc}") from None


def cmd_train(args) -> int:
    _require_seed(args, "train")
    cfg = build_config(args)
    model = args.model
    # validate the model block before touching any data
    if model == "nuts":
        ncfg = _nuts_config(cfg.nuts, cfg.seed)
        if not 1 <= int(cfg.nuts.get("components", 2)) <= 5:
            raise ConfigError("--components must be between 1 and 5")
    elif model == "lstm":
        hyper = _lstm_hyper(cfg.lstm, cfg.seed)
    else:
        ghyper = _gan_hyper(cfg.dcgan, cfg.seed)

    series = _load_series(cfg.input)
    zone = _select_zone(series, cfg.zone)
    train = _subset(series, zone, cfg.train_range)
    if len(train) == 0:
        raise DataError(f"no {zone} records in train range {cfg.train_range}")
    out = _outdir(cfg.out)
    common = {"zone": zone, "field": cfg.field, "train_range": str(cfg.train_range), "test_range": str(cfg.test_range) if cfg.test_range else None}

    if model == "lstm":
        train_seq = field_sequence(train, zone, cfg.field)
        finite = [v for v in train_seq if v is not None]
        scaler = MinMaxScaler.fit(finite)
        scaled = [None if v is None else float(scaler.transform(v)) for v in train_seq]
        train_pairs = sliding_windows(scaled, hyper.window)
        if not train_pairs:
            raise DataError(f"train range has no gap-free stretch longer than the window ({hyper.window} h)")
        test_pairs = []
        if cfg.test_range is not None:
            test = _subset(series, zone, cfg.test_range)
            if len(test):
                test_seq = field_sequence(test, zone, cfg.field)
                test_pairs = sliding_windows([None if v is None else float(scaler.transform(v)) for v in test_seq], hyper.window)
        res = lstm.train_lstm(train_pairs, hyper, test_pairs or None)
        ckpt = Checkpoint(
            "lstm",
            hyper=asdict(hyper),
            params=res.params.to_dict(),
            scaler=scaler,
            seed=hyper.seed,
            data_fingerprint=fingerprint(finite),
            extra=common,
        )
        rows = [[e + 1, _fmt(a), "" if np.isnan(b) else _fmt(b)] for e, (a, b) in enumerate(zip(res.train_loss, res.test_loss))]
        _write_csv(out / "history.csv", ["epoch", "train_mse", "test_mse"], rows)

    elif model == "dcgan":
        profiles = np.array([p.as_array() for p in day_profiles(train, zone, cfg.field)])
        if profiles.size == 0:
            raise DataError("train range contains no complete 24-hour profiles")
        if ghyper.batch_size > len(profiles):
            ghyper = dcgan.GanHyper(**{**ghyper.to_dict(), "channels": ghyper.channels, "batch_size": len(profiles)})
        scaler = MinMaxScaler.fit(profiles)
        res = dcgan.train_dcgan(scaler.transform(profiles), ghyper)
        params = {f"G/{k}": v for k, v in res.generator.params.items()}
        params.update({f"D/{k}": v for k, v in res.discriminator.params.items()})
        ckpt = Checkpoint(
            "dcgan",
            hyper=ghyper.to_dict(),
            params=params,
            scaler=scaler,
            seed=ghyper.seed,
            data_fingerprint=fingerprint(profiles),
            extra=common,
        )
        rows = [[e + 1, _fmt(v), _fmt(g)] for e, (v, g) in enumerate(zip(res.value_history, res.g_loss_history))]
        _write_csv(out / "history.csv", ["epoch", "minimax_value", "generator_loss"], rows)

    else:
        hour = cfg.nuts.get("hour")
        values = np.array([
            r.get(cfg.field) for r in train.records
            if r.get(cfg.field) is not None and (hour is None or r.timestamp.hour == int(hour))
        ])
        if values.size == 0:
            raise DataError("no observed prices to fit in the train range")
        mixture = nuts.MixtureModel.from_data(values, int(cfg.nuts.get("components", 2)))
        samples = nuts.nuts_sample(mixture, values, ncfg)
        ckpt = Checkpoint(
            "nuts",
            hyper={"n_components": mixture.n_components, "prior_mean": mixture.prior_mean, "prior_scale": mixture.prior_scale, **ncfg.to_dict()},
            params={"draws": samples.draws},
            seed=ncfg.seed,
            data_fingerprint=fingerprint(values),
            extra={**common, "hour": hour, "names": list(samples.names)},
        )
        write_samples_csv(out / "history.csv", samples)

    ckpt.save(out / "checkpoint.json")
    return 0


def write_samples_csv(path: Path, samples: nuts.PosteriorSamples) -> None:
    header = list(samples.names) + ["tree_depth", "divergent", "step_size", "accept_stat"]
    rows = []
    for i in range(len(samples)):
        rows.append([_fmt(v) for v in samples.draws[i]] + [
            int(samples.tree_depth[i]), int(samples.divergent[i]), _fmt(samples.step_size[i]), _fmt(samples.accept_stat[i]),
        ])
    _write_csv(path, header, rows)


# ---------------------------------------------------------------- generate


def _load_checkpoint(path) -> Checkpoint:
    if not path:
        raise UsageError("--checkpoint is required")
    try:
        return Checkpoint.load(path)
    except OSError as exc:
        raise DataError(f"cannot read checkpoint {path}: {exc.strerror}") from None


def cmd_generate(args) -> int:
    ckpt = _load_checkpoint(args.checkpoint)
    kind = ckpt.kind
    dates = args.date or []
    if kind == "lstm":
        if not dates:
            raise UsageError("lstm checkpoints generate per date: pass --date YYYY-MM-DD")
        if args.count is not None:
            raise UsageError("--count applies to dcgan/nuts checkpoints, not lstm")
    else:
        if dates:
            raise UsageError(f"--date applies to lstm checkpoints, not {kind}")
        if args.count is None:
            raise UsageError(f"{kind} checkpoints need --count")
        if args.count < 0:
            raise UsageError("--count must be non-negative")
        _require_seed(args, "generate")
    out = _outdir(args.out or ".")
    seed = 0 if args.seed is None else int(args.seed)

    if kind == "lstm":
        series = _load_series(args.input)
        params = lstm.LstmParams.from_dict(ckpt.params)
        zone = ckpt.extra.get("zone")
        field_kind = ckpt.extra.get("field", "avg")
        if zone not in series.zones:
            raise DataError(f"no data for zone {zone!r} in {args.input}")
        window = int(ckpt.hyper["window"])
        rows = []
        for d in dates:
            try:
                day = date.fromisoformat(d)
            except ValueError:
                raise UsageError(f"invalid --date {d!r}") from None
            history, actual = _history_before(series, zone, field_kind, day, window)
            prices = lstm.generate_prices(params, ckpt.scaler, history, 24, actuals=actual if args.one_step else None)
            rows += [[day.isoformat(), h, _fmt(p)] for h, p in enumerate(prices)]
        _write_csv(out / "scenarios.csv", ["date", "hour", "price"], rows)

    elif kind == "dcgan":
        hyper = dcgan.GanHyper.from_dict(ckpt.hyper)
        G = dcgan.Network(dcgan.generator_layers(hyper), {k[2:]: v for k, v in ckpt.params.items() if k.startswith("G/")})
        prices = dcgan.sample_prices(G, ckpt.scaler, args.count, SeededRng(seed))
        _write_csv(out / "scenarios.csv", [f"h{h:02d}" for h in range(24)], [[_fmt(v) for v in row] for row in prices])

    else:
        h = ckpt.hyper
        mixture = nuts.MixtureModel(int(h["n_components"]), float(h["prior_mean"]), float(h["prior_scale"]))
        draws = ckpt.params["draws"]
        n = draws.shape[0]
        samples = nuts.PosteriorSamples(
            draws, tuple(ckpt.extra.get("names", mixture.param_names)),
            np.zeros(n, int), np.zeros(n, bool), np.zeros(n), np.zeros(n), np.zeros(n, int), draws,
        )
        values = nuts.posterior_predictive(mixture, samples, args.count, SeededRng(seed)) if args.count else np.zeros(0)
        _write_csv(out / "scenarios.csv", ["price"], [[_fmt(v)] for v in values])
    return 0


def _history_before(series, zone, field_kind, day, window):
    """The ``window`` hourly values right before ``day`` and the day's actuals."""
    col = field_column(field_kind)
    start = datetime.combine(day, datetime.min.time())
    recs = series.zone_records(zone)
    by_ts = {r.timestamp.replace(tzinfo=None): getattr(r, col) for r in recs}
    hist = []
    for k in range(window, 0, -1):
        v = by_ts.get(start - timedelta(hours=k))
        if v is None:
            raise DataError(f"missing {field_kind} price at {(start - timedelta(hours=k)).isoformat()} needed to seed {day}")
        hist.append(v)
    actual = [by_ts.get(start + timedelta(hours=k)) for k in range(24)]
    actual = None if any(v is None for v in actual) else actual
    return hist, actual


# ---------------------------------------------------------------- evaluate


def read_price_file(path, field_kind="avg") -> np.ndarray:
    """Numeric values from a price CSV.

    Market files contribute the chosen price column, files with a ``price``
    column contribute that column, anything else contributes every non-empty
    cell.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in header]
    if tuple(header) == COLUMNS:
        cols = [header.index(field_column(field_kind))]
    elif "price" in header:
        cols = [header.index("price")]
    else:
        cols = list(range(len(header)))
    values = []
    for row in reader:
        for c in cols:
            if c < len(row) and row[c].strip():
                try:
                    values.append(float(row[c]))
                except ValueError:
                    raise DataError(f"{path}: line {reader.line_num}: not a number: {row[c]!r}") from None
    if not values:
        raise DataError(f"{path}: no price values")
    return np.array(values)


def cmd_evaluate(args) -> int:
    if not args.actual or not args.generated:
        raise UsageError("--actual and --generated are required")
    a = read_price_file(args.actual, args.field or "avg")
    g = read_price_file(args.generated, args.field or "avg")
    report = compare_report(a, g, int(args.bins or DEFAULT_BINS))
    out = _outdir(args.out or ".")
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    (out / "histograms.csv").write_text(report.histogram_csv(), encoding="utf-8")
    return 0


# ---------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="idprice", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def data_flags(sp):
        sp.add_argument("--config", help="TOML file with defaults (flags override)")
        sp.add_argument("--input", help="market CSV")
        sp.add_argument("--zone")
        sp.add_argument("--field", choices=sorted(FIELD_KINDS))
        sp.add_argument("--out", help="output directory")

    ex = sub.add_parser("explore", help="exploratory market statistics")
    data_flags(ex)
    ex.add_argument("--bins", type=int)
    ex.add_argument("--da-volumes", help="CSV zone,side,da_volume for ID/DA volume shares")
    ex.set_defaults(func=cmd_explore)

    tr = sub.add_parser("train", help="fit a model and write a checkpoint")
    data_flags(tr)
    tr.add_argument("--model", choices=MODELS, required=True)
    tr.add_argument("--train-range")
    tr.add_argument("--test-range", help="date range or 'none'")
    tr.add_argument("--epochs", type=int)
    tr.add_argument("--hidden", type=int)
    tr.add_argument("--window", type=int)
    tr.add_argument("--learning-rate", type=float)
    tr.add_argument("--latent", type=int)
    tr.add_argument("--architecture", choices=("conv", "dense"))
    tr.add_argument("--batch-size", type=int)
    tr.add_argument("--components", type=int)
    tr.add_argument("--warmup", type=int)
    tr.add_argument("--samples", type=int)
    tr.add_argument("--target-accept", type=float)
    tr.add_argument("--max-depth", type=int)
    tr.add_argument("--hour", type=int, help="fit only this hour of day (nuts)")
    tr.add_argument("--seed", type=int)
    tr.set_defaults(func=cmd_train)

    ge = sub.add_parser("generate", help="scenarios from a checkpoint")
    ge.add_argument("--checkpoint", required=True)
    ge.add_argument("--input", help="market CSV supplying history (lstm)")
    ge.add_argument("--count", type=int)
    ge.add_argument("--date", action="append", help="delivery date (lstm); repeatable")
    ge.add_argument("--one-step", action="store_true", help="lstm: advance the window with observed prices")
    ge.add_argument("--seed", type=int)
    ge.add_argument("--out", help="output directory")
    ge.set_defaults(func=cmd_generate)

    ev = sub.add_parser("evaluate", help="compare actual and generated prices")
    ev.add_argument("--actual", required=True)
    ev.add_argument("--generated", required=True)
    ev.add_argument("--field", choices=sorted(FIELD_KINDS))
    ev.add_argument("--bins", type=int)
    ev.add_argument("--out", help="output directory")
    ev.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except IdPriceError as exc:
        print(f"idprice: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"idprice: error: {exc.filename or ''}: {exc.strerror}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
