"""Config-driven orchestration: ingest, diagnostics, GARCH, marginals, copulas, risk, spillover.

Every random draw comes from a named substream of the master seed, so a stage
produces the same numbers whether it runs alone or inside the full pipeline.
Reports carry no timestamps; a fixed (config, seed) gives byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import PipelineConfig
from .copula import FAMILIES as COPULA_FAMILIES, dependence_summary, fit_copula
from .data_ingest import align_calendars, diagnostics, log_returns, rank_correlations, read_price_csv
from .errors import ConfigError, FitError, NumericError, TailRiskError
from .evt_marginals import compare_marginals, pit_transform
from .garch import GarchSpec, rolling_forecast, select_arma_order, select_model
from .risk import (
    ForecastStream,
    PortfolioSpec,
    RiskLevels,
    estimate_from_sample,
    evaluate_methods,
    mcs_standardized_draws,
    min_variance_weights,
    parametric_t_estimate,
    portfolio_returns,
    risk_from_draws,
)
from .spillover import fit_var, gfevd, rolling_spillover

log = logging.getLogger(__name__)

STAGES = ("ingest", "diagnostics", "garch", "marginals", "copulas", "risk", "spillover")
_REQUIRES = {
    "ingest": (),
    "diagnostics": ("ingest",),
    "garch": ("ingest",),
    "marginals": ("garch",),
    "copulas": ("marginals",),
    "risk": ("copulas",),
    "spillover": ("ingest",),
}


def substream(seed: int, *names: str) -> np.random.SeedSequence:
    """Child of the master seed keyed by stage / asset / window names."""
    return np.random.SeedSequence(seed, spawn_key=tuple(zlib.crc32(n.encode()) for n in names))


def substream_int(seed: int, *names: str) -> int:
    return int(substream(seed, *names).generate_state(1)[0])


def stage_closure(stage: str) -> list:
    """``stage`` and everything it depends on, in execution order."""
    need = set()

    def visit(s):
        if s not in need:
            need.add(s)
            for r in _REQUIRES[s]:
                visit(r)

    visit(stage)
    return [s for s in STAGES if s in need]


@dataclass
class Context:
    cfg: PipelineConfig
    out: Path
    returns: dict = field(default_factory=dict)
    garch: dict = field(default_factory=dict)
    marginals: dict = field(default_factory=dict)
    copulas: dict = field(default_factory=dict)
    forecasts: dict = field(default_factory=dict)  # portfolio label -> list of ForecastStream
    files: dict = field(default_factory=dict)

    @property
    def seed(self) -> int:
        return self.cfg.seed

    def estimation(self, asset):
        return self.returns[asset].slice(0, self.cfg.risk.window)


# ---------------------------------------------------------------------------
# writers


def _num(v) -> str:
    return "nan" if v is None or (isinstance(v, float) and np.isnan(v)) else format(float(v), ".10g")


def _write_json(ctx: Context, stage: str, name: str, obj) -> None:
    path = ctx.out / name
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"
    path.write_text(text)
    ctx.files.setdefault(stage, {})[name] = hashlib.sha256(text.encode()).hexdigest()


def _write_csv(ctx: Context, stage: str, name: str, rows) -> None:
    path = ctx.out / name
    with path.open("w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)
    ctx.files.setdefault(stage, {})[name] = hashlib.sha256(path.read_bytes()).hexdigest()


def _level_label(level) -> str:
    if isinstance(level, tuple):
        return f"{level[0]:g}-{level[1]:g}"
    return f"{level:g}"


# ---------------------------------------------------------------------------
# stages


def stage_ingest(ctx: Context) -> None:
    prices = [read_price_csv(ctx.cfg.data_path(a), a) for a in ctx.cfg.assets]
    if len(prices) >= 2:
        prices = align_calendars(prices)
    ctx.returns = {p.asset_id: log_returns(p) for p in prices}
    n = len(next(iter(ctx.returns.values())))
    log.info("ingest: %d assets, %d aligned returns", len(prices), n)


def stage_diagnostics(ctx: Context) -> None:
    assets = ctx.cfg.assets
    report = {"assets": {}, "rank_correlations": {}}
    for a in assets:
        report["assets"][a] = diagnostics(ctx.returns[a], lags=ctx.cfg.diagnostics_lags).to_dict()
        report["assets"][a]["n"] = len(ctx.returns[a])
    for i, a in enumerate(assets):
        for b in assets[i + 1 :]:
            rho, tau = rank_correlations(ctx.returns[a], ctx.returns[b])
            report["rank_correlations"][f"{a}-{b}"] = {"spearman": rho, "kendall": tau}
    _write_json(ctx, "diagnostics", "diagnostics.json", report)


def stage_garch(ctx: Context) -> None:
    g = ctx.cfg.garch
    rows = [["asset", "model", "kind", "aic", "bic", "mae", "rmse", "selected", "error"]]
    fits = {}
    for a in ctx.cfg.assets:
        r = ctx.estimation(a)
        arma = tuple(g.arma) if g.arma != "auto" else select_arma_order(r, tuple(g.max_arma))
        cands = [GarchSpec(k, arma, tuple(g.order)) for k in g.kinds]
        best, table = select_model(r, cands, n_starts=g.n_starts, seed=substream_int(ctx.seed, "garch", a))
        ctx.garch[a] = best
        for row in table:
            chosen = row["model"] == best.spec.label
            rows.append(
                [a, row["model"], row["kind"]]
                + [_num(row.get(k)) for k in ("aic", "bic", "mae", "rmse")]
                + [str(chosen).lower(), row.get("error", "")]
            )
        fits[a] = best.to_dict()
    _write_csv(ctx, "garch", "garch_selection.csv", rows)
    _write_json(ctx, "garch", "garch_fits.json", fits)


def stage_marginals(ctx: Context) -> None:
    m = ctx.cfg.marginals
    report = {}
    for a in ctx.cfg.assets:
        z = ctx.garch[a].std_residuals
        ranked = compare_marginals(
            z, m.families, n_bootstrap=m.n_bootstrap, n_starts=m.n_starts, seed=substream(ctx.seed, "marginals", a)
        )
        ctx.marginals[a] = ranked[0]
        report[a] = {"selected": ranked[0].family, "fits": [f.to_dict() for f in ranked]}
    _write_json(ctx, "marginals", "marginals.json", report)


def _pair_label(pair) -> str:
    return f"{pair[0]}-{pair[1]}"


def stage_copulas(ctx: Context) -> None:
    report = {}
    for pair in ctx.cfg.portfolios:
        a, b = pair
        u = np.column_stack(
            [
                pit_transform(ctx.garch[a].std_residuals, ctx.marginals[a]),
                pit_transform(ctx.garch[b].std_residuals, ctx.marginals[b]),
            ]
        )
        fits, entry = {}, {}
        for fam in ctx.cfg.copulas.families:
            try:
                fit = fit_copula(u, fam)
            except FitError as exc:
                entry[fam] = {"error": str(exc)}
                continue
            fits[fam] = fit
            d = fit.to_dict()
            tau, lo, hi = dependence_summary(fit.spec)
            k = 2 if fam == "StudentT" else 1
            d.update({"aic": -2.0 * fit.loglik + 2 * k, "kendall_tau": tau, "tail_lower": lo, "tail_upper": hi})
            entry[fam] = d
        if not fits:
            raise NumericError(f"no copula family could be fitted for {_pair_label(pair)}")
        order = {f: i for i, f in enumerate(COPULA_FAMILIES)}
        best = min(fits, key=lambda f: (entry[f]["aic"], order[f]))
        ctx.copulas[_pair_label(pair)] = fits
        report[_pair_label(pair)] = {"selected": best, "fits": entry, "n": int(u.shape[0])}
    _write_json(ctx, "copulas", "copulas.json", report)


def _levels(cfg: PipelineConfig) -> list:
    return [RiskLevels(a) for a in cfg.risk.alphas] + [RiskLevels(a, b) for a, b in cfg.risk.pairs]


def stage_risk(ctx: Context) -> None:
    rc = ctx.cfg.risk
    levels = _levels(ctx.cfg)
    window, stride = rc.window, rc.refit_stride
    asset_fc = {}

    def forecasts(asset):
        if asset not in asset_fc:
            asset_fc[asset] = rolling_forecast(ctx.returns[asset], ctx.garch[asset].spec, window, stride)
        return asset_fc[asset]

    measures, scores, lr_rows, summary = [], [], [], {}
    per_date = [["date", "portfolio", "method", "measure", "level", "value"]]
    methods = list(rc.methods)
    for pair in ctx.cfg.portfolios:
        a, b = pair
        label = _pair_label(pair)
        ra, rb = ctx.returns[a], ctx.returns[b]
        if rc.weights == "equal":
            w = (0.5, 0.5)
        else:
            w = min_variance_weights(ra.values[:window], rb.values[:window])
        spec = PortfolioSpec((a, b), w)
        port = portfolio_returns(ra, rb, spec)
        realized = port.slice(window)
        m = len(realized)
        streams = []
        for method in methods:
            if method == "HS":
                ests = [estimate_from_sample(port.values[t - window : t], levels, "HS") for t in range(window, window + m)]
            elif method == "ParametricT":
                fc = rolling_forecast(port, GarchSpec(rc.parametric_kind, (0, 0), tuple(ctx.cfg.garch.order)), window, stride)
                ests = [parametric_t_estimate(fc.mean[k], fc.sigma[k], fc.nu[k], levels) for k in range(m)]
            else:
                fam = method[4:]
                cop = ctx.copulas[label].get(fam)
                if cop is None:
                    raise NumericError(f"{method}: copula {fam} was not fitted for {label}")
                fa, fb = forecasts(a), forecasts(b)
                margs = (ctx.marginals[a], ctx.marginals[b])
                ests, z = [], None
                for k in range(m):
                    if k % stride == 0:
                        # common random numbers within each re-estimation block
                        z = mcs_standardized_draws(margs, cop, rc.n_sim, substream(ctx.seed, "risk", label, fam, str(k)))
                    fc_k = ((fa.mean[k], fa.sigma[k]), (fb.mean[k], fb.sigma[k]))
                    ests.append(risk_from_draws(z, fc_k, spec, levels, method))
            streams.append(ForecastStream(method, realized.dates, ests))
        ctx.forecasts[label] = streams
        reports, lr = evaluate_methods(realized, streams, levels)
        keys = sorted({lv.alpha for lv in levels} | {lv.beta for lv in levels if lv.beta is not None})
        pairs = [(lv.alpha, lv.beta) for lv in levels if lv.beta is not None and lv.alpha < lv.beta]
        rows = [("VaR", x) for x in keys] + [("ES", x) for x in keys] + [("RVaR", p) for p in pairs]
        for s in streams:
            for d, e in zip(realized.dates, s.estimates):
                for meas, lvl in rows:
                    per_date.append([str(d), label, s.method, meas, _level_label(lvl), _num(e.value(meas, lvl))])
        for meas, lvl in rows:
            measures.append(
                [label, meas, _level_label(lvl)]
                + [_num(np.mean([e.value(meas, lvl) for e in s.estimates])) for s in streams]
            )
            score_of = {"VaR": "s_var", "ES": "s_es", "RVaR": "s_rvar"}[meas]
            scores.append([label, meas, _level_label(lvl)] + [_num(getattr(reports[s.method], score_of)[lvl]) for s in streams])
            if lr:
                lr_rows.append([label, meas, _level_label(lvl), _num(lr[(meas, lvl)])])
        summary[label] = {
            "weights": list(w),
            "n_out_of_sample": m,
            "first_date": str(realized.dates[0]),
            "last_date": str(realized.dates[-1]),
            "es_link_clamped": {s.method: reports[s.method].n_clamped for s in streams},
        }
    head = ["portfolio", "measure", "level"] + methods
    _write_csv(ctx, "risk", "risk_measures.csv", [head] + measures)
    _write_csv(ctx, "risk", "risk_forecasts.csv", per_date)
    _write_csv(ctx, "risk", "scores.csv", [head] + scores)
    _write_csv(ctx, "risk", "legal_robustness.csv", [["portfolio", "measure", "level", "LR"]] + lr_rows)
    _write_json(ctx, "risk", "risk_summary.json", summary)


def stage_spillover(ctx: Context) -> None:
    s = ctx.cfg.spillover
    series = [ctx.returns[a] for a in ctx.cfg.assets]
    table = gfevd(fit_var(series, s.p), s.horizon)
    _write_csv(ctx, "spillover", "spillover.csv", table.layout_rows(2))
    _write_json(ctx, "spillover", "spillover.json", table.to_dict())
    roll = rolling_spillover(series, s.p, s.horizon, s.window, s.stride)
    net = roll.net
    rows = [["date", "asset", "net"]]
    for i, d in enumerate(roll.dates):
        for j, name in enumerate(roll.names):
            rows.append([str(d), name, _num(net[i, j])])
    _write_csv(ctx, "spillover", "net_spillover.csv", rows)


_RUNNERS = {
    "ingest": stage_ingest,
    "diagnostics": stage_diagnostics,
    "garch": stage_garch,
    "marginals": stage_marginals,
    "copulas": stage_copulas,
    "risk": stage_risk,
    "spillover": stage_spillover,
}


def plan(cfg: PipelineConfig, stage: str | None = None) -> list:
    if stage is None:
        stages = list(STAGES)
        if not cfg.spillover.enabled:
            stages.remove("spillover")
        if not cfg.portfolios:
            stages = [s for s in stages if s not in ("copulas", "risk")]
        return stages
    if stage not in STAGES:
        raise ConfigError([("stage", f"unknown stage {stage!r}; choose from {list(STAGES)}")])
    if stage == "spillover" and not cfg.spillover.enabled:
        raise ConfigError([("spillover.enabled", "spillover stage requested but disabled")])
    if stage in ("copulas", "risk") and not cfg.portfolios:
        raise ConfigError([("portfolios", f"stage {stage} needs at least one portfolio pair")])
    return stage_closure(stage)


def _write_manifest(ctx: Context, status: dict, error: dict | None) -> None:
    manifest = {
        "seed": ctx.seed,
        "complete": error is None,
        "stages": {s: {"status": status[s], "files": ctx.files.get(s, {})} for s in status},
    }
    if error:
        manifest["error"] = error
    text = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    (ctx.out / "manifest.json").write_text(text)


def run_pipeline(cfg: PipelineConfig, stage: str | None = None) -> Context:
    """Run the requested stage (with its prerequisites) or the whole pipeline."""
    stages = plan(cfg, stage)
    out = cfg.out_dir()
    out.mkdir(parents=True, exist_ok=True)
    ctx = Context(cfg, out)
    status = {s: "pending" for s in stages}
    for s in stages:
        log.info("stage %s", s)
        try:
            with np.errstate(all="ignore"):
                _RUNNERS[s](ctx)
        except TailRiskError as exc:
            status[s] = "failed"
            exc.stage = s
            _write_manifest(ctx, status, {"stage": s, "cause": str(exc)})
            raise
        except (ArithmeticError, np.linalg.LinAlgError) as exc:
            status[s] = "failed"
            _write_manifest(ctx, status, {"stage": s, "cause": str(exc)})
            err = NumericError(f"{type(exc).__name__}: {exc}")
            err.stage = s
            raise err from exc
        status[s] = "complete"
    _write_manifest(ctx, status, None)
    return ctx
