"""Pipeline configuration: TOML file, strict validation, defaults, round trip."""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .copula import FAMILIES as COPULA_FAMILIES
from .errors import ConfigError
from .evt_marginals import FAMILIES as MARGINAL_FAMILIES
from .garch import KINDS
from .risk import DEFAULT_ALPHAS, DEFAULT_PAIRS, METHODS


@dataclass
class GarchConfig:
    kinds: list = field(default_factory=lambda: list(KINDS))
    order: list = field(default_factory=lambda: [1, 1])
    arma: object = "auto"  # "auto" or [p, q]
    max_arma: list = field(default_factory=lambda: [2, 2])
    n_starts: int = 3


@dataclass
class MarginalConfig:
    families: list = field(default_factory=lambda: list(MARGINAL_FAMILIES))
    n_bootstrap: int = 200
    n_starts: int = 5


@dataclass
class CopulaConfig:
    families: list = field(default_factory=lambda: list(COPULA_FAMILIES))


@dataclass
class RiskConfig:
    alphas: list = field(default_factory=lambda: list(DEFAULT_ALPHAS))
    pairs: list = field(default_factory=lambda: [list(p) for p in DEFAULT_PAIRS])
    methods: list = field(default_factory=lambda: list(METHODS))
    n_sim: int = 10_000
    window: int = 500
    refit_stride: int = 10
    weights: str = "min-variance"  # or "equal"
    parametric_kind: str = "sGARCH"


@dataclass
class SpilloverConfig:
    enabled: bool = True
    p: int = 1
    horizon: int = 10
    window: int = 200
    stride: int = 1


@dataclass
class PipelineConfig:
    data: dict = field(default_factory=dict)  # asset id -> csv path
    portfolios: list = field(default_factory=list)  # [[asset, asset], ...]
    seed: int = 0
    out: str = "reports"
    diagnostics_lags: int = 10
    garch: GarchConfig = field(default_factory=GarchConfig)
    marginals: MarginalConfig = field(default_factory=MarginalConfig)
    copulas: CopulaConfig = field(default_factory=CopulaConfig)
    risk: RiskConfig = field(default_factory=RiskConfig)
    spillover: SpilloverConfig = field(default_factory=SpilloverConfig)
    base_dir: str = field(default=".", metadata={"serialize": False})

    @property
    def assets(self) -> list:
        return list(self.data)

    def data_path(self, asset: str) -> Path:
        p = Path(self.data[asset])
        return p if p.is_absolute() else Path(self.base_dir) / p

    def out_dir(self) -> Path:
        p = Path(self.out)
        return p if p.is_absolute() else Path(self.base_dir) / p


_SECTIONS = {
    "garch": GarchConfig,
    "marginals": MarginalConfig,
    "copulas": CopulaConfig,
    "risk": RiskConfig,
    "spillover": SpilloverConfig,
}
_TOP_SCALARS = ("seed", "out", "diagnostics_lags")


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def config_from_dict(raw: dict, base_dir=".") -> PipelineConfig:
    """Build and validate; raises ConfigError listing every problem found."""
    problems: list = []
    cfg = PipelineConfig(base_dir=str(base_dir))
    known_top = set(_TOP_SCALARS) | {"data", "portfolios"} | set(_SECTIONS)
    for key in raw:
        if key not in known_top:
            problems.append((key, "unknown key"))
    for key in _TOP_SCALARS:
        if key in raw:
            setattr(cfg, key, raw[key])
    if "data" in raw:
        if isinstance(raw["data"], dict):
            cfg.data = dict(raw["data"])
        else:
            problems.append(("data", "must be a table of asset = path"))
    if "portfolios" in raw:
        cfg.portfolios = raw["portfolios"]
    for name, cls in _SECTIONS.items():
        sec = raw.get(name, {})
        if not isinstance(sec, dict):
            problems.append((name, "must be a table"))
            continue
        allowed = {f.name for f in fields(cls)}
        obj = cls()
        for key, val in sec.items():
            if key not in allowed:
                problems.append((f"{name}.{key}", "unknown key"))
            else:
                setattr(obj, key, val)
        setattr(cfg, name, obj)
    problems.extend(_check(cfg))
    if problems:
        raise ConfigError(problems)
    return cfg


def _check(cfg: PipelineConfig) -> list:
    out = []
    if not cfg.data:
        out.append(("data", "no asset data paths given"))
    for asset, path in cfg.data.items():
        if not isinstance(path, str) or not path:
            out.append((f"data.{asset}", "path must be a non-empty string"))
    if not _is_int(cfg.seed) or cfg.seed < 0:
        out.append(("seed", "must be a non-negative integer"))
    if not isinstance(cfg.out, str) or not cfg.out:
        out.append(("out", "must be a non-empty string"))
    if not _is_int(cfg.diagnostics_lags) or cfg.diagnostics_lags < 1:
        out.append(("diagnostics_lags", "must be an integer >= 1"))
    if not isinstance(cfg.portfolios, list):
        out.append(("portfolios", "must be a list of asset pairs"))
    else:
        for i, pair in enumerate(cfg.portfolios):
            if not (isinstance(pair, list) and len(pair) == 2 and pair[0] != pair[1]):
                out.append((f"portfolios[{i}]", "must be a pair of two distinct asset ids"))
                continue
            for a in pair:
                if a not in cfg.data:
                    out.append((f"portfolios[{i}]", f"asset {a!r} has no data path"))

    g = cfg.garch
    if not isinstance(g.kinds, list) or not g.kinds or any(k not in KINDS for k in g.kinds):
        out.append(("garch.kinds", f"must be a non-empty subset of {list(KINDS)}"))
    if not _int_pair(g.order, 1):
        out.append(("garch.order", "must be [p, q] with p, q >= 1"))
    if g.arma != "auto" and not _int_pair(g.arma, 0, 8):
        out.append(("garch.arma", 'must be "auto" or [p, q] with 0 <= p, q <= 8'))
    if not _int_pair(g.max_arma, 0, 8):
        out.append(("garch.max_arma", "must be [p, q] with 0 <= p, q <= 8"))
    if not _is_int(g.n_starts) or g.n_starts < 1:
        out.append(("garch.n_starts", "must be an integer >= 1"))

    m = cfg.marginals
    if not isinstance(m.families, list) or not m.families or any(f not in MARGINAL_FAMILIES for f in m.families):
        out.append(("marginals.families", f"must be a non-empty subset of {list(MARGINAL_FAMILIES)}"))
    if not _is_int(m.n_bootstrap) or m.n_bootstrap < 0:
        out.append(("marginals.n_bootstrap", "must be an integer >= 0"))
    if not _is_int(m.n_starts) or m.n_starts < 1:
        out.append(("marginals.n_starts", "must be an integer >= 1"))

    c = cfg.copulas
    if not isinstance(c.families, list) or not c.families or any(f not in COPULA_FAMILIES for f in c.families):
        out.append(("copulas.families", f"must be a non-empty subset of {list(COPULA_FAMILIES)}"))

    r = cfg.risk
    alphas_ok = isinstance(r.alphas, list) and r.alphas and all(_is_num(a) and 0 < a < 1 for a in r.alphas)
    if not alphas_ok:
        out.append(("risk.alphas", "must be a non-empty list of levels in (0, 1)"))
    if not isinstance(r.pairs, list):
        out.append(("risk.pairs", "must be a list of [alpha, beta] pairs"))
    else:
        for i, pr in enumerate(r.pairs):
            if not (isinstance(pr, list) and len(pr) == 2 and all(_is_num(v) for v in pr)):
                out.append((f"risk.pairs[{i}]", "must be [alpha, beta]"))
            elif not 0 < pr[0] <= pr[1] < 1:
                out.append((f"risk.pairs[{i}]", f"levels must satisfy 0 < alpha <= beta < 1, got {pr}"))
    if not isinstance(r.methods, list) or not r.methods or any(x not in METHODS for x in r.methods):
        out.append(("risk.methods", f"must be a non-empty subset of {list(METHODS)}"))
    elif isinstance(c.families, list):
        for meth in r.methods:
            if meth.startswith("MCS-") and meth[4:] not in c.families:
                out.append(("risk.methods", f"{meth} needs copula family {meth[4:]} in copulas.families"))
    if not _is_int(r.window) or r.window < 250:
        out.append(("risk.window", "must be an integer >= 250"))
    if not _is_int(r.refit_stride) or r.refit_stride < 1:
        out.append(("risk.refit_stride", "must be an integer >= 1"))
    if r.weights not in ("min-variance", "equal"):
        out.append(("risk.weights", 'must be "min-variance" or "equal"'))
    if r.parametric_kind not in KINDS:
        out.append(("risk.parametric_kind", f"must be one of {list(KINDS)}"))
    if not _is_int(r.n_sim):
        out.append(("risk.n_sim", "must be an integer"))
    elif alphas_ok:
        lows = list(r.alphas) + [pr[0] for pr in r.pairs if isinstance(pr, list) and pr and _is_num(pr[0]) and pr[0] > 0]
        need = 100.0 / min(lows)
        if r.n_sim < need:
            out.append(("risk.n_sim", f"must be at least 100/alpha = {need:.0f}"))

    s = cfg.spillover
    if not isinstance(s.enabled, bool):
        out.append(("spillover.enabled", "must be a boolean"))
    if not _is_int(s.p) or s.p < 0:
        out.append(("spillover.p", "must be an integer >= 0"))
    if not _is_int(s.horizon) or s.horizon < 1:
        out.append(("spillover.horizon", "must be an integer >= 1"))
    if not _is_int(s.stride) or s.stride < 1:
        out.append(("spillover.stride", "must be an integer >= 1"))
    if s.enabled is True:
        n = len(cfg.data)
        if n < 2:
            out.append(("spillover.enabled", "spillover needs at least two assets"))
        if _is_int(s.window) and _is_int(s.p) and not s.window > n * s.p + 10:
            out.append(("spillover.window", "must exceed n_assets * p + 10"))
    if not _is_int(s.window):
        out.append(("spillover.window", "must be an integer"))
    return out


def _int_pair(v, lo, hi=None) -> bool:
    return (
        isinstance(v, list)
        and len(v) == 2
        and all(_is_int(x) and x >= lo and (hi is None or x <= hi) for x in v)
    )


def validate_config(path) -> PipelineConfig:
    """Load a TOML config, fill defaults and validate strictly."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([(str(path), f"cannot read config: {exc.strerror}")]) from exc
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([(str(path), f"invalid TOML: {exc}")]) from exc
    return config_from_dict(raw, base_dir=path.parent)


def config_to_dict(cfg: PipelineConfig) -> dict:
    d = asdict(cfg)
    d.pop("base_dir")
    return d


def dump_config(cfg: PipelineConfig) -> str:
    return tomli_w.dumps(config_to_dict(cfg))


def write_config(cfg: PipelineConfig, path) -> None:
    Path(path).write_text(dump_config(cfg))
