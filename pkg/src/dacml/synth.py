"""Deterministic synthetic census corpus generator.

The corpus is built so every pipeline stage is exercisable without real
data: block-level LODES/ACS files that aggregate exactly, a labeled
indicator file, and per-year drift.  Community status follows a latent
score over low-income share, low-education share, and exposure-industry
mix; residence-side records carry that signal strongly, workplace-side
records only weakly (tunable), and a configurable slice of positive tracts
is driven solely by a housing-age indicator that no employment or income
feature can see.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .domain import AcsIncomeRecord, DacRecord, IndicatorVector, LodesRecord
from .errors import DataError
from .ingest import aggregate_to_tract, default_column_map, lodes_group_fields
from .manifest import load_income_bins, load_indicator_names
from .util import derive_seed, format_number, write_csv

LOW_INCOME_AMI = "Low Income Population (AMI)"
LOW_INCOME_FPL = "Low Income Population (FPL)"
LESS_HS = "Less HS Education"
HOUSING_AGE = "Housing Age (Lead Paint)"

# industry bins (0-based) with an exposure story: transport/warehousing,
# admin+waste, accommodation/food, public administration; the fixed profile
# makes the exposure level cleanly visible in industry shares
_EXPOSURE_INDUSTRIES = (7, 13, 17, 19)
_EXPOSURE_PROFILE = (0.40, 0.25, 0.20, 0.15)


@dataclass(frozen=True)
class SynthConfig:
    n_tracts: int = 2000
    years: tuple[int, ...] = (2013, 2014, 2015, 2016, 2017, 2018)
    dac_fraction: float = 0.17
    noise_scale: float = 0.02
    housing_age_dac_fraction: float = 0.05
    workplace_signal: float = 0.15
    income_drift_per_year: float = 0.025
    seed: int = 0

    def validate(self) -> None:
        if self.n_tracts < 10:
            raise DataError(f"n_tracts must be >= 10, got {self.n_tracts}")
        if self.noise_scale < 0:
            raise DataError("noise_scale must be >= 0")
        if not (0.0 < self.dac_fraction < 1.0):
            raise DataError("dac_fraction must be in (0, 1)")
        if not (0.0 <= self.housing_age_dac_fraction < 1.0):
            raise DataError("housing_age_dac_fraction must be in [0, 1)")
        if not (0.0 <= self.workplace_signal <= 1.0):
            raise DataError("workplace_signal must be in [0, 1]")
        if not self.years:
            raise DataError("years must be non-empty")

    @property
    def train_year(self) -> int:
        return max(self.years)


@dataclass(frozen=True)
class SynthCorpus:
    config: SynthConfig
    tracts: tuple[str, ...]
    latent: np.ndarray
    threshold: float
    housing_driven: tuple[str, ...]
    dac_records: list[DacRecord]
    blocks_rac: dict[int, list[LodesRecord]]
    blocks_wac: dict[int, list[LodesRecord]]
    blocks_acs: dict[int, list[AcsIncomeRecord]]
    tract_rac: dict[int, list[LodesRecord]] = field(default_factory=dict)
    tract_wac: dict[int, list[LodesRecord]] = field(default_factory=dict)
    tract_acs: dict[int, list[AcsIncomeRecord]] = field(default_factory=dict)

    @property
    def labels(self) -> dict[str, bool]:
        return {r.tract: r.dac_flag for r in self.dac_records}


def _largest_remainder(shares: np.ndarray, total: int) -> np.ndarray:
    """Integer allocation of `total` proportional to shares, exact sum."""
    shares = np.maximum(np.asarray(shares, dtype=float), 0.0)
    s = shares.sum()
    if s == 0:
        shares = np.ones_like(shares)
        s = shares.sum()
    exact = shares / s * total
    counts = np.floor(exact).astype(int)
    short = total - counts.sum()
    if short > 0:
        order = np.argsort(-(exact - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def _jitter(shares: np.ndarray, rng: np.random.Generator, scale: float = 0.08) -> np.ndarray:
    noisy = np.maximum(shares + rng.normal(0.0, scale, size=shares.shape), 1e-3)
    return noisy / noisy.sum()


@dataclass
class _TractDraft:
    tract: str
    low_income: float
    edu_low: float
    exposure: float
    population: int
    employed: int
    jobs: int


def _tract_shares(draft: _TractDraft, low_income: float, rng: np.random.Generator):
    """Share vectors for every LODES bin group at one (tract, year)."""
    e1 = 0.1 + 0.7 * low_income
    earnings = _jitter(np.array([e1, (1 - e1) * 0.6, (1 - e1) * 0.4]), rng, 0.02)
    d1 = 0.05 + 0.65 * draft.edu_low
    education = _jitter(np.array([d1, (1 - d1) * 0.35, (1 - d1) * 0.35, (1 - d1) * 0.3]), rng, 0.02)
    base = rng.dirichlet(np.ones(20) * 10.0)
    expo_profile = np.zeros(20)
    expo_profile[list(_EXPOSURE_INDUSTRIES)] = _EXPOSURE_PROFILE
    w = 0.25 + 0.6 * draft.exposure
    industry = (1 - w) * base + w * expo_profile
    return {
        "age": rng.dirichlet((5.0, 8.0, 4.0)),
        "earnings": earnings,
        "industry": industry / industry.sum(),
        "race": rng.dirichlet((12.0, 2.0, 0.6, 2.5, 0.4, 1.5)),
        "ethnicity": rng.dirichlet((8.0, 2.0)),
        "education": education,
        "sex": _jitter(np.array([0.52, 0.48]), rng, 0.01),
    }


def _noise_shares(rng: np.random.Generator):
    return {
        "age": rng.dirichlet((5.0, 8.0, 4.0)),
        "earnings": rng.dirichlet((4.0, 5.0, 4.0)),
        "industry": rng.dirichlet(np.ones(20) * 2.0),
        "race": rng.dirichlet((12.0, 2.0, 0.6, 2.5, 0.4, 1.5)),
        "ethnicity": rng.dirichlet((8.0, 2.0)),
        "education": rng.dirichlet((3.0, 4.0, 4.0, 3.0)),
        "sex": _jitter(np.array([0.52, 0.48]), rng, 0.01),
    }


def _blocks_from_shares(geocode_prefix: str, suffix_width: int, total: int,
                        group_shares: dict[str, np.ndarray],
                        n_blocks: int, rng: np.random.Generator,
                        kind: str | None = None,
                        wac_extra: dict[str, np.ndarray] | None = None):
    """Split one geography into blocks whose bin groups sum exactly."""
    weights = rng.dirichlet(np.ones(n_blocks) * 4.0)
    block_totals = _largest_remainder(weights, total)
    records = []
    for b, block_total in enumerate(block_totals):
        code = f"{geocode_prefix}{b + 1:0{suffix_width}d}"
        groups = {g: tuple(_largest_remainder(s, int(block_total)))
                  for g, s in group_shares.items()}
        if kind is None:
            records.append((code, int(block_total), groups))
            continue
        extra = {}
        if wac_extra is not None:
            extra = {g: tuple(_largest_remainder(s, int(block_total)))
                     for g, s in wac_extra.items()}
        records.append(LodesRecord(
            geocode=code, kind=kind, total_jobs=int(block_total),
            age=groups["age"], earnings=groups["earnings"], industry=groups["industry"],
            race=groups["race"], ethnicity=groups["ethnicity"],
            education=groups["education"], sex=groups["sex"],
            firm_age=extra.get("firm_age"), firm_size=extra.get("firm_size"),
        ))
    return records


def _income_profiles(n_bins: int):
    ramp = np.linspace(1.0, 0.05, n_bins)
    low = ramp / ramp.sum()
    high = ramp[::-1] / ramp.sum()
    return low, high


def generate(config: SynthConfig) -> SynthCorpus:
    """Build the full corpus for every configured year.

    Same config (seed included) -> byte-identical corpus; the per-tract
    streams derive from (seed, tract index) so blocks could be generated in
    parallel without changing anything.
    """
    config.validate()
    n = config.n_tracts
    tracts = tuple(f"53033{i:06d}" for i in range(n))
    master = np.random.default_rng(derive_seed(config.seed, 0x57A7))

    low_income = master.uniform(0.0, 1.0, size=n)
    edu_low = np.clip(0.9 * low_income + 0.1 * master.uniform(0.0, 1.0, size=n), 0.0, 1.0)
    exposure = master.uniform(0.0, 1.0, size=n)
    # bounded noise keeps desk-scale acceptance margins stable across seeds
    noise = config.noise_scale * master.uniform(-1.0, 1.0, size=n)
    latent = 0.7 * low_income + 0.12 * edu_low + 0.18 * exposure + noise

    base_fraction = config.dac_fraction * (1.0 - config.housing_age_dac_fraction)
    threshold = float(np.quantile(latent, 1.0 - base_fraction))
    flags = latent > threshold
    if flags.all() or not flags.any():
        raise DataError("degenerate config: corpus has a single class")

    housing_driven: list[str] = []
    if config.housing_age_dac_fraction > 0:
        base_count = int(flags.sum())
        k = int(round(config.housing_age_dac_fraction * base_count
                      / (1.0 - config.housing_age_dac_fraction)))
        negatives = np.flatnonzero(~flags)
        # pick from the middle of the negative latent range, so these tracts
        # look unremarkable to every employment/income feature
        order = negatives[np.argsort(latent[negatives], kind="stable")]
        lo, hi = int(0.3 * len(order)), int(0.8 * len(order))
        window = order[lo:hi]
        if k > len(window):
            raise DataError("housing_age_dac_fraction too large for this corpus")
        chosen = master.choice(window, size=k, replace=False) if k else np.array([], dtype=int)
        for i in sorted(int(c) for c in chosen):
            flags[i] = True
            housing_driven.append(tracts[i])

    drafts = []
    pop = master.integers(1200, 8000, size=n)
    emp_rate = master.uniform(0.35, 0.55, size=n)
    job_scale = master.uniform(0.3, 2.0, size=n)
    for i in range(n):
        employed = int(round(pop[i] * emp_rate[i]))
        drafts.append(_TractDraft(
            tract=tracts[i], low_income=float(low_income[i]), edu_low=float(edu_low[i]),
            exposure=float(exposure[i]), population=int(pop[i]),
            employed=employed, jobs=int(round(employed * job_scale[i])),
        ))

    names = load_indicator_names()
    loadings_rng = np.random.default_rng(derive_seed(config.seed, 0x10AD))
    loadings = loadings_rng.uniform(0.0, 0.45, size=(len(names), 3))
    noise_weight = loadings_rng.uniform(0.2, 0.5, size=len(names))
    fixed = {
        LOW_INCOME_AMI: (np.array([0.95, 0.0, 0.0]), 0.05),
        LOW_INCOME_FPL: (np.array([0.9, 0.05, 0.0]), 0.08),
        LESS_HS: (np.array([0.0, 0.95, 0.0]), 0.05),
        HOUSING_AGE: (np.array([0.0, 0.0, 0.0]), 1.0),
    }
    for name, (weights, nw) in fixed.items():
        j = names.index(name)
        loadings[j] = weights
        noise_weight[j] = nw

    bins = load_income_bins()
    low_profile, high_profile = _income_profiles(len(bins))
    housing_set = set(housing_driven)

    dac_records: list[DacRecord] = []
    blocks_rac: dict[int, list[LodesRecord]] = {y: [] for y in config.years}
    blocks_wac: dict[int, list[LodesRecord]] = {y: [] for y in config.years}
    blocks_acs: dict[int, list[AcsIncomeRecord]] = {y: [] for y in config.years}

    for i, draft in enumerate(drafts):
        rng = np.random.default_rng(derive_seed(config.seed, 0x7AC7, i))
        drivers = np.array([draft.low_income, draft.edu_low, draft.exposure])
        values = loadings @ drivers + noise_weight * rng.uniform(0.0, 1.0, size=len(names))
        j_house = names.index(HOUSING_AGE)
        if draft.tract in housing_set:
            values[j_house] = 2.0 + rng.uniform(0.0, 0.3)
        vec = IndicatorVector(draft.tract, names, tuple(float(v) for v in values))
        dac_records.append(DacRecord(draft.tract, vec, bool(flags[i])))

        n_blocks = int(rng.integers(2, 4))
        for year in sorted(config.years):
            back = config.train_year - year
            li_year = float(np.clip(draft.low_income + config.income_drift_per_year * back
                                    + rng.normal(0.0, 0.01), 0.0, 1.0))
            rac_shares = _tract_shares(draft, li_year, rng)
            wac_noise = _noise_shares(rng)
            w = config.workplace_signal
            wac_shares = {g: (1 - w) * wac_noise[g] + w * rac_shares[g] for g in rac_shares}
            wac_extra = {
                "firm_age": rng.dirichlet((1.0, 1.5, 2.0, 3.0, 5.0)),
                "firm_size": rng.dirichlet((3.0, 3.0, 2.0, 1.0, 1.0)),
            }
            blocks_rac[year].extend(_blocks_from_shares(
                draft.tract, 4, draft.employed, rac_shares, n_blocks, rng, kind="RAC"))
            blocks_wac[year].extend(_blocks_from_shares(
                draft.tract, 4, draft.jobs, wac_shares, n_blocks, rng, kind="WAC",
                wac_extra=wac_extra))

            households = max(1, int(round(draft.population / 2.6)))
            inc_shares = _jitter(li_year * low_profile + (1 - li_year) * high_profile, rng, 0.002)
            weights = rng.dirichlet(np.ones(n_blocks) * 4.0)
            hh_blocks = _largest_remainder(weights, households)
            pop_blocks = _largest_remainder(weights, draft.population)
            for b in range(n_blocks):
                counts = _largest_remainder(inc_shares, int(hh_blocks[b]))
                blocks_acs[year].append(AcsIncomeRecord(
                    geocode=f"{draft.tract}{b + 1:01d}",
                    household_counts=tuple(int(c) for c in counts),
                    total_households=int(hh_blocks[b]),
                    total_population=int(pop_blocks[b]),
                ))

    corpus = SynthCorpus(
        config=config, tracts=tracts, latent=latent, threshold=threshold,
        housing_driven=tuple(housing_driven), dac_records=dac_records,
        blocks_rac=blocks_rac, blocks_wac=blocks_wac, blocks_acs=blocks_acs,
    )
    for year in config.years:
        corpus.tract_rac[year] = aggregate_to_tract(blocks_rac[year])
        corpus.tract_wac[year] = aggregate_to_tract(blocks_wac[year])
        corpus.tract_acs[year] = aggregate_to_tract(blocks_acs[year])
    return corpus


def write_corpus_csvs(corpus: SynthCorpus, out_dir: str | Path) -> list[Path]:
    """Emit source-shaped CSVs (block-level, public column codes) per year,
    plus the training-year labeled indicator file.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    for kind, blocks in (("rac", corpus.blocks_rac), ("wac", corpus.blocks_wac)):
        cmap = default_column_map(kind.upper())
        fields = lodes_group_fields(kind.upper())
        header = [cmap.geocode, cmap.columns["total_jobs"]]
        for g, names in fields.items():
            header.extend(cmap.columns[f] for f in names)
        for year, records in sorted(blocks.items()):
            rows = []
            for r in sorted(records, key=lambda r: r.geocode):
                row = [r.geocode, r.total_jobs]
                for g in fields:
                    row.extend(r.group(g))
                rows.append(row)
            path = out_dir / f"lodes_{kind}_{year}.csv"
            write_csv(path, header, rows)
            written.append(path)

    bins = load_income_bins()
    header = ["geocode", "households_total", "population_total"] + [b.label for b in bins]
    for year, records in sorted(corpus.blocks_acs.items()):
        rows = [[r.geocode, r.total_households, r.total_population, *r.household_counts]
                for r in sorted(records, key=lambda r: r.geocode)]
        path = out_dir / f"acs_{year}.csv"
        write_csv(path, header, rows)
        written.append(path)

    names = corpus.dac_records[0].indicators.names
    header = ["tract", "dac_flag"] + list(names)
    rows = [[r.tract, r.dac_flag, *[format_number(v) for v in r.indicators.values]]
            for r in sorted(corpus.dac_records, key=lambda r: r.tract)]
    path = out_dir / f"dac_{corpus.config.train_year}.csv"
    write_csv(path, header, rows)
    written.append(path)
    return written
