"""scikit-learn style wrappers around the accounting engine."""

from __future__ import annotations

import os

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import analytics
from .dataset import FleetDataset, load_dataset
from .errors import UsageError

SEASONAL_COLUMNS = (
    "share",
    "units",
    "annual_mileage_km",
    "mild_season_fraction",
    "battery_kwh",
    "nedc_km",
    "lambda",
    "rho",
)
SEASONAL_OUTPUT = ("mild_kwh", "harsh_kwh", "annual_kwh")


def check_fleet_input(X) -> FleetDataset:
    """Accept a :class:`FleetDataset` or a path to a dataset directory."""
    if isinstance(X, FleetDataset):
        return X
    if isinstance(X, (str, os.PathLike)):
        return load_dataset(X)
    raise UsageError(f"expected a FleetDataset or a dataset directory, got {type(X).__name__}")


def check_seasonal_array(X):
    """Validate a 2-D parameter matrix laid out as :data:`SEASONAL_COLUMNS`."""
    if isinstance(X, pd.DataFrame):
        missing = [c for c in SEASONAL_COLUMNS if c not in X.columns]
        if missing:
            raise UsageError(f"missing column(s): {', '.join(missing)}")
        X = X.loc[:, list(SEASONAL_COLUMNS)]
    X = check_array(X, dtype=np.float64, ensure_all_finite=True)
    if X.shape[1] != len(SEASONAL_COLUMNS):
        raise UsageError(f"expected {len(SEASONAL_COLUMNS)} columns, got {X.shape[1]}")
    share, units, mileage, f, kwh, km, lam, rho = X.T
    if np.any((share < 0) | (share > 1)) or np.any((f < 0) | (f > 1)):
        raise UsageError("share and mild_season_fraction must lie in [0, 1]")
    if np.any(units < 0) or np.any(mileage <= 0) or np.any(kwh <= 0) or np.any(km <= 0):
        raise UsageError("units must be >= 0; mileage, battery_kwh and nedc_km must be > 0")
    if np.any(lam <= 0) or np.any(rho <= 0):
        raise UsageError("degradation coefficients must be > 0")
    return X


class SeasonalEnergyTransformer(TransformerMixin, BaseEstimator):
    """Vectorised seasonal energy for many (version, zone) cells at once.

    Rows are laid out as :data:`SEASONAL_COLUMNS`; the output columns are
    mild-season, harsh-season and annual kWh. ``mild_season_fraction``, when
    set, overrides the per-row column.
    """

    def __init__(self, mild_season_fraction=None):
        self.mild_season_fraction = mild_season_fraction

    def fit(self, X, y=None):
        X = check_seasonal_array(X)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_seasonal_array(X)
        share, units, mileage, f, kwh, km, lam, rho = X.T
        if self.mild_season_fraction is not None:
            f = np.full_like(f, float(self.mild_season_fraction))
        mild = share * units * (f * mileage * kwh) / (lam * km)
        harsh = share * units * ((1.0 - f) * mileage * kwh) / (rho * km)
        return np.column_stack([mild, harsh, mild + harsh])

    def get_feature_names_out(self, input_features=None):
        return np.asarray(SEASONAL_OUTPUT, dtype=object)


def seasonal_frame(dataset: FleetDataset, years=None) -> pd.DataFrame:
    """One row per (year, zone, model, version) cell with its model inputs."""
    years = set(dataset.years if years is None else years)
    records = []
    for s in sorted(dataset.sales, key=lambda s: (s.year, s.zone_id, s.model_id)):
        if s.year not in years:
            continue
        zone = dataset.zone(s.zone_id, s.year)
        for v in dataset.versions_for(s.model_id, s.year):
            records.append(
                {
                    "year": s.year,
                    "zone_id": s.zone_id,
                    "model_id": s.model_id,
                    "version_id": v.version_id,
                    "share": v.sales_share,
                    "units": s.units,
                    "annual_mileage_km": zone.annual_mileage,
                    "mild_season_fraction": zone.mild_season_fraction,
                    "battery_kwh": v.battery_energy,
                    "nedc_km": v.nedc_range,
                    "lambda": v.mild_degradation,
                    "rho": v.harsh_degradation,
                    "emission_factor": zone.emission_factor,
                }
            )
    return pd.DataFrame.from_records(records)


class ChargingDemandModel(TransformerMixin, BaseEstimator):
    """Bottom-up charging demand and emissions for a fleet dataset.

    ``fit`` validates the dataset and builds the result tree;
    ``transform`` returns it as a long table with one row per
    (level, scope, year, metric).

    Parameters
    ----------
    years : iterable of int, optional
        Years to evaluate. Defaults to every year with sales.
    uncertainty : float, optional
        Half-width of the relative band attached to national totals.
    intensity_mode : {"cumulative", "annual"}
        Which sales count as the per-vehicle denominator.
    levels : tuple of str
        Levels included by ``transform``.
    n_jobs : int
        Worker threads for cell evaluation. Results do not depend on it.
    """

    def __init__(
        self,
        years=None,
        uncertainty=analytics.DEFAULT_UNCERTAINTY,
        intensity_mode="cumulative",
        levels=analytics.LEVELS,
        n_jobs=1,
    ):
        self.years = years
        self.uncertainty = uncertainty
        self.intensity_mode = intensity_mode
        self.levels = levels
        self.n_jobs = n_jobs

    def _validate_params(self):
        if self.intensity_mode not in analytics.INTENSITY_MODES:
            raise UsageError(f"intensity_mode must be one of {analytics.INTENSITY_MODES}")
        unknown = set(self.levels) - set(analytics.LEVELS)
        if unknown:
            raise UsageError(f"unknown level(s): {sorted(unknown)}")

    def fit(self, X, y=None):
        self._validate_params()
        dataset = check_fleet_input(X)
        self.dataset_ = dataset
        self.result_tree_ = analytics.build_result_tree(
            dataset, self.years, uncertainty=self.uncertainty, n_jobs=self.n_jobs
        )
        self.years_ = self.result_tree_.year_ids
        return self

    def _tree_for(self, X):
        check_is_fitted(self, "result_tree_")
        dataset = check_fleet_input(X)
        if dataset is self.dataset_ or (
            dataset.checksum is not None and dataset.checksum == self.dataset_.checksum
        ):
            return self.result_tree_
        return analytics.build_result_tree(
            dataset, self.years, uncertainty=self.uncertainty, n_jobs=self.n_jobs
        )

    def transform(self, X):
        tree = self._tree_for(X)
        return pd.DataFrame.from_records(
            list(tree.rows(self.levels)), columns=["level", "scope", "year", "metric", "value"]
        )

    def intensity(self, year, zone_id=None) -> analytics.IntensityResult:
        check_is_fitted(self, "result_tree_")
        return analytics.intensity_for(
            self.result_tree_, self.dataset_, year, zone_id, self.intensity_mode
        )

    def growth(self, zone_id=None, metric="energy_kwh") -> list[tuple[int, int, float]]:
        check_is_fitted(self, "result_tree_")
        if zone_id is None:
            series = analytics.national_series(self.result_tree_, metric)
        else:
            series = analytics.iter_zone_series(self.result_tree_, metric)[zone_id]
        return analytics.growth_series(series)

    def scale(self, year, target="stock") -> analytics.ScaledResult:
        check_is_fitted(self, "result_tree_")
        return analytics.scale_to_population(self.result_tree_[year], self.dataset_, target)
