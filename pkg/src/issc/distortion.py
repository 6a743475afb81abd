"""
Logistic end-to-end distortion model and its data-regression fitter.

In the log domain the distortion of a codec with source rate ``R_s`` follows
an S-curve in ``log10(rho_b)``::

    log10 D_o = Ds_hat + Dc_hat / (1 + exp(-E1 * (log10 rho_b - E2)))

``Ds_hat`` is the error-free (source-only) floor, ``Dc_hat`` the span added
by channel errors, ``E1`` the steepness and ``E2`` the midpoint BER.
"""

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares

from .errors import FitDataInsufficient, FitDiverged, InvalidBer

BANK_HEADER = ["R_s", "Ds_hat", "Dc_hat", "E1", "E2"]
SAMPLE_HEADER = ["rho_b", "D_o"]


@dataclass(frozen=True)
class LogisticDistortionModel:
    R_s: float
    Ds_hat: float
    Dc_hat: float
    E1: float
    E2: float

    def log10_distortion(self, rho_b):
        return e2e_log10_distortion(self, rho_b)

    def __call__(self, rho_b):
        return e2e_distortion(self, rho_b)


@dataclass(frozen=True)
class DistortionSample:
    rho_b: float
    D_o: float


@dataclass(frozen=True)
class FitResult:
    model: LogisticDistortionModel
    rmse: float
    identifiable: bool = True


class ModelBank:
    """Ordered collection of codec models with strictly increasing ``R_s``."""

    def __init__(self, models):
        models = sorted(models, key=lambda m: m.R_s)
        if not models:
            raise ValueError("model bank must hold at least one model")
        rs = [m.R_s for m in models]
        if any(b <= a for a, b in zip(rs, rs[1:])):
            raise ValueError("model bank R_s values must be distinct")
        self.models = tuple(models)

    def __len__(self):
        return len(self.models)

    def __iter__(self):
        return iter(self.models)

    def __getitem__(self, i):
        return self.models[i]

    @property
    def rates(self):
        return [m.R_s for m in self.models]

    def largest(self):
        return self.models[-1]

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(BANK_HEADER)
            for m in self.models:
                w.writerow([repr(float(getattr(m, k))) for k in BANK_HEADER])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="", encoding="utf-8") as fh:
            return cls._from_reader(csv.reader(fh), str(path))

    @classmethod
    def default(cls):
        """Synthetic four-codec bank shipped with the package."""
        text = resources.files("issc").joinpath("data/default_bank.csv").read_text("utf-8")
        return cls._from_reader(csv.reader(text.splitlines()), "default_bank.csv")

    @classmethod
    def _from_reader(cls, reader, where):
        rows = [r for r in reader if r and any(c.strip() for c in r)]
        header = [c.strip() for c in rows[0]]
        if header != BANK_HEADER:
            raise ValueError(f"{where}: expected header {','.join(BANK_HEADER)}, got {','.join(header)}")
        models = []
        for r in rows[1:]:
            vals = [float(c) for c in r]
            models.append(LogisticDistortionModel(*vals))
        return cls(models)


def _sigmoid(z):
    # numerically safe logistic
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))), np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))


def e2e_log10_distortion(model, rho_b):
    r = np.asarray(rho_b, dtype=float)
    if np.any(r <= 0):
        raise InvalidBer("BER must be strictly positive")
    z = model.E1 * (np.log10(r) - model.E2)
    out = model.Ds_hat + model.Dc_hat * _sigmoid(z)
    return out if out.ndim else float(out)


def e2e_distortion(model, rho_b):
    out = 10.0 ** np.asarray(e2e_log10_distortion(model, rho_b))
    return out if out.ndim else float(out)


def synth_curve(model, rho_grid):
    rho_grid = np.atleast_1d(np.asarray(rho_grid, dtype=float))
    D = np.atleast_1d(e2e_distortion(model, rho_grid))
    return [DistortionSample(float(r), float(d)) for r, d in zip(rho_grid, D)]


def _residuals(params, x, y):
    Ds, Dc, E1, E2 = params
    return Ds + Dc * _sigmoid(E1 * (x - E2)) - y


def fit_logistic(samples, R_s, flat_tol=1e-9, max_nfev=2000):
    """Least-squares fit of the four logistic parameters in log-log space.

    Returns a :class:`FitResult` with the model and the log-domain RMSE.
    A flat curve leaves ``E1``/``E2`` unidentifiable; they are then set to
    ``1`` and the median log-BER, with ``identifiable=False``.
    """
    if len(samples) < 6:
        raise FitDataInsufficient(f"need at least 6 samples, got {len(samples)}")
    rho = np.array([s.rho_b for s in samples], dtype=float)
    D = np.array([s.D_o for s in samples], dtype=float)
    if np.any(rho <= 0) or np.any(rho > 0.5) or np.any(D <= 0):
        raise FitDataInsufficient("samples need 0 < rho_b <= 0.5 and D_o > 0")
    x = np.log10(rho)
    y = np.log10(D)
    if x.max() - x.min() < 2.0:
        raise FitDataInsufficient("samples must span at least two decades of BER")

    E2_0 = float(np.median(x))
    if y.max() - y.min() <= flat_tol:
        Ds = float(np.mean(y))
        model = LogisticDistortionModel(float(R_s), Ds, 0.0, 1.0, E2_0)
        return FitResult(model, float(np.sqrt(np.mean((y - Ds) ** 2))), identifiable=False)

    p0 = np.array([y.min(), y.max() - y.min(), 1.0, E2_0])
    lower = [-np.inf, 0.0, 1e-8, -np.inf]
    upper = [np.inf, np.inf, np.inf, np.inf]
    best = None
    for start in (p0, np.array([y.min(), y.max() - y.min(), 3.0, float(x[np.argmin(np.abs(y - 0.5 * (y.min() + y.max())))])])):
        sol = least_squares(
            _residuals, start, args=(x, y), bounds=(lower, upper), method="trf",
            x_scale="jac", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev,
        )
        if best is None or sol.cost < best.cost:
            best = sol
    model = LogisticDistortionModel(float(R_s), *map(float, best.x))
    rmse = float(np.sqrt(np.mean(best.fun**2)))
    if best.status <= 0 or not np.all(np.isfinite(best.x)):
        raise FitDiverged(f"least-squares did not converge: {best.message}", best=FitResult(model, rmse))
    return FitResult(model, rmse)


def read_samples(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    header = [c.strip() for c in rows[0]]
    if header != SAMPLE_HEADER:
        raise ValueError(f"{path}: expected header rho_b,D_o")
    return [DistortionSample(float(a), float(b)) for a, b in rows[1:]]


def write_samples(samples, path):
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(SAMPLE_HEADER)
        for s in samples:
            w.writerow([repr(s.rho_b), repr(s.D_o)])
