"""
Joint design driver: alternating rate/beam optimisation per codec model,
discrete model selection, the zero-forcing water-filling benchmark,
parameter sweeps, configuration files and run reports.
"""

import csv
import dataclasses
import io
import json
import math
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import beam_fp, fim, geometry, link, rate_sca
from .distortion import ModelBank
from .errors import (
    AllModelsInfeasible, ConfigError, HcrbInfeasible, IsscError, MaxIter, RateInfeasible, ZfDegenerate,
)

CSV_HEADER = [
    "axis", "scheme", "R_s", "R_c", "gamma_dB", "ber_exact", "ber_approx", "D_o", "log10_D_o",
    "trace_crb", "trace_hcrb", "power_comm", "power_sense", "status",
]
SWEEP_AXES = ("P_T", "Pi", "sigma_delta", "E_a_max")
_SCENE_FIELDS = [f.name for f in dataclasses.fields(geometry.Scene)]
_SECTIONS = ("scene", "link", "sensing", "solver", "sweep", "codec")


def dbm_to_watt(dbm):
    return 10.0 ** (dbm / 10.0) / 1e3


def watt_to_dbm(w):
    return 10.0 * math.log10(w * 1e3)


_UNITS = {
    "w": 1.0, "mw": 1e-3, "s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9, "ps": 1e-12,
    "hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9, "m": 1.0, "m2": 1.0, "m^2": 1.0,
}


def parse_quantity(value, key=""):
    """Numbers pass through; strings like ``"25 dBm"`` or ``"100 ns"`` map to SI."""
    if isinstance(value, bool):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    m = re.fullmatch(r"\s*([-+0-9.eE]+)\s*([A-Za-z^0-9]*)\s*", value)
    if not m:
        raise ConfigError(f"{key}: cannot parse quantity {value!r}")
    try:
        num = float(m.group(1))
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse quantity {value!r}") from exc
    unit = m.group(2).lower()
    if unit == "":
        return num
    if unit == "dbm":
        return dbm_to_watt(num)
    if unit == "dbw":
        return 10.0 ** (num / 10.0)
    if unit in _UNITS:
        return num * _UNITS[unit]
    raise ConfigError(f"{key}: unknown unit {m.group(2)!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    p_b: tuple = (0.0, 0.0)
    p_o: tuple = (100.0, 50.0)
    p_c: tuple = (20.0, 30.0)
    p_r: tuple = (0.0, 50.0)
    N_T: int = 4
    N_R: int = 4
    d_a_over_lambda: float = 0.5
    epsilon: float = 3.0
    beta0: float = 0.6
    sigma_n2: float = 1e-8
    sigma_s2: float = 1e-8
    sigma_delta: float = 100e-9
    c0: float = geometry.SPEED_OF_LIGHT
    bandwidth_hz: float = 100e6
    N: int = 1024
    P_T: float = dbm_to_watt(25.0)
    Pi: float = None  # None -> twice the matched-filter Tr(HCRB) at 25 dBm
    E_a_max: float = 1.0
    L: int = 256
    bank: str = None  # None -> packaged default bank
    ao_tol: float = 1e-5
    ao_max_rounds: int = 30
    rate_tol: float = 1e-6
    rate_max_outer: int = 50
    kappa0: float = 1.0
    iota: float = 0.5
    kappa_min: float = 1e-6
    beam_tol: float = 1e-6
    sweep_axis: str = "P_T"
    sweep_from: float = None
    sweep_to: float = None
    sweep_points: int = 6
    workers: int = 1
    seed: int = 0

    def __post_init__(self):
        if not self.P_T > 0:
            raise ConfigError("P_T must be positive")
        if self.Pi is not None and not self.Pi > 0:
            raise ConfigError("Pi must be positive")
        if not self.E_a_max > 0:
            raise ConfigError("E_a_max must be positive")
        if int(self.L) < 1:
            raise ConfigError("L must be a positive integer")
        if self.sweep_axis not in SWEEP_AXES:
            raise ConfigError(f"sweep_axis must be one of {', '.join(SWEEP_AXES)}")

    def scene(self):
        kw = {k: getattr(self, k) for k in _SCENE_FIELDS}
        return geometry.Scene(**kw)

    def load_bank(self):
        return ModelBank.default() if self.bank is None else ModelBank.from_csv(self.bank)

    def schedule(self):
        return beam_fp.PenaltySchedule(kappa0=self.kappa0, iota=self.iota, kappa_min=self.kappa_min, tol=self.beam_tol)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        d = dataclasses.asdict(self)
        for k in ("p_b", "p_o", "p_c", "p_r"):
            d[k] = [float(v) for v in d[k]]
        return d

    @classmethod
    def from_dict(cls, data, base_dir=None):
        flat = {}
        for k, v in (data or {}).items():
            if isinstance(v, dict):
                if k not in _SECTIONS:
                    raise ConfigError(f"unknown config section {k!r}")
                for kk, vv in v.items():
                    if kk in flat:
                        raise ConfigError(f"duplicate config key {kk!r}")
                    flat[kk] = vv
            else:
                if k in flat:
                    raise ConfigError(f"duplicate config key {k!r}")
                flat[k] = v
        names = {f.name: f for f in dataclasses.fields(cls)}
        kw = {}
        for k, v in flat.items():
            if k not in names:
                raise ConfigError(f"unknown config key {k!r}")
            kw[k] = _coerce(k, v, base_dir)
        try:
            return cls(**kw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path):
        path = Path(path)
        try:
            data = yaml.safe_load(path.read_text(encoding="utf-8"))
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        if data is not None and not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        return cls.from_dict(data, base_dir=path.parent)


_INT_KEYS = {"N_T", "N_R", "N", "L", "ao_max_rounds", "rate_max_outer", "sweep_points", "workers", "seed"}


def _coerce(key, value, base_dir):
    if key in ("p_b", "p_o", "p_c", "p_r"):
        if not isinstance(value, (list, tuple)) or len(value) != 2:
            raise ConfigError(f"{key}: expected a pair of coordinates")
        return tuple(parse_quantity(v, key) for v in value)
    if key == "bank":
        if value is None:
            return None
        p = Path(value)
        return str(p if p.is_absolute() or base_dir is None else Path(base_dir) / p)
    if key == "sweep_axis":
        return str(value)
    if key == "Pi" and value is None:
        return None
    if key in ("sweep_from", "sweep_to") and value is None:
        return None
    if key in _INT_KEYS:
        q = parse_quantity(value, key)
        if q != int(q):
            raise ConfigError(f"{key}: expected an integer")
        return int(q)
    return parse_quantity(value, key)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass
class SolveReport:
    scheme: str
    status: str
    R_s: float = math.nan
    R_c: float = math.nan
    beams: link.BeamPair = None
    D_o: float = math.nan
    log10_D_o: float = math.nan
    D_o_approx: float = math.nan
    gamma: float = math.nan
    ber_exact: float = math.nan
    ber_approx: float = math.nan
    trace_crb: float = math.nan
    trace_hcrb: float = math.nan
    P_T: float = math.nan
    Pi: float = math.nan
    E_a_max: float = math.nan
    L: int = 0
    model: dict = None
    slacks: dict = field(default_factory=dict)
    iterations: dict = field(default_factory=dict)
    history: list = field(default_factory=list)
    traces: dict = field(default_factory=dict)
    skipped: dict = field(default_factory=dict)
    wall_time: float = 0.0  # not written to report files (keeps them reproducible)

    @property
    def gamma_dB(self):
        return 10.0 * math.log10(self.gamma) if self.gamma > 0 else -math.inf

    @property
    def power_comm(self):
        return self.beams.power_comm if self.beams is not None else math.nan

    @property
    def power_sense(self):
        return self.beams.power_sense if self.beams is not None else math.nan

    def to_dict(self):
        d = {
            "scheme": self.scheme, "status": self.status, "R_s": self.R_s, "R_c": self.R_c,
            "D_o": self.D_o, "log10_D_o": self.log10_D_o, "D_o_approx": self.D_o_approx,
            "quality_proxy_neg_log10_D_o": -self.log10_D_o,
            "gamma": self.gamma, "gamma_dB": self.gamma_dB, "ber_exact": self.ber_exact,
            "ber_approx": self.ber_approx, "trace_crb": self.trace_crb, "trace_hcrb": self.trace_hcrb,
            "power_comm": self.power_comm, "power_sense": self.power_sense,
            "P_T": self.P_T, "Pi": self.Pi, "E_a_max": self.E_a_max, "L": self.L, "model": self.model,
            "slacks": self.slacks, "iterations": self.iterations, "history": self.history,
            "traces": self.traces, "skipped": self.skipped,
        }
        if self.beams is not None:
            d["beams"] = {
                "w_c": [[float(z.real), float(z.imag)] for z in self.beams.w_c],
                "w_0": [[float(z.real), float(z.imag)] for z in self.beams.w_0],
            }
        return _jsonable(d)

    def csv_row(self, axis_value):
        return {
            "axis": axis_value, "scheme": self.scheme, "R_s": self.R_s, "R_c": self.R_c,
            "gamma_dB": self.gamma_dB if self.beams is not None else math.nan,
            "ber_exact": self.ber_exact, "ber_approx": self.ber_approx, "D_o": self.D_o,
            "log10_D_o": self.log10_D_o, "trace_crb": self.trace_crb, "trace_hcrb": self.trace_hcrb,
            "power_comm": self.power_comm, "power_sense": self.power_sense, "status": self.status,
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_report(report, path):
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    Path(path).write_text(text + "\n", encoding="utf-8")
    return text


# ---------------------------------------------------------------------------
# shared setup
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Problem:
    scene: geometry.Scene
    h_c: np.ndarray
    zeta: fim.ZetaSet


def _setup(config):
    scene = config.scene()
    return _Problem(scene, geometry.build_comm_channel(scene).h_c,
                    fim.build_zeta(geometry.build_sense_channel(scene), scene))


def default_pi(config):
    """Twice the matched-filter Tr(HCRB) at 25 dBm for the configured scene."""
    pb = _setup(config)
    mf = beam_fp.matched_filter_beams(pb.h_c, dbm_to_watt(25.0))
    return 2.0 * fim.hcrb_for_beams(pb.zeta, mf, pb.scene.sigma_s2, pb.scene.sigma_delta).trace_hcrb


def resolved_pi(config):
    return default_pi(config) if config.Pi is None else float(config.Pi)


def _bounds(beams, pb):
    try:
        rep = fim.hcrb_for_beams(pb.zeta, beams, pb.scene.sigma_s2, pb.scene.sigma_delta)
        return rep.trace_crb, rep.trace_hcrb
    except IsscError:
        return math.inf, math.inf


def _fill(report, model, R_c, beams, pb, config, Pi):
    gamma = link.sinr(beams, pb.h_c, pb.scene.sigma_n2)
    report.R_s = float(model.R_s)
    report.R_c = float(R_c)
    report.beams = beams
    report.gamma = gamma
    report.ber_exact = link.ber(gamma, R_c, config.L, exact_dispersion=True)
    report.ber_approx = link.ber(gamma, R_c, config.L, exact_dispersion=False)
    report.D_o = model(report.ber_exact)
    report.log10_D_o = model.log10_distortion(report.ber_exact)
    report.D_o_approx = model(report.ber_approx)
    report.trace_crb, report.trace_hcrb = _bounds(beams, pb)
    report.P_T, report.Pi, report.E_a_max, report.L = config.P_T, Pi, config.E_a_max, config.L
    report.model = dataclasses.asdict(model)
    C = float(link.capacity(gamma))
    report.slacks = {
        "power": config.P_T - beams.power,
        "hcrb": (Pi - report.trace_hcrb) if math.isfinite(Pi) else math.inf,
        "rate_low": R_c - model.R_s / config.E_a_max,
        "rate_high": C - R_c,
    }
    return report


# ---------------------------------------------------------------------------
# proposed scheme
# ---------------------------------------------------------------------------


def solve_issc(config, bank=None):
    """Minimum-distortion design over the model bank; returns a SolveReport."""
    t0 = time.perf_counter()
    bank = config.load_bank() if bank is None else bank
    pb = _setup(config)
    Pi = resolved_pi(config)
    schedule = config.schedule()
    beam_cache = {}

    def beams_for(R_c):
        # the beam subproblem does not depend on R_c beyond a post-hoc check
        if "beams" not in beam_cache:
            try:
                beam_cache["beams"] = beam_fp.beam_outer(R_c, pb.scene, pb.zeta, pb.h_c, Pi, config.P_T, schedule)
            except MaxIter as exc:
                if exc.best is None:
                    raise
                beam_cache["beams"] = exc.best
        return beam_cache["beams"]

    candidates, skipped = [], {}
    for model in bank:
        try:
            cand = _solve_model(model, config, pb, Pi, beams_for)
        except (RateInfeasible, HcrbInfeasible, MaxIter) as exc:
            skipped[repr(float(model.R_s))] = f"{type(exc).__name__}: {exc}"
            continue
        candidates.append(cand)
    if not candidates:
        raise AllModelsInfeasible("no codec model is feasible", failures=skipped)
    best = min(candidates, key=lambda r: (r.D_o, -r.R_s))
    best.skipped = skipped
    best.iterations["models_tried"] = len(bank)
    best.wall_time = time.perf_counter() - t0
    return best


def _solve_model(model, config, pb, Pi, beams_for):
    # start from the beam step so every accepted point meets the HCRB bound
    beams, btrace = beams_for(None)
    history, rate_traces = [], []
    accepted = None
    rounds = 0
    for rounds in range(1, config.ao_max_rounds + 1):
        gamma = link.sinr(beams, pb.h_c, pb.scene.sigma_n2)
        it, rtrace = rate_sca.solve_rate(
            model, gamma, config.L, config.E_a_max, config.rate_tol, config.rate_max_outer,
            R_c0=None if accepted is None else accepted[0].R_c)
        if accepted is not None and it.objective > accepted[0].objective:
            break
        history.append(it.objective)
        rate_traces.append(rtrace.to_dict())
        done = accepted is not None and abs(accepted[0].objective - it.objective) <= config.ao_tol * it.objective
        accepted = (it, beams, btrace)
        if done:
            break
        new_beams, new_trace = beams_for(it.R_c)
        if link.capacity(link.sinr(new_beams, pb.h_c, pb.scene.sigma_n2)) < it.R_c:
            break
        beams, btrace = new_beams, new_trace
    it, beams, btrace = accepted
    rep = SolveReport(scheme="proposed", status="optimal")
    _fill(rep, model, it.R_c, beams, pb, config, Pi)
    rep.history = history
    rep.iterations = {"ao_rounds": rounds, "rate_sca": [len(t["R_c"]) for t in rate_traces],
                      "beam_outer": len(btrace.gamma)}
    rep.traces = {"rate": rate_traces, "beam": btrace.to_dict()}
    if "rate_warning" in btrace.exit:
        rep.status = "optimal;rate_warning"
    return rep


# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------


def water_filling(gains, P):
    """Powers ``p_i = max(0, mu - 1/g_i)`` summing to ``P``."""
    g = np.asarray(gains, dtype=float)
    out = np.zeros_like(g)
    act = g > 0
    if not np.any(act) or P <= 0:
        return out
    inv = np.sort(1.0 / g[act])
    for k in range(inv.size, 0, -1):
        mu = (P + inv[:k].sum()) / k
        if mu > inv[k - 1]:
            break
    out[act] = np.maximum(mu - 1.0 / g[act], 0.0)
    return out


def zf_directions(h_c, a, tol=1e-8):
    proj = a - h_c * (np.vdot(h_c, a) / np.vdot(h_c, h_c))
    if np.linalg.norm(proj) <= tol * np.linalg.norm(a):
        raise ZfDegenerate("sensing steering vector is parallel to the user channel")
    return h_c / np.linalg.norm(h_c), proj / np.linalg.norm(proj)


def baseline_wf_zf(config, bank=None):
    """Zero-forcing directions with water-filled power and R_c = 0.9 C."""
    t0 = time.perf_counter()
    if config.N_T < 2:
        raise ZfDegenerate("zero forcing needs at least two transmit antennas")
    bank = config.load_bank() if bank is None else bank
    pb = _setup(config)
    Pi = resolved_pi(config)
    theta = geometry.angle_between(pb.scene.p_b, pb.scene.p_o)
    a = geometry.steering_vector(theta, pb.scene.N_T, pb.scene.d_a_over_lambda)
    u_c, u_0 = zf_directions(pb.h_c, a)
    g_comm = float(np.vdot(pb.h_c, pb.h_c).real) / pb.scene.sigma_n2
    g_sense = float(np.vdot(u_0, pb.zeta[6] @ u_0).real) / pb.scene.sigma_s2
    p = water_filling([g_comm, g_sense], config.P_T)
    beams = link.BeamPair(math.sqrt(p[0]) * u_c, math.sqrt(p[1]) * u_0)
    gamma = link.sinr(beams, pb.h_c, pb.scene.sigma_n2)
    R_c = 0.9 * float(link.capacity(gamma))
    # largest codec whose rate fits the channel-use budget
    feasible = [m for m in bank if m.R_s / config.E_a_max <= R_c]
    rep = SolveReport(scheme="wf_zf", status="optimal")
    if not feasible:
        raise AllModelsInfeasible(
            f"no codec fits R_c = {R_c:.6g} with E_a_max = {config.E_a_max}",
            failures={repr(float(m.R_s)): "RateInfeasible" for m in bank})
    model = max(feasible, key=lambda m: m.R_s)
    _fill(rep, model, R_c, beams, pb, config, Pi)
    if rep.trace_hcrb > Pi * (1 + 1e-6):
        rep.status = "optimal;hcrb_violated"
    rep.iterations = {"water_filling": [float(v) for v in p]}
    rep.skipped = {repr(float(m.R_s)): "rate budget" for m in bank if m not in feasible}
    rep.wall_time = time.perf_counter() - t0
    return rep


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


def _point(args):
    config, axis, value = args
    cfg = config.replace(**{axis: value})
    if axis != "Pi" and config.Pi is None:
        # keep the threshold fixed across the sweep at the base configuration's value
        cfg = cfg.replace(Pi=resolved_pi(config))
    rows = []
    for scheme, fn in (("proposed", solve_issc), ("wf_zf", baseline_wf_zf)):
        try:
            rows.append(fn(cfg).csv_row(value))
        except (AllModelsInfeasible, HcrbInfeasible, RateInfeasible, ZfDegenerate) as exc:
            rows.append(_error_row(value, scheme, "infeasible:" + type(exc).__name__))
        except IsscError as exc:
            rows.append(_error_row(value, scheme, "error:" + type(exc).__name__))
    return rows


def _error_row(value, scheme, status):
    row = {k: math.nan for k in CSV_HEADER}
    row.update(axis=value, scheme=scheme, status=status)
    return row


def sweep(config, axis, grid, workers=None):
    """Run both schemes per grid value; rows are returned in grid order."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"sweep axis must be one of {', '.join(SWEEP_AXES)}")
    grid = [float(v) for v in grid]
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ConfigError("sweep grid must be sorted")
    workers = config.workers if workers is None else workers
    jobs = [(config, axis, v) for v in grid]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_point, jobs))
    else:
        parts = [_point(j) for j in jobs]
    return [row for part in parts for row in part]


def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def rows_to_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([_fmt(r[k]) for k in CSV_HEADER])
    return buf.getvalue()


def write_csv(rows, path):
    Path(path).write_text(rows_to_csv(rows), encoding="utf-8")


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for r in rows:
        d = {}
        for k in CSV_HEADER:
            v = r[k]
            d[k] = v if k in ("scheme", "status") else float(v)
        out.append(d)
    return out


# ---------------------------------------------------------------------------
# self check
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    error: float
    threshold: float
    detail: str = ""


def self_check(config):
    """Numerical consistency suites on the configured scene."""
    from . import checks

    return checks.run_all(config)
