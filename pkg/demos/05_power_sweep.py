"""
Proposed design against the zero-forcing water-filling benchmark
================================================================

Sweeps transmit power from 20 to 30 dBm at a fixed HCRB threshold and
writes the results table next to this script.
"""

from pathlib import Path

import numpy as np

from issc.driver import ExperimentConfig, dbm_to_watt, sweep, write_csv

here = Path(__file__).resolve().parent
cfg = ExperimentConfig.from_file(here / "config.yaml")
grid = [dbm_to_watt(v) for v in np.linspace(20, 30, 6)]
rows = sweep(cfg, "P_T", grid)
write_csv(rows, here / "power_sweep.csv")

print(f"{'P_T dBm':>8} {'scheme':>9} {'R_s':>4} {'-log10 D_o':>11} {'gamma dB':>9} {'Tr(HCRB)':>11}")
for r in rows:
    dbm = 10 * np.log10(r["axis"] * 1e3)
    print(f"{dbm:8.1f} {r['scheme']:>9} {r['R_s']:4.0f} {-r['log10_D_o']:11.4f} {r['gamma_dB']:9.3f} {r['trace_hcrb']:11.4e}")
