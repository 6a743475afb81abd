"""
Fitting a logistic distortion curve
===================================

Synthesises (BER, distortion) samples from a known model, adds log-domain
noise and recovers the four parameters.
"""

import numpy as np

from issc.distortion import DistortionSample, LogisticDistortionModel, fit_logistic, synth_curve

true = LogisticDistortionModel(R_s=6.0, Ds_hat=-2.4, Dc_hat=1.6, E1=2.2, E2=-3.5)
grid = np.logspace(-8, np.log10(0.5), 40)
rng = np.random.default_rng(0)
samples = [DistortionSample(s.rho_b, s.D_o * 10 ** rng.normal(0, 0.01)) for s in synth_curve(true, grid)]

res = fit_logistic(samples, R_s=6.0)
for k in ("Ds_hat", "Dc_hat", "E1", "E2"):
    print(f"{k:7s} true {getattr(true, k):+.4f}  fitted {getattr(res.model, k):+.4f}")
print(f"log-domain RMSE {res.rmse:.4f}")
