# %% [markdown]
# # Eguchi-Hanson cap and its correction series
#
# The static cap is Ricci flat, so log det of its radial eigenvalues is
# constant.  The flowing cap adds corrections G_j(eta)/s^j in the
# variables s = t, eta = t rho; each G_j grows like eta^(j+1) with leading
# coefficient 1/((j+1) 3^j), and truncating after k terms leaves a residual
# of size s^-(k+1).

# %%
import numpy as np

from kahlerflow import EguchiHansonProfile, CorrectionSeries, g1_closed_form, log_det, metric_from_profile, residual
from kahlerflow import experiments as ex

rho = np.geomspace(1e-6, 1e6, 1000)
for c in (0.5, 1.0, 2.0):
    eigs = metric_from_profile(EguchiHansonProfile(c), rho)
    print(f"c={c}: max |log det - 2 log c| = {np.max(np.abs(log_det(eigs) - 2 * np.log(c))):.1e}")

# %% First correction against its closed form
eta = np.geomspace(1e-3, 50, 400)
series = CorrectionSeries(1.0, 3)
print("G1 max rel error:", np.max(np.abs(series.terms[0].value(eta) / g1_closed_form(1.0, eta) - 1)))

# %% Leading coefficients and residual decay
print(ex.lemma1().tables)
lem2 = ex.lemma2()
for k in (0, 1, 2):
    print(f"k={k}: sup residual slope {lem2.metrics[f'k={k}.sup_slope']:.3f} (expected {-(k + 1)})")

# %% Residual at eta = 1 for growing s
for s in (1e2, 1e3, 1e4):
    print(s, [float(abs(residual(series.truncated(k), s, np.array([1.0]))[0])) for k in range(4)])
