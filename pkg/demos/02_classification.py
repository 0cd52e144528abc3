"""
Which sufficient condition applies?
===================================

Two routes lead to a rough path lift.  Covariances whose off-diagonal
increments are non-negative and whose negative part has finite mass go
through route A with ρ = 1.  Rougher ones go through route B, which needs
the on-diagonal Jain-Monrad bound σ²(s,t) <= C|t-s|^{1/ρ} and a sign
condition on nested increments near the diagonal.
"""

import json

from gaussrough import covariance as cv
from gaussrough import criteria as cr

catalog = [
    cv.fbm(0.7),
    cv.fbm(0.3),
    cv.bifbm(0.8, 0.7),
    cv.bifbm(0.6, 0.7),
    cv.brownian_bridge(),
    cv.she_dirichlet(0.9),
]

for m in catalog:
    rep = cr.classify(m)
    status = ", ".join(f"{k}={v['status']}" for k, v in rep.verdicts.items())
    print(f"{m.tag:32s} route {rep.route} rho={rep.rho_used:.3f}  [{status}]")

# For rough fBm the negative off-diagonal mass grows without bound as the
# grid is refined; this is why route A is closed to it.
_, _, ev = cr.mass_estimates(cv.fbm(0.3))
print("\nFBM(0.3) negative mass under refinement:", [round(x, 3) for x in ev["mu_minus"]], ev["mu_minus_trend"])

# Processes with stationary increments σ²(s,t) = F(|t-s|) have a separate
# checklist: F concave, a positive left derivative at T, and the conditional
# variance lower bound.
for name, F in [("t^0.8", lambda x: abs(x) ** 0.8), ("t^2", lambda x: x**2)]:
    m = cv.stationary_f(F, (0.0, 1.0), 1.25, "concave")
    rep = cr.chlt_check(m)
    print(f"\nF = {name}:", json.dumps({k: v["status"] for k, v in rep.verdicts.items()}))
