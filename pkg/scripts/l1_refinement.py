"""Max and interior L1 errors against the Mittag-Leffler solution as tau shrinks."""
import numpy as np

from fracdnn.cli import l1_errors

prev = None
for tau in (0.02, 0.01, 0.005, 0.0025, 0.00125):
    t, u, ref = l1_errors(0.5, -4.0, 0.5, tau, 1.0, 1e-12)
    err = np.abs(u - ref)
    interior = err[t >= 0.1].max()
    line = f"tau={tau:<8g} max {err.max():.4e} at t={t[err.argmax()]:.4f}  t>=0.1 {interior:.4e}"
    if prev:
        line += f"  ratios {prev[0] / err.max():.2f} / {prev[1] / interior:.2f}"
    print(line)
    prev = (err.max(), interior)
