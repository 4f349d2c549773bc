"""Watch the spectrum of a torus # ε·pillowcase approach the torus spectrum.

Run ``python3 demos/collapse_canonical.py``.  Each row is one ε; columns are
the gaps |λ_j(O,g_ε) - λ_j(T²)| for j = 0..6, next to the transplant bound
δ(ε) which dominates them from above.
"""
import numpy as np

from orbicollapse.analysis import (CutoffSpec, collapse_sweep, delta_bound, reference_spectrum,
                                   resolve_cutoff)
from orbicollapse.analysis.geometries import build_factor, gluing_point
from orbicollapse.csum import ConnectedSumConfig
from orbicollapse.metric import euclidean

TAU = 2 * np.pi
torus = {"kind": "torus", "side": TAU, "h": 0.1}
pillow = {"kind": "pillowcase", "side": TAU, "h": 0.2, "grading": 0.5}
O1, O2 = build_factor(torus), build_factor(pillow)
p1, p2 = gluing_point(O1[0], torus), gluing_point(O2[0], pillow)
oracle = reference_spectrum(("torus", TAU), 7)

records = collapse_sweep(O1, O2, ConnectedSumConfig(0.4, p1, p2), [0.4, 0.2, 0.1, 0.05], 6,
                         oracle=oracle)
print("eps     n_dofs  delta    gaps j=0..6")
for r in records:
    mesh, q = resolve_cutoff(O1[0], p1, r.epsilon)
    d = delta_bound((mesh, euclidean(mesh)), CutoffSpec(r.epsilon, q), r.reference[-1]).delta_value
    print(f"{r.epsilon:<7g} {r.n_dofs:<7d} {d:<8.1f} " + " ".join(f"{g:.4f}" for g in r.gaps))
