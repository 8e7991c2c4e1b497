"""
Empirical constants of a weighted interpolation inequality
==========================================================

The inequality bounds a weighted L_q norm of D^m phi by a product of a
weighted L2 norm of D^k phi and a weighted L2 norm of phi.  Its constant
is not explicit, so we sample random band-limited fields and record the
largest ratio LHS / RHS (constant set to 1).  If the sample is large
enough the maximum barely moves when the sample is doubled.
"""
import math

import numpy as np

from zklayer import DomainSpec, WeightKind, WeightSpec
from zklayer.diagnostics import interpolation_ratio
from zklayer.experiments import audit_fields

dom = DomainSpec(math.pi, math.pi, 10.0, 64, 8, 8)
fields = audit_fields(dom, seed=0, count=200, kmax=20, lmax=8, decay=0.25)

one = WeightSpec(WeightKind.ONE)
rho = WeightSpec(WeightKind.RHO, 0.75)
drho = WeightSpec(WeightKind.RHO, 0.75, order=1)

for w1, w2, name in ((one, one, "unweighted"), (drho, rho, "rho' / rho")):
    print(name)
    for k, m, q in ((1, 0, 2), (1, 0, 6), (2, 0, 4), (2, 1, 2)):
        r = np.array([interpolation_ratio(f, k, m, q, w1, w2).ratio for f in fields])
        print(f"  (k, m, q) = ({k}, {m}, {q}):  max over 100 = {r[:100].max():.4f},  over 200 = {r.max():.4f}")
