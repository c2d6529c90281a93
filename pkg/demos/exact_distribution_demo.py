"""Walk through the exact-analysis machinery on a small example.

Shows, step by step, how the per-rank SINR distributions are built:
the variable changes from gamma variates to candidacy SINRs, the
candidacy densities and their partial integrals, the joint density of
the greedily scheduled values, and finally a marginal density with its
quadrature-based normalization check.

Usage:  python3 demos/exact_distribution_demo.py
"""

import numpy as np
from scipy import integrate

from obflab import (
    ObfParams,
    OlbfParams,
    obf_joint_pdf_scheduled,
    obf_marginal_pdf_grid,
    obf_selection_cdf,
    obf_unordered_pdf,
    olbf_cdf_z,
    olbf_joint_pdf_t,
    olbf_unordered_pdf_z,
)
from obflab.analytic_obf import obf_v_to_x, obf_x_to_v
from obflab.analytic_olbf import olbf_marginal_pdf_t_grid

M, K, P = 3, 10, 10.0 ** 1.5

print("=== adaptive OBF, fixed r = M ===")
params = ObfParams(M=M, K=K, P=P, r=M)

xs = np.array([0.7, 1.3, 0.4])
vs = obf_x_to_v(xs, params)
back, det = obf_v_to_x(vs, params)
print(f"gamma variates        x = {xs}")
print(f"candidacy SINRs       v = {np.round(vs, 4)}  (non-increasing)")
print(f"inverse roundtrip     x = {np.round(back, 4)},  |det J| = {det:.4e}")

print(f"\nunordered density  f(v) = {obf_unordered_pdf(vs, params):.6e}")
point = [4.0, 1.5, 0.6]
for n in (1, 2, 3):
    cdf = obf_selection_cdf(n, point[:n], params)
    print(f"candidacy CDF I_{n}{tuple(point[:n])} = {cdf:.6f}")
print(f"joint scheduled density at {point}: "
      f"{obf_joint_pdf_scheduled(point, params):.6e}")

mass, _ = integrate.quad(
    lambda u: obf_marginal_pdf_grid(2, np.array([u / (1 - u)]), params)[0]
    / (1 - u) ** 2,
    0.0, 1.0, epsrel=1e-9, limit=200,
)
print(f"rank-2 marginal mass (quadrature): {mass:.10f}")

print("\n=== OLBF ===")
oparams = OlbfParams(M=M, K=K, P=P)
zs = np.array([0.6, 0.2, 0.15])
print(f"z-domain point        z = {zs}  (z2 + z3 <= z1)")
print(f"unordered z-density   f(z) = {olbf_unordered_pdf_z(zs, oparams):.6e}")
for ts in ([0.6], [0.6, 0.3], [0.6, 0.3, 0.2], [0.5, 0.4, 0.3]):
    print(f"joint CDF F{tuple(ts)} = {olbf_cdf_z(ts, oparams):.6f}")
print(f"joint scheduled z-density at {zs.tolist()}: "
      f"{olbf_joint_pdf_t(zs, oparams):.6e}")

mass, _ = integrate.quad(
    lambda t: olbf_marginal_pdf_t_grid(2, np.array([t]), oparams)[0],
    0.0, 1.0, epsrel=1e-9, limit=200,
)
print(f"rank-2 marginal mass (quadrature): {mass:.10f}")
