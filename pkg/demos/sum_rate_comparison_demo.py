"""Compare mean sum rates of the orthogonal-beamforming schemes against
the zero-forcing baselines across transmit power and user count.

Part one sweeps power at M=r=3, K=10, showing simulated means with
standard errors next to the analytic predictions.  Part two sweeps the
user count at two power levels and prints the sum-rate ratios of the
orthogonal schemes to greedy zero-forcing dirty paper (ZF-DP), the
quantity behind the ratio claims checked in the acceptance tests.

Usage:  python3 demos/sum_rate_comparison_demo.py [trials]
"""

import sys

from obflab import (
    ExperimentConfig,
    ObfParams,
    OlbfParams,
    SystemParams,
    obf_mean_sum_rate,
    olbf_mean_sum_rate,
    run_experiment,
)

TRIALS = int(sys.argv[1]) if len(sys.argv) > 1 else 20000


def mc_mean(scheme, M, K, P, trials=TRIALS, seed=1):
    config = ExperimentConfig(
        params=SystemParams(M=M, K=K, P=P, r=M),
        scheme=scheme,
        trials=trials,
        seed=seed,
        force_r=M if scheme == "adaptive-obf" else None,
    )
    report = run_experiment(config)
    return report.mean_sum_rate, report.stderr_sum_rate


def power_sweep():
    M, K = 3, 10
    print(f"=== mean sum rate vs power  (M=r={M}, K={K}, {TRIALS} trials) ===")
    print("P[dB]   adaptive-OBF (sim / analytic)      OLBF (sim / analytic)")
    for p_db in (0, 5, 10, 15):
        P = 10.0 ** (p_db / 10.0)
        obf_mc, obf_se = mc_mean("adaptive-obf", M, K, P)
        olbf_mc, olbf_se = mc_mean("olbf", M, K, P)
        obf_an = obf_mean_sum_rate(ObfParams(M=M, K=K, P=P, r=M))
        olbf_an = olbf_mean_sum_rate(OlbfParams(M=M, K=K, P=P))
        print(f"{p_db:5d}   {obf_mc:.4f}+/-{obf_se:.4f} / {obf_an:.4f}      "
              f"{olbf_mc:.4f}+/-{olbf_se:.4f} / {olbf_an:.4f}")


def user_sweep():
    M = 3
    print(f"\n=== ratio to greedy ZF-DP vs user count  (M=r={M}) ===")
    print("P[dB]    K   adaptive-OBF/ZFDP   OLBF/ZFDP")
    for p_db in (0, 10):
        P = 10.0 ** (p_db / 10.0)
        for K in (4, 8, 12, 20):
            zfdp, _ = mc_mean("zfdp", M, K, P)
            obf, _ = mc_mean("adaptive-obf", M, K, P)
            olbf, _ = mc_mean("olbf", M, K, P)
            print(f"{p_db:5d}  {K:3d}   {obf / zfdp:15.3f}   {olbf / zfdp:9.3f}")


if __name__ == "__main__":
    power_sweep()
    user_sweep()
