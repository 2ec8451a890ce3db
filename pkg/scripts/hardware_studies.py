"""Heterogeneity arms, output-weight bit depth and mismatch Monte Carlo on the sin task.

    python scripts/hardware_studies.py [out_dir] [n_chips]
"""
import sys
from dataclasses import replace

from tabsim import ExperimentConfig, MismatchSpec
from tabsim.experiments import bitdepth_sweep, heterogeneity_study, mismatch_mc


def main(out="results/studies", n_chips="200"):
    cfg = ExperimentConfig(output_dir=out)

    het = heterogeneity_study(cfg)
    for arm, m in het.extra["arms"].items():
        print(f"{arm:14s} rank={m['rank']:3d} test_nrmse={m['test_nrmse']:.3e}")

    for ridge in (0.0, 1e-3):
        rep = bitdepth_sweep(replace(cfg, mismatch=MismatchSpec.ideal(), ridge=ridge, output_dir=f"{out}/ridge{ridge:g}"),
                             [1, 4, 6, 8, 10, 11, 12, 13, 16, 24])
        row = " ".join(f"{b}:{v['test_nrmse']:.2e}" for b, v in rep.extra["bits"].items())
        print(f"ridge={ridge:g} real={rep.test_nrmse:.2e} max|w|={rep.extra['max_abs_weight']:.3g} {row}")

    for ridge in (0.0, 1e-6):
        mc = mismatch_mc(replace(cfg, ridge=ridge, output_dir=f"{out}/mc_ridge{ridge:g}"), int(n_chips))
        s = mc.extra["test_nrmse"]
        print(f"mc ridge={ridge:g}: median={s['median']:.3e} p95={s['p95']:.3e} ratio={s['p95'] / s['median']:.2f}")


if __name__ == "__main__":
    main(*sys.argv[1:])
