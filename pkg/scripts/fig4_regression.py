"""Train sin, cube and sinc on 34 and 200 ideal neurons and write the learned curves.

    python scripts/fig4_regression.py [out_dir]
"""
import sys
from dataclasses import replace

from tabsim import ExperimentConfig, MismatchSpec, TaskSpec, run_regression


def main(out="results/fig4"):
    base = ExperimentConfig(mismatch=MismatchSpec.ideal())
    print(f"{'task':6s} {'L':>4s} {'train':>10s} {'test':>10s}")
    for task in ("sin", "cube", "sinc"):
        for L in (34, 200):
            cfg = replace(base, task=TaskSpec(task), L=L, output_dir=f"{out}/L{L}")
            rep = run_regression(cfg)
            print(f"{task:6s} {L:4d} {rep.train_nrmse:10.3e} {rep.test_nrmse:10.3e}  {rep.path('curve')}")


if __name__ == "__main__":
    main(*sys.argv[1:])
