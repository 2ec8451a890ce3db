"""Calibration run that freezes reference numbers into tests/fixtures/oracle_values.json.

Rerun after any change to model defaults, then review the diff by hand:

    python scripts/oracle_run.py
"""
import json
import tempfile
from dataclasses import replace
from pathlib import Path

from tabsim import ExperimentConfig, MismatchSpec, TaskSpec
from tabsim.experiments import bitdepth_sweep, heterogeneity_study, mismatch_mc, run_regression

FIXTURE = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "oracle_values.json"


def main():
    tmp = tempfile.mkdtemp(prefix="tabsim-oracle-")
    ideal = ExperimentConfig(mismatch=MismatchSpec.ideal(), output_dir=tmp)
    out = {"fig4": {}, "bits": {}, "hetero": {}, "mc": {}}

    for task in ("sin", "cube", "sinc"):
        for L in (34, 200):
            rep = run_regression(replace(ideal, task=TaskSpec(task), L=L))
            out["fig4"][f"{task}_L{L}"] = rep.test_nrmse

    for ridge in (0.0, 1e-3):
        rep = bitdepth_sweep(replace(ideal, ridge=ridge), [1, 6, 11, 13, 24])
        out["bits"][f"ridge={ridge:g}"] = {
            "real": rep.test_nrmse,
            "max_abs_weight": rep.extra["max_abs_weight"],
            **{b: v["test_nrmse"] for b, v in rep.extra["bits"].items()},
        }

    rep = heterogeneity_study(replace(ideal, mismatch=MismatchSpec()))
    out["hetero"] = {k: v["test_nrmse"] for k, v in rep.extra["arms"].items()}
    out["hetero"]["ranks"] = {k: v["rank"] for k, v in rep.extra["arms"].items()}

    for ridge in (0.0, 1e-6):
        rep = mismatch_mc(replace(ideal, mismatch=MismatchSpec(sigma_Vos=5e-3), ridge=ridge), 100)
        s = rep.extra["test_nrmse"]
        out["mc"][f"ridge={ridge:g}"] = {"median": s["median"], "p95": s["p95"]}

    FIXTURE.parent.mkdir(parents=True, exist_ok=True)
    FIXTURE.write_text(json.dumps(out, indent=2) + "\n")
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
