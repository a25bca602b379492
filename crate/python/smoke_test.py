"""Smoke test for the dtgm_py extension module.

Builds nothing itself: run `cargo build -p dtgm-py` first, then
`python python/smoke_test.py`. The script locates the compiled library
under target/, loads it, and exercises the bound functions end to end.
"""

import importlib.util
import json
import math
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_module():
    names = ["libdtgm_py.so", "dtgm_py.so", "libdtgm_py.dylib", "dtgm_py.pyd"]
    candidates = [
        ROOT / "target" / profile / name
        for profile in ("debug", "release")
        for name in names
    ]
    for path in candidates:
        if path.exists():
            spec = importlib.util.spec_from_file_location("dtgm_py", path)
            module = importlib.util.module_from_spec(spec)
            spec.loader.exec_module(module)
            return module
    sys.exit("dtgm_py library not found; run `cargo build -p dtgm-py` first")


def approx(a, b, tol=1e-9):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    m = load_module()

    # Rank correlation on a tie-free monotone pair: tau must be exactly 1.
    x = [0.1, 0.7, 0.3, 2.5, -1.0]
    y = [math.tanh(v) for v in x]
    approx(m.kendall_tau(x, y), 1.0, 0.0)
    assert m.kendall_tau(x, y, fast=False) == m.kendall_tau(x, y, fast=True)

    # Normal helpers.
    approx(m.normal_cdf(0.0), 0.5, 1e-12)
    approx(m.normal_quantile(m.normal_cdf(1.3)), 1.3, 1e-8)

    reject, p_value = m.wald_test(3.0, 0.05)
    assert reject and 0.0 < p_value < 0.05

    # Synthetic truth, sampling, and the estimation stack.
    sigma_star, theta_star = m.generate_precision(6, kind="chain", seed=42)
    assert len(sigma_star) == 6 and len(theta_star) == 6
    data = m.sample("nonparanormal", sigma_star, theta_star, 400, seed=7)
    assert len(data) == 400 and len(data[0]) == 6

    tau, corr = m.latent_correlation(data)
    assert len(tau) == 6 and len(corr) == 6
    for j in range(6):
        approx(corr[j][j], 1.0, 1e-12)

    lam = m.default_lambda(400, 6)
    theta_hat, feas = m.clime_estimate(corr, lam)
    assert feas <= lam + 1e-8
    theta_tilde = m.debias(theta_hat, corr)
    sparse = m.hard_threshold(theta_tilde, 0.2)
    offdiag = sum(
        1 for j in range(6) for k in range(6) if j != k and sparse[j][k] != 0.0
    )
    assert offdiag < 30, "thresholding should zero some off-diagonal entries"

    cov = m.sample_covariance(data)
    assert len(cov) == 6

    # Full distributed pipeline through the JSON config surface.
    config = {
        "m": 4,
        "model": "transelliptical",
        "clime": {"lambda_c": 0.5},
        "threshold": {"mode": "formula", "c_t": 2.0},
        "infer": {"pairs": [[0, 1]], "alpha": 0.05},
    }
    report = json.loads(m.run_pipeline(data, json.dumps(config)))
    result = report["result"]
    assert result["messages"] == 4
    check = result["theta_check"]
    assert check["rows"] == 6 and check["cols"] == 6
    assert len(result["tests"]) == 1
    test = result["tests"][0]
    assert {"j", "k", "u_stat", "p_value", "reject"} <= set(test)
    assert report["timings"]["total_ms"] >= 0.0

    print("OK: all dtgm_py smoke checks passed")


if __name__ == "__main__":
    main()
