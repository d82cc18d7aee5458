"""Smoke test for the cce_py extension module.

Build and install first, e.g.

    maturin build -m crates/py/Cargo.toml --release
    pip install target/wheels/cce_py-*.whl
"""

import math

import cce_py


def close(a, b, tol):
    assert abs(a - b) < tol, (a, b)


def main():
    assert "hyperbolic" in cce_py.Model.library()

    hyp = cce_py.Model("hyperbolic")
    assert hyp.einstein and not hyp.closed and hyp.chi == 1
    fit = cce_py.fit_volume(hyp)
    close(fit["v"], 4 * math.pi**2 / 3, 1e-6)
    close(fit["v"], hyp.exact_volume(), 1e-6)

    u = cce_py.solve_eigenfunction(hyp)
    close(u.w2, 0.25, 1e-10)
    close(u.u(1.0), 1.25, 1e-9)
    close(u.compactified_scalar(0.7), 12.0, 1e-5)
    assert u.checks(1e-6)["all_pass"]

    assert cce_py.indicial_roots(3) == (-1, 4)
    assert cce_py.betti_parity_argument(0, 100) == [0]
    close(cce_py.identity_residual(1, 0.0, fit["v"]), 0.0, 1e-5)

    report = cce_py.evaluate_topology(1, fit["v"], 0.0)
    assert report["consistent"]
    assert report["checks"]["volume_criterion_strong"]["verdict"] == "pass"
    assert "X has finite fundamental group" in report["conclusions"]

    sphere = cce_py.Model("round-sphere")
    c = sphere.curvature([1.0, 1.0, 1.0, 1.0])
    close(c["scalar"], 12.0, 1e-6)
    suite = cce_py.integrate_curvature(sphere)
    close(suite["euler_gb"], 2.0, 1e-6)
    close(suite["sigma2_integral"], 16 * math.pi**2, 1e-6)

    ads = cce_py.Model("ads-schwarzschild", 1.0)
    close(ads.s_max, 1.348, 1e-3)

    try:
        cce_py.Model("klein-bottle")
    except cce_py.CceError:
        pass
    else:
        raise AssertionError("unknown family accepted")

    passed, entries = cce_py.analyze(hyp)
    assert passed
    assert dict(entries)["status"] == "pass"
    print("smoke test passed")


if __name__ == "__main__":
    main()
