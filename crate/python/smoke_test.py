"""Smoke test for the fracspace Python module.

Build first:  cd crates/python && maturin develop --release
"""
import math

import fracspace as fs


def close(a, b, tol):
    return abs(a - b) <= tol * abs(b)


def main():
    g = fs.TestFunction.gaussian()
    engine = fs.SeminormEngine(g)
    assert engine.grid.points == 2 ** 14

    for which in ["E", "F_cont", "W", "M"]:
        got = engine.evaluate(which, 0.5)
        exact = fs.hilbertian_exact(g, 0.5, which)
        assert close(got, exact, 5e-3), (which, got, exact)
    assert close(engine.evaluate("E", 0.5), math.sqrt(0.5), 5e-3)

    # raw samples take the interpolated path
    small = fs.GridSpec(1, 20.0, 4096)
    xs = small.coordinates()
    raw = fs.SeminormEngine.from_values(small, [3.0 * math.exp(-math.pi * x * x) for x in xs])
    ref = fs.SeminormEngine(g, small)
    assert close(raw.evaluate("E", 0.5, 2.0, 3.0), 3.0 * ref.evaluate("E", 0.5, 2.0, 3.0), 1e-9)

    scan = fs.sharpness_scan(ref, "E_vs_F", s=[0.3, 0.5, 0.7])
    assert scan.passed and len(scan.rows) == 3, scan
    assert scan.to_csv().count("\n") > 3

    bbm = fs.bbm1_limit(ref, q=3.0, s=[0.9, 0.95, 0.97, 0.99])
    print(bbm)

    slope, _, resid = fs.slope_fit([0.5, 0.75, 0.875, 0.9375], [2 ** (k / 2) for k in range(1, 5)])
    assert abs(slope + 0.5) < 1e-12 and resid < 1e-12

    ok, text = fs.oracle_check()
    assert ok, text

    try:
        engine.evaluate("E", 1.5)
    except ValueError as e:
        assert "s must lie in (0,1)" in str(e)
    else:
        raise AssertionError("s=1.5 accepted")

    code, out, err = fs.run_cli(["seminorm", "--which", "E", "--s", "0.5"])
    assert code == 0, err
    assert "#config command=seminorm" in out

    print("smoke test passed")


if __name__ == "__main__":
    main()
