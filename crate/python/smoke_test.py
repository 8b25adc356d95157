"""Smoke test for the kundt_py extension.

Uses an installed `kundt_py` when there is one (for example after
`maturin develop` in crates/python); otherwise loads the library that
`cargo build -p kundt-py` left in target/.
"""

import importlib.machinery
import importlib.util
import math
import sys
from pathlib import Path


def load():
    try:
        import kundt_py

        return kundt_py
    except ImportError:
        pass
    root = Path(__file__).resolve().parent.parent
    for profile in ("release", "debug"):
        lib = root / "target" / profile / "libkundt_py.so"
        if lib.exists():
            loader = importlib.machinery.ExtensionFileLoader("kundt_py", str(lib))
            spec = importlib.util.spec_from_file_location("kundt_py", lib, loader=loader)
            module = importlib.util.module_from_spec(spec)
            loader.exec_module(module)
            sys.modules["kundt_py"] = module
            return module
    sys.exit("kundt_py not found: run `cargo build -p kundt-py` first")


def main():
    k = load()

    assert math.isclose(k.evaluate("sin(u)*x3^2", [0.5, 0.0, 2.0, 0.0]), 4 * math.sin(0.5))

    flat = k.Metric.minkowski(4)
    assert flat.validate() == []
    assert flat.invariants()["verdict"] == "VSI-consistent"

    wave = k.Metric.from_text('dimension = 4\nH = "x3^2"\n')
    ok, err = wave.oracle_compare(points=20)
    assert ok and err <= 1e-9, err
    ric = wave.ricci_at([1.0, 0.0, 0.3, -0.2])
    assert math.isclose(ric["R22"], -2.0, abs_tol=1e-12), ric

    sphere = k.Metric.from_text('dimension = 4\nm[4][4] = "sin(x3 + 1.6)"\n')
    inv = sphere.invariants(points=30)
    assert inv["verdict"] == "CSI-consistent", inv
    for name, expected in (("R", 2.0), ("r2", 2.0), ("K", 4.0)):
        lo, hi = inv["ranges"][name]
        assert math.isclose(lo, expected, rel_tol=1e-9) and math.isclose(hi, expected, rel_tol=1e-9), (name, lo, hi)

    shift = k.Candidate("0", "0", "1", 4)
    res = k.killing_check(flat, shift, points=20)
    assert res["passed"] and res["type"] == "A", res

    bad = k.Candidate("x3", "u", "1", 4)
    assert not k.killing_check(wave, bad, points=20)["passed"]

    ids = k.case_ids()
    assert len(ids) == 23 and "2.26" in ids
    metric, cand, relations_ok = k.build_case("1.12", 5, {"F2": "x3^2", "A0": "sin(u)", "Q": "-cos(u)"})
    assert relations_ok
    res = k.killing_check(metric, cand)
    assert res["max_residual"] <= 1e-9, res
    metric, cand, relations_ok = k.build_case("2.26", 5, random_seed=3)
    assert relations_ok and k.killing_check(metric, cand)["type"] == "C"

    again = k.Metric.from_text(metric.to_text())
    assert again.dimension == 5

    try:
        k.Metric.from_text("dimension = 4\nbogus = 1\n")
    except k.KundtError:
        pass
    else:
        raise AssertionError("unknown key accepted")

    print("kundt_py smoke test passed")


if __name__ == "__main__":
    main()
