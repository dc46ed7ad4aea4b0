"""Smoke test for the sstlab Python module.

Build and install first, e.g. `maturin develop -m crates/py/Cargo.toml`.
"""

import json
import math

import sstlab


def main():
    names = sstlab.catalog_list()
    assert "paraboloid-static" in names and "einstein-de-sitter" in names

    st = sstlab.Spacetime.catalog("paraboloid-static")
    assert st.dim == 3 and st.kind == "static"
    assert st.coords == ["t", "x1", "x2"]
    g = st.metric([0.0, 0.3, 0.4])
    f = 0.5 * (0.3**2 + 0.4**2) + 1.0
    assert abs(g[0][0] + f * f) < 1e-12

    reports = {r["id"]: r for r in st.audit(grid_per_axis=3, samples=4)}
    assert reports["NCC"]["verdict"] == "HoldsOnSamples"
    scan = st.hypothesis_scan()
    assert "Cor1Item2" in scan["fired"]

    # round trip through the spec-file format
    back = sstlab.Spacetime.from_json(st.to_json())
    assert back.metric([0.0, 0.3, 0.4]) == g
    try:
        sstlab.Spacetime.from_json(json.dumps({"kind": "static"}))
    except ValueError:
        pass
    else:
        raise AssertionError("malformed spec accepted")

    sphere = sstlab.Spacetime.catalog("static-over-sphere")
    samples, exit_r = sphere.geodesic([0.0, math.pi / 2, 0.0], [0.0, 0.0, 1.0], span=(0.0, 3.0))
    assert exit_r is None
    drift = max(abs(s["norm"] - samples[0]["norm"]) for s in samples)
    assert drift < 1e-8

    mink = sstlab.Spacetime.catalog("minkowski")
    w = mink.null_vector([0.0, 0.0, 0.0, 0.0], [1.0, 0.0, 0.0])
    d = mink.null_segment_distance([0.0, 0.0, 0.0, 0.0], w, 0.0, 1.0, (-4.0, 4.0))
    assert abs(d["value"] - math.atanh(0.25)) < 1e-9
    assert abs(sstlab.poincare_distance(0.0, 0.5) - 0.5 * math.log(3.0)) < 1e-15

    try:
        sstlab.Spacetime.catalog("no-such-entry")
    except KeyError:
        pass
    else:
        raise AssertionError("unknown entry accepted")

    print(f"sstlab {sstlab.__version__}: smoke test passed")


if __name__ == "__main__":
    main()
