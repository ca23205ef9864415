"""Smoke test for the srg_py extension.

Build first:
    cargo build --release -p srg-py --features extension-module
then run from the repository root:
    python3 python/smoke_test.py
"""

import importlib.machinery
import importlib.util
import json
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_extension():
    for profile in ("release", "debug"):
        lib = ROOT / "target" / profile / "libsrg_py.so"
        if lib.exists():
            loader = importlib.machinery.ExtensionFileLoader("srg_py", str(lib))
            spec = importlib.util.spec_from_loader("srg_py", loader)
            module = importlib.util.module_from_spec(spec)
            loader.exec_module(module)
            return module
    sys.exit("libsrg_py.so not found; build the srg-py crate with --features extension-module")


def main():
    srg = load_extension()

    c_v, c_e = srg.stein_factors(1.0, cv=1.0, ce=1.0, variant=1)
    assert (c_v, c_e) == (1.5, 0.25), (c_v, c_e)

    assert srg.coupling_bound(0.0, 3.0) == 1.0
    assert srg.coupling_bound(0.5, 2.0, n_star=4) >= 1.0

    vertex = json.dumps({
        "window": {"lower": [0, 0], "upper": [1, 1]},
        "activity": {"kind": "constant", "value": 5},
    })
    edge = json.dumps({"kind": "product", "kappa": {"kind": "constant", "p": 0.5}})
    a = srg.sample_graph(vertex, edge, seed=1)
    b = srg.sample_graph(vertex, edge, seed=1, stream=1)
    assert a == srg.sample_graph(vertex, edge, seed=1)
    doc = json.loads(a)
    assert doc["schema_version"] == 1

    d = srg.gospa(a, b, cv=1.0, ce=1.0, variant=2)
    assert d == srg.gospa(b, a, cv=1.0, ce=1.0, variant=2)
    assert 0.0 <= d <= 2.0
    assert srg.gospa(a, a) == 0.0

    g = srg.Graph.from_json(a)
    assert g == srg.Graph.from_json(g.to_json())
    assert g.gospa(srg.Graph.from_json(b), variant=2) == d
    tri = srg.Graph([[0.1, 0.1], [0.5, 0.5], [0.9, 0.2]], [(0, 1), (1, 2)])
    assert (tri.n_vertices, tri.n_edges) == (3, 2)
    assert tri.edges == [(0, 1), (1, 2)]
    assert repr(tri) == "Graph(n_vertices=3, n_edges=2)"
    try:
        srg.Graph([[0.1, 0.1]], [(0, 1)])
    except ValueError:
        pass
    else:
        raise AssertionError("out-of-range edge accepted")

    sample = [srg.sample_graph(vertex, edge, seed=3, stream=i) for i in range(10)]
    assert srg.wasserstein(sample, sample) == 0.0

    try:
        srg.gospa(a, b, variant=3)
    except ValueError as err:
        assert "variant" in str(err)
    else:
        raise AssertionError("variant 3 accepted")

    config = json.dumps({
        "window": {"lower": [0, 0], "upper": [1, 1]},
        "target": {"intensity": {"kind": "constant", "value": 5},
                   "connection": {"kind": "constant", "p": 0.5}},
        "alternatives": [{"intensity": {"kind": "constant", "value": 5},
                          "connection": {"kind": "constant", "p": 0.4}}],
        "n_samples": 20,
        "null_reps": 20,
    })
    csv = srg.run_experiment("soft-rgg", config, seed=5)
    assert csv == srg.run_experiment("soft-rgg", config, seed=5)
    lines = csv.splitlines()
    assert lines[0] == "# schema_version=1" and lines[1] == "# experiment=soft-rgg"
    assert lines[4].startswith("point,lambda1,kappa1,w_hat")
    print("smoke test passed")


if __name__ == "__main__":
    main()
