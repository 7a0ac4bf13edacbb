"""Smoke test for the somkit Python extension.

Build and install first:
    pip install maturin
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/somkit-*.whl
Then run: python python/smoke.py
"""

import math
import os
import sys
import tempfile

import numpy as np

import somkit

HERE = os.path.dirname(os.path.abspath(__file__))
WINE = os.path.join(HERE, "..", "crates", "core", "data", "wine_like.csv")


def brute_qe(weights, data):
    d = np.linalg.norm(data[:, None, :] - weights[None, :, :], axis=2)
    return d.min(axis=1).mean()


def main():
    rows, labels = somkit.make_blobs(240, 4, seed=1)
    x = np.asarray(rows)
    assert x.shape == (240, 4) and len(labels) == 240

    som = somkit.Som.init_pca(x, 12, 8, topology="hex")
    qe, te = som.fit(x, epochs=40, seed=3)
    assert len(qe) == len(te) == 40
    w = np.asarray(som.weights())
    assert w.shape == (96, 4)
    assert math.isclose(som.quantization_error(x), brute_qe(w, x), rel_tol=1e-10)
    assert math.isclose(qe[-1], som.quantization_error(x), rel_tol=1e-10)
    assert 0.0 <= som.topographic_error(x) <= 1.0

    (r, c), dist, second = som.find_bmu(x[0])
    assert (r, c) != second
    assert math.isclose(dist, np.linalg.norm(x[0] - w[r * 8 + c]), rel_tol=1e-12)

    hits = som.hit_map(x).values()
    assert sum(v for row in hits for v in row) == 240
    u = som.u_matrix()
    assert u.shape == (12, 8)
    svg = u.to_svg(title="u")
    assert svg.count('class="cell"') == 96

    clusters = som.cluster(3, seed=0)
    ids = {v for row in clusters.values() for v in row}
    assert ids == {0.0, 1.0, 2.0}, ids
    ks, inertias, k = som.elbow()
    assert k == 3 and all(a >= b for a, b in zip(inertias, inertias[1:]))

    try:
        from sklearn.metrics import silhouette_score
    except ImportError:
        silhouette_score = None
    if silhouette_score is not None:
        assign = [int(v) for row in clusters.values() for v in row]
        assert silhouette_score(w, assign) > 0.5

    feats, names, target, classes = somkit.load_csv(WINE, target="quality", label="cultivar")
    f = np.asarray(feats)
    f = (f - f.mean(axis=0)) / f.std(axis=0)
    wine = somkit.Som.init_random(f, 6, 6, seed=4)
    wine.fit(f, epochs=20, mode="online", seed=4)
    assert len(names) == 13 and len(classes) == 178
    score = wine.score_map(f, target)
    mean = wine.metric_map(f, target, stat="mean")
    present = lambda layer: [v is not None for row in layer.values() for v in row]
    assert present(score) == present(mean)
    idx, dists, order, short = wine.collect_sample(f, f[10], min_samples=5)
    assert idx[0] == 10 and dists == sorted(dists) and not short

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "m.somk")
        wine.save(path)
        back = somkit.Som.load(path)
        assert back.weights() == wine.weights()

    try:
        som.component_plane(99)
    except ValueError as e:
        assert "99" in str(e)
    else:
        raise AssertionError("out-of-range component accepted")

    print("python smoke: ok", som, clusters)


if __name__ == "__main__":
    sys.exit(main())
