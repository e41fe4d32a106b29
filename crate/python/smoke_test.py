"""Smoke test for the `lscd` extension module.

Build and install first:
    pip install maturin
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/lscd-*.whl
"""

import math
import random

import lscd


def synthetic_corpora():
    rng = random.Random(0)
    words = "river water money loan tree leaf stone road house door".split()
    c1, c2 = [], []
    for i in range(400):
        s1 = [rng.choice(words) for _ in range(6)]
        s2 = [rng.choice(words) for _ in range(6)]
        if i % 4 == 0:
            s1 += ["bank", "river", "water"]
            s2 += ["bank", "money", "loan"]
        c1.append(" ".join(s1))
        c2.append(" ".join(s2))
    return lscd.Corpus.from_sentences(c1, 1), lscd.Corpus.from_sentences(c2, 2)


def main():
    c1, c2 = synthetic_corpora()
    assert len(c1) == 400
    usages = c1.usages("bank", 25, 1)
    assert len(usages) == 25 and all(ctx.split(" ")[i] == "bank" for _, ctx, i in usages)

    s1 = lscd.train_sgns(c1, dim=16, epochs=5, min_count=5, window=3, seed=1)
    s2 = lscd.train_sgns(c2, dim=16, epochs=5, min_count=5, window=3, seed=1)
    assert "bank" in s1 and s1.dim == 16
    scores = lscd.align_and_score(s1, s2)
    assert set(scores) == set(s1.words()) & set(s2.words())
    assert all(0.0 <= d <= 2.0 for d in scores.values())

    labels = lscd.binarize(scores, 1.0)
    assert set(labels) == set(scores)
    t, f = lscd.tune_threshold({"a": 0.1, "b": 0.2, "c": 0.9}, {"a": False, "b": False, "c": True})
    assert f == 1.0 and -2.0 <= t <= 2.0

    assert abs(lscd.f_beta(0.818, 0.529) - 0.738) <= 0.001
    assert abs(lscd.spearman([1, 2, 3, 4], [10, 20, 30, 45]) - 1.0) < 1e-12
    assert lscd.krippendorff_alpha([[1, 2, 3, None], [1, 2, 3, 4]]) == 1.0
    assert lscd.kn_thresholds(25) == (1.0, 3.0)

    v1 = [[1.0, 0.0], [0.9, 0.1]]
    v2 = [[0.0, 1.0], [0.1, 0.9]]
    assert lscd.apd(v1, v1) < lscd.apd(v1, v2)
    assert abs(lscd.cos(v1, v2) - lscd.cos(v2, v1)) < 1e-12
    assert math.isclose(lscd.cosine_distance([1.0, 0.0], [0.0, 1.0]), 1.0)

    nodes = [(f"u{i}", 1 if i < 6 else 2) for i in range(12)]
    wug = lscd.Wug("bank", nodes)
    sense = lambda i: int(i >= 7)
    for i in range(12):
        for j in range(i + 1, 12):
            wug.judge(f"u{i}", f"u{j}", "oracle", 4 if sense(i) == sense(j) else 1)
    clusters, loss = wug.cluster(seed=3)
    assert loss == 0.0 and len(set(clusters.values())) == 2
    change = wug.change()
    assert change["binary"] and len(change["gained"]) == 1

    print(f"lscd {lscd.__version__} smoke test passed")


if __name__ == "__main__":
    main()
