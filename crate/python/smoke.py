"""Smoke test of the venuerec Python extension.

Build and install the extension first:

    pip install maturin
    maturin build --release -m crates/py/Cargo.toml -o target/wheels
    pip install --force-reinstall target/wheels/venuerec-*.whl
    python python/smoke.py
"""

import math
import sys

import venuerec as vr


def check_functions():
    assert vr.heuristic_k("can", 276679) == 371
    assert vr.heuristic_k("kaufman", 276679, 4196, 22694542) == 52
    assert vr.accuracy_at([1, 2, None, 11], 10) == 0.5
    assert math.isclose(vr.mrr([1, 2, None, 41]), (1 + 0.5) / 4)

    venue_of = {"d1": "A", "d2": "B", "d3": "A"}
    fused = vr.comb_lgdcs([("d1", 2.0), ("d2", 1.5), ("d3", 1.0)], venue_of)
    assert fused[0][0] == "A"
    assert math.isclose(fused[0][1], 2.0 + 1.0 / math.log2(3 + 1))
    blended = vr.comb_linear(vr.normalize_max(fused), [("B", 1.0)], 0.5)
    assert {v for v, _ in blended} == {"A", "B"}
    assert vr.tokenize("The folding of proteins") == ["fold", "protein"]


def check_pipeline():
    corpus, planted = vr.synthetic_corpus(n_venues=8)
    assert len(corpus) == len(planted)
    train, test = corpus.split(2015)
    model = vr.Model(train, min_df=5)
    print(f"{corpus!r}: trained with k={model.k}")

    hits = 0
    records = test.records()
    for art in records:
        rows = model.recommend(art["title_abstract"], art["keywords"], art["authors"])
        hits += art["venue"] in [venue for _, venue, *_ in rows]
    print(f"true venue in top 10 for {hits}/{len(records)} test articles")
    assert hits / len(records) > 0.9

    for report in model.evaluate(test, lambdas=[0.0, 0.75, 1.0]):
        print({k: round(v, 4) if isinstance(v, float) else v for k, v in report.items()})
        assert 0.0 <= report["acc@1"] <= report["acc@5"] <= report["acc@10"] <= 1.0


def main():
    check_functions()
    check_pipeline()
    print("smoke OK")
    return 0


if __name__ == "__main__":
    sys.exit(main())
