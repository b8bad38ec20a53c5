import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecrank.arith import sieve_primes
from ecrank.curve import WeierstrassCurve, ap_batch, ap_record, point_on_curve, torsion_is_trivial
from ecrank.dataset import (ApFeatures, CurveRecord, GenConfig, PlaneCubic, SplitSpec,
                            TabularFeatures, build_feature_matrix, class_weights,
                            conductor_feature, cubic_to_weierstrass, gen_pencil_cubic,
                            gen_random_weierstrass, generate_custom_dataset, ingest_csv,
                            merge_binary_labels, read_aps, split_dataset, split_indices, sweep_row,
                            write_aps, write_curves_csv)
from ecrank.errors import (ConductorExceedsMax, EmptySplit, InsufficientApData, MissingClass,
                           ParseError, PointAtSingularity, SingularCubic, ValidationError)

# ---------------------------------------------------------------------------
# random Weierstrass


def test_gen_random_weierstrass():
    assert gen_random_weierstrass(10, 0, 1) == []
    a = gen_random_weierstrass(10**3, 1000, 7)
    assert a == gen_random_weierstrass(10**3, 1000, 7)
    assert a != gen_random_weierstrass(10**3, 1000, 8)
    for r in a:
        E = r.curve  # raises if singular
        assert E.a1 in (0, 1) and E.a3 in (0, 1) and E.a2 in (-1, 0, 1)
        assert abs(E.a4) <= 1000 and abs(E.a6) <= 1000
    with pytest.raises(ValueError):
        gen_random_weierstrass(0, 1, 0)


# ---------------------------------------------------------------------------
# pencils of cubics


@pytest.mark.parametrize("k", range(2, 9))
def test_pencil_cubic_passes_through_points(k):
    for seed in range(3):
        c = gen_pencil_cubic(k, 3, seed)
        assert len(c.points) == k and len(set(c.points)) == k
        assert any(c.coeffs)
        assert all(c(P) == 0 for P in c.points)


def test_pencil_cubic_bad_k():
    for k in (1, 9):
        with pytest.raises(ValueError):
            gen_pencil_cubic(k, 3, 0)


def test_fermat_cubic():
    fermat = PlaneCubic((1, 0, 0, 0, 0, 0, 1, 0, 0, -1))  # X^3 + Y^3 - Z^3
    E, cmap = cubic_to_weierstrass(fermat, (1, -1, 0))
    assert E.c4 == 0 and E.j_invariant() == 0
    ref = WeierstrassCurve(0, 0, 0, 0, -432)
    r = E.c6 / ref.c6
    assert round(abs(r) ** (1 / 6)) ** 6 == abs(r) and r > 0
    img = cmap((0, 1, 1))
    assert img is not None and point_on_curve(E, img)


def test_singular_cubic():
    # nodal cubic Y^2 Z = X^3 + X^2 Z through (0, 1, 0) with a node at (0, 0, 1)
    nodal = PlaneCubic((-1, 0, -1, 0, 0, 0, 0, 1, 0, 0))
    with pytest.raises(SingularCubic):
        cubic_to_weierstrass(nodal, (0, 1, 0))
    with pytest.raises(PointAtSingularity):
        cubic_to_weierstrass(nodal, (0, 0, 1))


def test_pencil_images_lie_on_model():
    checked = 0
    for k in range(2, 9):
        for seed in range(4):
            c = gen_pencil_cubic(k, 3, 100 * k + seed)
            try:
                E, cmap = cubic_to_weierstrass(c, c.points[0])
            except (SingularCubic, PointAtSingularity):
                continue
            for Q in c.points[1:]:
                img = cmap(Q)
                if img is not None:
                    assert point_on_curve(E, img)
                    checked += 1
    assert checked > 20


def test_generate_custom_dataset(tmp_path):
    cfg = GenConfig(count=10, pencil={2: 3, 5: 3}, coeff_bound=100, seed=3)
    out = generate_custom_dataset(cfg)
    assert all(torsion_is_trivial(r.curve) for r in out)
    cc = [(r.curve.c4, r.curve.c6) for r in out]
    assert len(set(cc)) == len(cc)
    sources = [r.source for r in out]
    assert sources.count("weierstrass") == 10
    assert abs(sources.count("pencil2") - 3) <= 1 and abs(sources.count("pencil5") - 3) <= 1
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_curves_csv(a, out)
    write_curves_csv(b, generate_custom_dataset(cfg))
    assert a.read_bytes() == b.read_bytes()


# ---------------------------------------------------------------------------
# curves.csv and aps.bin


def test_ingest_csv(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("id,a1,a2,a3,a4,a6,conductor,rank\n")
    assert ingest_csv(p) == []
    p.write_text("id,a1,a2,a3,a4,a6,conductor,rank\n37a1,0,0,1,-1,0,37,1\n")
    (r,) = ingest_csv(p)
    assert r == CurveRecord("37a1", 0, 0, 1, -1, 0, conductor=37, rank=1)
    p.write_text("id,a1,a2,a3,a4,a6,conductor,rank\n37a1,0,0,1,-1,0,37,1\nx,0,0,1,z,0,37,1\n")
    with pytest.raises(ParseError) as exc:
        ingest_csv(p)
    assert exc.value.line == 3
    p.write_text("id,a1,a2,a3,a4,a6,conductor,rank\ns,0,0,0,0,0,1,0\n")
    with pytest.raises(ValidationError):
        ingest_csv(p)
    p.write_text("id,a1,a2,a3,a4,a6,conductor,rank\ns,0,0,1,-1,0,-37,0\n")
    with pytest.raises(ValidationError):
        ingest_csv(p)
    p.write_text("bad header\n")
    with pytest.raises(ParseError):
        ingest_csv(p)


def test_ingest_dedup_isogeny(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("id,a1,a2,a3,a4,a6,conductor,rank,isogeny_class\n"
                 "11a1,0,-1,1,-10,-20,11,0,a\n11a2,0,-1,1,-7820,-263580,11,0,a\n"
                 "11a3,0,-1,1,0,0,11,0,a\n37a1,0,0,1,-1,0,37,1,a\n")
    assert len(ingest_csv(p)) == 4
    assert [r.id for r in ingest_csv(p, dedup_isogeny=True)] == ["11a1", "37a1"]


def test_curves_csv_roundtrip(tmp_path):
    recs = gen_random_weierstrass(50, 20, 1)
    recs = [CurveRecord(r.id, *r.ainvs, conductor=i + 1, rank=i % 3) for i, r in enumerate(recs)]
    write_curves_csv(tmp_path / "c.csv", recs)
    assert ingest_csv(tmp_path / "c.csv") == recs


def test_aps_roundtrip(tmp_path):
    curves = [WeierstrassCurve(0, 0, 1, -1, 0), WeierstrassCurve(0, -1, 1, -10, -20)]
    recs = ap_batch(curves, sieve_primes(1000), ids=["37a1", "11a1"])
    write_aps(tmp_path / "a.bin", recs)
    back = read_aps(tmp_path / "a.bin")
    for a, b in zip(recs, back):
        assert a.curve_id == b.curve_id and a.bound == b.bound
        assert np.array_equal(a.primes, b.primes)
        assert np.array_equal(a.ap, b.ap) and np.array_equal(a.reduction, b.reduction)
    # 37a1 at N = 10^3: 168 entries, a_37 carries the bad-prime code
    assert len(back[0].primes) == 168
    i = int(np.searchsorted(back[0].primes, 37))
    assert back[0].ap[i] == -1 and back[0].reduction[i] == 2
    size = (tmp_path / "a.bin").stat().st_size
    assert size == 2 * (4 + 4 + 4 + 168 * 5)
    (tmp_path / "t.bin").write_bytes((tmp_path / "a.bin").read_bytes()[:-3])
    with pytest.raises(ParseError):
        read_aps(tmp_path / "t.bin")


# ---------------------------------------------------------------------------
# features


def test_feature_matrix():
    table = sieve_primes(1000)
    rec = ap_record(WeierstrassCurve(0, 0, 1, -1, 0), 1000)
    m = build_feature_matrix(37, rec, table, 10**8)
    assert m.shape == (3, 168)
    assert np.all(m[1] == math.log(37) / math.log(10**8))
    assert m[2, -1] == 1.0 and m[2, 0] == pytest.approx(-1 + 2 / 168)
    assert np.allclose(np.diff(m[2]), 2 / 168)
    assert m[0, 0] == pytest.approx(-2 / math.sqrt(2))
    assert np.all(build_feature_matrix(37, rec, table, 37)[1] == 1.0)
    with pytest.raises(ConductorExceedsMax):
        build_feature_matrix(37, rec, table, 36)
    with pytest.raises(InsufficientApData):
        build_feature_matrix(37, ap_record(WeierstrassCurve(0, 0, 1, -1, 0), 500), table, 10**8)


def test_feature_row1_hasse():
    table = sieve_primes(1000)
    recs = ap_batch([r.curve for r in gen_random_weierstrass(10**4, 1000, 5)], table)
    feats = ApFeatures.from_records([1] * len(recs), recs, table, 10, np.zeros(len(recs)))
    assert np.all(np.abs(feats.ap_norm) <= 2)


def test_ap_features_batch():
    table = sieve_primes(100)
    recs = ap_batch([WeierstrassCurve(0, 0, 1, -1, 0), WeierstrassCurve(0, 1, 1, -2, 0)], table)
    feats = ApFeatures.from_records([37, 389], recs, table, 10**4, [1, 2])
    x, y = feats.batch(np.array([1, 0]))
    assert x.shape == (2, 3, 25) and y.tolist() == [2, 1]
    assert np.array_equal(x[0], build_feature_matrix(389, recs[1], table, 10**4))
    assert feats.input_shape == (3, 25) and len(feats.subset([0])) == 1
    assert np.array_equal(sweep_row(4), [-0.5, 0, 0.5, 1])
    assert conductor_feature(100, 10**4) == pytest.approx(0.5)
    t = TabularFeatures(np.ones((5, 2)), np.arange(5) % 2)
    assert t.input_shape == (2,) and len(t.subset([1, 2])) == 2


# ---------------------------------------------------------------------------
# splits, labels, weights


def test_split_sizes():
    tr, va, te = split_indices(range(1, 101), SplitSpec(test_fraction=0.2, seed=4))
    assert (len(tr), len(va), len(te)) == (64, 16, 20)
    again = split_indices(range(1, 101), SplitSpec(test_fraction=0.2, seed=4))
    assert all(np.array_equal(a, b) for a, b in zip((tr, va, te), again))


def test_split_top_range():
    conds = [10**7 * (i + 1) for i in range(200)]
    tr, va, te = split_indices(conds, SplitSpec(mode="top_range", conductor_cut=(10**8, 10**9)))
    assert all(10**8 <= conds[i] < 10**9 for i in te)
    assert all(conds[i] < 10**8 for i in np.concatenate([tr, va]))
    assert len(tr) + len(va) == 9 and len(te) == 90


@settings(max_examples=50, deadline=None)
@given(st.integers(20, 300), st.integers(0, 10**6), st.sampled_from([0.1, 0.2, 0.5]))
def test_split_partition(n, seed, frac):
    parts = split_indices(range(1, n + 1), SplitSpec(test_fraction=frac, seed=seed))
    allidx = np.concatenate(parts)
    assert sorted(allidx.tolist()) == list(range(n))


def test_split_empty():
    with pytest.raises(EmptySplit):
        split_indices([], SplitSpec())
    with pytest.raises(EmptySplit):
        split_indices([5, 6, 7], SplitSpec(mode="top_range", conductor_cut=(1, 10)))
    with pytest.raises(ValueError):
        SplitSpec(mode="top_range")


def test_split_dataset_records():
    recs = [CurveRecord(f"c{i}", 0, 0, 1, -1, 0, conductor=i + 1, rank=0) for i in range(50)]
    tr, va, te = split_dataset(recs, SplitSpec(seed=1))
    assert sorted(r.id for r in tr + va + te) == sorted(r.id for r in recs)


def test_merge_binary_labels():
    assert merge_binary_labels(range(6), 4).tolist() == [0, 0, 0, 0, 1, 1]
    assert merge_binary_labels(range(11), 8).tolist() == [0] * 8 + [1] * 3
    assert merge_binary_labels(range(5), 0).tolist() == [1] * 5
    recs = [CurveRecord("a", 0, 0, 1, -1, 0, 37, r) for r in (3, 5)]
    assert merge_binary_labels(recs, 4).tolist() == [0, 1]


def test_class_weights():
    assert class_weights([0, 1, 0, 1]).tolist() == [1, 1]
    w = class_weights([0] * 90 + [1] * 10)
    assert w == pytest.approx([100 / 180, 5.0])
    assert np.dot(w, [90, 10]) / 100 == pytest.approx(1.0)
    with pytest.raises(MissingClass):
        class_weights([0, 0, 0], 2)


def test_ap_features_subset_shares_rows():
    ap = np.arange(12, dtype=float).reshape(4, 3)
    feats = ApFeatures(ap, np.linspace(0, 1, 4), np.array([0, 1, 0, 1]))
    sub = feats.subset(np.array([3, 1])).subset(np.array([1]))
    assert sub.values is feats.values
    np.testing.assert_array_equal(sub.ap_norm, ap[[1]])
    x, y = sub.batch(np.array([0]))
    np.testing.assert_array_equal(x[0, 0], ap[1])
    assert x[0, 1, 0] == feats.log_cond[1] and y[0] == 1
