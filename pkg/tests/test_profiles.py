import numpy as np
import pytest

from cfr.profiles import ProfileError, performance_profiles, read_error_table, relative_errors


def _monotone(curve):
    ys = [y for _, y in curve.points]
    xs = [x for x, _ in curve.points]
    return xs == sorted(xs) and ys == sorted(ys) and all(0 <= y <= 1 for y in ys)


def test_single_algorithm():
    (c,) = performance_profiles(["A"], [[0.3, 2.0, 7.0]])
    assert c.points == ((0.0, 1.0),)


def test_identical_tables():
    a, b = performance_profiles(["A", "B"], [[1.0, 2.0], [1.0, 2.0]])
    assert a.points == b.points == ((0.0, 1.0),)


def test_twice_the_best():
    a, b = performance_profiles(["A", "B"], [[1.0, 3.0, 0.5], [2.0, 6.0, 1.0]])
    assert a.points == ((0.0, 1.0),)
    assert b.points == ((0.0, 0.0), (100.0, 1.0))
    assert b(99.9) == 0.0 and b(100.0) == 1.0


def test_mixed(rng):
    errs = rng.uniform(0.1, 5.0, size=(4, 30))
    curves = performance_profiles(list("ABCD"), errs)
    tau = relative_errors(errs)
    for c, row in zip(curves, tau):
        assert _monotone(c)
        assert c.points[-1][1] == 1.0
        assert c.points[-1][0] == pytest.approx(row.max())
        for x in (0.0, 10.0, 100.0, 451.0):
            assert c(x) == np.mean(row <= x)
    # every dataset has a winner, so the curves' x=0 values sum to at least 1
    assert sum(c(0.0) for c in curves) >= 1.0


def test_non_positive_best():
    with pytest.raises(ProfileError, match="d2"):
        performance_profiles(["A", "B"], [[1.0, 0.0], [2.0, 1.0]], ["d1", "d2"])


def test_missing_cell_file(tmp_path):
    p = tmp_path / "t.tsv"
    p.write_text("algorithm\td1\td2\nA\t1\t\nB\t2\t3\n", encoding="utf-8")
    with pytest.raises(ProfileError, match="'A'.*'d2'"):
        read_error_table(p)


def test_read_table(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("algorithm,d1,d2\nA,1,2\nB,2,4\n", encoding="utf-8")
    algs, ds, errs = read_error_table(p)
    assert algs == ["A", "B"] and ds == ["d1", "d2"]
    np.testing.assert_array_equal(errs, [[1, 2], [2, 4]])
