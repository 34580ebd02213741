import pytest

from ccgrag.eval.window import WindowIndex, count_windows, file_windows, sliding_window_retrieve


@pytest.mark.parametrize("n,window,stride,expected", [(25, 20, 1, 6), (5, 20, 1, 1), (0, 20, 1, 1), (30, 10, 5, 5)])
def test_count_windows(n, window, stride, expected):
    assert count_windows(n, window, stride) == expected
    assert len(file_windows("f.py", [f"l{i}" for i in range(n)], window, stride)) == expected


def test_short_file_is_one_window():
    (w,) = file_windows("f.py", ["a = 1", "b = 2"], 20, 1)
    assert (w.value_start, w.value_end, w.value) == (1, 2, "a = 1\nb = 2")


@pytest.fixture
def repo(tmp_path):
    (tmp_path / "a.py").write_text("".join(f"alpha_{i} = {i}\n" for i in range(30)))
    (tmp_path / "b.py").write_text("".join(f"beta_{i} = {i}\n" for i in range(30)))
    return tmp_path


def test_retrieve_prefers_overlap(repo):
    index = WindowIndex.build(repo, ["python"], window=5)
    top = index.retrieve("beta_10 = 10\nbeta_11 = 11\n", k=3)
    assert [c.rank for c in top] == [1, 2, 3]
    assert all(c.entry.file_path == "b.py" for c in top)
    assert top[0].coarse_score >= top[-1].coarse_score


def test_exclusion_drops_windows_holding_the_target(repo):
    index = WindowIndex.build(repo, ["python"], window=5)
    out = index.retrieve("beta_10 = 10\n", k=100, exclude=("b.py", 12))
    assert out
    for c in out:
        if c.entry.file_path == "b.py":
            assert not c.entry.value_start <= 12 <= c.entry.value_end


def test_only_the_last_window_of_context_is_used(repo):
    index = WindowIndex.build(repo, ["python"], window=2)
    context = "".join(f"alpha_{i} = {i}\n" for i in range(10)) + "beta_3 = 3\nbeta_4 = 4\n"
    assert index.retrieve(context, k=1)[0].entry.file_path == "b.py"


def test_helper_matches_index(repo):
    a = sliding_window_retrieve(repo, "alpha_3 = 3\n", 5, 1, 4, ["python"])
    b = WindowIndex.build(repo, ["python"], 5, 1).retrieve("alpha_3 = 3\n", 4)
    assert [c.entry for c in a] == [c.entry for c in b]


def test_invalid_window(repo):
    with pytest.raises(ValueError):
        WindowIndex.build(repo, window=0)
