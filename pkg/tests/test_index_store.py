import gzip
import json
from pathlib import Path

import pytest

import ccgrag
from ccgrag.ccg import extract_statements
from ccgrag.errors import NoSourceFiles, VersionMismatch
from ccgrag.eval.window import count_windows
from ccgrag.index_store import (
    Database,
    build_database,
    dumps,
    exclude_file,
    iter_source_files,
    load,
    loads,
    save,
    window_bounds,
)
from helpers import write_duplication_repo


@pytest.fixture(scope="module")
def dup_repo(tmp_path_factory):
    return write_duplication_repo(tmp_path_factory.mktemp("dup"), pairs=6)


@pytest.fixture(scope="module")
def dup_db(dup_repo):
    return build_database(dup_repo, ["python"])


def test_window_bounds():
    assert window_bounds(1, 20, 5) == (1, 5)
    assert window_bounds(30, 20, 100) == (20, 40)
    assert window_bounds(99, 20, 100) == (89, 100)
    assert window_bounds(5, 1, 10) == (5, 5)


def test_one_statement_file(tmp_path):
    (tmp_path / "a.py").write_text("x = 1\n")
    db = build_database(tmp_path, ["python"])
    assert len(db) == 1
    (e,) = db.entries
    assert e.value == "x = 1" and (e.value_start, e.value_end) == (1, 1)


def test_one_entry_per_statement(dup_repo, dup_db):
    for path, rel, lang in iter_source_files(dup_repo, ["python"]):
        n = len(extract_statements(path.read_text(), lang, rel))
        assert sum(e.file_path == rel for e in dup_db) == n


def test_fewer_entries_than_windows():
    # the package's own sources serve as a medium-sized repository
    repo = Path(ccgrag.__file__).parent
    db = build_database(repo, ["python"])
    windows = sum(count_windows(len(p.read_text().splitlines())) for p, _, _ in iter_source_files(repo, ["python"]))
    assert len(db) < windows


def test_value_is_centred_window(dup_repo, dup_db):
    e = dup_db.entries[len(dup_db) // 2]
    lines = (dup_repo / e.file_path).read_text().splitlines()
    assert e.value == "\n".join(lines[e.value_start - 1 : e.value_end])
    assert e.value_start <= e.anchor_line <= e.value_end


def test_no_source_files(tmp_path):
    with pytest.raises(NoSourceFiles):
        build_database(tmp_path)
    with pytest.raises(NoSourceFiles):
        build_database(tmp_path / "missing")


def test_exclude_globs_and_hidden_dirs(tmp_path):
    for rel in ["a.py", "vendor/b.py", ".git/c.py", "d/__pycache__/e.py", "f/G.java"]:
        (tmp_path / rel).parent.mkdir(parents=True, exist_ok=True)
        (tmp_path / rel).write_text("x = 1\n" if rel.endswith(".py") else "class G { }\n")
    rels = [r for _, r, _ in iter_source_files(tmp_path, exclude_globs=["vendor/*"])]
    assert rels == ["a.py", "f/G.java"]
    assert [r for _, r, _ in iter_source_files(tmp_path, ["java"])] == ["f/G.java"]


def test_unparseable_file_is_skipped(tmp_path):
    (tmp_path / "good.py").write_text("x = 1\n")
    (tmp_path / "bad.py").write_text("))))\n")
    db = build_database(tmp_path, ["python"])
    assert db.stats.skipped_files == 1 and db.stats.files == 1
    assert db.files == ("good.py",)


def test_round_trip_is_byte_identical(dup_db, tmp_path):
    path = tmp_path / "db.gz"
    save(dup_db, path)
    back = load(path)
    assert dumps(back) == path.read_bytes()
    assert [e.value for e in back] == [e.value for e in dup_db]
    assert [e.token_bag for e in back] == [e.token_bag for e in dup_db]
    assert [e.key.edges for e in back] == [e.key.edges for e in dup_db]


def test_rebuild_is_byte_identical(dup_repo, dup_db):
    assert dumps(build_database(dup_repo, ["python"])) == dumps(dup_db)


def test_empty_round_trip():
    assert loads(dumps(Database())) == Database()


def test_version_mismatch(dup_db):
    lines = gzip.decompress(dumps(dup_db)).decode().splitlines()
    header = json.loads(lines[0])
    header["version"] += 1
    data = gzip.compress("\n".join([json.dumps(header), *lines[1:]]).encode())
    with pytest.raises(VersionMismatch):
        loads(data)


def test_exclude_absent_file(dup_db):
    assert exclude_file(dup_db, "nope.py") is dup_db


def test_exclude_only_file(tmp_path):
    (tmp_path / "a.py").write_text("x = 1\ny = 2\n")
    db = build_database(tmp_path, ["python"])
    assert len(exclude_file(db, "a.py")) == 0


def test_exclude_line_range(dup_db):
    target = "original/helper_00.py"
    kept = exclude_file(dup_db, target, (10, 30))
    assert len(kept) < len(dup_db)
    for e in kept:
        if e.file_path == target:
            assert e.value_end < 10 or e.value_start > 30
    assert sum(e.file_path != target for e in kept) == sum(e.file_path != target for e in dup_db)
