import itertools

import pytest
from helpers import DirectoryAudit, int_schema, make_gridfile, random_rows, seeded

from gridrel.directory import ROOT, Directory, DirectoryElement
from gridrel.errors import CorruptFileError, DirectoryError
from gridrel.gridfile import GridFile, SplitPolicy
from gridrel.region import box_intersection
from gridrel.schema import INT_OFFSET
from gridrel.scales import Partlist
from gridrel.storage import AccessStats, PageFile


def _loaded(tmp_path, policy, n=400, seed=1, k=3):
    gf = make_gridfile(tmp_path, int_schema(k=k, capacity=4), policy)
    rows = random_rows(seeded(seed), n, k)
    for r in rows:
        gf.insert(r)
    return gf, rows


def _block_box(gf, coords):
    return tuple(gf.partlist.interval_bounds(d, c) for d, c in enumerate(coords))


def _all_blocks(gf):
    return list(itertools.product(*(range(e) for e in gf.partlist.extents())))


@pytest.mark.parametrize("policy", list(SplitPolicy))
def test_every_key_in_a_block_maps_to_the_same_element(tmp_path, policy):
    gf, _ = _loaded(tmp_path, policy)
    rng = seeded(5)
    for coords in _all_blocks(gf):
        box = _block_box(gf, coords)
        want = gf.directory.block_address(coords)
        for _ in range(3):
            keys = [rng.randrange(lo, hi) for lo, hi in box]
            pos, index, _ = gf.directory.address(keys)
            assert (pos, index) == want


@pytest.mark.parametrize("policy", list(SplitPolicy))
def test_element_addresses_are_a_bijection(tmp_path, policy):
    gf, _ = _loaded(tmp_path, policy)
    seen = {gf.directory.block_address(c) for c in _all_blocks(gf)}
    assert len(seen) == len(_all_blocks(gf)) == gf.directory.element_count()


@pytest.mark.parametrize("policy", list(SplitPolicy))
def test_each_tuple_is_in_the_bucket_its_block_points_to(tmp_path, policy):
    gf, rows = _loaded(tmp_path, policy)
    for r in rows:
        loc = gf.directory.locate_element(gf.schema.grid_keys_of_values(r))
        recs, _ = gf._read_bucket(loc.element.bucket)
        assert gf.schema.encode(r) in recs


@pytest.mark.parametrize("policy", list(SplitPolicy))
def test_enumerate_region_matches_brute_force(tmp_path, policy):
    gf, _ = _loaded(tmp_path, policy)
    rng = seeded(9)
    blocks = _all_blocks(gf)
    for _ in range(40):
        box = []
        for _d in range(gf.k):
            a, b = sorted(rng.randint(0, 70) for _ in range(2))
            box.append((a + INT_OFFSET, b + 1 + INT_OFFSET))
        box = tuple(box)
        want = {}
        for c in blocks:
            if box_intersection(_block_box(gf, c), box) is not None:
                pos, index = gf.directory.block_address(c)
                want[(pos, index)] = gf.directory.read_element(pos, index).bucket
        hits = list(gf.directory.enumerate_region(box))
        got = {(h.pos, h.index): h.element.bucket for h in hits}
        assert len(hits) == len(got)
        assert got == want
        fetched = [h.element.bucket for h in hits if h.fetch]
        assert sorted(fetched) == sorted(set(want.values()))


def test_scan_reads_each_directory_page_once(tmp_path):
    gf, _ = _loaded(tmp_path, SplitPolicy.ROUND_ROBIN, n=600)
    gf.store.reset_stats()
    list(gf.directory.enumerate_region(gf.space.domains))
    assert gf.store.stats.dir_reads <= gf.store.files["directory"].npages


@pytest.mark.parametrize("policy", list(SplitPolicy))
def test_append_only_write_log(tmp_path, policy):
    gf = make_gridfile(tmp_path, int_schema(k=3, capacity=3), policy)
    audit = DirectoryAudit(gf)
    for r in random_rows(seeded(3), 600, 3):
        gf.insert(r)
        audit.check_addresses()
    assert audit.writes > 0
    assert audit.violations == []


def test_reopen_rebuilds_piece_table(tmp_path):
    gf, rows = _loaded(tmp_path, SplitPolicy.ROUND_ROBIN)
    pieces = dict(gf.directory.pieces)
    gf.close()
    gf2 = GridFile.open(tmp_path, gf.schema)
    assert gf2.directory.pieces == pieces
    gf2.check_invariants()
    assert sorted(gf2.full_scan()) == sorted(rows)
    gf2.close()


def test_large_piece_spans_whole_pages(tmp_path):
    f = PageFile(tmp_path / "d.dir", "directory", 64, AccessStats(), create=True)
    pl = Partlist((4, 4, 4))
    d = Directory(f, pl, 3)
    d.init_root(1)
    per = d.per_page
    # refine dim 1 until a dim-0 piece needs more than a page
    v = 1
    while pl.extents()[1] * pl.extents()[2] <= per:
        dim = 1 + (len(pl) % 2)
        els = [DirectoryElement(2, (False,) * 3)] * d._shape(dim, len(pl), 0).count
        addr = d.append_piece(dim, len(pl), els)
        pl.append(dim, (v * 1000).to_bytes(4, "big"), addr)
        v += 1
    count = d._shape(0, len(pl), 0).count
    els = [DirectoryElement(i, (False,) * 3) for i in range(count)]
    addr = d.append_piece(0, len(pl), els)
    pl.append(0, (5).to_bytes(4, "big"), addr)
    assert addr % 64 == 0
    assert [d.read_element(len(pl) - 1, i).bucket for i in range(count)] == list(range(count))


def test_append_must_follow_partlist_tail(tmp_path):
    f = PageFile(tmp_path / "d.dir", "directory", 64, AccessStats(), create=True)
    pl = Partlist((4, 4))
    d = Directory(f, pl, 2)
    d.init_root(1)
    with pytest.raises(DirectoryError):
        d.append_piece(0, 3, [])
    with pytest.raises(DirectoryError):
        d.append_piece(0, 0, [])


def test_bad_header_detected(tmp_path):
    f = PageFile(tmp_path / "d.dir", "directory", 64, AccessStats(), create=True)
    d = Directory(f, Partlist((4,)), 1)
    d.init_root(1)
    f.write(0, bytes(64))
    with pytest.raises(CorruptFileError):
        Directory(f, Partlist((4,)), 1).open()


def test_element_encoding_roundtrip(tmp_path):
    f = PageFile(tmp_path / "d.dir", "directory", 64, AccessStats(), create=True)
    d = Directory(f, Partlist((4,) * 10), 10)
    e = DirectoryElement(123456, tuple(i % 3 == 0 for i in range(10)))
    assert d.decode_element(d.encode_element(e)) == e
    assert d.elem_size == 6
    assert ROOT == -1


def test_audit_flags_forbidden_rewrites(tmp_path):
    gf, _ = _loaded(tmp_path, SplitPolicy.ROUND_ROBIN, n=100)
    audit = DirectoryAudit(gf)
    f = gf.store.files["directory"]
    f.write(0, bytes(f.page_size))
    assert audit.violations == ["header page rewritten"]
    pos = max(p for p in gf.directory.pieces)
    gf.directory.pieces[pos] = gf.directory.pieces[pos]._replace(addr=10 ** 6)
    audit.check_addresses()
    assert any("moved" in v for v in audit.violations)
