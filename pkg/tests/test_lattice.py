import pytest
from hypothesis import given, settings, strategies as st

from superdiff.lattice import (
    LAYER_ORDER,
    Bond,
    BondKind,
    Layer,
    LatticeError,
    LatticeSpec,
    Region,
    RungStyle,
    build_folded_chain,
    build_scattering_geometry,
    folded_rung,
    validate,
)


def assert_matchings(spec):
    for layer in LAYER_ORDER:
        sites = [s for b in spec.layer(layer) for s in b.sites]
        assert len(sites) == len(set(sites)), layer


def test_plain_chain_alternates_r_g():
    spec = build_folded_chain(6)
    assert validate(spec) == []
    assert [b.layer for b in spec.chain_bonds] == [Layer.R, Layer.G, Layer.R, Layer.G, Layer.R]
    assert spec.rung_bonds == []


def test_direct_rung_goes_to_b():
    spec = build_folded_chain(8, [folded_rung(8, 2)], RungStyle.DIRECT)
    (rung,) = spec.rung_bonds
    assert rung.sites == (2, 5) and rung.layer == Layer.B
    assert spec.n == 8
    assert spec.distances_from(0)[5] == 3  # 0-1-2-5


def test_mid_site_rung_adds_a_site():
    spec = build_folded_chain(19, [folded_rung(19, 4)], "mid_site")
    assert spec.n == 20
    assert sorted(tuple(sorted(b.sites)) for b in spec.rung_bonds) == [(4, 19), (14, 19)]
    assert validate(spec) == []
    assert_matchings(spec)
    # every site is touched by at least one bond
    assert set(spec.neighbors()) == set(range(20))


def test_folded_rung_limits():
    assert folded_rung(10, 3) == (3, 6)
    with pytest.raises(LatticeError):
        folded_rung(10, 4)  # (4, 5) adjacent
    with pytest.raises(LatticeError):
        folded_rung(10, -1)


@pytest.mark.parametrize("kwargs", [
    dict(chain_len=3),
    dict(chain_len=8, rung_attachments=[(2, 3)]),
    dict(chain_len=8, rung_attachments=[(2, 9)]),
    dict(chain_len=8, rung_attachments=[(1, 6), (1, 4)]),
    dict(chain_len=8, probe=8),
])
def test_folded_chain_rejects_bad_input(kwargs):
    with pytest.raises(LatticeError):
        build_folded_chain(**kwargs)


def test_validate_reports_violations():
    bonds = (
        Bond(0, 1, Layer.R), Bond(1, 2, Layer.R),  # not a matching
        Bond(2, 3, Layer.G), Bond(3, 1, Layer.B),  # cycle and degree 3 at site 1
    )
    problems = validate(LatticeSpec(n=4, bonds=bonds))
    text = " | ".join(problems)
    assert "layer R not a matching at site 1" in text
    assert "chain bonds not a path" in text
    assert validate(LatticeSpec(n=2, bonds=(Bond(0, 1, Layer.R),), probe=5))


def test_two_components_need_chain_count():
    bonds = (Bond(0, 1, Layer.R), Bond(2, 3, Layer.R))
    assert validate(LatticeSpec(n=4, bonds=bonds))
    assert validate(LatticeSpec(n=4, bonds=bonds, chain_count=2)) == []


def test_scattering_geometry_layout():
    spec = build_scattering_geometry(8)
    assert spec.n == 17 and spec.chain_count == 2
    assert validate(spec) == []
    rung = {tuple(sorted(b.sites)): b.layer for b in spec.rung_bonds}
    assert rung == {(4, 16): Layer.B, (12, 16): Layer.R}
    assert spec.sites_in(Region.BEFORE_RUNG) == [0, 1, 2, 3, 4]
    assert spec.sites_in(Region.AFTER_RUNG_SAME_CHAIN) == [5, 6, 7]
    assert spec.sites_in(Region.OTHER_CHAIN) == list(range(8, 16))
    assert spec.sites_in(Region.RUNG_SITE) == [16]
    with pytest.raises(LatticeError):
        build_scattering_geometry(8, attach_2=3)


def test_json_roundtrip_keeps_partition():
    spec = build_scattering_geometry(6)
    back = LatticeSpec.from_json(spec.to_json())
    assert back == spec
    assert back.partition == spec.partition
    folded = build_folded_chain(11, [folded_rung(11, 2)], "mid_site", probe=3)
    assert LatticeSpec.from_dict(folded.to_dict()) == folded


@settings(max_examples=60, deadline=None)
@given(st.integers(5, 40), st.data(), st.sampled_from(list(RungStyle)))
def test_random_folded_geometries_are_valid(chain_len, data, style):
    max_d = (chain_len - 3) // 2
    distances = data.draw(st.lists(st.integers(0, max_d), unique=True, max_size=3))
    rungs = [folded_rung(chain_len, d) for d in distances]
    spec = build_folded_chain(chain_len, rungs, style)
    assert validate(spec) == []
    assert_matchings(spec)
    assert len(spec.rung_bonds) == len(rungs) * (2 if style == RungStyle.MID_SITE else 1)
    assert all(b.kind == BondKind.CHAIN for b in spec.chain_bonds)


def test_long_plain_chain():
    spec = build_folded_chain(28)
    assert spec.n == 28 and len(spec.bonds) == 27 and spec.rung_bonds == []
    layers = [b.layer for b in spec.chain_bonds]
    assert layers == [Layer.R, Layer.G] * 13 + [Layer.R]


def test_smallest_path_split():
    spec = build_folded_chain(4)
    by_layer = {layer: sorted(b.sites for b in spec.layer(layer)) for layer in LAYER_ORDER}
    assert by_layer[Layer.R] == [(0, 1), (2, 3)]
    assert by_layer[Layer.G] == [(1, 2)]
    assert validate(spec) == []


def test_twenty_site_direct_rung():
    spec = build_folded_chain(20, [folded_rung(20, 4)], "direct")
    assert spec.n == 20
    assert len([b for b in spec.bonds if b.kind == BondKind.RUNG]) == 1


def test_scattering_sizes_and_bfs_partition():
    assert build_scattering_geometry(22).n == 45
    spec = build_scattering_geometry(8, attach_1=4)
    assert sum(len(spec.sites_in(r)) for r in Region) == 17
    # independent labeling: walk chain 1 from the probe without passing the attachment
    chain1 = {b.key() for b in spec.chain_bonds if max(b.sites) < 8}
    before, frontier = {0}, [0]
    while frontier:
        u = frontier.pop()
        if u == 4:
            continue
        for v in (u - 1, u + 1):
            if frozenset((u, v)) in chain1 and v not in before:
                before.add(v)
                frontier.append(v)
    assert sorted(before) == spec.sites_in(Region.BEFORE_RUNG)
    assert len(before) == 5


def test_constructed_violations():
    assert validate(LatticeSpec(n=4, bonds=(Bond(0, 1, Layer.R), Bond(1, 2, Layer.G), Bond(2, 3, Layer.R)))) == []
    shared = LatticeSpec(n=5, bonds=(Bond(2, 3, Layer.R), Bond(3, 4, Layer.R), Bond(0, 1, Layer.G), Bond(1, 2, Layer.B)))
    assert validate(shared) == ["layer R not a matching at site 3: bonds (2,3) and (3,4)"]
    split = LatticeSpec(n=4, bonds=(Bond(0, 1, Layer.R), Bond(2, 3, Layer.R)))
    assert any("chain bonds not a path" in p for p in validate(split))
