import random
from datetime import datetime, timezone

import pytest
from hypothesis import given
from hypothesis import strategies as st

from newsharvest.analyze import (
    QUARTILE_METHOD,
    StageEvent,
    build_stage_ledger,
    coverage_breakdown,
    distribution_stats,
    distributions_to_csv,
    overlap,
    scores_by_cell,
    summary,
    typology_counts,
)
from newsharvest.enrich import Enrichment, MatchKind, SourceTypology, enrich_all, load_rules, load_snapshot
from newsharvest.errors import DomainError, SequencingError

from conftest import make_record
from patterns import PUBLISHED_CUMULATIVE, PUBLISHED_POST_FILTER, PUBLISHED_STAGE_EVENTS


def published_events():
    return [StageEvent(*e) for e in PUBLISHED_STAGE_EVENTS]


# --- stage ledger --------------------------------------------------------------------

def test_published_ledger():
    ledger = build_stage_ledger(published_events(), post_filter=PUBLISHED_POST_FILTER)
    for stage, cum in PUBLISHED_CUMULATIVE.items():
        assert ledger.cumulative(stage) == cum
    assert ledger.pre_filter == 3340
    assert round(ledger.reduction_ratio, 3) == 0.556
    assert [r.retrieved for r in ledger.rows] == [425, 594, 812, 3784]
    s2 = ledger.rows[1]
    assert (s2.retrieved, s2.unique_new, s2.cumulative_unique) == (594, 99, 524)


def test_single_stage_all_unique():
    ledger = build_stage_ledger([StageEvent("S1_editions", 40, 40)])
    assert ledger.cumulative("S1_editions") == 40 == ledger.rows[0].retrieved
    assert ledger.reduction_ratio is None


def test_zero_events():
    ledger = build_stage_ledger([])
    assert ledger.rows == () and ledger.pre_filter == 0
    assert build_stage_ledger([], post_filter=0).reduction_ratio == 0.0


def test_out_of_order_stage():
    with pytest.raises(SequencingError):
        build_stage_ledger([StageEvent("S3_iso", 5, 5), StageEvent("S2_months", 5, 1)])


def test_event_invariants():
    with pytest.raises(ValueError):
        StageEvent("S1_editions", 3, 4)
    with pytest.raises(ValueError):
        StageEvent("S1_editions", -1, 0)
    with pytest.raises(ValueError):
        build_stage_ledger([StageEvent("S1_editions", 3, 3)], post_filter=4)


@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 50), st.integers(0, 50)), max_size=12))
def test_ledger_cumulative_non_decreasing(raw):
    stages = ["S1_editions", "S2_months", "S3_iso", "S4_domains", "S5_backfill"]
    events = [StageEvent(stages[s], max(a, b), min(a, b)) for s, a, b in sorted(raw)]
    ledger = build_stage_ledger(events)
    cums = [r.cumulative_unique for r in ledger.rows]
    assert cums == sorted(cums)
    assert ledger.pre_filter == sum(e.unique_new for e in events)
    assert all(r.unique_new <= r.retrieved for r in ledger.rows)


def test_ledger_csv():
    text = build_stage_ledger(published_events(), post_filter=PUBLISHED_POST_FILTER).to_csv()
    assert "S4_domains,3784,2180,3340," in text
    assert text.rstrip().endswith("reduction_ratio,,,0.556287,")


# --- overlap ------------------------------------------------------------------------

def named(*ids):
    return [make_record(0, id=i) for i in ids]


def test_hand_countable_overlap():
    rep = overlap({"A": named(*"abcde"), "B": named(*"def"), "C": named("e")}, key=lambda r: r.id)
    assert rep.shares["A"].exclusive_pct == pytest.approx(60)
    assert rep.shares["B"].exclusive_pct == pytest.approx(100 / 3)
    assert round(rep.shares["B"].exclusive_pct, 1) == 33.3
    assert rep.shares["C"].exclusive_pct == 0
    assert rep.regions == {
        frozenset("A"): 3, frozenset("B"): 1, frozenset("AB"): 1, frozenset("ABC"): 1,
    }
    assert rep.inclusion_exclusion() == rep.union_size == 6


def test_disjoint_sets_fully_exclusive():
    rep = overlap({"A": named("a", "b"), "B": named("c"), "C": named("d", "e")}, key=lambda r: r.id)
    assert all(s.exclusive_pct == 100 for s in rep.shares.values())


def test_overlap_arity():
    with pytest.raises(ValueError):
        overlap({"A": named("a")}, key=lambda r: r.id)


def test_default_linker_url_then_headline():
    day = datetime(2024, 3, 5, tzinfo=timezone.utc)
    a = [
        make_record(1, id="a1", source_url="https://elpais.com/x?utm_source=g", headline="Uno"),
        make_record(2, id="a2", source_url=None, headline="IFMIF-DONES recibe fondos europeos", published_at=day),
        make_record(3, id="a3", source_url=None, headline="IFMIF-DONES abre sus puertas", published_at=day),
    ]
    b = [
        make_record(4, id="b1", source_url="https://ELPAIS.com/x#c", headline="Otro titular"),
        make_record(5, id="b2", source_url=None, headline="IFMIF-DONES recibe fondos europeos.", published_at=day),
        # same headline, different day: not linked
        make_record(6, id="b3", source_url=None, headline="IFMIF-DONES abre sus puertas",
                    published_at=datetime(2024, 4, 1, tzinfo=timezone.utc)),
    ]
    rep = overlap({"A": a, "B": b})
    assert rep.regions == {frozenset("AB"): 2, frozenset("A"): 1, frozenset("B"): 1}
    assert rep.shares["A"].exclusive == 1 and rep.shares["B"].exclusive == 1


def test_urls_on_both_sides_decide():
    # identical headlines but different URLs: distinct stories
    a = [make_record(1, id="a", source_url="https://a.com/1", headline="Same")]
    b = [make_record(1, id="b", source_url="https://b.com/2", headline="Same")]
    assert overlap({"A": a, "B": b}).regions == {frozenset("A"): 1, frozenset("B"): 1}


def test_inclusion_exclusion_random():
    rng = random.Random(8)
    for _ in range(30):
        sets = {n: named(*{str(rng.randrange(25)) for _ in range(rng.randrange(1, 20))}) for n in "XYZ"}
        rep = overlap(sets, key=lambda r: r.id)
        assert rep.inclusion_exclusion() == rep.union_size == len({r.id for v in sets.values() for r in v})
        for n, recs in sets.items():
            others = {r.id for m, v in sets.items() if m != n for r in v}
            assert rep.shares[n].exclusive == len({r.id for r in recs} - others)


def test_overlap_csv():
    rep = overlap({"A": named(*"abcde"), "B": named(*"def")}, key=lambda r: r.id)
    lines = rep.to_csv().splitlines()
    assert lines[1] == "source,A,5,3,60.00" and "region,A+B,2,," in lines


# --- distributions --------------------------------------------------------------------

def test_quartiles_by_hand():
    s = distribution_stats([10, 20, 30, 40, 50])
    assert (s.min, s.q1, s.median, s.q3, s.max, s.mean) == (10, 15, 30, 45, 50, 30)
    assert s.method == QUARTILE_METHOD


def test_even_count_quartiles():
    s = distribution_stats([4, 1, 3, 2])
    assert (s.q1, s.median, s.q3) == (1.5, 2.5, 3.5)


def test_single_and_pair():
    s = distribution_stats([7])
    assert (s.min, s.q1, s.median, s.q3, s.max) == (7, 7, 7, 7, 7)
    assert distribution_stats([0, 100]).mean == 50


def test_empty_scores():
    with pytest.raises(DomainError):
        distribution_stats([])
    with pytest.raises(DomainError):
        distribution_stats([float("nan")])


@given(st.lists(st.floats(0, 100, allow_nan=False), min_size=1, max_size=60))
def test_five_number_order(xs):
    s = distribution_stats(xs)
    assert s.min <= s.q1 <= s.median <= s.q3 <= s.max
    assert s.min - 1e-9 <= s.mean <= s.max + 1e-9


def _enr(i, country, overall=None, typology=SourceTypology.OTHER):
    smr = f"d{i}.com" if overall is not None else None
    kind = MatchKind.DOMAIN if smr else MatchKind.NONE
    return Enrichment(f"r{i}", f"d{i}.com", kind, smr, None, country, overall, overall, typology)


def test_scores_by_cell_and_csv():
    cells = scores_by_cell({"gn": [_enr(1, "ES", 80), _enr(2, "GB", 90), _enr(3, "ES", 60), _enr(4, None)]})
    assert cells == {("gn", "national"): [80, 60], ("gn", "international"): [90]}
    text = distributions_to_csv(cells)
    assert "gn,national,2,60.0000,60.0000,70.0000,80.0000,80.0000,70.0000" in text
    assert QUARTILE_METHOD in text


# --- coverage -----------------------------------------------------------------------

def test_coverage_fixture():
    snapshot, rules = load_snapshot(), load_rules()
    recs = [
        make_record(1, source_url="https://elpais.com/a", source_domain=None),
        make_record(2, source_url="https://www.abc.es/b", source_domain=None),
        make_record(3, source_url="https://www.ideal.es/c", source_domain=None),
        make_record(4, source_url="https://blog.example/d", source_domain=None),
        make_record(5, source_url="https://foo.example/e", source_domain=None),
    ]
    cov = coverage_breakdown(enrich_all(recs, snapshot, rules))
    assert {c: (cell.smr, cell.non_smr) for c, cell in cov.cells.items()} == {"ES": (3, 0), "unknown": (0, 2)}
    assert cov.top() == [("ES", 3)]
    assert cov.to_csv().splitlines() == ["country,smr,non_smr,total", "ES,3,0,3", "unknown,0,2,2"]


def test_coverage_top_excludes_home_and_breaks_ties():
    rows = [_enr(i, c) for i, c in enumerate(["AR"] * 3 + ["HR"] * 2 + ["GB"] * 2 + ["ES"] * 9 + [None])]
    cov = coverage_breakdown(rows)
    assert cov.top(3, exclude=["es"]) == [("AR", 3), ("GB", 2), ("HR", 2)]


def test_empty_breakdowns():
    assert coverage_breakdown([]).cells == {}
    assert typology_counts([]) == {}
    assert summary() == "\n"


def test_summary_block():
    ledger = build_stage_ledger(published_events(), post_filter=PUBLISHED_POST_FILTER)
    rep = overlap({"A": named(*"abcde"), "B": named(*"def")}, key=lambda r: r.id)
    rows = [_enr(1, "ES", 80, SourceTypology.SMR_OUTLET), _enr(2, None)]
    text = summary(ledger, rep, coverage_breakdown(rows), typology_counts(rows))
    assert "post-filter 1482 of 3340 (reduction 0.556)" in text
    assert "A                    3/5 exclusive (60.0%)" in text
    assert "smr_outlet" in text and "other" in text
