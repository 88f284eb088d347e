import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from newsharvest.enrich import (
    DriInputs,
    MatchKind,
    SmrEntry,
    Snapshot,
    SourceTypology,
    classify_typology,
    compute_dri,
    enrich_all,
    enrich_record,
    enrichments_from_csv,
    enrichments_to_csv,
    load_rules,
    load_snapshot,
    match_smr,
    normalize_title,
    parse_snapshot,
)
from newsharvest.errors import DomainError, SnapshotError

from conftest import make_record

score = st.floats(min_value=0, max_value=100, allow_nan=False)


@pytest.fixture(scope="module")
def snapshot():
    return load_snapshot()


@pytest.fixture(scope="module")
def rules():
    return load_rules()


def rec(url=None, outlet=None, domain=None, i=1):
    return make_record(i, source_url=url, outlet_name=outlet, source_domain=domain)


# --- DRI ----------------------------------------------------------------------------------

def test_dri_examples():
    assert compute_dri((50, 50, 50, 50)) == 50
    assert compute_dri((100, 0, 0, 0)) == 25
    assert compute_dri(DriInputs(0, 100, 0, 100)) == 50


def test_dri_matches_summed_mean_oracle():
    rng = random.Random(11)
    for _ in range(100):
        xs = [rng.uniform(0, 100) for _ in range(4)]
        oracle = (xs[0] + xs[1] + xs[2] + xs[3]) / 4
        assert abs(compute_dri(xs) - oracle) <= 1e-9


@pytest.mark.parametrize("bad", [(101, 0, 0, 0), (-0.1, 0, 0, 0), (math.nan, 1, 1, 1), (None, 1, 1, 1), (1, 2, 3)])
def test_dri_rejects_out_of_scale(bad):
    with pytest.raises(DomainError):
        compute_dri(bad)


@given(st.tuples(score, score, score, score), st.permutations(range(4)))
def test_dri_symmetric_and_bounded(xs, perm):
    d = compute_dri(xs)
    assert compute_dri(tuple(xs[i] for i in perm)) == d
    assert min(xs) <= d <= max(xs)


@given(st.tuples(score, score, score, score), st.integers(0, 3), score)
def test_dri_monotone(xs, axis, bump):
    bigger = list(xs)
    bigger[axis] = max(xs[axis], bump)
    assert compute_dri(bigger) >= compute_dri(xs)


# --- snapshot -----------------------------------------------------------------------------

def test_snapshot_loads_and_records_discrepancy(snapshot):
    assert len(snapshot) == 25
    # one sample row deliberately disagrees with the mean of its inputs: recorded, not fatal
    assert snapshot.discrepancies() == [("sciencebusiness.net", 0.5)]
    e = snapshot.by_domain["elpais.com"]
    assert e.dri == pytest.approx(86.75) and e.discrepancy() == 0


def test_snapshot_errors():
    with pytest.raises(SnapshotError):
        parse_snapshot("title,url\nA,a.com\n")
    with pytest.raises(SnapshotError):
        parse_snapshot("name,domain\nA,a.com\nB,a.com\n")
    with pytest.raises(SnapshotError):
        parse_snapshot("name,domain,authority_score,domain_rating,citation_flow,trust_flow\nA,a.com,120,1,1,1\n")
    with pytest.raises(SnapshotError):
        load_snapshot("/nonexistent/snapshot.csv")


def test_snapshot_partial_scores_have_no_dri():
    snap = parse_snapshot("name,domain,overall,authority_score\nA,www.a.com,50,50\n")
    e = snap.by_domain["a.com"]
    assert e.dri is None and e.discrepancy() is None


# --- matching -----------------------------------------------------------------------------

def test_domain_match(snapshot):
    m = match_smr(rec("https://elpais.com/ciencia/x"), snapshot)
    assert m.kind is MatchKind.DOMAIN and m.entry.domain == "elpais.com"


def test_subdomain_matches_registrable_domain(snapshot):
    m = match_smr(rec("https://blogs.elpais.com/ciencia/x"), snapshot)
    assert m.kind is MatchKind.DOMAIN and m.entry.domain == "elpais.com"
    m = match_smr(rec("https://www.bbc.co.uk/news/x"), snapshot)
    assert m.entry.domain == "bbc.co.uk"


@pytest.mark.parametrize("title,expected", [("El País", "elpais.com"), ("EL PAIS", "elpais.com"),
                                            ("Le Monde", "lemonde.fr"), ("jutarnji list.", "jutarnji.hr")])
def test_title_match(snapshot, title, expected):
    m = match_smr(rec(outlet=title), snapshot)
    assert m.kind is MatchKind.TITLE and m.entry.domain == expected
    # normalization oracle: the matched entry is the unique one with the same key
    keys = [e.domain for e in snapshot.entries if normalize_title(e.name) == normalize_title(title)]
    assert keys == [expected]


def test_ambiguous_title(snapshot):
    m = match_smr(rec(outlet="La Razón"), snapshot)
    assert m.kind is MatchKind.NONE and m.entry is None
    assert "larazon.es" in m.note and "la-razon.com" in m.note


def test_domain_beats_title(snapshot):
    m = match_smr(rec("https://abc.es/x", outlet="El País"), snapshot)
    assert m.kind is MatchKind.DOMAIN and m.entry.domain == "abc.es"


def test_unmatched(snapshot):
    assert match_smr(rec("https://unknown-outlet.com/x", outlet="Unknown"), snapshot).kind is MatchKind.NONE
    assert match_smr(rec(), snapshot).kind is MatchKind.NONE


def test_normalize_title():
    assert normalize_title("Le Monde S.A.") == "le monde"
    assert normalize_title("Grupo Joly: Granada Hoy") == "joly granada hoy"
    assert normalize_title("  Clarín  ") == "clarin"


# --- typology -----------------------------------------------------------------------------

@pytest.mark.parametrize(
    "url,expected",
    [
        ("https://www.linkedin.com/posts/ifmif-dones_x", "social_network"),
        ("https://x.com/ifmif_dones/status/1", "social_network"),
        ("https://www.youtube.com/watch?v=abc", "social_network"),
        ("https://www.lamoncloa.gob.es/consejodeministros/x", "government"),
        ("https://www.mincotur.gob.es/x", "government"),
        ("https://canal.ugr.es/noticia/x", "st_institution"),
        ("https://www.ugr.es/", "st_institution"),
        ("https://www.mit.edu/news/x", "st_institution"),
        ("https://ifmif-dones.es/noticias/x", "transnational_project"),
        ("https://www.granadadigital.es/x", "non_smr_media"),
        ("https://www.noticiasdegranada.es/x", "non_smr_media"),
        ("https://shop.example/item", "other"),
    ],
)
def test_typology_rules(rules, url, expected):
    assert classify_typology(url, rules) is SourceTypology(expected)


def test_smr_match_wins(snapshot, rules):
    r = rec("https://www.world-nuclear-news.org/articles/x")
    assert classify_typology(r, rules, match_smr(r, snapshot)) is SourceTypology.SMR_OUTLET
    assert classify_typology(r, rules) is SourceTypology.NON_SMR_MEDIA


def test_outlet_marker_counts(rules):
    r = rec("https://blog-xyz.example/a", outlet="Instituto de Física")
    assert classify_typology(r, rules) is SourceTypology.ST_INSTITUTION


def test_classification_total_and_deterministic(rules, snapshot):
    rng = random.Random(3)
    hosts = ["elpais.com", "linkedin.com", "ugr.es", "gob.es", "dones.es", "diario.com", "zz.example", "x.gov"]
    for i in range(200):
        url = f"https://{rng.choice(['', 'www.', 'm.'])}{rng.choice(hosts)}/p{i}"
        r = rec(url, i=i)
        a = classify_typology(r, rules, match_smr(r, snapshot))
        assert a is classify_typology(r, rules, match_smr(r, snapshot))
        assert isinstance(a, SourceTypology)


# --- enrichment -------------------------------------------------------------------------

def test_enrich_record(snapshot, rules):
    e = enrich_record(rec("https://www.ideal.es/granada/x"), snapshot, rules)
    assert (e.match_kind, e.smr_domain, e.country, e.typology) == (MatchKind.DOMAIN, "ideal.es", "ES", SourceTypology.SMR_OUTLET)
    assert e.overall == 61.5 and e.dri == pytest.approx(61.5) and e.in_smr
    # domain match implies equal registrable domain
    assert e.domain == e.smr_domain
    u = enrich_record(rec("https://canal.ugr.es/x"), snapshot, rules)
    assert (u.in_smr, u.country, u.typology) == (False, "ES", SourceTypology.ST_INSTITUTION)


def test_enrichment_csv_round_trip(snapshot, rules):
    recs = [rec("https://elpais.com/a", i=1), rec("https://ugr.es/b", i=2), rec(outlet="La Razón", i=3)]
    rows = enrich_all(recs, snapshot, rules)
    assert enrichments_from_csv(enrichments_to_csv(rows)) == [
        r.__class__(**{**r.__dict__, "overall": r.overall, "dri": None if r.dri is None else round(r.dri, 4)})
        for r in rows
    ]
    assert enrichments_to_csv(enrichments_from_csv(enrichments_to_csv(rows))) == enrichments_to_csv(rows)


def test_entry_without_inputs():
    snap = Snapshot([SmrEntry("A", "a.com", overall=10.0)])
    assert snap.discrepancies() == [] and snap.by_domain["a.com"].dri is None
