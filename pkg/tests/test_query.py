"""Query language: grammar round-trip, clause semantics, oracle equivalence."""

from __future__ import annotations

import random
from datetime import timedelta

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reqbase import core
from reqbase.core import RequirementId
from reqbase.query import (
    AttrContains,
    AttrEquals,
    GroupIsNot,
    ModifiedAfter,
    OrderBy,
    Query,
    QueryError,
    QueryParseError,
    TextContains,
    evaluate,
    list_views,
    parse_query,
    print_query,
    run_view,
    save_view,
)
from reqbase.store import Store

from conftest import (
    FIXED_TIME,
    TEST_BUILDINGS,
    TEST_GROUPS,
    TEST_PHASES,
    TEST_STATUSES,
    TEST_TYPES,
    _WORDS,
    SteppingClock,
    random_snapshot,
)

HALL_FLOORSPACE_QUERY = 'building~"experimental hall" type~"floor space"'


class TestParse:
    def test_hall_floorspace_query(self):
        q = parse_query(HALL_FLOORSPACE_QUERY)
        assert q == Query(
            (AttrContains("building", "experimental hall"), AttrContains("type", "floor space")),
            OrderBy(),
        )

    def test_empty_string_is_empty_query(self):
        assert parse_query("") == Query()
        assert parse_query("   ") == Query()

    def test_equals_and_not_equals(self):
        q = parse_query("status=approved group!=survey")
        assert q.clauses == (AttrEquals("status", "approved"), GroupIsNot("survey"))

    def test_text_contains(self):
        q = parse_query('text~"beam height"')
        assert q.clauses == (TextContains("beam height"),)

    def test_modified_after(self):
        q = parse_query("modified>2002-07-15T09:00:00Z")
        assert q.clauses == (ModifiedAfter(FIXED_TIME),)

    def test_sort_term(self):
        q = parse_query("sort:status:desc")
        assert q.order == OrderBy("status", ascending=False)

    def test_unquoted_value_without_spaces(self):
        assert parse_query("building~tunnel").clauses == (AttrContains("building", "tunnel"),)

    @pytest.mark.parametrize(
        "bad",
        [
            "building~~bad",
            "building~",
            "building",
            '~value',
            'building~"unterminated',
            'name~"x"tail',
            "sort:status",
            "sort:status:down",
            "size>ten",
            "color!=red",
            "modified>yesterday",
            "sort:a:asc sort:b:asc",
            r'building~"bad \q escape"',
        ],
    )
    def test_syntax_errors_carry_position(self, bad):
        with pytest.raises(QueryParseError) as err:
            parse_query(bad)
        assert err.value.position >= 1

    def test_error_position_points_at_offending_token(self):
        with pytest.raises(QueryParseError) as err:
            parse_query("building~~bad")
        assert err.value.position == 10


_clause_strategy = st.one_of(
    st.builds(AttrEquals, st.sampled_from(["group", "status", "phase", "note"]), st.text(min_size=1, max_size=8).filter(lambda s: "\n" not in s and "\r" not in s)),
    st.builds(AttrContains, st.sampled_from(["type", "building", "location"]), st.text(min_size=1, max_size=8).filter(lambda s: "\n" not in s and "\r" not in s)),
    st.builds(TextContains, st.text(min_size=1, max_size=10).filter(lambda s: "\n" not in s and "\r" not in s)),
    st.builds(GroupIsNot, st.text(min_size=1, max_size=8).filter(lambda s: "\n" not in s and "\r" not in s)),
    st.builds(ModifiedAfter, st.just(FIXED_TIME)),
)
_query_strategy = st.builds(
    Query,
    st.lists(_clause_strategy, max_size=4).map(tuple),
    st.builds(OrderBy, st.sampled_from(["id", "status", "modified", "outline"]), st.booleans()),
)


@settings(max_examples=300, deadline=None)
@given(query=_query_strategy)
def test_print_parse_round_trip(query):
    assert parse_query(print_query(query)) == query


class TestEvaluate:
    def test_retrieval_scenario(self, retrieval_store):
        # R1 is the consoles record; tunnel/safety/cost records must not match
        results = evaluate(parse_query(HALL_FLOORSPACE_QUERY), retrieval_store.snapshot())
        assert [r.id for r in results] == [RequirementId(1)]

    def test_empty_query_returns_all_ordered_by_id(self, retrieval_store):
        results = evaluate(Query(), retrieval_store.snapshot())
        assert [r.id.value for r in results] == [1, 2, 3, 4]

    def test_unknown_attribute_rejected(self, retrieval_store):
        with pytest.raises(QueryError):
            evaluate(parse_query("color=red"), retrieval_store.snapshot())

    def test_illegal_value_for_closed_list_rejected(self, retrieval_store):
        with pytest.raises(QueryError):
            evaluate(parse_query("type~cheapness"), retrieval_store.snapshot())

    def test_equals_on_multi_attribute_rejected(self, retrieval_store):
        with pytest.raises(QueryError):
            evaluate(parse_query('building="experimental hall"'), retrieval_store.snapshot())

    def test_contains_on_single_attribute_rejected(self, retrieval_store):
        with pytest.raises(QueryError):
            evaluate(parse_query("status~approved"), retrieval_store.snapshot())

    def test_multi_membership_reuse_semantics(self, retrieval_store):
        # a record listed under many buildings is found by each building's query
        store = retrieval_store
        store.update_requirement(
            "x", RequirementId(1), 1, [("building", ["experimental hall", "tunnel"])]
        )
        snapshot = store.snapshot()
        for building in ("experimental hall", "tunnel"):
            hits = evaluate(Query((AttrContains("building", building),)), snapshot)
            assert RequirementId(1) in [r.id for r in hits]

    def test_text_contains_is_case_insensitive(self, retrieval_store):
        hits = evaluate(parse_query('text~"CONSOLES AT BEAM"'), retrieval_store.snapshot())
        assert [r.id.value for r in hits] == [1]

    def test_modified_after_strictly(self, retrieval_store):
        store = retrieval_store
        latest = store.get_requirement(RequirementId(1)).modified_at
        unchanged = evaluate(
            Query((ModifiedAfter(latest),)), store.snapshot()
        )
        assert RequirementId(1) not in [r.id for r in unchanged]
        store.update_requirement("x", RequirementId(1), 1, [("status", "approved")])
        hits = evaluate(Query((ModifiedAfter(latest),)), store.snapshot())
        assert RequirementId(1) in [r.id for r in hits]

    def test_adding_clause_never_enlarges_result(self, retrieval_store):
        snapshot = retrieval_store.snapshot()
        base = evaluate(parse_query('building~"experimental hall"'), snapshot)
        narrowed = evaluate(parse_query(HALL_FLOORSPACE_QUERY), snapshot)
        assert {r.id for r in narrowed} <= {r.id for r in base}

    def test_evaluation_does_not_mutate_snapshot(self, retrieval_store):
        snapshot = retrieval_store.snapshot()
        before = snapshot.canonical_json()
        evaluate(parse_query(HALL_FLOORSPACE_QUERY), snapshot)
        assert snapshot.canonical_json() == before


# --- independent brute-force oracle ------------------------------------------

def brute_force(query: Query, snapshot) -> list:
    """Straight-line restatement of the documented clause and ordering rules;
    deliberately independent of reqbase.query internals."""
    matched = []
    for req in snapshot.requirements.values():
        ok = True
        for clause in query.clauses:
            if isinstance(clause, AttrEquals):
                ok = ok and req.attributes.get(clause.name) == clause.value
            elif isinstance(clause, AttrContains):
                stored = req.attributes.get(clause.name, ())
                stored = stored if isinstance(stored, tuple) else (stored,)
                ok = ok and clause.value in stored
            elif isinstance(clause, TextContains):
                ok = ok and clause.value.lower() in req.text.lower()
            elif isinstance(clause, GroupIsNot):
                ok = ok and req.attributes.get("group") != clause.value
            elif isinstance(clause, ModifiedAfter):
                last = req.change_log[-1].timestamp if req.change_log else req.created_at
                ok = ok and last > clause.when
            if not ok:
                break
        if ok:
            matched.append(req)

    matched.sort(key=lambda r: r.id.value)
    field = query.order.field
    if field == "id":
        if not query.order.ascending:
            matched.reverse()
        return matched

    def sort_key(req):
        if field == "text":
            return req.text
        if field == "document":
            return req.document
        if field == "outline":
            return tuple(int(p) for p in req.outline.split(".")) if req.outline else ()
        if field == "created_at":
            return req.created_at
        if field == "modified":
            return req.change_log[-1].timestamp if req.change_log else req.created_at
        if field == "revision":
            return req.revision
        value = req.attributes.get(field)
        if value is None:
            return ""
        return ", ".join(value) if isinstance(value, tuple) else value

    matched.sort(key=sort_key, reverse=not query.order.ascending)
    return matched


def random_query(rng: random.Random) -> Query:
    clauses = []
    for _ in range(rng.randint(0, 3)):
        kind = rng.randint(0, 5)
        if kind == 0:
            clauses.append(AttrContains("building", rng.choice(TEST_BUILDINGS)))
        elif kind == 1:
            clauses.append(AttrContains("type", rng.choice(TEST_TYPES)))
        elif kind == 2:
            clauses.append(
                AttrEquals(
                    rng.choice(("group", "status", "phase")),
                    rng.choice(TEST_GROUPS + TEST_STATUSES + TEST_PHASES),
                )
            )
        elif kind == 3:
            clauses.append(TextContains(rng.choice(_WORDS + ("hall", "xyz")).lower()))
        elif kind == 4:
            clauses.append(GroupIsNot(rng.choice(TEST_GROUPS)))
        else:
            clauses.append(
                ModifiedAfter(FIXED_TIME + timedelta(minutes=rng.randint(0, 6000)))
            )
    order = OrderBy(
        rng.choice(("id", "status", "group", "text", "modified", "outline", "revision")),
        rng.random() < 0.5,
    )
    return Query(tuple(clauses), order)


def _queries_fit_schema(query: Query) -> bool:
    # group/status/phase equality values drawn from a joint pool; only keep
    # schema-legal combinations so evaluate() does not reject them
    from reqbase.query import validate_query

    from conftest import oracle_schema

    return not validate_query(query, oracle_schema())


def test_oracle_equivalence_randomized():
    rng = random.Random(4242)
    checked = 0
    while checked < 400:
        snapshot = random_snapshot(rng, rng.randint(0, 60))
        query = random_query(rng)
        if not _queries_fit_schema(query):
            continue
        expected = brute_force(query, snapshot)
        got = evaluate(query, snapshot)
        assert [r.id for r in got] == [r.id for r in expected]
        checked += 1


def test_oracle_equivalence_large_store():
    rng = random.Random(9)
    snapshot = random_snapshot(rng, 1000)
    for _ in range(30):
        query = random_query(rng)
        if not _queries_fit_schema(query):
            continue
        assert [r.id for r in evaluate(query, snapshot)] == [
            r.id for r in brute_force(query, snapshot)
        ]


# --- stored views --------------------------------------------------------------

class TestViews:
    def test_save_and_run(self, retrieval_store):
        save_view(retrieval_store, "civil", "exp-hall-floorspace", parse_query(HALL_FLOORSPACE_QUERY))
        results = run_view("exp-hall-floorspace", retrieval_store.snapshot())
        assert [r.id.value for r in results] == [1]

    def test_run_view_on_empty_store(self):
        with Store.in_memory(clock=SteppingClock()) as store:
            save_view(store, "x", "everything", Query())
            assert run_view("everything", store.snapshot()) == []

    def test_views_are_live_queries(self, consoles_store):
        store = consoles_store
        save_view(store, "civil", "floorspace", parse_query('type~"floor space"'))
        before = len(run_view("floorspace", store.snapshot()))
        store.import_document(
            "reviewer",
            "more-spec",
            "#group survey\n\n#req\ntype: floor space\nbuilding: tunnel\n---\nMore floor space.\n",
        )
        after = run_view("floorspace", store.snapshot())
        assert len(after) == before + 1

    def test_duplicate_name_other_owner_rejected(self, retrieval_store):
        save_view(retrieval_store, "alice", "mine", Query())
        with pytest.raises(core.ConflictError):
            save_view(retrieval_store, "bob", "mine", Query())

    def test_same_owner_can_replace(self, retrieval_store):
        save_view(retrieval_store, "alice", "mine", Query())
        replaced = save_view(retrieval_store, "alice", "mine", parse_query("status=approved"))
        assert replaced.query.clauses == (AttrEquals("status", "approved"),)

    def test_unknown_view_name(self, retrieval_store):
        with pytest.raises(core.NotFoundError):
            run_view("nope", retrieval_store.snapshot())

    def test_list_views_sorted(self, retrieval_store):
        save_view(retrieval_store, "a", "zulu", Query())
        save_view(retrieval_store, "a", "alpha", Query())
        assert [v.name for v in list_views(retrieval_store.snapshot())] == ["alpha", "zulu"]

    def test_invalid_query_rejected_at_save(self, retrieval_store):
        with pytest.raises(QueryError):
            save_view(retrieval_store, "a", "bad", parse_query("color=red"))
