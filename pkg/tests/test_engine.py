import itertools
import random

import pytest

from neuroquery.config import EngineConfig
from neuroquery.engine import Engine, RuleStore, search
from neuroquery.errors import (FilterTypeError, GatewayUnavailable, InvalidRule,
                               RuleDepthExceeded, UnboundVariableInFilter,
                               VariableAlreadyBound)
from neuroquery.filters import eval_filter_expr
from neuroquery.gateway import FallbackGateway
from neuroquery.kb import KnowledgeBase
from neuroquery.nodes import Compare, FilterClause, Lit, PatternClause, Rule, VarRef
from neuroquery.parser import parse_program, render_record
from neuroquery.terms import Ident, Var
from neuroquery.unify import EMPTY_FRAME

from .conftest import (FULL_QUERY, PRICE_QUERY, REFINED_QUERY, RULE_QUERY,
                       WELL_RANKED_RULE)
from .oracles import enumerate_query_results
from .test_gateway import reference_cosine

PRICE_RESULT_SET = {
    ("B00001P4ZH", 39.36), ("B0007XJSQC", 24.95), ("B000AJIF4E", 29.99),
    ("B00004T8R2", 34.5), ("B00020S7XK", 21.99), ("B00025742A", 23.75),
    ("B0002AKANC", 31.0), ("B0002GLZOK", 36.4), ("B0007NLBHI", 26.3),
    ("B000BQWPUU", 20.5),
}


def run_query(kb, text, gateway=None, config=None):
    engine = Engine(kb, gateway=gateway, rules=RuleStore(), config=config)
    results = engine.run_program(parse_program(text))
    assert len(results) == 1
    return results[0]


def record_pairs(result, *keys):
    out = []
    for record in result.records():
        from neuroquery.terms import term_to_json

        out.append(tuple(term_to_json(record[k]) for k in keys))
    return out


class TestWalkthroughQueries:
    def test_price_query_returns_ten(self, fixture_kb):
        result = run_query(fixture_kb, PRICE_QUERY)
        pairs = set(record_pairs(result, "?asin", "?price"))
        assert pairs == PRICE_RESULT_SET
        assert ("B00001P4ZH", 39.36) in pairs and ("B000AJIF4E", 29.99) in pairs

    def test_price_filter_drops_forty_nine(self, fixture_kb):
        result = run_query(fixture_kb, PRICE_QUERY)
        asins = {a for a, _ in record_pairs(result, "?asin", "?price")}
        assert "B0009F52AC" not in asins  # 49.0 is outside the 10-dollar band

    def test_refined_query_exact_three(self, fixture_kb):
        result = run_query(fixture_kb, REFINED_QUERY)
        rows = set(record_pairs(result, "?asin", "?price", "?total_reviews"))
        assert rows == {("B00001P4ZH", 39.36, 14549),
                        ("B0007XJSQC", 24.95, 14980),
                        ("B000AJIF4E", 29.99, 22071)}

    def test_titles_bound(self, fixture_kb):
        result = run_query(fixture_kb, REFINED_QUERY)
        titles = dict(record_pairs(result, "?asin", "?title"))
        assert titles["B00001P4ZH"] == "koss portapro headphones with case"
        assert titles["B000AJIF4E"] == \
            "sony mdr7506 professional large diaphragm headphone"

    def test_deterministic_rendering(self, fixture_kb):
        first = [render_record(r) for r in run_query(fixture_kb, REFINED_QUERY).records()]
        second = [render_record(r) for r in run_query(fixture_kb, REFINED_QUERY).records()]
        assert first == second


class TestPatternClause:
    def test_property_enumeration(self, fixture_kb):
        result = search([PatternClause((Ident("B00001P4ZH"), Var("p"), Var("v")))],
                        fixture_kb)
        assert len(result.frames) == 12

    def test_ground_pattern_passthrough(self, fixture_kb):
        clause = PatternClause((Ident("B00001P4ZH"), Ident("price"), 39.36))
        result = search([clause], fixture_kb)
        assert len(result.frames) == 1
        assert result.records() == [{}]

    def test_no_match_empty(self, fixture_kb):
        result = search([PatternClause((Ident("missing"), Var("p"), Var("v")))],
                        fixture_kb)
        assert result.frames == []

    def test_pattern_only_commutes(self, fixture_kb):
        clauses = [
            PatternClause((Var("a"), Ident("price"), Var("p"))),
            PatternClause((Var("a"), Ident("stars"), Var("s"))),
            PatternClause((Var("a"), Ident("is_discontinued_by_manufacturer"),
                           Ident("no"))),
        ]
        expected = None
        for permutation in itertools.permutations(clauses):
            result = search(list(permutation), fixture_kb)
            rows = frozenset(
                frozenset(record.items()) for record in result.records())
            if expected is None:
                expected = rows
            assert rows == expected


class TestFilterClause:
    def test_unbound_variable_is_error(self, fixture_kb):
        query = "search(?a.price == ?p, op_filter(?missing > 1))"
        with pytest.raises(UnboundVariableInFilter) as excinfo:
            run_query(fixture_kb, query)
        assert excinfo.value.name == "missing"

    def test_arithmetic_on_text_is_error(self, fixture_kb):
        query = "search(?a.title == ?t, op_filter(?t + 1 > 0))"
        with pytest.raises(FilterTypeError):
            run_query(fixture_kb, query)

    def test_filter_over_empty_stream(self, fixture_kb):
        # the pattern yields nothing, so the filter never evaluates
        result = run_query(fixture_kb,
                           "search((?a, price, 77777.5), op_filter(?b > 1))")
        assert result.frames == []

    def test_equality_across_kinds_is_false(self):
        expr = Compare("==", VarRef(Var("x")), Lit(Ident("no")))
        frame = EMPTY_FRAME.bind(Var("x"), 4.7)
        assert eval_filter_expr(expr, frame) is False
        assert eval_filter_expr(Compare("!=", VarRef(Var("x")), Lit(Ident("no"))),
                                frame) is True


class TestBm25Clause:
    def test_retains_only_stem_overlap(self, fixture_kb):
        result = run_query(fixture_kb,
                           'search(bm25_match(?a.title == ?t, "headphones", 80))')
        names = {record["?a"].name for record in result.records()}
        assert "B000E5C1QE" not in names  # usb cable has no overlap
        assert "B000GHUM4W" in names      # headphone stand stems match
        assert len(names) <= 80

    def test_k_smaller_than_candidates(self, fixture_kb):
        result = run_query(fixture_kb,
                           'search(bm25_match(?a.title == ?t, "headphones", 3))')
        assert len({r["?a"].name for r in result.records()}) == 3

    def test_tie_broken_by_doc_key(self):
        kb = KnowledgeBase()
        for asin in ("Z9", "A1"):
            kb.assert_fact((Ident(asin), Ident("title"), "identical words here"))
        result = run_query(kb, 'search(bm25_match(?a.title == ?t, "identical", 2))')
        assert [r["?a"].name for r in result.records()] == ["A1", "Z9"]

    def test_k_monotone_frame_sets(self, fixture_kb):
        previous = set()
        for k in range(1, 13):
            query = f'search(bm25_match(?a.title == ?t, "lightweight headphones", {k}))'
            records = run_query(fixture_kb, query).records()
            current = {frozenset((key, repr(value)) for key, value in r.items())
                       for r in records}
            assert previous <= current
            previous = current


class TestNeuralMatchClause:
    def test_fallback_matches_reference_ranking(self, fixture_kb):
        query = ('search(?asin.review == ?review, '
                 'neural_match(?review.text == ?review_text, "how is the bass?", 3))')
        result = run_query(fixture_kb, query, gateway=FallbackGateway())
        got = [r["?review"].name for r in result.records()]
        docs = []
        for fact in fixture_kb.facts:
            if fact[1] == Ident("text"):
                docs.append((fact[0].name, fact[2]))
        ranked = sorted(docs, key=lambda d: (-reference_cosine("how is the bass?",
                                                               d[1]), d[0]))
        assert got == [key for key, _ in ranked[:3]]

    def test_k_one_single_candidate_passthrough(self, fixture_kb):
        query = ('search((B000AJIF4E, review, ?review), '
                 'neural_match(?review.text == ?review_text, "bass", 1))')
        result = run_query(fixture_kb, query, gateway=FallbackGateway())
        assert [r["?review"].name for r in result.records()] == \
            ["5e96b0052898fe667cf622888fc5af69"]

    def test_requires_gateway(self, fixture_kb):
        query = ('search(?asin.review == ?review, '
                 'neural_match(?review.text == ?review_text, "bass", 2))')
        with pytest.raises(GatewayUnavailable):
            run_query(fixture_kb, query, gateway=None)

    def test_k_monotone_frame_sets(self, fixture_kb):
        previous: set = set()
        for k in range(1, 8):
            query = ('search(?asin.review == ?review, '
                     f'neural_match(?review.text == ?review_text, "the bass", {k}))')
            records = run_query(fixture_kb, query, gateway=FallbackGateway()).records()
            current = {frozenset((key, repr(value)) for key, value in r.items())
                       for r in records}
            assert previous <= current
            previous = current

    def test_empty_candidates_empty_stream(self, fixture_kb):
        query = ('search((missing_asin, review, ?review), '
                 'neural_match(?review.text == ?review_text, "bass", 2))')
        result = run_query(fixture_kb, query, gateway=FallbackGateway())
        assert result.frames == []


class TestNeuralExtractClause:
    def test_full_query_emits_answer_records(self, fixture_kb):
        result = run_query(fixture_kb, FULL_QUERY, gateway=FallbackGateway())
        records = result.records()
        assert len(records) == 2  # top-2 spans globally
        for record in records:
            answer_text, score, start, end, review_key = (
                record["?answers"][0], record["?answers"][1],
                record["?answers"][2], record["?answers"][3],
                record["?answers"][4])
            review_text = record["?review_text"]
            assert review_text[start:end] == answer_text
            assert score > 0
            assert review_key == record["?review"]

    def test_zero_spans_empty_stream(self, fixture_kb):
        query = ('search(?asin.review == ?review, '
                 'neural_extract(?ans, ?review.text == ?review_text, '
                 '"zzz qqq www", 2))')
        result = run_query(fixture_kb, query, gateway=FallbackGateway())
        assert result.frames == []

    def test_keep_unanswered_flag(self, fixture_kb):
        query = ('search(?asin.review == ?review, '
                 'neural_extract(?ans, ?review.text == ?review_text, '
                 '"zzz qqq www", 2))')
        config = EngineConfig(keep_unanswered=True)
        result = run_query(fixture_kb, query, gateway=FallbackGateway(),
                           config=config)
        assert len(result.frames) == 7  # all review frames pass through unbound
        assert all("?ans" not in record for record in result.records())

    def test_already_bound_answer_var(self, fixture_kb):
        query = ('search(?ans.review == ?review, '
                 'neural_extract(?ans, ?review.text == ?review_text, "bass", 2))')
        with pytest.raises(VariableAlreadyBound):
            run_query(fixture_kb, query, gateway=FallbackGateway())


class TestRules:
    def test_well_ranked_rule_filters(self, fixture_kb):
        engine = Engine(fixture_kb, gateway=FallbackGateway(), rules=RuleStore())
        program = parse_program(WELL_RANKED_RULE + RULE_QUERY)
        results = engine.run_program(program)
        asins = {r["?asin"].name for r in results[0].records()}
        assert asins == {"B000AJIF4E"}

    def test_rule_pattern_direct(self, fixture_kb):
        engine = Engine(fixture_kb, rules=RuleStore())
        engine.run_program(parse_program(WELL_RANKED_RULE))
        result = engine.search(
            parse_program("search(?asin.well_ranked == True)").statements[0].clauses)
        asins = {r["?asin"].name for r in result.records()}
        # both high-review high-star products infer the rule head
        assert asins == {"B000AJIF4E", "B0009F52AC"}

    def test_no_matching_rule_is_empty_contribution(self, fixture_kb):
        engine = Engine(fixture_kb, rules=RuleStore())
        engine.run_program(parse_program(WELL_RANKED_RULE))
        result = engine.search(
            parse_program("search(?x.unrelated_head == True)").statements[0].clauses)
        assert result.frames == []

    def test_body_sees_caller_bindings(self, fixture_kb):
        rules = RuleStore()
        rules.add(Rule(
            head=(Var("x"), Ident("big_number"), Ident("True")),
            body=(FilterClause(Compare(">", VarRef(Var("x")), Lit(5))),)))
        kb = KnowledgeBase()
        kb.assert_fact((Ident("item"), Ident("size"), 10))
        kb.assert_fact((Ident("item2"), Ident("size"), 3))
        engine = Engine(kb, rules=rules)
        query = parse_program(
            "search(?a.size == ?n, (?n, big_number, True))").statements[0].clauses
        result = engine.search(query)
        assert [r["?a"].name for r in result.records()] == ["item"]

    def test_duplicate_rules_kept(self, fixture_kb):
        rules = RuleStore()
        rule = parse_program(WELL_RANKED_RULE).statements[0].rule
        rules.add(rule)
        rules.add(rule)
        assert len(rules) == 2
        engine = Engine(fixture_kb, rules=rules)
        result = engine.search(
            parse_program("search(B000AJIF4E.well_ranked == True)")
            .statements[0].clauses)
        assert len(result.frames) == 2  # one derivation per registration

    def test_empty_body_invalid(self):
        with pytest.raises(InvalidRule):
            RuleStore().add(Rule(head=(Var("x"), Ident("p"), 1), body=()))

    def test_recursive_rule_depth_error_at_query_time(self):
        rules = RuleStore()
        rules.add(Rule(head=(Ident("r"), Var("x")),
                       body=(PatternClause((Ident("r"), Var("x"))),)))
        kb = KnowledgeBase()
        engine = Engine(kb, rules=rules)
        with pytest.raises(RuleDepthExceeded):
            engine.search([PatternClause((Ident("r"), Var("q")))])

    def test_configurable_depth(self):
        rules = RuleStore()
        rules.add(Rule(head=(Ident("r"), Var("x")),
                       body=(PatternClause((Ident("r"), Var("x"))),)))
        engine = Engine(KnowledgeBase(), rules=rules,
                        config=EngineConfig(max_rule_depth=3))
        with pytest.raises(RuleDepthExceeded) as excinfo:
            engine.search([PatternClause((Ident("r"), Var("q")))])
        assert excinfo.value.depth == 3

    def test_depth_limit_spares_fact_only_patterns(self):
        # at the limit, a body pattern satisfied by facts must not raise just
        # because some unrelated rule shares its index bucket
        kb = KnowledgeBase()
        kb.assert_fact((Ident("b"), Ident("base"), 1))
        rules = RuleStore()
        rules.add(Rule(head=(Var("x"), Ident("good"), Ident("True")),
                       body=(PatternClause((Var("x"), Ident("base"), Var("y"))),)))
        rules.add(Rule(head=(Ident("a"), Ident("base"), Var("z")),
                       body=(PatternClause((Ident("a"), Ident("other"), Var("z"))),)))
        engine = Engine(kb, rules=rules, config=EngineConfig(max_rule_depth=1))
        result = engine.search([PatternClause((Ident("b"), Ident("good"),
                                               Ident("True")))])
        assert len(result.frames) == 1

    def test_facts_win_over_rules_in_order(self):
        kb = KnowledgeBase()
        kb.assert_fact((Ident("s"), Ident("flag"), Ident("True")))
        rules = RuleStore()
        rules.add(Rule(head=(Var("x"), Ident("flag"), Ident("True")),
                       body=(PatternClause((Var("x"), Ident("kind"), Ident("s"))),)))
        kb.assert_fact((Ident("t"), Ident("kind"), Ident("s")))
        engine = Engine(kb, rules=rules)
        result = engine.search([PatternClause((Var("x"), Ident("flag"),
                                               Ident("True")))])
        assert [r["?x"].name for r in result.records()] == ["s", "t"]


class TestSoundnessAndCompleteness:
    """Pattern+Filter queries against brute-force assignment enumeration.

    The generator keeps the query well-typed by construction: numeric
    predicates map only to numbers in the KB, and the filter variable is
    bound only through a numeric predicate's value slot before any filter
    references it.
    """

    @staticmethod
    def _random_case(rng: random.Random):
        kb = KnowledgeBase()
        subjects = [Ident(f"s{i}") for i in range(5)]
        numeric_predicates = [Ident("size"), Ident("count")]
        symbol_predicates = [Ident("kind"), Ident("link")]
        symbols = [Ident("v0"), Ident("v1"), Ident("v2")]
        numbers = [1, 2, 3, 5.5, 10]
        for _ in range(rng.randint(1, 200)):
            if rng.random() < 0.5:
                fact = (rng.choice(subjects), rng.choice(numeric_predicates),
                        rng.choice(numbers))
            else:
                fact = (rng.choice(subjects), rng.choice(symbol_predicates),
                        rng.choice(symbols))
            kb.assert_fact(fact)
        subject_vars = [Var("a"), Var("b")]
        numeric_var = Var("n")
        symbol_var = Var("v")
        clauses = []
        oracle_clauses = []
        numeric_bound = False
        for _ in range(rng.randint(1, 4)):
            if numeric_bound and rng.random() < 0.35:
                threshold = rng.choice(numbers)
                clauses.append(FilterClause(
                    Compare(">=", VarRef(numeric_var), Lit(threshold))))
                oracle_clauses.append(("filter", (numeric_var, threshold)))
                continue
            subject = rng.choice(subject_vars + subjects)
            if rng.random() < 0.5:
                predicate = rng.choice(numeric_predicates)
                value = rng.choice([numeric_var, rng.choice(numbers)])
                if value is numeric_var:
                    numeric_bound = True
            else:
                predicate = rng.choice(symbol_predicates)
                value = rng.choice([symbol_var, rng.choice(symbols)])
            pattern = (subject, predicate, value)
            clauses.append(PatternClause(pattern))
            oracle_clauses.append(("pattern", pattern))
        return kb, clauses, oracle_clauses

    def test_matches_brute_force_enumeration(self):
        from neuroquery.terms import term_key
        from neuroquery.unify import substitute

        rng = random.Random(1234)
        for _ in range(50):
            kb, clauses, oracle_clauses = self._random_case(rng)
            result = search(clauses, kb)
            variables = []
            for kind, payload in oracle_clauses:
                if kind == "pattern":
                    for v in payload:
                        if isinstance(v, Var) and v not in variables:
                            variables.append(v)
            got = set()
            for frame in result.frames:
                got.add(frozenset(
                    (v.name, term_key(substitute(v, frame))) for v in variables))

            def eval_oracle_filter(payload, subst):
                var, threshold = payload
                return subst[var] >= threshold

            expected = enumerate_query_results(kb.facts, oracle_clauses,
                                               eval_oracle_filter)
            assert got == expected


class TestSearchValidation:
    def test_empty_clause_list_rejected(self, fixture_kb):
        with pytest.raises(ValueError):
            search([], fixture_kb)
