from neuroquery.terms import (Ident, Var, is_ground, parse_value, term_key,
                              term_to_json, text_of, variables_in)


class TestParseValue:
    def test_integer_precedence(self):
        assert parse_value("6303157") == 6303157
        assert isinstance(parse_value("6303157"), int)

    def test_float(self):
        assert parse_value("4.7") == 4.7
        assert isinstance(parse_value("4.7"), float)

    def test_identifier(self):
        assert parse_value("no") == Ident("no")
        assert parse_value("B00001P4ZH") == Ident("B00001P4ZH")

    def test_text_with_spaces(self):
        value = parse_value("koss portapro headphones with case")
        assert value == "koss portapro headphones with case"
        assert isinstance(value, str)

    def test_negative_numbers(self):
        assert parse_value("-3") == -3
        assert parse_value("-3.5") == -3.5


class TestKinds:
    def test_numeric_tower(self):
        assert 14549 == 14549.0
        assert term_key(14549) == term_key(14549.0)

    def test_ident_is_not_text(self):
        assert Ident("no") != "no"
        assert term_key(Ident("no")) != term_key("no")

    def test_ident_equality_exact(self):
        assert Ident("abc") == Ident("abc")
        assert Ident("abc") != Ident("ABC")


class TestStructure:
    def test_ground(self):
        assert is_ground((Ident("a"), 1, ("x", 2.0)))
        assert not is_ground((Ident("a"), Var("v")))
        assert not is_ground((Ident("a"), (1, (Var("deep"),))))

    def test_variables_in_order(self):
        term = (Var("a"), (Var("b"), Var("a")), Var("c"))
        assert [v.name for v in variables_in(term)] == ["a", "b", "a", "c"]

    def test_term_key_total_order(self):
        terms = ["zz", Ident("zz"), 3, 2.5, (Ident("a"), 1), (Ident("a"),)]
        ordered = sorted(terms, key=term_key)
        assert ordered[0] == 2.5 and ordered[1] == 3

    def test_to_json(self):
        assert term_to_json(Ident("B1")) == "B1"
        assert term_to_json((Ident("a"), 1, "t")) == ["a", 1, "t"]
        assert term_to_json(Var("x")) == "?x"

    def test_text_of(self):
        assert text_of(Ident("r1")) == "r1"
        assert text_of("some text") == "some text"
        assert text_of(4.5) == "4.5"
