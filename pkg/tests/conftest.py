from pathlib import Path

import pytest

from neuroquery.kb import KnowledgeBase

FIXTURES = Path(__file__).parent / "fixtures"

# The walk-through queries, in the textual surface syntax. The host-language
# originals use _name variables and lambda filters; here variables are ?name
# and filters are plain expressions.

PRICE_QUERY = """
search(
    bm25_match(?asin.title == ?title, "headphones", 80),
    ?asin.price == ?price,
    op_filter(abs(?price - 30) < 10),
)
"""

REFINED_QUERY = """
search(
    bm25_match(?asin.title == ?title, "headphones", 80),
    ?asin.price == ?price,
    op_filter(abs(?price - 30) < 10),
    ?asin.total_reviews == ?total_reviews,
    op_filter(?total_reviews >= 14000),
    ?asin.is_discontinued_by_manufacturer == "no",
)
"""

FULL_QUERY = """
search(
    bm25_match(?asin.title == ?title, "headphones", 80),
    ?asin.price == ?price,
    op_filter(abs(?price - 30) < 10),
    ?asin.total_reviews == ?total_reviews,
    op_filter(?total_reviews >= 14000),
    ?asin.is_discontinued_by_manufacturer == "no",
    ?asin.review == ?review,
    neural_match(?review.text == ?review_text, "how is the bass?", 5),
    neural_extract(?answers, ?review.text == ?review_text, "how is the bass?", 2)
)
"""

WELL_RANKED_RULE = """
rule(?asin.well_ranked == True,
    ?asin.total_reviews == ?total_reviews,
    op_filter(?total_reviews >= 20000),
    ?asin.stars == ?stars,
    op_filter(?stars >= 4.0)
)
"""

RULE_QUERY = """
search(
    bm25_match(?asin.title == ?title, "headphones", 80),
    ?asin.price == ?price,
    op_filter(abs(?price - 30) < 10),
    ?asin.well_ranked == True,
    ?asin.is_discontinued_by_manufacturer == "no",
    ?asin.review == ?review,
    neural_match(?review.text == ?review_text, "how is the bass?", 5),
    neural_extract(?answers, ?review.text == ?review_text, "how is the bass?", 2)
)
"""


@pytest.fixture(scope="session")
def fixture_dir() -> Path:
    return FIXTURES


@pytest.fixture
def fixture_kb(fixture_dir) -> KnowledgeBase:
    kb = KnowledgeBase()
    kb.load_csv(fixture_dir / "asin_key_properties.csv", "properties")
    kb.load_csv(fixture_dir / "asin_reviews.csv", "reviews")
    return kb
