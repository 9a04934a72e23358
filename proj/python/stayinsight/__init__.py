from ._core import (
    Service,
    StayInsightError,
    bench_report,
    estimate_cost,
    estimate_tokens,
    listing_id,
    models,
    parse_reviews_page,
    rank_reviews,
    select_reviews,
)

__all__ = [
    "Service",
    "StayInsightError",
    "bench_report",
    "estimate_cost",
    "estimate_tokens",
    "listing_id",
    "models",
    "parse_reviews_page",
    "rank_reviews",
    "select_reviews",
]
