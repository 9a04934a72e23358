#!/usr/bin/env python3
"""Regenerates the synthetic 200-review listing under fixtures/listings/.

Output is deterministic (fixed seed). The hand-written listing and the
fixtures/pages/ edge cases are not touched.

    python3 tools/make_fixtures.py [--root fixtures/listings]
"""
import argparse
import datetime as dt
import hashlib
import html
import json
import pathlib
import random

URL = "https://www.booking.com/hotel/gr/aegean-breeze-suites.html"
NAME = "Aegean Breeze Suites"
FETCHED_AT = "2024-11-01T00:00:00Z"
N_REVIEWS = 200
PER_PAGE = 25

POSITIVE = [
    "The location is perfect, two minutes from the beach.",
    "Staff were friendly and helpful.",
    "Breakfast was generous with fresh fruit and local cheese.",
    "Spotless room with a comfortable bed.",
    "Great view of the sea from the balcony.",
    "The pool area was quiet and clean.",
    "Wifi was fast enough for video calls.",
    "Easy check-in, the host met us at the door.",
    "Good value for the price.",
    "The kitchen had everything we needed.",
    "Air conditioning worked well during the heatwave.",
    "Lovely garden with lemon trees.",
    "Close to tavernas and the old harbour.",
    "Maria at reception gave us great tips for day trips.",
    "Quiet at night & very relaxing.",
]
NEGATIVE = [
    "The shower pressure was weak.",
    "Street noise at night until late.",
    "Wifi dropped in the evenings.",
    "The stairs are steep with luggage.",
    "Breakfast started too late for early departures.",
    "Towels were changed only twice.",
    "The room was smaller than in the photos.",
    "Air conditioning was noisy.",
    "No elevator to the third floor.",
    "Mosquitoes in the evening, bring repellent.",
    "Coffee machine in the room did not work.",
]
TITLES = [
    "Wonderful stay", "Great location", "Good value", "Exceptional", "Nice but noisy",
    "Very comfortable", "Would come back", "Decent", "Disappointing breakfast",
    "Perfect for a couple's getaway", None, None,
]
REPLIES = [
    "Thank you for your kind words, we hope to welcome you again!",
    "Thank you for the feedback, we have fixed the shower since your visit.",
    "We are sorry about the noise and have added new windows this season.",
]
NAMES = [
    "Anna", "Dimitris", "Sophie", "Lukas", "Giulia", "Tom", "Eva", "Marek", "Ingrid", "Carlos",
    "Nikos", "Chloe", "Jan", "Elena", "Oliver", "Katarzyna", "Pieter", "Ahmed", "Yuki", "Sara",
]
COUNTRIES = ["gr", "de", "fr", "it", "gb", "us", "nl", "es", "se", "pl", "cy", "at"]
TYPES = [
    ("Couple", "couple"), ("Solo traveller", "solo"), ("Family", "family"),
    ("Group", "group"), ("Business traveller", "business"),
]
SCORES = [4.0, 5.0, 6.0, 6.5, 7.0, 7.5, 8.0, 8.0, 8.5, 9.0, 9.0, 9.5, 10.0, 10.0]

# Exactly these three reviews mention parking (index -> (side, sentence)).
PARKING = {
    17: ("positive", "Free parking right next to the entrance was a big plus."),
    88: ("negative", "Parking is hard to find in the evening, we circled for twenty minutes."),
    151: ("positive", "The private parking is free for guests and easy to reach."),
}


def listing_id(url):
    return hashlib.sha256(url.encode()).hexdigest()[:16]


def sentences(rng, pool, lo, hi):
    return " ".join(rng.sample(pool, rng.randint(lo, hi)))


def make_reviews(lid):
    rng = random.Random(20241101)
    day = dt.date(2024, 10, 28)
    out = []
    for i in range(N_REVIEWS):
        if i:
            day -= dt.timedelta(days=rng.choice([0, 1, 2, 2, 3, 4]))
        positive = sentences(rng, POSITIVE, 1, 3) if rng.random() < 0.92 else None
        negative = sentences(rng, NEGATIVE, 1, 2) if rng.random() < 0.7 else None
        if i in PARKING:
            side, sentence = PARKING[i]
            if side == "positive":
                positive = sentence if positive is None else positive + " " + sentence
            else:
                negative = sentence if negative is None else sentence + " " + negative
        type_label, type_code = rng.choice(TYPES)
        nights = rng.randint(1, 7)
        check_out = day - dt.timedelta(days=rng.randint(1, 20))
        check_in = check_out - dt.timedelta(days=nights)
        likes = rng.choice([0, 0, 0, 1, 2, 5])
        photos = []
        if rng.random() < 0.1:
            photos = ["https://cf.bstatic.com/xdata/images/review/%d.jpg" % rng.randint(10**7, 10**8 - 1)
                      for _ in range(rng.randint(1, 2))]
        out.append({
            "review_id": "%016x" % rng.getrandbits(64),
            "listing_id": lid,
            "published_at": day.isoformat(),
            "score": rng.choice(SCORES),
            "title": rng.choice(TITLES),
            "positive_text": positive,
            "negative_text": negative,
            "manager_reply": rng.choice(REPLIES) if rng.random() < 0.2 else None,
            "reviewer": {
                "username": rng.choice(NAMES),
                "country": rng.choice(COUNTRIES).upper(),
                "reviewer_type": type_code,
                "_label": type_label,
            },
            "stay": {"nights": nights, "check_in": check_in.isoformat(), "check_out": check_out.isoformat()},
            "likes": likes,
            "photo_urls": photos,
            "language_hint": "en",
        })
    # default order: newest first, then review_id ascending
    out.sort(key=lambda r: r["review_id"])
    out.sort(key=lambda r: r["published_at"], reverse=True)
    return out


def native(r, with_stay=True):
    rec = {k: v for k, v in r.items() if v is not None and k not in ("stay", "reviewer")}
    rec["reviewer"] = {k: v for k, v in r["reviewer"].items() if not k.startswith("_")}
    if with_stay:
        rec["stay"] = r["stay"]
    order = ["review_id", "listing_id", "published_at", "score", "title", "positive_text", "negative_text",
             "manager_reply", "reviewer", "stay", "likes", "photo_urls", "language_hint"]
    return {k: rec[k] for k in order if k in rec}


def arel(r):
    rec = {
        "reviewId": r["review_id"],
        "reviewDate": r["published_at"] + "T09:30:00.000Z",
        "rating": r["score"],
        "reviewTitle": r["title"],
        "likedText": r["positive_text"],
        "dislikedText": r["negative_text"],
        "propertyResponse": r["manager_reply"],
    }
    return rec


def caprolok(r):
    return {
        "review_id": r["review_id"],
        "hotel_id": 8812345,
        "reviewer": {
            "username": r["reviewer"]["username"],
            "country": r["reviewer"]["country"],
            "type": r["reviewer"]["_label"],
            "language": r["language_hint"],
        },
        "booking": {"nights": r["stay"]["nights"], "checkin": r["stay"]["check_in"],
                    "checkout": r["stay"]["check_out"]},
        "review": {
            "published": r["published_at"],
            "score": r["score"],
            "title": r["title"],
            "positive": r["positive_text"],
            "negative": r["negative_text"],
            "hotel_reply": r["manager_reply"],
            "likes": r["likes"],
            "photos": r["photo_urls"],
        },
    }


def badge(score):
    return "10" if score == 10.0 else "%.1f" % score


def long_date(iso):
    d = dt.date.fromisoformat(iso)
    return "%d %s %d" % (d.day, d.strftime("%B"), d.year)


def block_html(r):
    e = html.escape
    rv = r["reviewer"]
    lines = [
        '<li class="review_list_new_item_block" data-review-url="%s" lang="%s">' % (r["review_id"], r["language_hint"]),
        ' <div class="c-review-block">',
        '  <div class="c-review-block__left">',
        '   <div class="c-review-block__guest"><div class="bui-avatar-block">',
        '    <div class="bui-avatar-block__text"><span class="bui-avatar-block__title">%s</span>' % e(rv["username"]),
        '    <span class="bui-avatar-block__subtitle"><span class="bui-flag">'
        '<img class="bui-flag__flag" src="https://cf.bstatic.com/static/img/flags/24/%s.png" alt=""></span></span>'
        % rv["country"].lower(),
        '    </div></div></div>',
        '   <ul class="bui-list review-panel-wide__traveller_type"><li class="bui-list__item">'
        '<div class="bui-list__body">%s</div></li></ul>' % e(rv["_label"]),
        '  </div>',
        '  <div class="c-review-block__right">',
        '   <div class="bui-review-score c-score"><div class="bui-review-score__badge" aria-label="Scored %s">%s</div></div>'
        % (badge(r["score"]), badge(r["score"])),
        '   <span class="c-review-block__date">Reviewed: %s</span>' % long_date(r["published_at"]),
    ]
    if r["title"]:
        lines.append('   <h3 class="c-review-block__title c-review__title--ltr">%s</h3>' % e(r["title"]))
    lines.append('   <div class="c-review">')
    if r["positive_text"]:
        lines.append('    <div class="c-review__row"><p class="c-review__inner">'
                     '<span class="c-review__prefix c-review__prefix--color-green">Liked</span>'
                     '<span class="c-review__body">%s</span></p></div>' % e(r["positive_text"]))
    if r["negative_text"]:
        lines.append('    <div class="c-review__row lalala"><p class="c-review__inner">'
                     '<span class="c-review__prefix">Disliked</span>'
                     '<span class="c-review__body">%s</span></p></div>' % e(r["negative_text"]))
    lines.append('   </div>')
    if r["photo_urls"]:
        lines.append('   <ul class="c-review-block__photos">' +
                     "".join('<li><img src="%s" alt="guest photo"></li>' % u for u in r["photo_urls"]) + "</ul>")
    if r["manager_reply"]:
        lines.append('   <div class="c-review-block__response"><span class="c-review-block__response__title">'
                     'Property response:</span><span class="c-review-block__response__body">%s</span></div>'
                     % e(r["manager_reply"]))
    if r["likes"]:
        who = "1 person found" if r["likes"] == 1 else "%d people found" % r["likes"]
        lines.append('   <p class="review-helpful__vote-others-helpful">%s this review helpful.</p>' % who)
    lines += ['  </div>', ' </div>', '</li>']
    return "\n".join(lines)


def page_html(reviews, page, pages, path):
    parts = [
        "<!DOCTYPE html>",
        '<html lang="en-gb"><head><meta charset="utf-8"><title>Guest reviews for %s</title></head>' % NAME,
        '<body><div id="review_list_page_container">',
        '<div class="review_list_score_container"><span class="review-score-widget__text">Very good</span></div>',
        '<ul class="review_list">',
    ]
    parts += [block_html(r) for r in reviews]
    parts.append("</ul>")
    parts.append('<div class="bui-pagination"><p class="page_showing">Page %d of %d</p>' % (page, pages))
    if page > 1:
        parts.append('<a class="pageprev" href="%s?page=%d">Previous page</a>' % (path, page - 1))
    if page < pages:
        parts.append('<a class="pagenext" href="%s?page=%d">Next page</a>' % (path, page + 1))
    parts += ["</div>", "</div></body></html>", ""]
    return "\n".join(parts)


def dump(path, obj):
    path.write_text(json.dumps(obj, indent=1, ensure_ascii=False) + "\n", encoding="utf-8")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--root", default=str(pathlib.Path(__file__).resolve().parent.parent / "fixtures" / "listings"))
    args = ap.parse_args()

    lid = listing_id(URL)
    base = pathlib.Path(args.root) / lid
    (base / "pages").mkdir(parents=True, exist_ok=True)
    (base / "golden").mkdir(parents=True, exist_ok=True)
    reviews = make_reviews(lid)

    path = "https://www.booking.com/reviews/gr/hotel/aegean-breeze-suites.html"
    pages = (len(reviews) + PER_PAGE - 1) // PER_PAGE
    for p in range(1, pages + 1):
        chunk = reviews[(p - 1) * PER_PAGE:p * PER_PAGE]
        (base / "pages" / ("page-%d.html" % p)).write_text(page_html(chunk, p, pages, path), encoding="utf-8")
        dump(base / "golden" / ("page-%d.json" % p), [native(r, with_stay=False) for r in chunk])

    dump(base / "arel.json", [arel(r) for r in reviews])
    dump(base / "caprolok.json", [caprolok(r) for r in reviews])
    header = {"listing": {"url": URL, "listing_id": lid, "platform": "booking", "name": NAME},
              "fetched_at": FETCHED_AT, "source": "fixture"}
    with open(base / "corpus.jsonl", "w", encoding="utf-8") as f:
        f.write(json.dumps(header, ensure_ascii=False) + "\n")
        for r in reviews:
            f.write(json.dumps(native(r), ensure_ascii=False) + "\n")
    dump(base / "listing.json", {"url": URL, "listing_id": lid, "name": NAME, "reviews": len(reviews),
                                 "parking_mentions": sorted(r["review_id"] for r in reviews
                                                            if "parking" in (r["positive_text"] or "").lower()
                                                            or "parking" in (r["negative_text"] or "").lower())})
    print(base)


if __name__ == "__main__":
    main()
