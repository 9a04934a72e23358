#include <gtest/gtest.h>

#include "stayinsight/html.hpp"

using namespace stayinsight;

TEST(Html, SelectsByClassAndDescendant) {
  const auto doc = html::Document::parse(
      R"(<div class="a b"><p class="x">one<p class="x y">two</div><span class=x>three</span>)");
  EXPECT_EQ(html::select(doc.root(), ".x").size(), 3u);
  EXPECT_EQ(html::select(doc.root(), "div .x").size(), 2u);
  EXPECT_EQ(html::select(doc.root(), "p.x.y").size(), 1u);
  EXPECT_EQ(html::select(doc.root(), "div > p").size(), 2u);
  EXPECT_EQ(html::select_first(doc.root(), "span")->text_content(), "three");
}

TEST(Html, DecodesEntitiesAndCollapsesWhitespace) {
  const auto doc = html::Document::parse("<p>Tom&amp;Jerry&nbsp;&#8217;s   &lt;b&gt;\n place&#x21;</p>");
  EXPECT_EQ(html::select_first(doc.root(), "p")->text_content(), "Tom&Jerry ’s <b> place!");
}

TEST(Html, ScriptIsRawText) {
  const auto doc = html::Document::parse(R"(<script>var s = "<li class='x'>";</script><li class="x">real</li>)");
  const auto hits = html::select(doc.root(), "li.x");
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0]->text_content(), "real");
}

TEST(Html, AttributesAndSelectors) {
  const auto doc = html::Document::parse(R"(<A HREF='/x?page=2' class=pagenext data-k=v>n</A><img src="f.png">)");
  const auto* a = html::select_first(doc.root(), "a[href^='/x']");
  ASSERT_NE(a, nullptr);
  EXPECT_EQ(a->attr("href").value(), "/x?page=2");
  EXPECT_NE(html::select_first(doc.root(), "[data-k=v]"), nullptr);
  EXPECT_NE(html::select_first(doc.root(), "img[src$='.png']"), nullptr);
  EXPECT_EQ(html::select_first(doc.root(), "table"), nullptr);
}
