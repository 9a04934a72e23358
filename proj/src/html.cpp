#include "stayinsight/html.hpp"

#include <algorithm>
#include <array>
#include <functional>

#include "stayinsight/text.hpp"

namespace stayinsight::html {

namespace {

constexpr std::array<std::string_view, 13> kVoidElements = {"area",  "base", "br",   "col",   "embed", "hr",  "img",
                                                            "input", "link", "meta", "source", "track", "wbr"};

constexpr std::array<std::string_view, 33> kBlockElements = {
    "address", "article", "aside", "blockquote", "br",     "dd",  "div", "dl",     "dt",    "fieldset", "figcaption",
    "figure",  "footer",  "form",  "h1",         "h2",     "h3",  "h4",  "h5",     "h6",    "header",   "hr",
    "li",      "main",    "nav",   "ol",         "p",      "pre", "section", "table", "td", "th", "ul"};

// Opening any of these closes an open <p>.
constexpr std::array<std::string_view, 24> kClosesParagraph = {
    "address", "article", "aside", "blockquote", "div", "dl", "fieldset", "footer", "form", "h1", "h2", "h3",
    "h4",      "h5",      "h6",    "header",     "hr",  "main", "nav",    "ol",     "p",    "pre", "section", "ul"};

template <std::size_t N>
bool in(const std::array<std::string_view, N>& set, std::string_view tag) {
  return std::find(set.begin(), set.end(), tag) != set.end();
}

bool is_name_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

struct NamedEntity {
  std::string_view name;
  std::string_view utf8;
};

constexpr NamedEntity kEntities[] = {
    {"amp", "&"},         {"lt", "<"},          {"gt", ">"},          {"quot", "\""},       {"apos", "'"},
    {"nbsp", "\xC2\xA0"}, {"hellip", "…"},      {"mdash", "—"},       {"ndash", "–"},       {"rsquo", "’"},
    {"lsquo", "‘"},       {"ldquo", "“"},       {"rdquo", "”"},       {"euro", "€"},        {"middot", "·"},
    {"copy", "©"},        {"times", "×"},       {"minus", "−"},       {"bull", "•"},        {"laquo", "«"},
    {"raquo", "»"},       {"eacute", "é"},      {"egrave", "è"},      {"agrave", "à"},      {"uuml", "ü"},
    {"ouml", "ö"},        {"auml", "ä"},        {"ccedil", "ç"},      {"deg", "°"},         {"pound", "£"},
};

void append_utf8(std::string& out, char32_t cp) {
  if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

}  // namespace

std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '&') {
      out += s[i++];
      continue;
    }
    const auto semi = s.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 12) {
      out += s[i++];
      continue;
    }
    const std::string_view ref = s.substr(i + 1, semi - i - 1);
    bool decoded = false;
    if (ref.size() >= 2 && ref[0] == '#') {
      const bool hex = ref[1] == 'x' || ref[1] == 'X';
      const std::string_view digits = ref.substr(hex ? 2 : 1);
      char32_t cp = 0;
      bool ok = !digits.empty();
      for (char c : digits) {
        int v = -1;
        if (c >= '0' && c <= '9') v = c - '0';
        else if (hex && c >= 'a' && c <= 'f') v = c - 'a' + 10;
        else if (hex && c >= 'A' && c <= 'F') v = c - 'A' + 10;
        if (v < 0 || cp > 0x10FFFF) {
          ok = false;
          break;
        }
        cp = cp * (hex ? 16 : 10) + static_cast<char32_t>(v);
      }
      if (ok) {
        append_utf8(out, cp);
        decoded = true;
      }
    } else {
      for (const auto& e : kEntities) {
        if (e.name == ref) {
          out += e.utf8;
          decoded = true;
          break;
        }
      }
    }
    if (decoded) {
      i = semi + 1;
    } else {
      out += s[i++];
    }
  }
  return out;
}

std::optional<std::string_view> Node::attr(std::string_view name) const {
  for (const auto& [k, v] : attributes_) {
    if (k == name) return std::string_view(v);
  }
  return std::nullopt;
}

bool Node::has_class(std::string_view cls) const {
  const auto classes = attr("class");
  if (!classes) return false;
  std::string_view rest = *classes;
  while (!rest.empty()) {
    while (!rest.empty() && is_space(rest.front())) rest.remove_prefix(1);
    auto end = std::find_if(rest.begin(), rest.end(), is_space);
    const std::string_view word(rest.data(), static_cast<std::size_t>(end - rest.begin()));
    if (word == cls) return true;
    rest.remove_prefix(word.size());
  }
  return false;
}

std::string Node::text_content() const {
  std::string raw;
  std::function<void(const Node&)> walk = [&](const Node& n) {
    if (n.kind_ == Kind::Text) {
      raw += n.data_;
      return;
    }
    if (n.kind_ == Kind::Element && (n.tag_ == "script" || n.tag_ == "style")) return;
    const bool block = n.kind_ == Kind::Element && in(kBlockElements, n.tag_);
    if (block) raw += ' ';
    for (const auto& c : n.children_) walk(*c);
    if (block) raw += ' ';
  };
  walk(*this);
  std::string folded;
  folded.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == '\xC2' && i + 1 < raw.size() && raw[i + 1] == '\xA0') {
      folded += ' ';
      ++i;
    } else {
      folded += raw[i];
    }
  }
  return text::collapse_whitespace(folded);
}

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  std::unique_ptr<Node> run() {
    auto root = std::make_unique<Node>();
    root->kind_ = Node::Kind::Document;
    stack_.push_back(root.get());
    while (pos_ < src_.size()) {
      if (src_[pos_] == '<') {
        if (starts("<!--")) {
          const auto end = src_.find("-->", pos_ + 4);
          pos_ = end == std::string_view::npos ? src_.size() : end + 3;
        } else if (starts("<!") || starts("<?")) {
          const auto end = src_.find('>', pos_);
          pos_ = end == std::string_view::npos ? src_.size() : end + 1;
        } else if (starts("</") && pos_ + 2 < src_.size() && is_name_start(src_[pos_ + 2])) {
          end_tag();
        } else if (pos_ + 1 < src_.size() && is_name_start(src_[pos_ + 1])) {
          start_tag();
        } else {
          add_text("<");
          ++pos_;
        }
      } else {
        const auto next = src_.find('<', pos_);
        const auto end = next == std::string_view::npos ? src_.size() : next;
        add_text(decode_entities(src_.substr(pos_, end - pos_)));
        pos_ = end;
      }
    }
    return root;
  }

 private:
  bool starts(std::string_view prefix) const { return src_.substr(pos_, prefix.size()) == prefix; }

  Node* current() const { return stack_.back(); }

  void add_text(std::string data) {
    if (data.empty()) return;
    Node* parent = current();
    if (!parent->children_.empty() && parent->children_.back()->kind_ == Node::Kind::Text) {
      parent->children_.back()->data_ += data;
      return;
    }
    auto node = std::make_unique<Node>();
    node->kind_ = Node::Kind::Text;
    node->data_ = std::move(data);
    node->parent_ = parent;
    parent->children_.push_back(std::move(node));
  }

  std::string read_name() {
    std::string name;
    while (pos_ < src_.size() && !is_space(src_[pos_]) && src_[pos_] != '>' && src_[pos_] != '/' &&
           src_[pos_] != '=') {
      name += src_[pos_++];
    }
    return text::to_lower_ascii(name);
  }

  void skip_space() {
    while (pos_ < src_.size() && is_space(src_[pos_])) ++pos_;
  }

  // Pops to and including the innermost open `tag`, unless a `boundary` tag
  // is met first.
  void close_implied(std::initializer_list<std::string_view> tags, std::initializer_list<std::string_view> boundary) {
    for (std::size_t i = stack_.size(); i-- > 1;) {
      const std::string& t = stack_[i]->tag_;
      if (std::find(boundary.begin(), boundary.end(), t) != boundary.end()) return;
      if (std::find(tags.begin(), tags.end(), t) != tags.end()) {
        stack_.resize(i);
        return;
      }
    }
  }

  void apply_implied_end_tags(std::string_view tag) {
    if (in(kClosesParagraph, tag) && current()->tag_ == "p") stack_.pop_back();
    if (tag == "li") close_implied({"li"}, {"ul", "ol", "menu"});
    if (tag == "dt" || tag == "dd") close_implied({"dt", "dd"}, {"dl"});
    if (tag == "tr") close_implied({"tr"}, {"table", "tbody", "thead", "tfoot"});
    if (tag == "td" || tag == "th") close_implied({"td", "th"}, {"tr", "table"});
    if (tag == "option" && current()->tag_ == "option") stack_.pop_back();
  }

  void start_tag() {
    ++pos_;  // '<'
    auto node = std::make_unique<Node>();
    node->kind_ = Node::Kind::Element;
    node->tag_ = read_name();
    bool self_closing = false;
    while (pos_ < src_.size()) {
      skip_space();
      if (pos_ >= src_.size()) break;
      if (src_[pos_] == '>') {
        ++pos_;
        break;
      }
      if (src_[pos_] == '/') {
        self_closing = true;
        ++pos_;
        continue;
      }
      std::string name = read_name();
      if (name.empty()) {
        ++pos_;  // stray '='
        continue;
      }
      skip_space();
      std::string value;
      if (pos_ < src_.size() && src_[pos_] == '=') {
        ++pos_;
        skip_space();
        if (pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\'')) {
          const char quote = src_[pos_++];
          const auto end = src_.find(quote, pos_);
          const auto stop = end == std::string_view::npos ? src_.size() : end;
          value = decode_entities(src_.substr(pos_, stop - pos_));
          pos_ = end == std::string_view::npos ? src_.size() : end + 1;
        } else {
          const auto start = pos_;
          while (pos_ < src_.size() && !is_space(src_[pos_]) && src_[pos_] != '>') ++pos_;
          value = decode_entities(src_.substr(start, pos_ - start));
        }
      }
      if (!node->attr(name)) node->attributes_.emplace_back(std::move(name), std::move(value));
    }

    const std::string tag = node->tag_;
    apply_implied_end_tags(tag);
    node->parent_ = current();
    Node* raw = node.get();
    current()->children_.push_back(std::move(node));

    if (in(kVoidElements, tag) || self_closing) return;
    if (tag == "script" || tag == "style" || tag == "textarea" || tag == "title") {
      const std::string close = "</" + tag;
      std::size_t end = pos_;
      while (true) {
        end = src_.find("</", end);
        if (end == std::string_view::npos || text::starts_with_ci(src_.substr(end), close)) break;
        end += 2;
      }
      const auto stop = end == std::string_view::npos ? src_.size() : end;
      std::string body(src_.substr(pos_, stop - pos_));
      if (tag == "textarea" || tag == "title") body = decode_entities(body);
      if (!body.empty()) {
        auto txt = std::make_unique<Node>();
        txt->kind_ = Node::Kind::Text;
        txt->data_ = std::move(body);
        txt->parent_ = raw;
        raw->children_.push_back(std::move(txt));
      }
      if (stop == src_.size()) {
        pos_ = stop;
      } else {
        const auto gt = src_.find('>', stop);
        pos_ = gt == std::string_view::npos ? src_.size() : gt + 1;
      }
      return;
    }
    stack_.push_back(raw);
  }

  void end_tag() {
    pos_ += 2;
    const std::string name = read_name();
    const auto gt = src_.find('>', pos_);
    pos_ = gt == std::string_view::npos ? src_.size() : gt + 1;
    for (std::size_t i = stack_.size(); i-- > 1;) {
      if (stack_[i]->tag_ == name) {
        stack_.resize(i);
        return;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::vector<Node*> stack_;
};

Document Document::parse(std::string_view source) {
  Document doc;
  doc.root_ = Parser(source).run();
  return doc;
}

// ---- selectors -------------------------------------------------------------

namespace {

struct AttrTest {
  std::string name;
  char op = 0;  // 0: presence, '=', '^', '*', '$', '~'
  std::string value;
};

struct Compound {
  std::string tag;  // empty or "*": any
  std::vector<std::string> classes;
  std::vector<AttrTest> attrs;
};

struct Complex {
  std::vector<Compound> parts;
  std::vector<char> combinators;  // combinators[i] joins parts[i] and parts[i+1]
};

bool is_ident_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
}

class SelectorParser {
 public:
  explicit SelectorParser(std::string_view s) : s_(s) {}

  std::vector<Complex> parse() {
    std::vector<Complex> groups;
    Complex current;
    char pending = 0;
    while (true) {
      skip_space();
      if (i_ >= s_.size() || s_[i_] == ',') {
        if (!current.parts.empty()) groups.push_back(std::move(current));
        current = Complex{};
        pending = 0;
        if (i_ >= s_.size()) break;
        ++i_;
        continue;
      }
      if (s_[i_] == '>') {
        pending = '>';
        ++i_;
        continue;
      }
      if (!current.parts.empty()) current.combinators.push_back(pending != 0 ? pending : ' ');
      pending = 0;
      current.parts.push_back(compound());
    }
    return groups;
  }

 private:
  bool skip_space() {
    bool any = false;
    while (i_ < s_.size() && is_space(s_[i_])) {
      ++i_;
      any = true;
    }
    return any;
  }

  std::string ident() {
    std::string out;
    while (i_ < s_.size() && is_ident_char(s_[i_])) out += s_[i_++];
    return out;
  }

  Compound compound() {
    Compound c;
    if (i_ < s_.size() && s_[i_] == '*') {
      ++i_;
    } else {
      c.tag = text::to_lower_ascii(ident());
    }
    while (i_ < s_.size()) {
      const char ch = s_[i_];
      if (ch == '.') {
        ++i_;
        c.classes.push_back(ident());
      } else if (ch == '#') {
        ++i_;
        c.attrs.push_back({"id", '=', ident()});
      } else if (ch == '[') {
        ++i_;
        AttrTest t;
        t.name = text::to_lower_ascii(ident());
        if (i_ < s_.size() && s_[i_] != ']') {
          if (s_[i_] == '=') {
            t.op = '=';
            ++i_;
          } else {
            t.op = s_[i_];
            i_ += 2;  // "^=", "*=", "$=", "~="
          }
          if (i_ < s_.size() && (s_[i_] == '"' || s_[i_] == '\'')) {
            const char q = s_[i_++];
            const auto end = s_.find(q, i_);
            t.value = std::string(s_.substr(i_, end - i_));
            i_ = end == std::string_view::npos ? s_.size() : end + 1;
          } else {
            while (i_ < s_.size() && s_[i_] != ']') t.value += s_[i_++];
          }
        }
        if (i_ < s_.size() && s_[i_] == ']') ++i_;
        c.attrs.push_back(std::move(t));
      } else {
        break;
      }
    }
    return c;
  }

  std::string_view s_;
  std::size_t i_ = 0;
};

bool matches_compound(const Node& n, const Compound& c) {
  if (!n.is_element()) return false;
  if (!c.tag.empty() && n.tag() != c.tag) return false;
  for (const auto& cls : c.classes) {
    if (!n.has_class(cls)) return false;
  }
  for (const auto& t : c.attrs) {
    const auto v = n.attr(t.name);
    if (!v) return false;
    switch (t.op) {
      case 0: break;
      case '=':
        if (*v != t.value) return false;
        break;
      case '^':
        if (!v->starts_with(t.value)) return false;
        break;
      case '$':
        if (!v->ends_with(t.value)) return false;
        break;
      case '*':
        if (v->find(t.value) == std::string_view::npos) return false;
        break;
      case '~': {
        bool found = false;
        std::string_view rest = *v;
        while (!rest.empty() && !found) {
          while (!rest.empty() && is_space(rest.front())) rest.remove_prefix(1);
          auto end = std::find_if(rest.begin(), rest.end(), is_space);
          const std::string_view word(rest.data(), static_cast<std::size_t>(end - rest.begin()));
          found = word == t.value && !word.empty();
          rest.remove_prefix(word.size());
        }
        if (!found) return false;
        break;
      }
      default: return false;
    }
  }
  return true;
}

bool matches_from(const Node& n, const Complex& sel, std::size_t idx) {
  if (!matches_compound(n, sel.parts[idx])) return false;
  if (idx == 0) return true;
  const char comb = sel.combinators[idx - 1];
  if (comb == '>') {
    const Node* p = n.parent();
    return p != nullptr && matches_from(*p, sel, idx - 1);
  }
  for (const Node* p = n.parent(); p != nullptr; p = p->parent()) {
    if (matches_from(*p, sel, idx - 1)) return true;
  }
  return false;
}

void collect(const Node& n, const std::vector<Complex>& groups, std::vector<const Node*>& out, bool first_only) {
  for (const auto& child : n.children()) {
    if (first_only && !out.empty()) return;
    if (child->is_element()) {
      for (const auto& g : groups) {
        if (matches_from(*child, g, g.parts.size() - 1)) {
          out.push_back(child.get());
          break;
        }
      }
    }
    collect(*child, groups, out, first_only);
  }
}

}  // namespace

std::vector<const Node*> select(const Node& scope, std::string_view selector) {
  const auto groups = SelectorParser(selector).parse();
  std::vector<const Node*> out;
  if (!groups.empty()) collect(scope, groups, out, false);
  return out;
}

const Node* select_first(const Node& scope, std::string_view selector) {
  const auto groups = SelectorParser(selector).parse();
  std::vector<const Node*> out;
  if (!groups.empty()) collect(scope, groups, out, true);
  return out.empty() ? nullptr : out.front();
}

}  // namespace stayinsight::html
