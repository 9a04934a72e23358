#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace stayinsight::html {

/// Minimal tolerant HTML DOM. Good enough for recorded listing pages: it
/// handles comments, doctype, void elements, raw-text script/style, quoted
/// and unquoted attributes, character references and the common implicit
/// end tags (p, li, td, tr, option...). Unmatched end tags are ignored.
class Node {
 public:
  enum class Kind { Document, Element, Text };

  Kind kind() const { return kind_; }
  bool is_element() const { return kind_ == Kind::Element; }
  const std::string& tag() const { return tag_; }
  /// Text node contents (entities decoded).
  const std::string& data() const { return data_; }
  const Node* parent() const { return parent_; }
  const std::vector<std::unique_ptr<Node>>& children() const { return children_; }
  const std::vector<std::pair<std::string, std::string>>& attributes() const { return attributes_; }

  std::optional<std::string_view> attr(std::string_view name) const;
  bool has_class(std::string_view cls) const;

  /// Descendant text with block boundaries turned into spaces, whitespace
  /// collapsed and NBSP folded to a plain space.
  std::string text_content() const;

 private:
  friend class Parser;
  Kind kind_ = Kind::Document;
  std::string tag_;
  std::string data_;
  std::vector<std::pair<std::string, std::string>> attributes_;
  std::vector<std::unique_ptr<Node>> children_;
  Node* parent_ = nullptr;
};

class Document {
 public:
  static Document parse(std::string_view source);
  const Node& root() const { return *root_; }

 private:
  std::unique_ptr<Node> root_;
};

/// CSS subset: type, `*`, `.class`, `#id`, `[attr]`, `[attr=v]`, `[attr^=v]`,
/// `[attr*=v]`, `[attr$=v]`, `[attr~=v]`, descendant (space) and child (`>`)
/// combinators, comma-separated groups. Results are in document order.
std::vector<const Node*> select(const Node& scope, std::string_view selector);
const Node* select_first(const Node& scope, std::string_view selector);

/// Decodes named (common subset) and numeric character references.
std::string decode_entities(std::string_view text);

}  // namespace stayinsight::html
