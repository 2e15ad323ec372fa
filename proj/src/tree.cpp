#include "treeduce/tree.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

namespace treeduce {

NodeId Tree::add_node(std::string label, NodeKind kind, int link) {
  Node n;
  n.label = std::move(label);
  n.kind = kind;
  n.link = kind == NodeKind::frontier ? link : kEpsilon;
  nodes_.push_back(std::move(n));
  preorder_.clear();
  return static_cast<NodeId>(nodes_.size() - 1);
}

void Tree::add_child(NodeId parent, NodeId child) {
  require(parent);
  require(child);
  nodes_[parent].children.push_back(child);
  nodes_[child].parent = parent;
}

void Tree::require(NodeId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
    throw std::out_of_range("tree node id " + std::to_string(id) + " out of range");
}

bool Tree::is_preterminal(NodeId id) const {
  const Node& n = node(id);
  if (n.kind != NodeKind::internal || n.children.empty()) return false;
  return std::all_of(n.children.begin(), n.children.end(),
                     [&](NodeId c) { return is_terminal(c); });
}

void Tree::finalize() {
  if (nodes_.empty()) throw ParseError("empty tree");
  if (root_ == kNoNode) root_ = 0;
  require(root_);
  if (nodes_[root_].parent != kNoNode) throw ParseError("root has a parent");

  preorder_.clear();
  terminals_.clear();
  std::vector<char> seen(nodes_.size(), 0);
  int next_token = 0;

  // Iterative pre-order walk; spans are filled in a second, reverse pass.
  std::vector<NodeId> stack{root_};
  while (!stack.empty()) {
    NodeId id = stack.back();
    stack.pop_back();
    if (seen[id]) throw ParseError("node reachable twice");
    seen[id] = 1;
    preorder_.push_back(id);
    Node& n = nodes_[id];
    if (n.label.empty()) throw ParseError("node with empty label");
    switch (n.kind) {
      case NodeKind::terminal:
        if (!n.children.empty()) throw ParseError("terminal '" + n.label + "' has children");
        if (id == root_) throw ParseError("tree root must be a non-terminal");
        n.span = {next_token, next_token};
        ++next_token;
        terminals_.push_back(id);
        break;
      case NodeKind::frontier:
        if (!n.children.empty()) throw ParseError("frontier '" + n.label + "' has children");
        n.span = {};
        break;
      case NodeKind::internal:
        if (n.children.empty()) throw ParseError("empty constituent '" + n.label + "'");
        break;
    }
    for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) stack.push_back(*it);
  }
  if (preorder_.size() != nodes_.size()) throw ParseError("tree has unreachable nodes");

  for (auto it = preorder_.rbegin(); it != preorder_.rend(); ++it) {
    Node& n = nodes_[*it];
    if (n.kind != NodeKind::internal) continue;
    Span s;
    for (NodeId c : n.children) {
      const Span& cs = nodes_[c].span;
      if (cs.empty()) continue;
      if (s.empty()) s = cs;
      else {
        s.lo = std::min(s.lo, cs.lo);
        s.hi = std::max(s.hi, cs.hi);
      }
    }
    n.span = s;
  }
}

std::vector<NodeId> Tree::postorder() const {
  std::vector<NodeId> out;
  out.reserve(nodes_.size());
  if (root_ == kNoNode) return out;
  // children before parents: reverse of a right-to-left pre-order
  std::vector<NodeId> stack{root_};
  while (!stack.empty()) {
    NodeId id = stack.back();
    stack.pop_back();
    out.push_back(id);
    for (NodeId c : nodes_[id].children) stack.push_back(c);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<NodeId> Tree::leaves(NodeId from) const {
  std::vector<NodeId> out;
  std::vector<NodeId> stack{from};
  while (!stack.empty()) {
    NodeId id = stack.back();
    stack.pop_back();
    const Node& n = node(id);
    if (n.children.empty()) {
      if (n.kind != NodeKind::internal) out.push_back(id);
      continue;
    }
    for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

bool Tree::is_ancestor_or_self(NodeId ancestor, NodeId n) const {
  while (n != kNoNode) {
    if (n == ancestor) return true;
    n = node(n).parent;
  }
  return false;
}

Tree Tree::subtree(NodeId id) const {
  Tree out;
  struct Frame {
    NodeId src;
    NodeId parent;
  };
  std::vector<Frame> stack{{id, kNoNode}};
  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    const Node& n = node(f.src);
    NodeId copy = out.add_node(n.label, n.kind, n.link);
    if (f.parent == kNoNode) out.set_root(copy);
    else out.add_child(f.parent, copy);
    for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) stack.push_back({*it, copy});
  }
  out.finalize();
  return out;
}

namespace {

bool same_subtree(const Tree& a, NodeId x, const Tree& b, NodeId y) {
  const Node& p = a.node(x);
  const Node& q = b.node(y);
  if (p.kind != q.kind || p.label != q.label || p.children.size() != q.children.size()) return false;
  if (p.kind == NodeKind::frontier && p.link != q.link) return false;
  for (std::size_t i = 0; i < p.children.size(); ++i)
    if (!same_subtree(a, p.children[i], b, q.children[i])) return false;
  return true;
}

}  // namespace

bool operator==(const Tree& a, const Tree& b) {
  if (a.empty() || b.empty()) return a.empty() && b.empty();
  if (a.size() != b.size()) return false;
  return same_subtree(a, a.root(), b, b.root());
}

// --- parsing ---------------------------------------------------------------

namespace {

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  enum class Kind { open, close, atom, end };
  struct Token {
    Kind kind;
    std::string_view text;
    std::size_t offset;
  };

  Token next() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ >= text_.size()) return {Kind::end, {}, pos_};
    char c = text_[pos_];
    if (c == '[') return {Kind::open, text_.substr(pos_++, 1), pos_ - 1};
    if (c == ']') return {Kind::close, text_.substr(pos_++, 1), pos_ - 1};
    std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != '[' && text_[pos_] != ']' &&
           !std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    return {Kind::atom, text_.substr(start, pos_ - start), start};
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

struct AtomInfo {
  NodeKind kind;
  std::string label;
  int link;
};

AtomInfo classify_atom(std::string_view atom, bool elementary) {
  if (elementary) {
    auto hash = atom.rfind('#');
    if (hash != std::string_view::npos && hash > 0 && hash + 1 < atom.size()) {
      std::string_view idx = atom.substr(hash + 1);
      if (idx == "e") return {NodeKind::frontier, std::string(atom.substr(0, hash)), kEpsilon};
      int value = 0;
      auto [ptr, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), value);
      if (ec == std::errc() && ptr == idx.data() + idx.size() && value >= 1)
        return {NodeKind::frontier, std::string(atom.substr(0, hash)), value - 1};
    }
  }
  return {NodeKind::terminal, std::string(atom), kEpsilon};
}

Tree parse_impl(std::string_view text, bool elementary) {
  Lexer lex(text);
  Tree tree;
  std::vector<NodeId> open;
  bool done = false;
  auto fail = [&](const std::string& msg, std::size_t offset) {
    throw ParseError(msg + " at offset " + std::to_string(offset));
  };

  for (auto tok = lex.next(); tok.kind != Lexer::Kind::end; tok = lex.next()) {
    if (done) fail("trailing input after complete tree", tok.offset);
    switch (tok.kind) {
      case Lexer::Kind::open: {
        auto label = lex.next();
        if (label.kind != Lexer::Kind::atom) fail("expected a label after '['", label.offset);
        NodeId id = tree.add_node(std::string(label.text), NodeKind::internal);
        if (open.empty()) tree.set_root(id);
        else tree.add_child(open.back(), id);
        open.push_back(id);
        break;
      }
      case Lexer::Kind::close: {
        if (open.empty()) fail("unbalanced ']'", tok.offset);
        if (tree.children(open.back()).empty())
          fail("empty constituent '" + tree.label(open.back()) + "'", tok.offset);
        open.pop_back();
        if (open.empty()) done = true;
        break;
      }
      case Lexer::Kind::atom: {
        AtomInfo info = classify_atom(tok.text, elementary);
        if (open.empty()) {
          // A lone frontier is a complete elementary tree (e.g. "VP#1").
          if (!elementary || info.kind != NodeKind::frontier || !tree.empty())
            fail("token outside of brackets", tok.offset);
          tree.set_root(tree.add_node(info.label, info.kind, info.link));
          done = true;
          break;
        }
        tree.add_child(open.back(), tree.add_node(info.label, info.kind, info.link));
        break;
      }
      case Lexer::Kind::end:
        break;
    }
  }
  if (!open.empty()) throw ParseError("unbalanced '[': missing " + std::to_string(open.size()) + " ']'");
  if (tree.empty()) throw ParseError("empty input");
  tree.finalize();
  return tree;
}

void serialize_into(const Tree& tree, NodeId id, bool with_links, std::string& out) {
  const Node& n = tree.node(id);
  switch (n.kind) {
    case NodeKind::terminal:
      out += n.label;
      return;
    case NodeKind::frontier:
      out += n.label;
      if (with_links) {
        out += '#';
        out += n.link == kEpsilon ? std::string("e") : std::to_string(n.link + 1);
      }
      return;
    case NodeKind::internal:
      out += '[';
      out += n.label;
      for (NodeId c : n.children) {
        out += ' ';
        serialize_into(tree, c, with_links, out);
      }
      out += ']';
      return;
  }
}

}  // namespace

Tree parse_bracketed(std::string_view text) { return parse_impl(text, false); }

Tree parse_elementary(std::string_view text) { return parse_impl(text, true); }

std::string serialize(const Tree& tree, NodeId from, bool with_links) {
  std::string out;
  serialize_into(tree, from, with_links, out);
  return out;
}

std::string serialize(const Tree& tree, bool with_links) {
  if (tree.empty()) return {};
  return serialize(tree, tree.root(), with_links);
}

std::vector<std::string> yield_tokens(const Tree& tree, NodeId from) {
  std::vector<std::string> out;
  for (NodeId id : tree.leaves(from))
    if (tree.is_terminal(id)) out.push_back(tree.label(id));
  return out;
}

std::vector<std::string> yield_tokens(const Tree& tree) {
  if (tree.empty()) return {};
  return yield_tokens(tree, tree.root());
}

std::optional<Span> yield_span(const Tree& tree, NodeId node) {
  const Span& s = tree.node(node).span;
  if (s.empty()) return std::nullopt;
  return s;
}

std::vector<Tree> read_treebank_stream(std::istream& in, const std::string& name) {
  std::vector<Tree> trees;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    try {
      trees.push_back(parse_bracketed(line));
    } catch (const ParseError& e) {
      throw ParseError(name + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return trees;
}

std::vector<Tree> read_treebank(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open treebank '" + path + "'");
  return read_treebank_stream(in, path);
}

void write_treebank(std::ostream& out, const std::vector<Tree>& trees) {
  for (const Tree& t : trees) out << serialize(t) << '\n';
}

std::string join(const std::vector<std::string>& tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

std::vector<std::string> split_ws(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

}  // namespace treeduce
