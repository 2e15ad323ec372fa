#include "treeduce/grammar.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

namespace treeduce {

std::size_t Grammar::add(const SyncRule& rule, long long freq) {
  auto it = by_key_.find(rule.key());
  if (it != by_key_.end()) {
    GrammarEntry& e = entries_[it->second];
    e.freq += freq;
    if ((e.rule->provenance() | rule.provenance()) != e.rule->provenance()) {
      auto merged = std::make_shared<SyncRule>(*e.rule);
      merged->set_provenance(e.rule->provenance() | rule.provenance());
      e.rule = std::move(merged);
    }
    return it->second;
  }
  std::size_t index = entries_.size();
  entries_.push_back({std::make_shared<SyncRule>(rule), freq});
  by_key_.emplace(rule.key(), index);
  by_signature_[production_signature(rule.alpha(), rule.alpha().root())].push_back(index);
  return index;
}

void Grammar::merge(const Grammar& other) {
  for (const GrammarEntry& e : other.entries_) add(*e.rule, e.freq);
}

std::optional<std::size_t> Grammar::find(const std::string& key) const {
  auto it = by_key_.find(key);
  if (it == by_key_.end()) return std::nullopt;
  return it->second;
}

const std::vector<std::size_t>& Grammar::candidates(const Tree& tree, NodeId node) const {
  static const std::vector<std::size_t> kNone;
  auto it = by_signature_.find(production_signature(tree, node));
  return it == by_signature_.end() ? kNone : it->second;
}

std::vector<std::size_t> Grammar::by_src_root(const std::string& label) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].rule->src_root() == label) out.push_back(i);
  return out;
}

Grammar filter_grammar(const Grammar& g, std::size_t max_targets_per_source) {
  std::map<std::string, std::vector<std::size_t>> by_alpha;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const SyncRule& r = *g.entry(i).rule;
    if (r.provenance() & kExtracted && !(r.provenance() & (kCopy | kDelete)))
      by_alpha[r.alpha_string()].push_back(i);
  }
  std::vector<bool> keep(g.size(), true);
  for (auto& [alpha, ids] : by_alpha) {
    if (ids.size() <= max_targets_per_source) continue;
    std::stable_sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
      return g.entry(a).freq > g.entry(b).freq;
    });
    for (std::size_t j = max_targets_per_source; j < ids.size(); ++j) keep[ids[j]] = false;
  }
  Grammar out;
  out.src_root_symbol = g.src_root_symbol;
  out.tgt_root_symbol = g.tgt_root_symbol;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (keep[i]) out.add(*g.entry(i).rule, g.entry(i).freq);
  return out;
}

void write_grammar(std::ostream& out, const Grammar& g) {
  if (!g.src_root_symbol.empty() || !g.tgt_root_symbol.empty())
    out << "#roots " << g.src_root_symbol << ' ' << g.tgt_root_symbol << '\n';
  for (const GrammarEntry& e : g.entries()) {
    const SyncRule& r = *e.rule;
    out << r.src_root() << ' ' << r.tgt_root() << " ||| " << r.alpha_string() << " ||| "
        << r.gamma_string() << " ||| " << r.links_string() << " ||| "
        << provenance_string(r.provenance()) << " ||| " << e.freq << '\n';
  }
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find("|||", start);
    std::string field = line.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    auto b = field.find_first_not_of(" \t");
    auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
    if (pos == std::string::npos) break;
    start = pos + 3;
  }
  return out;
}

}  // namespace

Grammar read_grammar(std::istream& in, const std::string& name) {
  Grammar g;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto where = [&] { return name + ":" + std::to_string(lineno) + ": "; };
    if (line.rfind("#roots", 0) == 0) {
      auto parts = split_ws(line.substr(6));
      if (parts.size() != 2) throw ParseError(where() + "malformed #roots line");
      g.src_root_symbol = parts[0];
      g.tgt_root_symbol = parts[1];
      continue;
    }
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    auto fields = split_fields(line);
    if (fields.size() != 6) throw ParseError(where() + "expected 6 '|||'-separated fields");
    auto roots = split_ws(fields[0]);
    if (roots.size() != 2) throw ParseError(where() + "expected 'X Y' root pair");
    try {
      SyncRule rule = parse_rule(roots[0], roots[1], fields[1], fields[2], parse_provenance(fields[4]));
      if (rule.links_string() != join(split_ws(fields[3])))
        throw ParseError("links field '" + fields[3] + "' disagrees with co-indices");
      long long freq = std::stoll(fields[5]);
      g.add(rule, freq);
    } catch (const std::invalid_argument&) {
      throw ParseError(where() + "bad frequency '" + fields[5] + "'");
    } catch (const std::exception& e) {
      throw ParseError(where() + e.what());
    }
  }
  return g;
}

Grammar load_grammar(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open grammar file " + path);
  return read_grammar(in, path);
}

}  // namespace treeduce
