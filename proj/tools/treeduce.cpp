// Command-line driver: align, extract, train-lm, train, compress, eval,
// sample.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "treeduce/alignment.hpp"
#include "treeduce/decoder.hpp"
#include "treeduce/derivation.hpp"
#include "treeduce/eval.hpp"
#include "treeduce/extract.hpp"
#include "treeduce/features.hpp"
#include "treeduce/grammar.hpp"
#include "treeduce/lm.hpp"
#include "treeduce/losses.hpp"
#include "treeduce/training.hpp"

namespace fs = std::filesystem;
using namespace treeduce;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Settings {
  std::string source, target, corpus, alignments = "auto";
  std::string grammar, lm, model, input, text;
  std::string pred, ref;
  std::string out = "-";
  int depth = 1;
  int max_vars = 5;
  int max_nodes = 15;
  std::size_t filter = 50;
  std::string synthesize = "copy+delete";
  std::string loss = "hamming-token";
  double length_penalty_scale = 1.0;
  double C = 0.01;
  double loss_scale = 1.0;
  double epsilon = 1e-3;
  std::size_t max_passes = 100;
  std::optional<std::size_t> beam_unique, beam_total;
  std::size_t jobs = 1;
  std::optional<unsigned long long> seed;
  int order = 3;
  std::size_t count = 10;
  std::string src_root, tgt_root;
  bool emit_trees = false;
  bool emit_derivation = false;
};

void require(const std::string& value, const std::string& flag) {
  if (value.empty()) throw UsageError(flag + " is required");
}

void require_file(const std::string& path, const std::string& flag) {
  require(path, flag);
  if (!fs::is_regular_file(path)) throw UsageError(flag + ": no such file '" + path + "'");
}

/// Writes through a temporary file renamed into place, or to stdout for "-".
void write_output(const std::string& path, const std::function<void(std::ostream&)>& body) {
  if (path == "-") {
    body(std::cout);
    std::cout.flush();
    return;
  }
  fs::path target(path);
  fs::path tmp = target;
  tmp += fmt::format(".tmp{}", ::getpid());
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    body(out);
    out.flush();
    if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, target);
}

void check_output(const std::string& path) {
  if (path == "-") return;
  fs::path p(path);
  if (p.has_parent_path() && !fs::is_directory(p.parent_path()))
    throw UsageError("output directory '" + p.parent_path().string() + "' does not exist");
}

std::vector<std::pair<Tree, Tree>> load_pairs(const Settings& s) {
  std::vector<std::pair<Tree, Tree>> pairs;
  if (!s.corpus.empty()) {
    require_file(s.corpus, "--corpus");
    std::ifstream in(s.corpus);
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
      auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      auto bar = line.find("|||");
      if (bar == std::string::npos) throw UsageError(fmt::format("{}:{}: expected 'source ||| target'", s.corpus, n));
      try {
        pairs.emplace_back(parse_bracketed(line.substr(0, bar)), parse_bracketed(line.substr(bar + 3)));
      } catch (const std::exception& e) {
        throw UsageError(fmt::format("{}:{}: {}", s.corpus, n, e.what()));
      }
    }
    return pairs;
  }
  require_file(s.source, "--source");
  require_file(s.target, "--target");
  auto xs = read_treebank(s.source);
  auto ys = read_treebank(s.target);
  if (xs.size() != ys.size())
    throw UsageError(fmt::format("{} has {} trees but {} has {}", s.source, xs.size(), s.target, ys.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) pairs.emplace_back(std::move(xs[i]), std::move(ys[i]));
  return pairs;
}

std::vector<WordAlignment> load_alignments(const Settings& s, const std::vector<std::pair<Tree, Tree>>& pairs) {
  std::vector<WordAlignment> out;
  if (s.alignments == "auto") {
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      auto a = auto_align_deletion(yield_tokens(pairs[i].first), yield_tokens(pairs[i].second));
      if (!a)
        throw UsageError(fmt::format("pair {}: target is not a subsequence of the source; supply --alignments", i + 1));
      out.push_back(*a);
    }
    return out;
  }
  require_file(s.alignments, "--alignments");
  std::ifstream in(s.alignments);
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (out.size() == pairs.size()) throw UsageError(s.alignments + " has more lines than there are pairs");
    try {
      WordAlignment a = parse_alignment(line);
      check_alignment(a, yield_tokens(pairs[out.size()].first).size(), yield_tokens(pairs[out.size()].second).size());
      out.push_back(std::move(a));
    } catch (const AlignmentError& e) {
      throw UsageError(fmt::format("{}:{}: {}", s.alignments, n, e.what()));
    }
  }
  if (out.size() != pairs.size())
    throw UsageError(fmt::format("{} has {} lines for {} pairs", s.alignments, out.size(), pairs.size()));
  return out;
}

std::optional<NgramModel> load_lm(const Settings& s) {
  if (s.lm.empty()) return std::nullopt;
  require_file(s.lm, "--lm");
  return load_arpa(s.lm);
}

BeamSpec beam(const Settings& s, BeamSpec fallback) {
  return {s.beam_unique.value_or(fallback.unique), s.beam_total.value_or(fallback.total)};
}

unsigned long long seed(const Settings& s) {
  if (s.seed) return *s.seed;
  if (const char* env = std::getenv("TREEDUCE_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw UsageError(std::string("TREEDUCE_SEED is not a number: '") + env + "'");
    }
  }
  return 1;
}

int run_align(const Settings& s) {
  auto pairs = load_pairs(s);
  check_output(s.out);
  Settings automatic = s;
  automatic.alignments = "auto";
  auto alignments = load_alignments(automatic, pairs);
  write_output(s.out, [&](std::ostream& out) {
    for (const auto& a : alignments) out << format_alignment(a) << '\n';
  });
  spdlog::info("aligned {} pairs", pairs.size());
  return 0;
}

int run_extract(const Settings& s) {
  if (s.depth < 0 || s.depth > 2) throw UsageError("--depth must be 0, 1 or 2");
  auto pairs = load_pairs(s);
  auto alignments = load_alignments(s, pairs);
  check_output(s.out);

  ExtractOptions opt;
  opt.depth = s.depth;
  opt.max_vars = s.max_vars;
  opt.max_nodes = s.max_nodes;
  std::vector<std::vector<SyncRule>> rules(pairs.size());
  std::vector<std::string> failures(pairs.size());
  parallel_for(pairs.size(), s.jobs, [&](std::size_t i) {
    const auto& [x, y] = pairs[i];
    try {
      rules[i] = extract_specialized(x, y, constituent_align(x, y, alignments[i]), opt);
    } catch (const ExtractionError& e) {
      failures[i] = e.what();
    }
  });
  Grammar g;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!failures[i].empty()) {
      spdlog::warn("pair {}: {}; skipped", i + 1, failures[i]);
      ++skipped;
    }
    for (const auto& r : rules[i]) g.add(r);
  }
  if (!pairs.empty()) {
    bool same = true;
    for (const auto& [x, y] : pairs)
      same = same && x.label(x.root()) == pairs[0].first.label(pairs[0].first.root()) &&
             y.label(y.root()) == pairs[0].second.label(pairs[0].second.root());
    if (same) {
      g.src_root_symbol = pairs[0].first.label(pairs[0].first.root());
      g.tgt_root_symbol = pairs[0].second.label(pairs[0].second.root());
    }
  }
  std::size_t before = g.size();
  if (s.filter > 0) g = filter_grammar(g, s.filter);
  write_output(s.out, [&](std::ostream& out) { write_grammar(out, g); });
  spdlog::info("extracted {} rules from {} pairs ({} skipped), {} after filtering", before, pairs.size() - skipped,
               skipped, g.size());
  return 0;
}

int run_train_lm(const Settings& s) {
  if (s.order < 1) throw UsageError("--order must be positive");
  require_file(s.text, "--text");
  check_output(s.out);
  std::vector<std::vector<std::string>> corpus;
  auto lines = read_token_lines(s.text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (!lines[i]) throw UsageError(fmt::format("{}:{}: malformed tree", s.text, i + 1));
    if (!lines[i]->empty() && (*lines[i])[0][0] != '#') corpus.push_back(*lines[i]);
  }
  NgramModel lm = train_toy(corpus, s.order);
  write_output(s.out, [&](std::ostream& out) { lm.write_arpa(out); });
  spdlog::info("trained an order-{} model on {} sentences", s.order, corpus.size());
  return 0;
}

int run_train(const Settings& s) {
  TrainConfig cfg;
  cfg.C = s.C;
  try {
    cfg.loss = scale_loss({parse_loss_kind(s.loss), s.length_penalty_scale}, s.loss_scale);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  cfg.epsilon = s.epsilon;
  cfg.max_passes = s.max_passes;
  cfg.beam = beam(s, BeamSpec{});
  cfg.synthesis = parse_synthesis(s.synthesize);
  cfg.jobs = s.jobs;
  if (!(cfg.C > 0)) throw UsageError("--C must be positive");
  if (!(cfg.epsilon > 0)) throw UsageError("--epsilon must be positive");
  require_file(s.grammar, "--grammar");
  auto pairs = load_pairs(s);
  Grammar g = load_grammar(s.grammar);
  auto lm = load_lm(s);
  check_output(s.out);

  const NgramModel* model = lm ? &*lm : nullptr;
  std::vector<std::size_t> dropped;
  auto instances = prepare_instances(pairs, g, model, cfg.synthesis, &dropped);
  if (instances.empty()) throw std::runtime_error("no pair is reachable under the grammar");
  spdlog::info("{} training pairs, {} unreachable", instances.size(), dropped.size());
  TrainResult r = cutting_plane_train(instances, g, model, cfg);
  if (!r.converged) spdlog::warn("stopped after {} passes without converging", r.passes.size());

  double loss = 0;
  for (const auto& in : instances) {
    DecodeOptions opt;
    opt.beam = cfg.beam;
    opt.synthesis = cfg.synthesis;
    opt.tgt_root = in.y.label(in.y.root());
    loss += compute_loss(LossReference({LossKind::hamming_token, 1.0}, in.y),
                         decode(in.x, g, r.weights, model, opt).target);
  }
  spdlog::info("final training token Hamming loss {:.4f} (mean {:.4f})", loss, loss / instances.size());
  write_output(s.out, [&](std::ostream& out) { write_model(out, r.weights); });
  return 0;
}

int run_compress(const Settings& s) {
  require_file(s.input, "--input");
  require_file(s.grammar, "--grammar");
  auto trees = read_treebank(s.input);
  Grammar g = load_grammar(s.grammar);
  WeightVector w;
  if (!s.model.empty()) {
    require_file(s.model, "--model");
    w = load_model(s.model);
  }
  auto lm = load_lm(s);
  DecodeOptions opt;
  opt.beam = beam(s, BeamSpec::model_selection());
  opt.synthesis = parse_synthesis(s.synthesize);
  opt.tgt_root = s.tgt_root;
  check_output(s.out);

  std::vector<std::string> lines(trees.size());
  std::vector<std::string> errors(trees.size());
  parallel_for(trees.size(), s.jobs, [&](std::size_t i) {
    try {
      DecodeResult r = decode(std::make_shared<const Tree>(trees[i]), g, w, lm ? &*lm : nullptr, opt);
      std::string line = join(r.yield);
      if (s.emit_trees) line += "\t" + serialize(r.target);
      if (s.emit_derivation) line += "\t" + join(r.derivation.rule_sequence(), " ;; ");
      lines[i] = std::move(line);
    } catch (const DecodeError& e) {
      errors[i] = e.what();
    }
  });
  std::size_t failed = 0;
  for (std::size_t i = 0; i < trees.size(); ++i)
    if (!errors[i].empty()) {
      spdlog::warn("sentence {}: {}", i + 1, errors[i]);
      ++failed;
    }
  write_output(s.out, [&](std::ostream& out) {
    for (const auto& l : lines) out << l << '\n';
  });
  spdlog::info("compressed {} sentences, {} failed", trees.size() - failed, failed);
  return failed ? 2 : 0;
}

int run_eval(const Settings& s) {
  require_file(s.pred, "--pred");
  require_file(s.ref, "--ref");
  auto pred = read_token_lines(s.pred);
  auto ref = read_token_lines(s.ref);
  std::vector<std::optional<Tokens>> src;
  if (!s.source.empty()) {
    require_file(s.source, "--src");
    for (const Tree& t : read_treebank(s.source)) src.emplace_back(yield_tokens(t));
  }
  check_output(s.out);
  EvalReport r;
  try {
    r = evaluate_corpus(pred, ref, src, s.length_penalty_scale);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  write_output(s.out, [&](std::ostream& out) { write_report_tsv(out, r); });
  std::cerr << summarize(r);
  return 0;
}

int run_sample(const Settings& s) {
  require_file(s.grammar, "--grammar");
  Grammar g = load_grammar(s.grammar);
  check_output(s.out);
  std::mt19937_64 rng(seed(s));
  SampleOptions opt;
  opt.src_root = !s.src_root.empty() ? s.src_root : g.src_root_symbol.empty() ? "S" : g.src_root_symbol;
  opt.tgt_root = !s.tgt_root.empty() ? s.tgt_root : g.tgt_root_symbol.empty() ? "S" : g.tgt_root_symbol;
  opt.max_nodes = 500;
  RuleChooser chooser = uniform_chooser(rng);
  std::vector<std::pair<Tree, Tree>> pairs;
  std::size_t attempts = 0;
  while (pairs.size() < s.count) {
    if (++attempts > 100 * (s.count + 1)) throw std::runtime_error("sampling keeps failing; is the grammar productive?");
    try {
      pairs.push_back(sample_pair(g, chooser, opt));
    } catch (const DerivationError& e) {
      spdlog::debug("sample rejected: {}", e.what());
    }
  }
  write_output(s.out, [&](std::ostream& out) {
    for (const auto& [x, y] : pairs) out << serialize(x) << " ||| " << serialize(y) << '\n';
  });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("treeduce"));
  spdlog::set_pattern("[%l] %v");

  CLI::App app{"Tree-to-tree sentence compression with synchronous tree substitution grammars"};
  app.set_config("--config", "", "Settings file of key=value lines; flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.fallthrough();
  app.option_defaults()->always_capture_default();
  Settings s;
  bool verbose = false, quiet = false;

  app.add_option("--source,--src", s.source, "Source treebank")->group("Data");
  app.add_option("--target", s.target, "Target treebank, line-aligned with --source")->group("Data");
  app.add_option("--corpus", s.corpus, "Paired file: 'source tree ||| target tree' per line")->group("Data");
  app.add_option("--alignments", s.alignments, "Pharaoh alignment file, or 'auto'")->group("Data");
  app.add_option("--grammar", s.grammar, "Grammar file")->group("Data");
  app.add_option("--lm", s.lm, "ARPA language model")->group("Data");
  app.add_option("--model", s.model, "Feature weights file")->group("Data");
  app.add_option("--input", s.input, "Treebank to compress")->group("Data");
  app.add_option("--text", s.text, "Sentences (trees or tokens) for train-lm")->group("Data");
  app.add_option("--pred", s.pred, "Predicted compressions (trees or tokens)")->group("Data");
  app.add_option("--ref", s.ref, "Reference compressions (trees or tokens)")->group("Data");
  app.add_option("--out,-o", s.out, "Output file, '-' for stdout")->group("Data");

  app.add_option("--depth", s.depth, "Extraction depth: nested matches skipped per path")->group("Extraction");
  app.add_option("--max-vars", s.max_vars, "Variable cap for specialized rules")->group("Extraction");
  app.add_option("--max-nodes", s.max_nodes, "Node cap for specialized rules")->group("Extraction");
  app.add_option("--filter", s.filter, "Target trees kept per source tree, 0 for all")->group("Extraction");
  app.add_option("--order", s.order, "Ngram order for train-lm")->group("Extraction");

  app.add_option("--synthesize", s.synthesize, "Coverage rules built per input: copy+delete, copy, none")
      ->group("Decoding");
  app.add_option("--beam-unique", s.beam_unique, "Distinct chart items per cell")->group("Decoding");
  app.add_option("--beam-total", s.beam_total, "Candidates examined per cell")->group("Decoding");
  app.add_option("--tgt-root", s.tgt_root, "Target root category")->group("Decoding");
  app.add_option("--src-root", s.src_root, "Source root category for sample")->group("Decoding");
  app.add_flag("--emit-trees", s.emit_trees, "Append the target tree to each output line")->group("Decoding");
  app.add_flag("--emit-derivation", s.emit_derivation, "Append the rule sequence to each output line")
      ->group("Decoding");

  app.add_option("--loss", s.loss, "hamming-token, hamming-ngram, hamming-cfg, edit or f1")->group("Training");
  app.add_option("--length-penalty-scale", s.length_penalty_scale, "Scale of the Hamming short-output penalty")
      ->group("Training");
  app.add_option("--C", s.C, "Regularization trade-off")->group("Training");
  app.add_option("--loss-scale", s.loss_scale, "Multiplier on loss values")->group("Training");
  app.add_option("--epsilon", s.epsilon, "Constraint violation tolerance")->group("Training");
  app.add_option("--max-passes", s.max_passes, "Cutting-plane passes")->group("Training");

  app.add_option("--jobs,-j", s.jobs, "Worker threads, 0 for all cores")->group("Runtime");
  app.add_option("--seed", s.seed, "Random seed (falls back to TREEDUCE_SEED, then 1)")->group("Runtime");
  app.add_option("--count", s.count, "Pairs to sample")->group("Runtime");
  app.add_flag("--verbose,-v", verbose, "Debug logging")->group("Runtime");
  app.add_flag("--quiet,-q", quiet, "Warnings and errors only")->group("Runtime");

  std::map<std::string, std::function<int(const Settings&)>> commands{
      {"align", run_align},     {"extract", run_extract}, {"train-lm", run_train_lm}, {"train", run_train},
      {"compress", run_compress}, {"eval", run_eval},     {"sample", run_sample},
  };
  const std::map<std::string, std::string> help{
      {"align", "Deletion alignments for --source/--target or --corpus"},
      {"extract", "Extract a grammar from aligned tree pairs"},
      {"train-lm", "Train a toy ngram model on --text"},
      {"train", "Learn feature weights by cutting-plane training"},
      {"compress", "Compress each tree of --input"},
      {"eval", "Score --pred against --ref"},
      {"sample", "Sample tree pairs from --grammar"},
  };
  for (const auto& [name, h] : help) app.add_subcommand(name, h);
  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 64;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::warn : spdlog::level::info);

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    return commands.at(name)(s);
  } catch (const UsageError& e) {
    spdlog::error("{}", e.what());
    std::cerr << "Run with --help for usage.\n";
    return 64;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}
