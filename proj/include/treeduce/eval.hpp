#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace treeduce {

using Tokens = std::vector<std::string>;

/// Percentage of source tokens kept. Throws std::invalid_argument for an
/// empty source.
double compression_rate(std::size_t source_tokens, std::size_t target_tokens);

struct SentenceScores {
  /// Line number (1-based) in the input files.
  std::size_t line = 0;
  /// Compression rate of the prediction; absent without sources.
  std::optional<double> rate;
  double hamming = 0.0;
  double edit = 0.0;
  double f1_loss = 0.0;
};

struct EvalReport {
  std::vector<SentenceScores> sentences;
  /// Lines skipped because one side failed to parse or the source was empty.
  std::size_t skipped = 0;
  /// 100 * sum(predicted tokens) / sum(source tokens), and the same for the
  /// references; absent without sources.
  std::optional<double> corpus_rate;
  std::optional<double> reference_rate;
  double hamming = 0.0;
  double edit = 0.0;
  double f1_loss = 0.0;
};

/// Scores token strings line by line: token Hamming loss (length penalty
/// `scale`), edit distance and 1 - F1. A nullopt entry marks an unreadable
/// line and is skipped. `sources` may be empty; otherwise all three lists
/// must have the same length.
EvalReport evaluate_corpus(const std::vector<std::optional<Tokens>>& predictions,
                           const std::vector<std::optional<Tokens>>& references,
                           const std::vector<std::optional<Tokens>>& sources = {}, double scale = 1.0);

/// One entry per line: the yield of a bracketed tree, or the whitespace
/// tokens of a plain line. Only the text before the first tab is read, so
/// compressor output with extra columns can be scored directly. Malformed trees give nullopt; lines starting with
/// '#' are comments and produce no entry.
std::vector<std::optional<Tokens>> read_token_lines(std::istream& in);
std::vector<std::optional<Tokens>> read_token_lines(const std::string& path);

/// Header line and one value line, tab separated. Missing rates print "NA".
void write_report_tsv(std::ostream& out, const EvalReport& report);
/// Short readable summary.
std::string summarize(const EvalReport& report);

}  // namespace treeduce
