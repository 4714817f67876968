#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "lx/csv.hpp"
#include "lx/inference.hpp"
#include "lx/taxonomy.hpp"

namespace lx::pipeline {

/// Output column for the sign-of-sum over the four marketing-aspect polarities.
inline constexpr std::string_view kOverallSentiment = "sentiment";

struct IngestLimits {
  std::size_t max_bytes = 1024 * 1024;
};

struct InputRow {
  std::string id;
  std::string text;
  std::size_t source_row = 0;  // 0-based data row in the uploaded file
};

struct IngestResult {
  std::vector<std::string> header;
  std::vector<InputRow> rows;
  std::vector<csv::MalformedRow> rejected;
};

/// An empty id_column numbers rows from 1. Throws SizeExceeded, EmptyFile, NotUtf8, MissingColumn.
IngestResult ingest_csv(std::string_view bytes, std::string_view id_column, std::string_view text_column,
                        const IngestLimits& limits = {});

/// Up to n text values in file order.
std::vector<std::string> preview(const std::vector<InputRow>& rows, std::size_t n = 5);

/// Maximal runs of non-whitespace.
std::size_t word_count(std::string_view text);

/// The 16 emotions, the three evaluation themes and overall sentiment, in output order.
std::vector<std::string> selectable_perceptions(const Taxonomy& taxonomy = default_taxonomy());

struct AnalysisConfig {
  std::string id_column;
  std::string text_column;
  std::vector<std::string> selected_perceptions;  // "all" expands to selectable_perceptions()
  bool include_word_count = true;
  bool include_text = false;
  /// Adds one column per marketing aspect next to the overall sentiment column.
  bool include_aspects = false;

  /// Canonicalises the selection to output order. Throws InvalidConfig, UnknownPerception.
  void validate(const Taxonomy& taxonomy = default_taxonomy());
  static AnalysisConfig from_json(std::string_view text);
  std::string to_json() const;
};

/// id column, optional text column, selected perceptions in output order, word_count.
std::vector<std::string> output_header(const AnalysisConfig& config, const Taxonomy& taxonomy = default_taxonomy());

struct CellWarning {
  std::size_t row = 0;  // 0-based output row
  std::string id;
  std::string perception;
  std::string code;
  std::string message;
};

struct AnalysisOutput {
  std::string csv;
  std::vector<CellWarning> warnings;
  std::size_t row_count = 0;
  infer::UsageLedger usage;

  std::string warnings_csv() const;
};

/// Classifies every row for the selected perceptions. Cells whose classification failed are left empty
/// and itemised in `warnings`. Throws the first prediction error when every classification failed.
AnalysisOutput run_analysis(const std::vector<InputRow>& rows, const AnalysisConfig& config,
                            const infer::Backend& backend, const Taxonomy& taxonomy = default_taxonomy());

}  // namespace lx::pipeline
