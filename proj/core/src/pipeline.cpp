#include "lx/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lx/error.hpp"
#include "lx/instruction.hpp"
#include "lx/scale_scoring.hpp"

namespace lx::pipeline {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::vector<std::string> aspect_ids(const Taxonomy& taxonomy) {
  std::vector<std::string> out;
  for (const auto& a : taxonomy.sentiment_aspects()) out.push_back(a.id);
  return out;
}

bool selected(const AnalysisConfig& config, std::string_view id) {
  return std::find(config.selected_perceptions.begin(), config.selected_perceptions.end(), id) !=
         config.selected_perceptions.end();
}

}  // namespace

IngestResult ingest_csv(std::string_view bytes, std::string_view id_column, std::string_view text_column,
                        const IngestLimits& limits) {
  if (bytes.size() > limits.max_bytes) {
    throw Error(ErrorCode::SizeExceeded, "upload is " + std::to_string(bytes.size()) + " bytes; limit is " +
                                             std::to_string(limits.max_bytes));
  }
  if (std::all_of(bytes.begin(), bytes.end(), is_space)) throw Error(ErrorCode::EmptyFile, "file is empty");
  if (!csv::is_valid_utf8(bytes)) throw Error(ErrorCode::NotUtf8, "file is not valid UTF-8");

  auto table = csv::parse(bytes);
  if (table.header.empty()) throw Error(ErrorCode::EmptyFile, "file has no header row");
  const auto text_col = table.require_column(text_column);
  std::optional<std::size_t> id_col;
  if (!id_column.empty()) id_col = table.require_column(id_column);

  IngestResult out;
  out.header = table.header;
  out.rejected = std::move(table.malformed);
  // csv::parse drops malformed rows from `rows`; recover each kept row's original index.
  std::set<std::size_t> bad;
  for (const auto& m : out.rejected) bad.insert(m.row_index);
  std::size_t source = 0;
  for (auto& row : table.rows) {
    while (bad.count(source)) ++source;
    InputRow r;
    r.source_row = source;
    r.id = id_col ? row[*id_col] : std::to_string(source + 1);
    r.text = std::move(row[text_col]);
    out.rows.push_back(std::move(r));
    ++source;
  }
  return out;
}

std::vector<std::string> preview(const std::vector<InputRow>& rows, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < rows.size() && i < n; ++i) out.push_back(rows[i].text);
  return out;
}

std::size_t word_count(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (const char c : text) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++count;
    }
  }
  return count;
}

std::vector<std::string> selectable_perceptions(const Taxonomy& taxonomy) {
  std::vector<std::string> out;
  for (const auto& e : taxonomy.emotions()) out.push_back(e.id);
  for (const auto& t : taxonomy.evaluation_themes()) out.push_back(t.id);
  out.emplace_back(kOverallSentiment);
  return out;
}

void AnalysisConfig::validate(const Taxonomy& taxonomy) {
  if (text_column.empty()) throw Error(ErrorCode::InvalidConfig, "text_column is required");
  if (selected_perceptions.empty()) throw Error(ErrorCode::InvalidConfig, "select at least one perception");
  const auto order = selectable_perceptions(taxonomy);
  std::set<std::string> wanted;
  for (const auto& id : selected_perceptions) {
    if (id == "all") {
      wanted.insert(order.begin(), order.end());
      continue;
    }
    if (std::find(order.begin(), order.end(), id) == order.end()) {
      // Surface a sensible error: unknown ids vs. aspects that are only reachable via "sentiment".
      const auto& p = taxonomy.lookup(id);
      if (p.kind == PerceptionKind::SentimentAspect) {
        throw Error(ErrorCode::InvalidConfig, "select '" + std::string(kOverallSentiment) +
                                                  "' (with include_aspects) instead of aspect '" + id + "'");
      }
    }
    wanted.insert(id);
  }
  std::vector<std::string> canonical;
  for (const auto& id : order) {
    if (wanted.count(id)) canonical.push_back(id);
  }
  selected_perceptions = std::move(canonical);
}

AnalysisConfig AnalysisConfig::from_json(std::string_view text) {
  AnalysisConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    c.id_column = j.value("id_column", std::string());
    c.text_column = j.value("text_column", std::string());
    if (j.contains("perceptions")) {
      const auto& p = j.at("perceptions");
      if (p.is_string()) {
        std::stringstream ss(p.get<std::string>());
        for (std::string item; std::getline(ss, item, ',');) {
          const auto b = item.find_first_not_of(" \t");
          if (b == std::string::npos) continue;
          const auto e = item.find_last_not_of(" \t");
          c.selected_perceptions.push_back(item.substr(b, e - b + 1));
        }
      } else {
        c.selected_perceptions = p.get<std::vector<std::string>>();
      }
    }
    c.include_word_count = j.value("include_word_count", true);
    c.include_text = j.value("include_text", false);
    c.include_aspects = j.value("include_aspects", false);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("analysis config JSON: ") + e.what());
  }
  return c;
}

std::string AnalysisConfig::to_json() const {
  return nlohmann::json{{"id_column", id_column},
                        {"text_column", text_column},
                        {"perceptions", selected_perceptions},
                        {"include_word_count", include_word_count},
                        {"include_text", include_text},
                        {"include_aspects", include_aspects}}
      .dump();
}

std::vector<std::string> output_header(const AnalysisConfig& config, const Taxonomy& taxonomy) {
  std::vector<std::string> h{config.id_column.empty() ? std::string("id") : config.id_column};
  if (config.include_text) h.push_back(config.text_column);
  for (const auto& id : selectable_perceptions(taxonomy)) {
    if (!selected(config, id)) continue;
    h.push_back(id);
    if (id == kOverallSentiment && config.include_aspects) {
      for (const auto& a : aspect_ids(taxonomy)) h.push_back(a);
    }
  }
  if (config.include_word_count) h.emplace_back("word_count");
  return h;
}

std::string AnalysisOutput::warnings_csv() const {
  std::ostringstream out;
  csv::write_row(out, {"row", "id", "perception", "code", "message"});
  for (const auto& w : warnings) csv::write_row(out, {std::to_string(w.row + 1), w.id, w.perception, w.code, w.message});
  return out.str();
}

AnalysisOutput run_analysis(const std::vector<InputRow>& rows, const AnalysisConfig& config_in,
                            const infer::Backend& backend, const Taxonomy& taxonomy) {
  AnalysisConfig config = config_in;
  config.validate(taxonomy);

  // Perceptions that need a model call, in output order.
  std::vector<const Perception*> queried;
  for (const auto& id : config.selected_perceptions) {
    if (id == kOverallSentiment) {
      for (const auto& a : taxonomy.sentiment_aspects()) queried.push_back(&a);
    } else {
      queried.push_back(&taxonomy.lookup(id));
    }
  }

  std::vector<instruct::InstructionRecord> records;
  std::vector<std::pair<std::size_t, std::size_t>> owner;  // (row, queried index)
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (word_count(rows[r].text) == 0) continue;
    for (std::size_t q = 0; q < queried.size(); ++q) {
      records.push_back(instruct::make_inference_record(*queried[q], rows[r].text, rows[r].id));
      owner.emplace_back(r, q);
    }
  }
  auto batch = infer::classify_batch(records, backend);

  // Per row, the label of each queried perception (nullopt when classification failed).
  std::vector<std::vector<std::optional<Label>>> labels(rows.size(), std::vector<std::optional<Label>>(queried.size()));
  AnalysisOutput out;
  out.usage = batch.ledger;
  std::size_t failures = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto [r, q] = owner[i];
    const auto& p = batch.predictions[i];
    if (p.ok()) {
      labels[r][q] = *p.label;
    } else {
      ++failures;
      const auto code = p.error ? std::string(to_string(p.error->code)) : std::string("Unparseable");
      out.warnings.push_back({r, rows[r].id, queried[q]->id, code, p.error ? p.error->message : p.raw_output});
    }
  }
  if (!records.empty() && failures == records.size()) {
    const auto& e = *batch.predictions.front().error;
    throw Error(e.code, "every classification failed; first error: " + e.message);
  }

  std::ostringstream csv_out;
  csv::write_row(csv_out, output_header(config, taxonomy));
  std::vector<std::string> cells;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const bool blank_text = word_count(rows[r].text) == 0;
    cells.clear();
    cells.push_back(rows[r].id);
    if (config.include_text) cells.push_back(rows[r].text);
    std::size_t q = 0;
    for (const auto& id : config.selected_perceptions) {
      if (id == kOverallSentiment) {
        std::array<int, 4> codes{};
        bool complete = true;
        std::vector<std::string> aspect_cells;
        for (std::size_t a = 0; a < 4; ++a, ++q) {
          const auto& l = labels[r][q];
          if (blank_text) {
            codes[a] = 0;
          } else if (l) {
            codes[a] = to_int(to_polarity(*l).value_or(Polarity::NeutralOrNoMention));
          } else {
            complete = false;
          }
          aspect_cells.push_back(blank_text || l ? std::to_string(codes[a]) : std::string());
        }
        cells.push_back(complete ? std::to_string(to_int(scale::overall_sentiment(codes))) : std::string());
        if (config.include_aspects) cells.insert(cells.end(), aspect_cells.begin(), aspect_cells.end());
        continue;
      }
      const auto& l = labels[r][q];
      const auto kind = queried[q]->kind;
      ++q;
      if (blank_text) {
        cells.emplace_back("0");
      } else if (!l) {
        cells.emplace_back();
      } else if (kind == PerceptionKind::Emotion) {
        cells.emplace_back(*l == Label::Present ? "1" : "0");
      } else {
        cells.push_back(std::to_string(to_int(to_polarity(*l).value_or(Polarity::NeutralOrNoMention))));
      }
    }
    if (config.include_word_count) cells.push_back(std::to_string(word_count(rows[r].text)));
    csv::write_row(csv_out, cells);
  }
  out.csv = csv_out.str();
  out.row_count = rows.size();
  return out;
}

}  // namespace lx::pipeline
