#pragma once

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lx::csv {

struct MalformedRow {
  std::size_t row_index = 0;  // 0-based data row (header excluded)
  std::string reason;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<MalformedRow> malformed;

  std::optional<std::size_t> column_index(std::string_view name) const noexcept;
  /// Throws Error{MissingColumn}.
  std::size_t require_column(std::string_view name) const;
};

/// RFC 4180 reader: quoted fields, doubled quotes, CRLF or LF, optional BOM.
/// Rows whose field count differs from the header go to `malformed`.
Table parse(std::string_view text);

bool is_valid_utf8(std::string_view bytes) noexcept;

std::string escape(std::string_view field);
void write_row(std::ostream& out, std::span<const std::string> fields);
inline void write_row(std::ostream& out, std::initializer_list<std::string> fields) {
  write_row(out, std::span<const std::string>(fields.begin(), fields.size()));
}
std::string to_string(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows);

}  // namespace lx::csv
