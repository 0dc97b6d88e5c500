#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tmcsim::detail {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// RFC 4180 reader: quoted fields, doubled quotes, CRLF or LF, optional BOM.
/// Blank lines are skipped. An unterminated quote throws Error{parse}.
CsvTable parse_csv(std::string_view text);

std::string csv_field(std::string_view value);

}  // namespace tmcsim::detail
