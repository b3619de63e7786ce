// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <vector>

namespace crag {

/// Streaming RFC 4180 reader: comma delimiter, double-quote quoting, "" escapes,
/// CRLF or LF record ends, quoted fields may span lines. A leading UTF-8 BOM is dropped.
class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {}

    /// Reads the next record into `fields`. Returns false at end of input.
    /// Throws InputError on an unterminated quote or a stream failure.
    bool next(std::vector<std::string>& fields);

    /// 1-based physical line on which the last returned record started.
    std::size_t record_line() const noexcept { return record_line_; }

private:
    std::istream& in_;
    std::size_t line_ = 1;
    std::size_t record_line_ = 0;
    bool started_ = false;
};

/// Quotes a field only when it needs it.
std::string csv_escape(const std::string& field);

}  // namespace crag
