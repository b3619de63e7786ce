// SPDX-License-Identifier: Apache-2.0

#include "crag/csv.hpp"

#include <string>

#include "crag/errors.hpp"

namespace crag {

bool CsvReader::next(std::vector<std::string>& fields) {
    std::streambuf* buf = in_.rdbuf();
    if (buf == nullptr) {
        throw InputError("csv: stream has no buffer");
    }
    if (!started_) {
        started_ = true;
        // UTF-8 byte order mark
        if (buf->sgetc() == 0xEF) {
            buf->sbumpc();
            if (buf->sbumpc() != 0xBB || buf->sbumpc() != 0xBF) {
                throw InputError("csv: malformed byte order mark");
            }
        }
    }

    using traits = std::streambuf::traits_type;
    for (;;) {
        fields.clear();
        if (traits::eq_int_type(buf->sgetc(), traits::eof())) {
            if (in_.bad()) {
                throw InputError("csv: stream read failure");
            }
            return false;
        }
        record_line_ = line_;

        std::string field;
        bool quoted = false;
        bool in_quotes = false;
        bool record_done = false;
        while (!record_done) {
            const auto ch = buf->sbumpc();
            if (traits::eq_int_type(ch, traits::eof())) {
                if (in_quotes) {
                    throw InputError("csv: unterminated quoted field starting on line " +
                                     std::to_string(record_line_));
                }
                record_done = true;
                break;
            }
            const char c = traits::to_char_type(ch);
            if (in_quotes) {
                if (c == '"') {
                    if (buf->sgetc() == '"') {
                        buf->sbumpc();
                        field.push_back('"');
                    } else {
                        in_quotes = false;
                    }
                } else {
                    if (c == '\n') {
                        ++line_;
                    }
                    field.push_back(c);
                }
                continue;
            }
            switch (c) {
                case ',':
                    fields.push_back(std::move(field));
                    field.clear();
                    quoted = false;
                    break;
                case '"':
                    if (field.empty() && !quoted) {
                        in_quotes = true;
                        quoted = true;
                    } else {
                        // Stray quote inside an unquoted field: keep it literally.
                        field.push_back(c);
                    }
                    break;
                case '\r':
                    if (buf->sgetc() == '\n') {
                        buf->sbumpc();
                    }
                    ++line_;
                    record_done = true;
                    break;
                case '\n':
                    ++line_;
                    record_done = true;
                    break;
                default:
                    field.push_back(c);
            }
        }
        const bool blank_line = fields.empty() && field.empty() && !quoted;
        fields.push_back(std::move(field));
        if (!blank_line) {
            return true;
        }
    }
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) {
        return field;
    }
    std::string out;
    out.reserve(field.size() + 2);
    out.push_back('"');
    for (char c : field) {
        if (c == '"') {
            out.push_back('"');
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace crag
