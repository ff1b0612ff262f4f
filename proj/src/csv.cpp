#include "pclab/csv.hpp"

#include <cstdio>

#include "pclab/errors.hpp"

namespace pclab {

CsvWriter::CsvWriter(const std::string& path) : out_(path) {
    if (!out_) throw ParseError(path + ": cannot open for writing");
}

void CsvWriter::comment(const std::string& line) {
    if (header_written_)
        throw ParseError("CSV comments must precede the header row");
    out_ << "# " << line << "\n";
}

void CsvWriter::header(const std::vector<std::string>& columns) {
    header_written_ = true;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (i) out_ << ",";
        out_ << quote(columns[i]);
    }
    out_ << "\n";
}

void CsvWriter::row(const std::vector<Field>& fields) {
    if (!header_written_) throw ParseError("CSV row written before header");
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out_ << ",";
        out_ << format(fields[i]);
    }
    out_ << "\n";
    out_.flush();
}

std::string CsvWriter::format(const Field& field) {
    if (const auto* s = std::get_if<std::string>(&field)) return quote(*s);
    if (const auto* c = std::get_if<const char*>(&field)) return quote(*c);
    if (const auto* d = std::get_if<double>(&field)) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.12g", *d);
        return buf;
    }
    if (const auto* l = std::get_if<long>(&field)) return std::to_string(*l);
    if (const auto* i = std::get_if<int>(&field)) return std::to_string(*i);
    return std::get<bool>(field) ? "true" : "false";
}

std::string CsvWriter::quote(const std::string& raw) {
    bool needs_quotes = false;
    for (char c : raw)
        if (c == ',' || c == '"' || c == '\n' || c == '\r') needs_quotes = true;
    if (!needs_quotes) return raw;
    std::string quoted = "\"";
    for (char c : raw) {
        if (c == '"') quoted += "\"\"";
        else quoted += c;
    }
    quoted += "\"";
    return quoted;
}

}  // namespace pclab
