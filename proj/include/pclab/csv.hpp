#pragma once

#include <fstream>
#include <string>
#include <variant>
#include <vector>

namespace pclab {

// RFC-4180 CSV output with '#'-prefixed metadata lines ahead of the header
// row (plot tools skip them via their comment option). Doubles are printed
// with %.12g so repeated runs format identically.
class CsvWriter {
public:
    using Field = std::variant<std::string, const char*, double, long, int, bool>;

    explicit CsvWriter(const std::string& path);

    void comment(const std::string& line);
    void header(const std::vector<std::string>& columns);
    void row(const std::vector<Field>& fields);

    static std::string format(const Field& field);
    static std::string quote(const std::string& raw);

private:
    std::ofstream out_;
    bool header_written_ = false;
};

}  // namespace pclab
