#include "fcattn/delimited.hpp"

#include <algorithm>
#include <stdexcept>

namespace fcattn {

int DelimitedTable::column_index(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return -1;
    return static_cast<int>(it - header.begin());
}

namespace {

// Parses one logical record starting at `pos`; quoted fields may span lines.
std::vector<std::string> parse_record(const std::string& text, std::size_t& pos, char delim) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    while (pos < text.size()) {
        char c = text[pos];
        if (quoted) {
            if (c == '"') {
                if (pos + 1 < text.size() && text[pos + 1] == '"') {
                    field.push_back('"');
                    pos += 2;
                } else {
                    quoted = false;
                    ++pos;
                }
            } else {
                field.push_back(c);
                ++pos;
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
            ++pos;
        } else if (c == delim) {
            fields.push_back(std::move(field));
            field.clear();
            ++pos;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && pos + 1 < text.size() && text[pos + 1] == '\n') ++pos;
            ++pos;
            fields.push_back(std::move(field));
            return fields;
        } else {
            field.push_back(c);
            ++pos;
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

}  // namespace

DelimitedTable read_delimited(std::istream& in, char forced_delimiter) {
    std::string text(std::istreambuf_iterator<char>(in), {});
    DelimitedTable t;
    if (text.empty()) return t;

    if (forced_delimiter != '\0') {
        t.delimiter = forced_delimiter;
    } else {
        std::size_t eol = text.find('\n');
        std::string first = text.substr(0, eol);
        std::size_t tabs = static_cast<std::size_t>(std::count(first.begin(), first.end(), '\t'));
        std::size_t commas = static_cast<std::size_t>(std::count(first.begin(), first.end(), ','));
        t.delimiter = tabs > commas ? '\t' : ',';
    }

    std::size_t pos = 0;
    t.header = parse_record(text, pos, t.delimiter);
    while (pos < text.size()) {
        auto row = parse_record(text, pos, t.delimiter);
        if (row.size() == 1 && row[0].empty()) continue;  // blank line
        row.resize(t.header.size());
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::string escape_delimited_field(const std::string& field, char delimiter) {
    bool needs = field.find_first_of("\"\n\r") != std::string::npos ||
                 field.find(delimiter) != std::string::npos;
    if (!needs) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

}  // namespace fcattn
