#pragma once

#include <istream>
#include <string>
#include <vector>

namespace fcattn {

// RFC4180-style delimited table. The delimiter (comma or tab) is
// auto-detected from the header line unless forced.
struct DelimitedTable {
    char delimiter = ',';
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;  // padded/truncated to header size

    int column_index(const std::string& name) const;  // -1 if absent
};

DelimitedTable read_delimited(std::istream& in, char forced_delimiter = '\0');

std::string escape_delimited_field(const std::string& field, char delimiter);

}  // namespace fcattn
