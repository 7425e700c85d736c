#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ivla/analytics.hpp"
#include "ivla/program.hpp"

namespace ivla {

// One record per line: `name;k;u=x1,x2,...;v=y1,y2,...` with the k factor
// columns stored one after another (column-major). Blank lines and lines
// starting with `#` are skipped. `shapes` gives rows/cols of each updatable
// matrix; a record naming anything else, or with the wrong number of values,
// raises DataError("record N: ...").
std::vector<RankKUpdate> read_update_stream(std::istream& in,
                                            const ShapeMap& shapes);
std::vector<RankKUpdate> load_update_stream(const std::string& path,
                                            const ShapeMap& shapes);
void write_update_stream(std::ostream& out,
                         const std::vector<RankKUpdate>& updates);

// "n=64,p=8" -> {n: 64, p: 8}. Throws ConfigError on malformed input.
std::map<std::string, std::string> parse_key_values(const std::string& text);
DimBindings parse_dims(const std::string& text);

}  // namespace ivla
