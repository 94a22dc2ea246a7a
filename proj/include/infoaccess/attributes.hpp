#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "infoaccess/error.hpp"
#include "infoaccess/graph.hpp"
#include "infoaccess/text.hpp"

namespace infoaccess {

enum class AttributeKind { numeric, categorical };

inline std::string to_string(AttributeKind kind) {
  return kind == AttributeKind::numeric ? "numeric" : "categorical";
}

inline AttributeKind parse_attribute_kind(std::string_view s) {
  const auto lower = to_lower(s);
  if (lower == "numeric") return AttributeKind::numeric;
  if (lower == "categorical") return AttributeKind::categorical;
  throw ConfigError("attribute type must be 'numeric' or 'categorical', got '" + std::string(s) + "'");
}

// One attribute column aligned to a graph's node indexing. Exactly one of
// `numeric` / `categorical` is populated, according to `kind`.
struct AttributeColumn {
  std::string name;
  AttributeKind kind = AttributeKind::numeric;
  std::vector<std::optional<double>> numeric;
  std::vector<std::optional<std::string>> categorical;

  std::size_t size() const noexcept {
    return kind == AttributeKind::numeric ? numeric.size() : categorical.size();
  }
  bool has_value(std::size_t v) const {
    return kind == AttributeKind::numeric ? numeric[v].has_value() : categorical[v].has_value();
  }
  std::size_t missing_count() const {
    std::size_t missing = 0;
    for (std::size_t v = 0; v < size(); ++v) missing += has_value(v) ? 0 : 1;
    return missing;
  }
};

struct AttributeTable {
  std::vector<AttributeColumn> columns;

  const AttributeColumn* find(std::string_view name) const {
    for (const auto& c : columns) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }

  // Re-aligns every column from `from`'s indexing to `to`'s, matching nodes by
  // external identifier. Nodes of `to` missing from `from` become missing.
  AttributeTable reindexed(const Graph& from, const Graph& to) const {
    AttributeTable out;
    for (const auto& col : columns) {
      AttributeColumn c{col.name, col.kind, {}, {}};
      if (col.kind == AttributeKind::numeric) c.numeric.resize(to.node_count());
      else c.categorical.resize(to.node_count());
      for (NodeIndex v = 0; v < to.node_count(); ++v) {
        auto src = from.index_of(to.node_id(v));
        if (!src) continue;
        if (col.kind == AttributeKind::numeric) c.numeric[v] = col.numeric[*src];
        else c.categorical[v] = col.categorical[*src];
      }
      out.columns.push_back(std::move(c));
    }
    return out;
  }
};

// Loads a CSV attribute file (header row, first column = node id) aligned to
// g. Blank cells are missing. Column kinds come from `declared` when present,
// otherwise a column is numeric iff every non-blank cell parses as a number.
// Throws DataError listing ids not present in g, and on a declared-numeric
// column holding text or a mixed undeclared column.
inline AttributeTable load_attributes(const std::string& path, const Graph& g,
                                      const std::map<std::string, AttributeKind>& declared = {}) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open attribute file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": attribute file is empty");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
  const auto header = parse_csv_line(line);
  if (header.size() < 2) throw ParseError(path, 1, "header needs an id column and at least one attribute");
  for (const auto& [name, kind] : declared) {
    if (std::find(header.begin() + 1, header.end(), name) == header.end()) {
      throw DataError(path + ": declared attribute '" + name + "' not in header");
    }
  }

  const auto width = header.size() - 1;
  std::vector<std::vector<std::optional<std::string>>> cells(width,
                                                             std::vector<std::optional<std::string>>(g.node_count()));
  std::vector<std::string> unknown;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = parse_csv_line(line);
    if (fields.size() != header.size()) {
      throw ParseError(path, line_no,
                       "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
    }
    const auto id = std::string(trim(fields[0]));
    auto v = g.index_of(id);
    if (!v) {
      unknown.push_back(id);
      continue;
    }
    for (std::size_t c = 0; c < width; ++c) {
      auto cell = trim(fields[c + 1]);
      if (!cell.empty()) cells[c][*v] = std::string(cell);
    }
  }
  if (!unknown.empty()) {
    std::string list;
    for (std::size_t i = 0; i < unknown.size() && i < 20; ++i) list += (i ? ", " : "") + unknown[i];
    if (unknown.size() > 20) list += ", ... (" + std::to_string(unknown.size()) + " total)";
    throw DataError(path + ": node ids not present in the graph: " + list);
  }

  AttributeTable table;
  for (std::size_t c = 0; c < width; ++c) {
    AttributeColumn col;
    col.name = header[c + 1];
    std::size_t numeric_cells = 0, text_cells = 0;
    for (const auto& cell : cells[c]) {
      if (!cell) continue;
      (is_number(*cell) ? numeric_cells : text_cells) += 1;
    }
    auto it = declared.find(col.name);
    if (it != declared.end()) {
      col.kind = it->second;
      if (col.kind == AttributeKind::numeric && text_cells > 0) {
        throw DataError(path + ": attribute '" + col.name + "' declared numeric but holds non-numeric values");
      }
    } else if (numeric_cells > 0 && text_cells > 0) {
      throw DataError(path + ": attribute '" + col.name + "' mixes numeric and text values");
    } else {
      col.kind = text_cells > 0 ? AttributeKind::categorical : AttributeKind::numeric;
    }
    if (col.kind == AttributeKind::numeric) {
      col.numeric.resize(g.node_count());
      for (std::size_t v = 0; v < g.node_count(); ++v) {
        if (cells[c][v]) col.numeric[v] = parse_double(*cells[c][v]);
      }
    } else {
      col.categorical = std::move(cells[c]);
    }
    table.columns.push_back(std::move(col));
  }
  return table;
}

}  // namespace infoaccess
