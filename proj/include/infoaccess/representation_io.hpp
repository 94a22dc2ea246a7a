#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "infoaccess/error.hpp"
#include "infoaccess/graph.hpp"
#include "infoaccess/signature.hpp"
#include "infoaccess/text.hpp"

namespace infoaccess {

// CSV layout: header "node_id,<seed_id_1>,...,<seed_id_m>", then one row per
// node with its signature.
inline void write_representation_csv(std::ostream& os, const Representation& rep, const Graph& g) {
  os << "node_id";
  for (auto s : rep.seed_set.seeds) os << ',' << csv_escape(g.node_id(s));
  os << '\n';
  for (std::size_t v = 0; v < rep.rows; ++v) {
    os << csv_escape(g.node_id(static_cast<NodeIndex>(v)));
    for (float p : rep.row(v)) os << ',' << format_number(p);
    os << '\n';
  }
}

// Matrix read back from a CSV file together with the identifiers it names.
struct RepresentationTable {
  std::vector<std::string> node_ids;
  std::vector<std::string> seed_ids;
  std::vector<float> values;  // row-major node_ids.size() x seed_ids.size()
};

inline RepresentationTable read_representation_csv(std::istream& in, const std::string& source = "<stream>") {
  RepresentationTable t;
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ": empty representation file");
  auto header = parse_csv_line(line);
  if (header.size() < 2 || header[0] != "node_id") throw ParseError(source, 1, "header must start with node_id");
  t.seed_ids.assign(header.begin() + 1, header.end());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = parse_csv_line(line);
    if (fields.size() != header.size()) throw ParseError(source, line_no, "wrong number of fields");
    t.node_ids.push_back(fields[0]);
    for (std::size_t c = 1; c < fields.size(); ++c) {
      auto value = parse_double(fields[c]);
      if (!value || *value < 0.0 || *value > 1.0) throw ParseError(source, line_no, "entry is not a probability");
      t.values.push_back(static_cast<float>(*value));
    }
  }
  return t;
}

// Binary layout: "IARP", version byte (1), u64 rows, u64 cols (little
// endian), then rows*cols IEEE-754 float32 values, little endian, row-major.
inline constexpr std::array<char, 4> kRepresentationMagic = {'I', 'A', 'R', 'P'};
inline constexpr std::uint8_t kRepresentationVersion = 1;

namespace detail {

template <typename T>
void put_le(std::ostream& os, T value) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  auto bits = std::bit_cast<U>(value);
  char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  os.write(buf, sizeof buf);
}

template <typename T>
T get_le(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  unsigned char buf[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof buf)) throw DataError("truncated binary representation");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(buf[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

}  // namespace detail

inline void write_representation_binary(std::ostream& os, const Representation& rep) {
  os.write(kRepresentationMagic.data(), kRepresentationMagic.size());
  os.put(static_cast<char>(kRepresentationVersion));
  detail::put_le<std::uint64_t>(os, rep.rows);
  detail::put_le<std::uint64_t>(os, rep.cols);
  for (float v : rep.values) detail::put_le<float>(os, v);
}

struct BinaryMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;
};

inline BinaryMatrix read_representation_binary(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kRepresentationMagic) {
    throw DataError("not an IARP representation file");
  }
  const int version = in.get();
  if (version != kRepresentationVersion) throw DataError("unsupported IARP version " + std::to_string(version));
  BinaryMatrix m;
  m.rows = detail::get_le<std::uint64_t>(in);
  m.cols = detail::get_le<std::uint64_t>(in);
  if (m.cols != 0 && m.rows > (std::uint64_t{1} << 40) / m.cols) throw DataError("implausible IARP dimensions");
  m.values.resize(m.rows * m.cols);
  for (auto& v : m.values) v = detail::get_le<float>(in);
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("trailing bytes after IARP payload");
  return m;
}

// Self-describing sidecar written next to every matrix file.
inline nlohmann::ordered_json representation_metadata(const Representation& rep, const Graph& g,
                                                      const std::string& graph_hash) {
  nlohmann::ordered_json j;
  j["alpha"] = rep.alpha;
  j["trials"] = rep.trials;
  j["master_seed"] = rep.master_seed;
  j["strategy"] = to_string(rep.seed_set.strategy);
  j["num_seeds"] = rep.cols;
  j["num_nodes"] = rep.rows;
  j["graph_hash"] = graph_hash;
  j["orientation"] = "entry (v, s) = P(node v receives information seeded at s)";
  auto& ids = j["seed_ids"] = nlohmann::ordered_json::array();
  for (auto s : rep.seed_set.seeds) ids.push_back(g.node_id(s));
  return j;
}

}  // namespace infoaccess
