#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "infoaccess/error.hpp"
#include "infoaccess/graph.hpp"
#include "infoaccess/random.hpp"
#include "infoaccess/representation_io.hpp"

namespace infoaccess::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) throw std::runtime_error("SHA-256 unavailable");
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::string_view data) {
    EVP_DigestUpdate(ctx_, data.data(), data.size());
    return *this;
  }

  std::string hex() {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, digest, &len);
    static const char* digits = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
      out.push_back(digits[digest[i] >> 4]);
      out.push_back(digits[digest[i] & 15]);
    }
    return out;
  }

 private:
  EVP_MD_CTX* ctx_;
};

inline std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  Sha256 h;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h.update(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())));
  }
  return h.hex();
}

// Content hash of a graph: directedness, node ids in index order and the
// canonical edge list.
inline std::string graph_hash(const Graph& g) {
  Sha256 h;
  h.update(g.directed() ? "directed\n" : "undirected\n");
  for (NodeIndex v = 0; v < g.node_count(); ++v) h.update(g.node_id(v)).update("\n");
  std::string line;
  for (const auto& [u, w] : g.edges()) {
    line = std::to_string(u) + " " + std::to_string(w) + "\n";
    h.update(line);
  }
  return h.hex();
}

// Writes to a sibling temporary file and renames it into place, so readers
// never see a partial artifact.
inline void write_file_atomic(const fs::path& path, std::string_view contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw DataError("write failed for " + tmp);
  }
  fs::rename(tmp, path);
}

inline void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

inline json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path.string() + " is not valid JSON: " + e.what());
  }
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// manifest.json: relative path -> {sha256, bytes} for every artifact under
// the output directory (checkpoints and temporaries excluded).
inline json write_manifest(const fs::path& out_dir) {
  std::map<std::string, fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(out_dir)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), out_dir).generic_string();
    const auto ext = entry.path().extension().string();
    if (rel == "manifest.json" || ext == ".tmp" || ext == ".ckpt") continue;
    files[rel] = entry.path();
  }
  json m;
  m["algorithm"] = "sha256";
  auto& list = m["files"] = json::object();
  for (const auto& [rel, path] : files) {
    list[rel] = {{"sha256", sha256_file(path)}, {"bytes", fs::file_size(path)}};
  }
  write_json(out_dir / "manifest.json", m);
  return m;
}

// Append-only per-column checkpoint for one representation. Layout:
//   "IACK" u64 run_key, then records of
//   u64 column, u64 length, length x f32, u64 checksum
// A trailing partial or corrupt record (interrupted write) is ignored.
class ColumnCheckpoint {
 public:
  ColumnCheckpoint(fs::path path, std::uint64_t run_key) : path_(std::move(path)), key_(run_key) { load(); }

  std::optional<std::vector<float>> find(std::size_t column) const {
    auto it = columns_.find(column);
    if (it == columns_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t restored_count() const { return columns_.size(); }

  void append(std::size_t column, std::span<const float> values) {
    std::lock_guard lock(mu_);
    std::ostringstream rec;
    detail::put_le<std::uint64_t>(rec, column);
    detail::put_le<std::uint64_t>(rec, values.size());
    for (float v : values) detail::put_le<float>(rec, v);
    detail::put_le<std::uint64_t>(rec, checksum(column, values));
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) throw DataError("cannot append to checkpoint " + path_.string());
    const auto bytes = rec.str();
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
  }

  void remove() {
    std::error_code ec;
    fs::remove(path_, ec);
  }

 private:
  static std::uint64_t checksum(std::size_t column, std::span<const float> values) {
    std::uint64_t h = combine_keys(0x636b7074ULL, column);
    for (float v : values) h = combine_keys(h, std::bit_cast<std::uint32_t>(v));
    return h;
  }

  void write_header() {
    if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::binary | std::ios::trunc);
    out.write("IACK", 4);
    detail::put_le<std::uint64_t>(out, key_);
  }

  void load() {
    std::ifstream in(path_, std::ios::binary);
    char magic[4] = {};
    if (!in || !in.read(magic, 4) || std::string_view(magic, 4) != "IACK") {
      write_header();
      return;
    }
    try {
      if (detail::get_le<std::uint64_t>(in) != key_) {
        in.close();
        write_header();
        return;
      }
    } catch (const DataError&) {
      in.close();
      write_header();
      return;
    }
    std::streamoff good_end = in.tellg();
    try {
      while (in.peek() != std::char_traits<char>::eof()) {
        const auto column = detail::get_le<std::uint64_t>(in);
        const auto length = detail::get_le<std::uint64_t>(in);
        if (length > (std::uint64_t{1} << 32)) break;
        std::vector<float> values(length);
        for (auto& v : values) v = detail::get_le<float>(in);
        if (detail::get_le<std::uint64_t>(in) != checksum(column, values)) break;
        columns_[column] = std::move(values);
        good_end = in.tellg();
      }
    } catch (const DataError&) {
    }
    in.close();
    // Drop any torn tail so later appends follow a valid record.
    if (static_cast<std::uintmax_t>(good_end) != fs::file_size(path_)) fs::resize_file(path_, good_end);
  }

  fs::path path_;
  std::uint64_t key_;
  std::map<std::size_t, std::vector<float>> columns_;
  std::mutex mu_;
};

}  // namespace infoaccess::pipeline
