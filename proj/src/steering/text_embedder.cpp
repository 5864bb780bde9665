// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "chronosteer/errors.hpp"
#include "chronosteer/steering.hpp"
#include "vector_table.hpp"

namespace chronosteer::steering {
namespace {

// FNV-1a over the trigram bytes, seeded, with a final avalanche.
std::uint64_t trigram_hash(std::string_view gram, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ (seed * 0x9e3779b97f4a7c15ULL);
  for (unsigned char c : gram) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  return h;
}

void normalize_in_place(Vector& v, std::string_view what) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (!(norm > 0.0) || !std::isfinite(norm))
    throw DomainError("embedding for '" + std::string(what) + "' has zero norm");
  for (double& x : v) x /= norm;
}

}  // namespace

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("cosine: length mismatch");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) throw UsageError("cosine: zero vector");
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

TextEmbedder TextEmbedder::trigram(std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw UsageError("text embedder: dimension must be positive");
  TextEmbedder e;
  e.mode_ = Mode::kTrigramHash;
  e.dim_ = dim;
  e.seed_ = seed;
  return e;
}

TextEmbedder TextEmbedder::table(std::vector<std::pair<std::string, Vector>> rows) {
  if (rows.empty()) throw UsageError("text embedder: empty table");
  TextEmbedder e;
  e.mode_ = Mode::kFileTable;
  e.dim_ = rows.front().second.size();
  for (auto& [text, v] : rows) {
    if (text.empty()) throw UsageError("text embedder: empty key in table");
    if (v.size() != e.dim_ || v.empty())
      throw FormatError("text embedder: row '" + text + "' has " + std::to_string(v.size()) +
                        " values, expected " + std::to_string(e.dim_));
    normalize_in_place(v, text);
  }
  e.rows_ = std::move(rows);
  return e;
}

TextEmbedder TextEmbedder::load_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open embedding table " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return table(parse_vector_table(ss.str()));
}

Vector TextEmbedder::embed(std::string_view text) const {
  if (text.empty()) throw UsageError("embed_text: empty text");
  if (mode_ == Mode::kFileTable) {
    for (const auto& [key, v] : rows_)
      if (key == text) return v;
    throw LookupError("embed_text: '" + std::string(text) + "' not in table");
  }
  std::string padded = "^";
  for (unsigned char c : text) padded.push_back(static_cast<char>(std::tolower(c)));
  padded.push_back('$');
  Vector v(dim_, 0.0);
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
    const std::uint64_t h = trigram_hash(std::string_view(padded).substr(i, 3), seed_);
    v[h % dim_] += (h >> 63) ? -1.0 : 1.0;
  }
  normalize_in_place(v, text);
  return v;
}

std::vector<std::pair<std::string, Vector>> parse_vector_table(std::string_view text) {
  std::vector<std::pair<std::string, Vector>> rows;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos)
      throw FormatError("vector table line " + std::to_string(line_no) + ": missing tab");
    Vector v;
    std::string_view rest = line.substr(tab + 1);
    while (!rest.empty()) {
      while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
      if (rest.empty()) break;
      double x = 0.0;
      const auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), x);
      if (ec != std::errc())
        throw FormatError("vector table line " + std::to_string(line_no) + ": bad number");
      rest.remove_prefix(static_cast<std::size_t>(ptr - rest.data()));
      v.push_back(x);
    }
    rows.emplace_back(std::string(line.substr(0, tab)), std::move(v));
  }
  return rows;
}

}  // namespace chronosteer::steering
