// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "chronosteer/errors.hpp"
#include "chronosteer/json_io.hpp"
#include "chronosteer/service.hpp"

namespace chronosteer::service {
namespace {

constexpr char kMagic[8] = {'C', 'S', 'T', 'C', 'K', 'P', 'T', '\0'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n) {
    if (bytes_.size() - pos_ < n) throw FormatError("checkpoint truncated");
    const std::string_view s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::uint64_t uint(int width) {
    const std::string_view s = take(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = width - 1; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(s[i]);
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const num::Tensor& Checkpoint::array(std::string_view name) const {
  for (const auto& [n, t] : arrays)
    if (n == name) return t;
  throw FormatError("checkpoint has no array '" + std::string(name) + "'");
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  std::string out(kMagic, sizeof kMagic);
  put_u32(out, kCheckpointVersion);
  const std::string meta = dump_json(ckpt.metadata);
  put_u32(out, static_cast<std::uint32_t>(meta.size()));
  out += meta;
  put_u32(out, static_cast<std::uint32_t>(ckpt.arrays.size()));
  for (const auto& [name, t] : ckpt.arrays) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put_u64(out, d);
    for (double v : t.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(sizeof kMagic) != std::string_view(kMagic, sizeof kMagic))
    throw FormatError("not a checkpoint file (bad magic)");
  const std::uint64_t version = r.uint(4);
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version) +
                      " (this build reads version " + std::to_string(kCheckpointVersion) + ")");
  Checkpoint ckpt;
  const std::string_view meta = r.take(r.uint(4));
  try {
    ckpt.metadata = json::parse(meta);
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint metadata: ") + e.what());
  }
  const std::uint64_t count = r.uint(4);
  for (std::uint64_t a = 0; a < count; ++a) {
    std::string name(r.take(r.uint(4)));
    const std::uint64_t rank = r.uint(4);
    if (rank == 0 || rank > 8) throw FormatError("checkpoint array '" + name + "': bad rank");
    num::Shape shape;
    for (std::uint64_t i = 0; i < rank; ++i) shape.push_back(r.uint(8));
    const std::size_t n = num::shape_size(shape);
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) values[i] = std::bit_cast<double>(r.uint(8));
    ckpt.arrays.emplace_back(std::move(name), num::Tensor(std::move(shape), std::move(values)));
  }
  if (!r.done()) throw FormatError("checkpoint has trailing bytes");
  return ckpt;
}

namespace {

json backbone_config_json(const backbone::BackboneConfig& c) {
  return {{"history", c.history}, {"horizon", c.horizon}, {"patch", c.patch},
          {"width", c.width},     {"depth", c.depth},     {"heads", c.heads},
          {"ffn", c.ffn},         {"head", std::string(backbone::head_name(c.head))},
          {"seed", c.seed}};
}

backbone::BackboneConfig backbone_config_from(const json& j) {
  backbone::BackboneConfig c;
  c.history = j.at("history");
  c.horizon = j.at("horizon");
  c.patch = j.at("patch");
  c.width = j.at("width");
  c.depth = j.at("depth");
  c.heads = j.at("heads");
  c.ffn = j.at("ffn");
  c.head = backbone::parse_head(j.at("head").get<std::string>());
  c.seed = j.at("seed");
  return c;
}

void copy_into(num::Tensor& dst, const num::Tensor& src, const std::string& name) {
  if (dst.shape() != src.shape())
    throw FormatError("checkpoint array '" + name + "' has shape " + num::shape_string(src.shape()) +
                      ", expected " + num::shape_string(dst.shape()));
  const bool grad = dst.requires_grad();
  dst = src;
  dst.set_requires_grad(grad);
}

}  // namespace

Checkpoint bundle_checkpoint(const steering::ModelBundle& b, const json& provenance) {
  Checkpoint c;
  json& m = c.metadata;
  m["format"] = "chronosteer-bundle";
  m["backbone"] = backbone_config_json(b.backbone.config);
  m["backbone"]["frozen"] = b.backbone.frozen;
  const auto& mc = b.mapper.config;
  m["mapper"] = {{"variant", steering::variant_name(mc.variant)},
                 {"text_dim", mc.text_dim},
                 {"hidden", mc.hidden},
                 {"series_dim", mc.series_dim},
                 {"seed", mc.seed}};
  const bool table = b.embedder.mode() == steering::TextEmbedder::Mode::kFileTable;
  m["embedder"] = {{"mode", table ? "file_table" : "trigram_hash"},
                   {"dim", b.embedder.dim()},
                   {"seed", b.embedder.seed()}};
  json texts = json::array();
  for (const steering::Anchor& a : b.codebook.anchors()) texts.push_back(a.text);
  m["codebook"] = texts;
  m["provenance"] = provenance;
  m["checksums"] = {{"backbone", b.backbone.checksum()},
                    {"codebook", b.codebook.checksum()},
                    {"mapper", b.mapper.checksum()}};

  for (const auto& [name, t] : b.backbone.named_parameters())
    c.arrays.emplace_back("backbone." + name, *t);
  c.arrays.emplace_back("codebook.embeddings", b.codebook.matrix());
  for (const auto& [name, t] : b.mapper.named_parameters()) c.arrays.emplace_back(name, *t);
  if (table) {
    json keys = json::array();
    num::Tensor rows({b.embedder.rows().size(), b.embedder.dim()});
    for (std::size_t i = 0; i < b.embedder.rows().size(); ++i) {
      keys.push_back(b.embedder.rows()[i].first);
      for (std::size_t j = 0; j < b.embedder.dim(); ++j) rows.at(i, j) = b.embedder.rows()[i].second[j];
    }
    m["embedder"]["keys"] = keys;
    c.arrays.emplace_back("embedder.table", std::move(rows));
  }
  for (auto& [name, t] : c.arrays) t.set_requires_grad(false);
  return c;
}

steering::ModelBundle bundle_from_checkpoint(const Checkpoint& c) {
  try {
    const json& m = c.metadata;
    if (m.at("format") != "chronosteer-bundle") throw FormatError("not a model bundle checkpoint");
    steering::ModelBundle b;
    b.backbone = backbone::BackboneModel::initialize(backbone_config_from(m.at("backbone")));
    for (auto& [name, t] : b.backbone.named_parameters())
      copy_into(*t, c.array("backbone." + name), "backbone." + name);
    if (m.at("backbone").at("frozen").get<bool>()) backbone::freeze(b.backbone);

    const json& e = m.at("embedder");
    if (e.at("mode") == "file_table") {
      const num::Tensor& rows = c.array("embedder.table");
      std::vector<std::pair<std::string, steering::Vector>> table;
      const json& keys = e.at("keys");
      if (keys.size() != rows.rows()) throw FormatError("embedder table size mismatch");
      for (std::size_t i = 0; i < rows.rows(); ++i)
        table.emplace_back(keys[i].get<std::string>(),
                           steering::Vector(rows.data().begin() + i * rows.cols(),
                                            rows.data().begin() + (i + 1) * rows.cols()));
      b.embedder = steering::TextEmbedder::table(std::move(table));
    } else {
      b.embedder = steering::TextEmbedder::trigram(e.at("dim"), e.at("seed"));
    }

    const num::Tensor& emb = c.array("codebook.embeddings");
    const json& texts = m.at("codebook");
    if (texts.size() != emb.rows()) throw FormatError("codebook size mismatch");
    std::vector<steering::Anchor> anchors;
    for (std::size_t i = 0; i < emb.rows(); ++i)
      anchors.push_back({texts[i].get<std::string>(),
                         steering::Vector(emb.data().begin() + i * emb.cols(),
                                          emb.data().begin() + (i + 1) * emb.cols())});
    b.codebook = steering::AnchorCodebook::from_anchors(std::move(anchors));

    const json& mj = m.at("mapper");
    steering::MapperConfig mc;
    mc.variant = steering::parse_variant(mj.at("variant").get<std::string>());
    mc.text_dim = mj.at("text_dim");
    mc.hidden = mj.at("hidden");
    mc.series_dim = mj.at("series_dim");
    mc.seed = mj.at("seed");
    b.mapper = steering::AlignmentMapper::initialize(mc);
    for (auto& [name, t] : b.mapper.named_parameters()) copy_into(*t, c.array(name), name);
    return b;
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint metadata: ") + e.what());
  } catch (const UsageError& e) {
    throw FormatError(std::string("checkpoint metadata: ") + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write to " + path);
}

void save_bundle(const std::string& path, const steering::ModelBundle& bundle,
                 const json& provenance) {
  write_file(path, encode_checkpoint(bundle_checkpoint(bundle, provenance)));
}

steering::ModelBundle load_bundle(const std::string& path, json* provenance) {
  const Checkpoint c = decode_checkpoint(read_file(path));
  if (provenance) *provenance = c.metadata.value("provenance", json::object());
  return bundle_from_checkpoint(c);
}

}  // namespace chronosteer::service
