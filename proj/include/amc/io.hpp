#pragma once

#include "amc/zoo.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace amc {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts unsupported");

namespace detail {

template <class T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw DataError("unexpected end of file");
  return v;
}

inline void write_bytes(std::ostream& os, const void* p, std::size_t n) {
  os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline std::string read_string(std::istream& is, std::size_t n) {
  std::string s(n, '\0');
  is.read(s.data(), static_cast<std::streamsize>(n));
  if (!is) throw DataError("unexpected end of file");
  return s;
}

}  // namespace detail

constexpr char kAmcdMagic[4] = {'A', 'M', 'C', 'D'};
constexpr std::uint16_t kAmcdVersion = 1;
constexpr char kAttackTrailerMagic[4] = {'A', 'T', 'T', 'K'};

/// Portable dataset serialization. Layout: magic "AMCD", u16 version, u32
/// frame length, u32 frame count, u8 class count, class-name table, u8
/// domain tag, f64 snr_db, u64 seed, then per frame a u8 label followed by
/// the I column and the Q column as f32 little-endian. Perturbed datasets
/// append a tagged "ATTK" trailer.
inline void save_amcd(const Dataset& ds, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path);
  detail::write_bytes(os, kAmcdMagic, 4);
  detail::write_pod(os, kAmcdVersion);
  detail::write_pod(os, static_cast<std::uint32_t>(ds.frame_len()));
  detail::write_pod(os, static_cast<std::uint32_t>(ds.frames.size()));
  detail::write_pod(os, static_cast<std::uint8_t>(ds.class_names.size()));
  for (const auto& name : ds.class_names) {
    detail::write_pod(os, static_cast<std::uint8_t>(name.size()));
    detail::write_bytes(os, name.data(), name.size());
  }
  detail::write_pod(os, static_cast<std::uint8_t>(ds.domain));
  detail::write_pod(os, ds.snr_db);
  detail::write_pod(os, ds.seed);

  const int len = ds.frame_len();
  std::vector<float> col(len);
  for (std::size_t i = 0; i < ds.frames.size(); ++i) {
    detail::write_pod(os, ds.labels[i]);
    for (int c = 0; c < 2; ++c) {
      for (int k = 0; k < len; ++k) col[k] = ds.frames[i](k, c);
      detail::write_bytes(os, col.data(), col.size() * sizeof(float));
    }
  }

  if (ds.attack) {
    const AttackInfo& a = *ds.attack;
    detail::write_bytes(os, kAttackTrailerMagic, 4);
    detail::write_pod(os, static_cast<std::uint16_t>(1));  // trailer version
    detail::write_pod(os, static_cast<std::uint8_t>(a.method.size()));
    detail::write_bytes(os, a.method.data(), a.method.size());
    detail::write_pod(os, a.budget);
    detail::write_pod(os, a.alpha);
    detail::write_pod(os, a.iterations);
    detail::write_pod(os, static_cast<std::uint8_t>(a.convention.size()));
    detail::write_bytes(os, a.convention.data(), a.convention.size());
    detail::write_pod(os, a.surrogate_checksum);
  }
  if (!os) throw DataError("write failed: " + path);
}

inline Dataset load_amcd(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kAmcdMagic, 4) != 0)
    throw DataError("not an .amcd file: " + path);
  const auto version = detail::read_pod<std::uint16_t>(is);
  if (version != kAmcdVersion)
    throw DataError("unsupported .amcd version " + std::to_string(version));
  const auto len = detail::read_pod<std::uint32_t>(is);
  const auto count = detail::read_pod<std::uint32_t>(is);
  const auto num_classes = detail::read_pod<std::uint8_t>(is);

  Dataset ds;
  for (int c = 0; c < num_classes; ++c) {
    const auto n = detail::read_pod<std::uint8_t>(is);
    ds.class_names.push_back(detail::read_string(is, n));
  }
  const auto domain = detail::read_pod<std::uint8_t>(is);
  if (domain > 1) throw DataError("invalid domain tag");
  ds.domain = static_cast<Domain>(domain);
  ds.snr_db = detail::read_pod<double>(is);
  ds.seed = detail::read_pod<std::uint64_t>(is);

  ds.frames.reserve(count);
  ds.labels.reserve(count);
  std::vector<float> col(len);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto label = detail::read_pod<std::uint8_t>(is);
    if (label >= num_classes) throw DataError("label out of range in file");
    Frame f(len, 2);
    for (int c = 0; c < 2; ++c) {
      is.read(reinterpret_cast<char*>(col.data()), len * sizeof(float));
      if (!is) throw DataError("truncated frame data");
      for (std::uint32_t k = 0; k < len; ++k) f(k, c) = col[k];
    }
    ds.frames.push_back(std::move(f));
    ds.labels.push_back(label);
  }

  // optional attack trailer
  char tmagic[4];
  is.read(tmagic, 4);
  if (is && std::memcmp(tmagic, kAttackTrailerMagic, 4) == 0) {
    const auto tversion = detail::read_pod<std::uint16_t>(is);
    if (tversion != 1)
      throw DataError("unsupported attack trailer version");
    AttackInfo a;
    a.method = detail::read_string(is, detail::read_pod<std::uint8_t>(is));
    a.budget = detail::read_pod<double>(is);
    a.alpha = detail::read_pod<double>(is);
    a.iterations = detail::read_pod<std::uint32_t>(is);
    a.convention = detail::read_string(is, detail::read_pod<std::uint8_t>(is));
    a.surrogate_checksum = detail::read_pod<std::uint64_t>(is);
    ds.attack = a;
  }
  return ds;
}

constexpr std::uint32_t kCkptJsonMax = 1u << 20;

/// Checkpoint: u32 JSON header length, UTF-8 JSON metadata, then every
/// parameter tensor as raw f32 in network order.
inline void save_checkpoint(Model& model, const std::string& path) {
  nlohmann::json meta;
  meta["format"] = "amc-ckpt";
  meta["version"] = 1;
  meta["architecture"] = arch_name(model.arch);
  meta["domain"] = domain_name(model.domain);
  meta["frame_len"] = model.len;
  meta["num_classes"] = model.num_classes;
  meta["seed"] = model.seed;
  meta["epochs_trained"] = model.epochs_trained();
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : model.net.layers) layers.push_back(layer_kind(l));
  meta["layers"] = layers;
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& e : model.history)
    hist.push_back({{"train_acc", e.train_acc},
                    {"val_acc", e.val_acc},
                    {"train_loss", e.train_loss},
                    {"val_loss", e.val_loss}});
  meta["history"] = hist;

  const std::string header = meta.dump();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open for writing: " + path);
  detail::write_pod(os, static_cast<std::uint32_t>(header.size()));
  detail::write_bytes(os, header.data(), header.size());
  model.net.for_each_param([&](auto p, auto) {
    detail::write_bytes(os, p.data(), p.size() * sizeof(float));
  });
  if (!os) throw DataError("write failed: " + path);
}

inline Model load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path);
  const auto hlen = detail::read_pod<std::uint32_t>(is);
  if (hlen == 0 || hlen > kCkptJsonMax)
    throw DataError("not a checkpoint file: " + path);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(detail::read_string(is, hlen));
  } catch (const nlohmann::json::exception&) {
    throw DataError("malformed checkpoint header: " + path);
  }
  if (meta.value("format", "") != "amc-ckpt" || meta.value("version", 0) != 1)
    throw DataError("unsupported checkpoint format: " + path);

  Model model = build_model(arch_from_name(meta.at("architecture")),
                            meta.at("domain") == "freq" ? Domain::Freq
                                                        : Domain::Time,
                            meta.at("frame_len"), meta.at("num_classes"),
                            meta.at("seed"));
  for (const auto& e : meta.value("history", nlohmann::json::array())) {
    EpochStats s;
    s.train_acc = e.value("train_acc", 0.0);
    s.val_acc = e.value("val_acc", 0.0);
    s.train_loss = e.value("train_loss", 0.0);
    s.val_loss = e.value("val_loss", 0.0);
    model.history.push_back(s);
  }
  model.net.for_each_param([&](auto p, auto) {
    is.read(reinterpret_cast<char*>(p.data()), p.size() * sizeof(float));
    if (!is) throw DataError("truncated checkpoint parameters: " + path);
  });
  return model;
}

inline void save_history_csv(const Model& model, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("cannot open for writing: " + path);
  os << "epoch,train_acc,val_acc,train_loss,val_loss\n";
  char buf[160];
  for (std::size_t i = 0; i < model.history.size(); ++i) {
    const auto& e = model.history[i];
    std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f,%.6f,%.6f\n", i + 1,
                  e.train_acc, e.val_acc, e.train_loss, e.val_loss);
    os << buf;
  }
}

}  // namespace amc
