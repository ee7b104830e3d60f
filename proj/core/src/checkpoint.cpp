#include "kgd/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include <nlohmann/json.hpp>

#include "kgd/error.hpp"

namespace kgd::ad {
namespace {

constexpr std::array<char, 8> kMagic = {'K', 'G', 'D', 'P', 'A', 'R', 'A', 'M'};

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const std::string& metadata_json,
                      const std::vector<const Parameter*>& parameters) {
  nlohmann::json manifest;
  manifest["format"] = 1;
  manifest["metadata"] = nlohmann::json::parse(metadata_json);
  manifest["parameters"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const Parameter* p : parameters) {
    manifest["parameters"].push_back(
        {{"name", p->name}, {"shape", p->value.shape()}, {"offset", offset}});
    offset += p->value.size();
  }
  const std::string header = manifest.dump();

  std::string bytes(kMagic.begin(), kMagic.end());
  put_u64(bytes, header.size());
  bytes += header;
  bytes.reserve(bytes.size() + offset * 8);
  for (const Parameter* p : parameters) {
    for (double v : p->value.values()) put_u64(bytes, std::bit_cast<std::uint64_t>(v));
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw Error(path.string() + ": not a kgd parameter checkpoint");
  }
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint64_t header_len = get_u64(raw + 8);
  if (16 + header_len > bytes.size()) throw Error(path.string() + ": truncated manifest");
  const auto manifest = nlohmann::json::parse(bytes.substr(16, header_len));
  if (manifest.at("format").get<int>() != 1) {
    throw Error(path.string() + ": unsupported checkpoint format");
  }

  Checkpoint ckpt;
  ckpt.metadata_json = manifest.at("metadata").dump();
  const std::size_t payload = 16 + header_len;
  for (const auto& entry : manifest.at("parameters")) {
    Shape shape = entry.at("shape").get<Shape>();
    const std::uint64_t off = entry.at("offset").get<std::uint64_t>();
    const std::size_t n = element_count(shape);
    if (payload + (off + n) * 8 > bytes.size()) {
      throw Error(path.string() + ": truncated payload for " + entry.at("name").get<std::string>());
    }
    std::vector<double> values(n);
    for (std::size_t i = 0; i < n; ++i) {
      values[i] = std::bit_cast<double>(get_u64(raw + payload + (off + i) * 8));
    }
    ckpt.parameters.emplace_back(entry.at("name").get<std::string>(),
                                 Tensor(std::move(shape), std::move(values)));
  }
  return ckpt;
}

void load_parameters(const Checkpoint& checkpoint, const std::vector<Parameter*>& targets) {
  std::map<std::string, const Parameter*> by_name;
  for (const Parameter& p : checkpoint.parameters) by_name[p.name] = &p;
  for (Parameter* t : targets) {
    auto it = by_name.find(t->name);
    if (it == by_name.end()) throw Error("checkpoint is missing parameter " + t->name);
    if (it->second->value.shape() != t->value.shape()) {
      throw ShapeError("checkpoint parameter " + t->name + " has shape " +
                       shape_string(it->second->value.shape()) + ", expected " +
                       shape_string(t->value.shape()));
    }
    t->value = it->second->value;
    t->zero_grad();
  }
}

}  // namespace kgd::ad
