#include "sanet/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace sanet {
namespace {

constexpr char kMagic[4] = {'S', 'A', 'N', 'C'};
constexpr uint8_t kVersion = 1;

constexpr uint64_t bswap64(uint64_t x) {
  return ((x & 0x00000000000000FFULL) << 56) |
         ((x & 0x000000000000FF00ULL) << 40) |
         ((x & 0x0000000000FF0000ULL) << 24) |
         ((x & 0x00000000FF000000ULL) << 8) |
         ((x & 0x000000FF00000000ULL) >> 8) |
         ((x & 0x0000FF0000000000ULL) >> 24) |
         ((x & 0x00FF000000000000ULL) >> 40) |
         ((x & 0xFF00000000000000ULL) >> 56);
}

void append_le_doubles(std::string& out, const std::vector<double>& values) {
  for (double v : values) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    if constexpr (std::endian::native == std::endian::big) bits = bswap64(bits);
    out.append(reinterpret_cast<const char*>(&bits), 8);
  }
}

double read_le_double(const char* p) {
  uint64_t bits;
  std::memcpy(&bits, p, 8);
  if constexpr (std::endian::native == std::endian::big) bits = bswap64(bits);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

nlohmann::json arch_json(const SanetConfig& config) {
  nlohmann::json dirs = nlohmann::json::array();
  for (Direction dir : config.msc_directions)
    dirs.push_back(std::string(direction_token(dir)));
  return {{"stage_channels", config.backbone.stage_channels},
          {"n_classes", config.n_classes},
          {"msc_kernel_size", config.msc_kernel_size},
          {"msc_directions", dirs}};
}

SanetConfig arch_from_json(const nlohmann::json& arch) {
  SanetConfig config;
  const auto channels = arch.at("stage_channels");
  if (!channels.is_array() || channels.size() != 3)
    throw FormatError("checkpoint: stage_channels must have 3 entries");
  for (size_t i = 0; i < 3; ++i)
    config.backbone.stage_channels[i] = channels[i].get<int>();
  config.n_classes = arch.at("n_classes").get<int>();
  config.msc_kernel_size = arch.at("msc_kernel_size").get<int>();
  config.msc_directions.clear();
  for (const auto& token : arch.at("msc_directions"))
    config.msc_directions.push_back(parse_direction(token.get<std::string>()));
  return config;
}

}  // namespace

void save_checkpoint(const std::string& path, const SanetParams& params) {
  nlohmann::json manifest;
  manifest["arch"] = arch_json(params.config);
  nlohmann::json entries = nlohmann::json::array();

  std::string blob;
  uint64_t offset = 0;
  for (const Parameter& p : params.parameters()) {
    entries.push_back({{"name", p.name},
                       {"shape", p.value.shape()},
                       {"offset", offset},
                       {"count", p.value.numel()}});
    append_le_doubles(blob, p.value.values());
    offset += static_cast<uint64_t>(p.value.numel()) * 8;
  }
  manifest["params"] = entries;

  const std::string text = manifest.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(kMagic, 4);
  out.put(static_cast<char>(kVersion));
  const auto len = static_cast<uint32_t>(text.size());
  char len_le[4] = {static_cast<char>(len & 0xFF),
                    static_cast<char>((len >> 8) & 0xFF),
                    static_cast<char>((len >> 16) & 0xFF),
                    static_cast<char>((len >> 24) & 0xFF)};
  out.write(len_le, 4);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
}

SanetParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  if (bytes.size() < 9 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError("checkpoint: bad magic");
  if (static_cast<uint8_t>(bytes[4]) != kVersion)
    throw FormatError("checkpoint: unsupported format version");
  const auto* lp = reinterpret_cast<const uint8_t*>(bytes.data() + 5);
  const uint32_t manifest_len = static_cast<uint32_t>(lp[0]) |
                                (static_cast<uint32_t>(lp[1]) << 8) |
                                (static_cast<uint32_t>(lp[2]) << 16) |
                                (static_cast<uint32_t>(lp[3]) << 24);
  if (bytes.size() < 9 + static_cast<size_t>(manifest_len))
    throw FormatError("checkpoint: truncated manifest");

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(bytes.substr(9, manifest_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: bad manifest: ") + e.what());
  }

  SanetParams params = init_sanet(arch_from_json(manifest.at("arch")), 0);
  const char* blob = bytes.data() + 9 + manifest_len;
  const size_t blob_size = bytes.size() - 9 - manifest_len;

  auto live = params.parameters();
  const auto& entries = manifest.at("params");
  if (entries.size() != live.size())
    throw FormatError("checkpoint: parameter count does not match architecture");
  for (size_t i = 0; i < live.size(); ++i) {
    const auto& entry = entries[i];
    if (entry.at("name").get<std::string>() != live[i].name)
      throw FormatError("checkpoint: unexpected parameter " +
                        entry.at("name").get<std::string>());
    const auto shape = entry.at("shape").get<std::vector<int>>();
    if (shape != live[i].value.shape())
      throw FormatError("checkpoint: shape mismatch for " + live[i].name);
    const auto offset = entry.at("offset").get<uint64_t>();
    const auto count = entry.at("count").get<uint64_t>();
    if (count != static_cast<uint64_t>(live[i].value.numel()))
      throw FormatError("checkpoint: element count mismatch for " + live[i].name);
    if (offset + count * 8 > blob_size)
      throw FormatError("checkpoint: blob out of range for " + live[i].name);
    double* dst = live[i].value.data();
    for (uint64_t j = 0; j < count; ++j)
      dst[j] = read_le_double(blob + offset + j * 8);
    live[i].value.check_finite("checkpoint parameter " + live[i].name);
  }
  return params;
}

}  // namespace sanet
