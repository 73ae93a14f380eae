#include "cts/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace cts {

namespace {

constexpr char kMagic[8] = {'C', 'T', 'S', 'C', 'K', 'P', 'T', '1'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const char* what) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error(std::string("checkpoint: truncated while reading ") + what);
  return v;
}

}  // namespace

void save_checkpoint(const PolicyParams& params, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("checkpoint: cannot open for writing: " + path);

  os.write(kMagic, sizeof(kMagic));
  write_pod<uint32_t>(os, kVersion);
  const NetworkConfig& n = params.net;
  write_pod<int32_t>(os, n.num_rays);
  write_pod<int32_t>(os, n.nonvisual_dim);
  write_pod<int32_t>(os, n.encoder_hidden);
  write_pod<int32_t>(os, n.encoder_out);
  write_pod<int32_t>(os, n.trunk_width);
  write_pod<int32_t>(os, n.hidden_size);
  write_pod<int32_t>(os, n.action_dim);
  write_pod<double>(os, n.log_std_init);
  write_pod<double>(os, n.log_std_min);
  write_pod<double>(os, n.log_std_max);

  const auto& tensors = params.layout.tensors();
  write_pod<uint32_t>(os, static_cast<uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    write_pod<uint32_t>(os, static_cast<uint32_t>(t.name.size()));
    os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    write_pod<uint32_t>(os, static_cast<uint32_t>(t.rows));
    write_pod<uint32_t>(os, static_cast<uint32_t>(t.cols));
    std::vector<float> block(static_cast<size_t>(t.size()));
    for (long i = 0; i < t.size(); ++i)
      block[static_cast<size_t>(i)] = static_cast<float>(params.flat[t.offset + i]);
    os.write(reinterpret_cast<const char*>(block.data()),
             static_cast<std::streamsize>(block.size() * sizeof(float)));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed: " + path);
}

PolicyParams load_checkpoint(const std::string& path) {
  if (!std::filesystem::exists(path))
    throw std::runtime_error("checkpoint not found: " + path);
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);

  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  const auto version = read_pod<uint32_t>(is, "version");
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version in " + path);

  NetworkConfig n;
  n.num_rays = read_pod<int32_t>(is, "num_rays");
  n.nonvisual_dim = read_pod<int32_t>(is, "nonvisual_dim");
  n.encoder_hidden = read_pod<int32_t>(is, "encoder_hidden");
  n.encoder_out = read_pod<int32_t>(is, "encoder_out");
  n.trunk_width = read_pod<int32_t>(is, "trunk_width");
  n.hidden_size = read_pod<int32_t>(is, "hidden_size");
  n.action_dim = read_pod<int32_t>(is, "action_dim");
  n.log_std_init = read_pod<double>(is, "log_std_init");
  n.log_std_min = read_pod<double>(is, "log_std_min");
  n.log_std_max = read_pod<double>(is, "log_std_max");

  PolicyParams params(n);
  const auto count = read_pod<uint32_t>(is, "tensor count");
  if (count != params.layout.tensors().size())
    throw std::runtime_error("checkpoint: tensor count mismatch in " + path);

  for (const auto& t : params.layout.tensors()) {
    const auto name_len = read_pod<uint32_t>(is, "tensor name length");
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const auto rows = read_pod<uint32_t>(is, "tensor rows");
    const auto cols = read_pod<uint32_t>(is, "tensor cols");
    if (!is || name != t.name || rows != static_cast<uint32_t>(t.rows) ||
        cols != static_cast<uint32_t>(t.cols))
      throw std::runtime_error("checkpoint: tensor shape mismatch for '" +
                               name + "' in " + path);
    std::vector<float> block(static_cast<size_t>(t.size()));
    is.read(reinterpret_cast<char*>(block.data()),
            static_cast<std::streamsize>(block.size() * sizeof(float)));
    if (!is) throw std::runtime_error("checkpoint: truncated tensor data in " + path);
    for (long i = 0; i < t.size(); ++i)
      params.flat[t.offset + i] = static_cast<double>(block[static_cast<size_t>(i)]);
  }
  return params;
}

}  // namespace cts
