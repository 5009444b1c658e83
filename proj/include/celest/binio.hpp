#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace celest {

// Container used by all binary artifacts (embedding models, weight
// checkpoints): 8-byte magic, u32 header length, JSON header bytes, then a
// raw little-endian float32 payload.
struct BlobFile {
  static void write(const std::filesystem::path& path, const char magic[8],
                    const std::string& header_json,
                    const std::vector<float>& payload) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write: " + path.string());
    out.write(magic, 8);
    std::uint32_t hlen = static_cast<std::uint32_t>(header_json.size());
    out.write(reinterpret_cast<const char*>(&hlen), 4);
    out.write(header_json.data(), hlen);
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(float)));
  }

  static std::pair<std::string, std::vector<float>> read(
      const std::filesystem::path& path, const char magic[8]) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read: " + path.string());
    char m[8];
    in.read(m, 8);
    if (!in || std::memcmp(m, magic, 8) != 0)
      throw std::runtime_error("bad magic in " + path.string());
    std::uint32_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), 4);
    std::string header(hlen, '\0');
    in.read(header.data(), hlen);
    std::vector<float> payload;
    in.seekg(0, std::ios::end);
    auto end = in.tellg();
    auto data_start = static_cast<std::streamoff>(12 + hlen);
    std::size_t nbytes = static_cast<std::size_t>(end - data_start);
    payload.resize(nbytes / sizeof(float));
    in.seekg(data_start);
    in.read(reinterpret_cast<char*>(payload.data()),
            static_cast<std::streamsize>(nbytes));
    if (!in) throw std::runtime_error("truncated file: " + path.string());
    return {std::move(header), std::move(payload)};
  }
};

}  // namespace celest
