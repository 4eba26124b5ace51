#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Container shared by volume and checkpoint files:
//   8-byte magic | u64 LE header length | JSON header | raw payload
namespace slicevol::io {

inline constexpr std::size_t kMagicSize = 8;

std::string pack(std::string_view magic, std::string_view header, std::string_view payload);

struct Unpacked {
  std::string header;
  std::string_view payload;
};

// Throws HeaderError on a wrong magic, TruncationError when the header is cut short.
Unpacked unpack(std::string_view bytes, std::string_view magic, std::string_view what);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

std::string encode_f32le(std::span<const float> values);
std::vector<float> decode_f32le(std::string_view bytes);
std::string encode_f64le(std::span<const double> values);
std::vector<double> decode_f64le(std::string_view bytes);

}  // namespace slicevol::io
