#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace evdet::io {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

// Little-endian field packing shared by the binary formats.
void put_u16(std::string& out, std::uint16_t v);
void put_u32(std::string& out, std::uint32_t v);
void put_u64(std::string& out, std::uint64_t v);
void put_f32(std::string& out, float v);

std::uint16_t get_u16(const unsigned char* p);
std::uint32_t get_u32(const unsigned char* p);
std::uint64_t get_u64(const unsigned char* p);
float get_f32(const unsigned char* p);

/// Splits one CSV line on commas (no quoting); strips a trailing CR.
std::vector<std::string_view> split_csv(std::string_view line);
/// Iterates the non-empty lines of `text`; `fn(line, line_number)` with 1-based numbers.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = eol + 1;
    ++line_no;
    if (!line.empty()) fn(line, line_no);
  }
}

double parse_double(std::string_view field, std::uint64_t line_no);
std::int64_t parse_int64(std::string_view field, std::uint64_t line_no);

/// Fixed-point decimal formatting independent of the global locale.
std::string fixed(double v, int decimals);

}  // namespace evdet::io
