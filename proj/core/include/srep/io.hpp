#pragma once

#include <srep/common.hpp>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace srep {

// Shortest round-trip decimal form of a double (std::to_chars). The mapping
// is bijective on finite doubles, which is what makes serialized output
// byte-stable across runs.
[[nodiscard]] std::string format_double(double x);

// RFC 4180 field quoting: wraps in quotes and doubles inner quotes whenever
// the field contains a comma, quote, or newline.
[[nodiscard]] std::string csv_escape(std::string_view field);

[[nodiscard]] std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

// Matrix CSV: one row per line, comma separated, no header.
void save_matrix_csv(const std::string& path, const Matrix& a);
[[nodiscard]] Matrix load_matrix_csv(const std::string& path);

// SHA-1 hex digest of a byte string; used as a content hash for emitted
// results, not for anything adversarial.
[[nodiscard]] std::string sha1_hex(std::string_view data);

}  // namespace srep
