#include <srep/io.hpp>

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

namespace srep {

std::string format_double(double x) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf.data(), ptr);
}

std::string csv_escape(std::string_view field) {
    const bool needs_quotes = field.find_first_of(",\"\n\r") != std::string_view::npos;
    if (!needs_quotes) return std::string(field);
    std::string out;
    out.reserve(field.size() + 2);
    out.push_back('"');
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

void save_matrix_csv(const std::string& path, const Matrix& a) {
    std::string out;
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            if (j > 0) out.push_back(',');
            out += format_double(a(i, j));
        }
        out.push_back('\n');
    }
    write_text_file(path, out);
}

Matrix load_matrix_csv(const std::string& path) {
    const std::string text = read_text_file(path);
    std::vector<std::vector<double>> rows;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            const std::size_t comma = line.find(',', pos);
            const std::string_view cell =
                std::string_view(line).substr(pos, comma == std::string::npos ? line.size() - pos : comma - pos);
            double value = 0.0;
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
            if (ec != std::errc() || ptr != cell.data() + cell.size())
                throw std::runtime_error("load_matrix_csv: bad number in " + path);
            row.push_back(value);
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::runtime_error("load_matrix_csv: ragged rows in " + path);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("load_matrix_csv: empty file " + path);
    Matrix a(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            a(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return a;
}

namespace {

inline std::uint32_t rotl32(std::uint32_t x, int k) { return (x << k) | (x >> (32 - k)); }

}  // namespace

std::string sha1_hex(std::string_view data) {
    std::array<std::uint32_t, 5> h = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u, 0xC3D2E1F0u};

    const std::uint64_t bit_len = static_cast<std::uint64_t>(data.size()) * 8;
    std::string padded(data);
    padded.push_back(static_cast<char>(0x80));
    while (padded.size() % 64 != 56) padded.push_back('\0');
    for (int i = 7; i >= 0; --i) padded.push_back(static_cast<char>((bit_len >> (8 * i)) & 0xFF));

    std::array<std::uint32_t, 80> w{};
    for (std::size_t chunk = 0; chunk < padded.size(); chunk += 64) {
        for (int t = 0; t < 16; ++t) {
            w[static_cast<std::size_t>(t)] = 0;
            for (int b = 0; b < 4; ++b) {
                w[static_cast<std::size_t>(t)] =
                    (w[static_cast<std::size_t>(t)] << 8) |
                    static_cast<unsigned char>(padded[chunk + static_cast<std::size_t>(4 * t + b)]);
            }
        }
        for (int t = 16; t < 80; ++t) {
            w[static_cast<std::size_t>(t)] = rotl32(
                w[static_cast<std::size_t>(t - 3)] ^ w[static_cast<std::size_t>(t - 8)] ^
                    w[static_cast<std::size_t>(t - 14)] ^ w[static_cast<std::size_t>(t - 16)],
                1);
        }
        std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
        for (int t = 0; t < 80; ++t) {
            std::uint32_t f = 0, k = 0;
            if (t < 20) {
                f = (b & c) | ((~b) & d);
                k = 0x5A827999u;
            } else if (t < 40) {
                f = b ^ c ^ d;
                k = 0x6ED9EBA1u;
            } else if (t < 60) {
                f = (b & c) | (b & d) | (c & d);
                k = 0x8F1BBCDCu;
            } else {
                f = b ^ c ^ d;
                k = 0xCA62C1D6u;
            }
            const std::uint32_t temp = rotl32(a, 5) + f + e + k + w[static_cast<std::size_t>(t)];
            e = d;
            d = c;
            c = rotl32(b, 30);
            b = a;
            a = temp;
        }
        h[0] += a;
        h[1] += b;
        h[2] += c;
        h[3] += d;
        h[4] += e;
    }

    std::string hex;
    hex.reserve(40);
    static const char* digits = "0123456789abcdef";
    for (std::uint32_t word : h) {
        for (int shift = 28; shift >= 0; shift -= 4) hex.push_back(digits[(word >> shift) & 0xF]);
    }
    return hex;
}

}  // namespace srep
