#include "multipd/csv.hpp"

#include <array>
#include <charconv>
#include <stdexcept>

namespace multipd {

std::string csv_field(const std::string& raw) {
    if (raw.find_first_of(",\"\n\r") == std::string::npos) return raw;
    std::string out;
    out.reserve(raw.size() + 2);
    out.push_back('"');
    for (const char c : raw) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

namespace {

template <typename T>
std::string to_chars_string(T v) {
    std::array<char, 40> buf;
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (res.ec != std::errc{}) throw std::runtime_error("csv_num: conversion failed");
    return std::string(buf.data(), res.ptr);
}

}  // namespace

std::string csv_num(double v) { return to_chars_string(v); }
std::string csv_num(std::uint64_t v) { return to_chars_string(v); }
std::string csv_num(int v) { return to_chars_string(v); }

void CsvWriter::row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i > 0) out_ << ',';
        out_ << csv_field(cells[i]);
    }
    out_ << '\n';
}

}  // namespace multipd
