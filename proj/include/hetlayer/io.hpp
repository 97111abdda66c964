#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "hetlayer/abstract_orbit.hpp"
#include "hetlayer/field.hpp"
#include "hetlayer/heteroclinic.hpp"

namespace hetlayer {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest text that reads back to the same double.
std::string format_double(double v);

/// "x,u1,...,um", one row per node.
void write_profile_csv(const std::filesystem::path& path, const Path1D& e);
/// Rebuilds the grid from the first/last x and the row count.
Path1D read_profile_csv(const std::filesystem::path& path);

/// Same layout with t in place of x: "t,u1,...,ud".
void write_orbit_csv(const std::filesystem::path& path, const AbstractOrbit& V);

/// Header line "m n_t n_x T L" (plus " order=4" for fourth-order fields),
/// then rows "t,x,u1,...,um" in row-major order.
void write_field_csv(const std::filesystem::path& path, const Field2D& u);
/// Same header line, then n_t n_x m little-endian doubles, row-major.
void write_field_binary(const std::filesystem::path& path, const Field2D& u);
/// Either format; the binary one is recognised by its ".bin" extension.
Field2D read_field(const std::filesystem::path& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace hetlayer
