#pragma once

#include "romnn/linalg.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace romnn {

/// Named collection of dense float64 matrices and int64 arrays persisted as a
/// little-endian binary container.
///
/// Layout: 8-byte magic "ROMNNARC", u32 format version, u32 entry count, then
/// per entry: u32 name length, name bytes, u8 kind (0 = f64 matrix,
/// 1 = i64 array), u64 rows, u64 cols, payload (column-major for matrices).
class Archive {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  void put(const std::string& name, const Matrix& m);
  void put(const std::string& name, const Vector& v);
  void put(const std::string& name, std::vector<std::int64_t> values);
  void put_scalar(const std::string& name, double value);

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  const Matrix& matrix(const std::string& name) const;
  Vector vector(const std::string& name) const;
  const std::vector<std::int64_t>& integers(const std::string& name) const;
  double scalar(const std::string& name) const;

  void save(const std::filesystem::path& path) const;
  static Archive load(const std::filesystem::path& path);

 private:
  std::map<std::string, std::variant<Matrix, std::vector<std::int64_t>>> entries_;
};

}  // namespace romnn
