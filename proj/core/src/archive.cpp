#include "romnn/archive.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace romnn {
namespace {

constexpr std::array<char, 8> kMagic = {'R', 'O', 'M', 'N', 'N', 'A', 'R', 'C'};

template <typename T>
T to_little_endian(T value) {
  if constexpr (std::endian::native == std::endian::little) {
    return value;
  } else {
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    std::reverse(bytes.begin(), bytes.end());
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
  }
}

template <typename T>
void write_pod(std::ostream& os, T value) {
  value = to_little_endian(value);
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw std::runtime_error("archive: unexpected end of file");
  return to_little_endian(value);
}

}  // namespace

void Archive::put(const std::string& name, const Matrix& m) { entries_[name] = m; }

void Archive::put(const std::string& name, const Vector& v) { entries_[name] = Matrix(v); }

void Archive::put(const std::string& name, std::vector<std::int64_t> values) {
  entries_[name] = std::move(values);
}

void Archive::put_scalar(const std::string& name, double value) {
  entries_[name] = Matrix::Constant(1, 1, value);
}

const Matrix& Archive::matrix(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end() || !std::holds_alternative<Matrix>(it->second)) {
    throw std::runtime_error("archive: missing matrix entry '" + name + "'");
  }
  return std::get<Matrix>(it->second);
}

Vector Archive::vector(const std::string& name) const {
  const Matrix& m = matrix(name);
  if (m.cols() != 1) throw std::runtime_error("archive: entry '" + name + "' is not a column vector");
  return m.col(0);
}

const std::vector<std::int64_t>& Archive::integers(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end() || !std::holds_alternative<std::vector<std::int64_t>>(it->second)) {
    throw std::runtime_error("archive: missing integer entry '" + name + "'");
  }
  return std::get<std::vector<std::int64_t>>(it->second);
}

double Archive::scalar(const std::string& name) const {
  const Matrix& m = matrix(name);
  if (m.size() != 1) throw std::runtime_error("archive: entry '" + name + "' is not a scalar");
  return m(0, 0);
}

void Archive::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  // A partially written container must never appear under `path`.
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("archive: cannot open " + tmp.string());
    os.write(kMagic.data(), kMagic.size());
    write_pod<std::uint32_t>(os, kFormatVersion);
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(entries_.size()));
    for (const auto& [name, entry] : entries_) {
      write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
      os.write(name.data(), static_cast<std::streamsize>(name.size()));
      if (const auto* m = std::get_if<Matrix>(&entry)) {
        write_pod<std::uint8_t>(os, 0);
        write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(m->rows()));
        write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(m->cols()));
        for (Index k = 0; k < m->size(); ++k) write_pod<double>(os, m->data()[k]);
      } else {
        const auto& ints = std::get<std::vector<std::int64_t>>(entry);
        write_pod<std::uint8_t>(os, 1);
        write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(ints.size()));
        write_pod<std::uint64_t>(os, 1);
        for (std::int64_t v : ints) write_pod<std::int64_t>(os, v);
      }
    }
    if (!os) throw std::runtime_error("archive: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Archive Archive::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("archive: cannot open " + path.string());
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw std::runtime_error("archive: bad magic in " + path.string());
  const auto version = read_pod<std::uint32_t>(is);
  if (version != kFormatVersion) {
    throw std::runtime_error("archive: unsupported format version " + std::to_string(version));
  }
  const auto count = read_pod<std::uint32_t>(is);
  Archive out;
  for (std::uint32_t e = 0; e < count; ++e) {
    const auto len = read_pod<std::uint32_t>(is);
    std::string name(len, '\0');
    is.read(name.data(), len);
    const auto kind = read_pod<std::uint8_t>(is);
    const auto rows = read_pod<std::uint64_t>(is);
    const auto cols = read_pod<std::uint64_t>(is);
    if (kind == 0) {
      Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
      for (Index k = 0; k < m.size(); ++k) m.data()[k] = read_pod<double>(is);
      out.entries_[name] = std::move(m);
    } else if (kind == 1) {
      std::vector<std::int64_t> ints(rows * cols);
      for (auto& v : ints) v = read_pod<std::int64_t>(is);
      out.entries_[name] = std::move(ints);
    } else {
      throw std::runtime_error("archive: unknown entry kind in " + path.string());
    }
  }
  return out;
}

}  // namespace romnn
