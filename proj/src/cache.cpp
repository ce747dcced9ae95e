#include "homs/cache.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include "homs/hash.hpp"

namespace homs {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[8] = {'H', 'O', 'M', 'S', 'C', 'S', 'E', '1'};

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw CacheError("truncated cache file");
  return v;
}

}  // namespace

void write_bundle(const std::string& path, const MatrixBundle& bundle) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw CacheError("cannot write " + tmp.string());
    out.write(kMagic, sizeof kMagic);
    put<std::uint64_t>(out, bundle.size());
    Fnv1a check;
    for (const auto& [name, m] : bundle) {
      put<std::uint64_t>(out, name.size());
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      put<std::int64_t>(out, m.rows());
      put<std::int64_t>(out, m.cols());
      out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
      check.str(name);
      check.bytes(m.data(), m.size() * sizeof(double));
    }
    put<std::uint64_t>(out, check.value());
    if (!out) throw CacheError("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

MatrixBundle read_bundle(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CacheError("missing cache file " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw CacheError("not a cache file: " + path);
  const auto count = get<std::uint64_t>(in);
  MatrixBundle b;
  Fnv1a check;
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = get<std::uint64_t>(in);
    if (len > 4096) throw CacheError("corrupt cache file " + path);
    std::string name(len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(len));
    const auto rows = get<std::int64_t>(in), cols = get<std::int64_t>(in);
    if (rows < 0 || cols < 0 || rows * cols > (std::int64_t{1} << 34)) throw CacheError("corrupt cache file " + path);
    Eigen::MatrixXd m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw CacheError("truncated cache file " + path);
    check.str(name);
    check.bytes(m.data(), m.size() * sizeof(double));
    b.emplace(std::move(name), std::move(m));
  }
  if (get<std::uint64_t>(in) != check.value()) throw CacheError("checksum mismatch in " + path);
  return b;
}

std::string CellCache::entry_path(std::uint64_t key, const std::string& name) const {
  return (fs::path(root_) / hex64(key) / (name + ".bin")).string();
}

bool CellCache::contains(std::uint64_t key, const std::string& name) const {
  return fs::exists(entry_path(key, name));
}

std::optional<MatrixBundle> CellCache::load(std::uint64_t key, const std::string& name) const {
  if (!contains(key, name)) return std::nullopt;
  return read_bundle(entry_path(key, name));
}

void CellCache::store(std::uint64_t key, const std::string& name, const MatrixBundle& bundle) const {
  write_bundle(entry_path(key, name), bundle);
}

}  // namespace homs
