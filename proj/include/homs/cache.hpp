#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace homs {

class CacheError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

using MatrixBundle = std::map<std::string, Eigen::MatrixXd>;

/// Flat binary file of named double matrices. Writes go through a temporary
/// file and a rename so a crashed run never leaves a truncated entry.
void write_bundle(const std::string& path, const MatrixBundle& bundle);
/// Throws CacheError on a missing or corrupt file.
MatrixBundle read_bundle(const std::string& path);

/// Directory of content-addressed entries: <root>/<key>/<name>.bin
class CellCache {
public:
  explicit CellCache(std::string root) : root_(std::move(root)) {}

  std::string entry_path(std::uint64_t key, const std::string& name) const;
  bool contains(std::uint64_t key, const std::string& name) const;
  std::optional<MatrixBundle> load(std::uint64_t key, const std::string& name) const;
  void store(std::uint64_t key, const std::string& name, const MatrixBundle& bundle) const;
  const std::string& root() const { return root_; }

private:
  std::string root_;
};

}  // namespace homs
