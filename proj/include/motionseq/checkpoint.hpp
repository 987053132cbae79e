#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "motionseq/tensor.hpp"

namespace motionseq {

// Named-tensor container used for parameter checkpoints.
//
// Binary layout, little-endian:
//   char[8]  magic "MSEQTNSR"
//   u32      format version (kContainerVersion)
//   u64      metadata length, followed by that many bytes (UTF-8, usually JSON)
//   u32      tensor count
//   per tensor:
//     u32 name length, name bytes
//     u64 rows, u64 cols
//     rows*cols f64, row-major
class TensorContainer {
 public:
  static constexpr std::uint32_t kContainerVersion = 1;

  std::string metadata;

  void add(std::string name, Tensor2 tensor);
  bool contains(std::string_view name) const;

  // Throws FormatError if absent or if the stored shape differs.
  const Tensor2& get(std::string_view name, Eigen::Index rows, Eigen::Index cols) const;
  const Tensor2& get(std::string_view name) const;

  const std::vector<std::pair<std::string, Tensor2>>& entries() const { return entries_; }

  void write(std::ostream& out) const;
  static TensorContainer read(std::istream& in);

  void save(const std::filesystem::path& path) const;
  static TensorContainer load(const std::filesystem::path& path);

 private:
  std::vector<std::pair<std::string, Tensor2>> entries_;
};

}  // namespace motionseq
