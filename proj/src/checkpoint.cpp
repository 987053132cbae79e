#include "motionseq/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "motionseq/errors.hpp"

namespace motionseq {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

constexpr std::array<char, 8> kMagic = {'M', 'S', 'E', 'Q', 'T', 'N', 'S', 'R'};
constexpr std::uint64_t kMaxDim = 1ULL << 32;

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T take(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw FormatError("checkpoint truncated");
  }
  return value;
}

std::string take_string(std::istream& in, std::uint64_t size) {
  std::string s(size, '\0');
  if (size > 0 && !in.read(s.data(), static_cast<std::streamsize>(size))) {
    throw FormatError("checkpoint truncated");
  }
  return s;
}

}  // namespace

void TensorContainer::add(std::string name, Tensor2 tensor) {
  if (contains(name)) {
    throw InvalidInput("duplicate tensor name '" + name + "'");
  }
  entries_.emplace_back(std::move(name), std::move(tensor));
}

bool TensorContainer::contains(std::string_view name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const auto& e) { return e.first == name; });
}

const Tensor2& TensorContainer::get(std::string_view name) const {
  for (const auto& [key, value] : entries_) {
    if (key == name) return value;
  }
  throw FormatError("checkpoint has no tensor named '" + std::string(name) + "'");
}

const Tensor2& TensorContainer::get(std::string_view name, Eigen::Index rows,
                                    Eigen::Index cols) const {
  const Tensor2& t = get(name);
  if (t.rows() != rows || t.cols() != cols) {
    throw FormatError("tensor '" + std::string(name) + "' has shape " + std::to_string(t.rows()) +
                      "x" + std::to_string(t.cols()) + ", expected " + std::to_string(rows) + "x" +
                      std::to_string(cols));
  }
  return t;
}

void TensorContainer::write(std::ostream& out) const {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kContainerVersion);
  put<std::uint64_t>(out, metadata.size());
  out.write(metadata.data(), static_cast<std::streamsize>(metadata.size()));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& [name, t] : entries_) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(t.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(t.cols()));
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!out) {
    throw Error("failed writing checkpoint");
  }
}

TensorContainer TensorContainer::read(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw FormatError("not a motionseq checkpoint (bad magic)");
  }
  const auto version = take<std::uint32_t>(in);
  if (version != kContainerVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  TensorContainer c;
  const auto meta_size = take<std::uint64_t>(in);
  if (meta_size > (1ULL << 30)) {
    throw FormatError("checkpoint metadata too large");
  }
  c.metadata = take_string(in, meta_size);
  const auto count = take<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_size = take<std::uint32_t>(in);
    std::string name = take_string(in, name_size);
    const auto rows = take<std::uint64_t>(in);
    const auto cols = take<std::uint64_t>(in);
    if (rows >= kMaxDim || cols >= kMaxDim) {
      throw FormatError("tensor '" + name + "' has implausible shape");
    }
    Tensor2 t(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    if (t.size() > 0 &&
        !in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)))) {
      throw FormatError("checkpoint truncated inside tensor '" + name + "'");
    }
    c.add(std::move(name), std::move(t));
  }
  return c;
}

void TensorContainer::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot open " + path.string() + " for writing");
  }
  write(out);
}

TensorContainer TensorContainer::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open checkpoint " + path.string());
  }
  return read(in);
}

}  // namespace motionseq
