#include "crosscbr/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace crosscbr {

namespace {

constexpr std::array<char, 8> kMagic{'C', 'C', 'B', 'R', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

class Writer {
 public:
  explicit Writer(const std::filesystem::path& file) : out_(file, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write checkpoint " + file.string());
  }
  template <typename T>
  void put(T v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void put(const Matrix& m) {
    out_.write(reinterpret_cast<const char*>(m.values().data()),
               static_cast<std::streamsize>(m.size() * sizeof(double)));
  }
  void finish() {
    out_.flush();
    if (!out_) throw std::runtime_error("checkpoint write failed");
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& file) : in_(file, std::ios::binary), file_(file) {
    if (!in_) throw std::runtime_error("cannot open checkpoint " + file.string());
  }
  template <typename T>
  T get() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    check();
    return v;
  }
  Matrix get_matrix(std::uint64_t rows, std::uint64_t cols) {
    Matrix m(rows, cols);
    in_.read(reinterpret_cast<char*>(m.values().data()),
             static_cast<std::streamsize>(m.size() * sizeof(double)));
    check();
    return m;
  }

 private:
  void check() {
    if (!in_) throw std::runtime_error("truncated checkpoint " + file_.string());
  }
  std::ifstream in_;
  std::filesystem::path file_;
};

void put_tables(Writer& w, const EmbeddingState& s) {
  w.put(s.users);
  w.put(s.bundles);
  w.put(s.items);
}

EmbeddingState get_tables(Reader& r, std::uint64_t m, std::uint64_t n, std::uint64_t o,
                          std::uint64_t d) {
  EmbeddingState s;
  s.users = r.get_matrix(m, d);
  s.bundles = r.get_matrix(n, d);
  s.items = r.get_matrix(o, d);
  return s;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& file) {
  const auto& s = ckpt.state;
  Writer w(file);
  for (char c : kMagic) w.put(c);
  w.put(kVersion);
  w.put<std::uint64_t>(s.users.rows());
  w.put<std::uint64_t>(s.bundles.rows());
  w.put<std::uint64_t>(s.items.rows());
  w.put<std::uint64_t>(s.dim());
  w.put<std::uint64_t>(ckpt.epoch);
  put_tables(w, s);
  w.put<std::uint8_t>(ckpt.adam ? 1 : 0);
  if (ckpt.adam) {
    w.put<std::uint64_t>(ckpt.adam->step);
    put_tables(w, ckpt.adam->first);
    put_tables(w, ckpt.adam->second);
  }
  w.finish();
}

Checkpoint load_checkpoint(const std::filesystem::path& file) {
  Reader r(file);
  std::array<char, 8> magic{};
  for (char& c : magic) c = r.get<char>();
  if (magic != kMagic) throw std::runtime_error(file.string() + " is not a checkpoint");
  if (const auto v = r.get<std::uint32_t>(); v != kVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(v));
  }
  const auto m = r.get<std::uint64_t>();
  const auto n = r.get<std::uint64_t>();
  const auto o = r.get<std::uint64_t>();
  const auto d = r.get<std::uint64_t>();
  Checkpoint ckpt;
  ckpt.epoch = r.get<std::uint64_t>();
  ckpt.state = get_tables(r, m, n, o, d);
  if (r.get<std::uint8_t>() != 0) {
    AdamState adam;
    adam.step = r.get<std::uint64_t>();
    adam.first = get_tables(r, m, n, o, d);
    adam.second = get_tables(r, m, n, o, d);
    ckpt.adam = std::move(adam);
  }
  return ckpt;
}

}  // namespace crosscbr
