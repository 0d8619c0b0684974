#include "stimpute/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>

namespace stimpute {

std::size_t shape_size(const Shape& dims) {
  std::size_t n = 1;
  for (std::size_t d : dims) n *= d;
  return n;
}

Tensor::Tensor(Shape dims, double fill)
    : dims_(std::move(dims)), data_(shape_size(dims_), fill) {
  for (std::size_t d : dims_)
    if (d == 0) throw shape_error("zero extent");
}

Tensor::Tensor(Shape dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  if (data_.size() != shape_size(dims_)) throw shape_error("data length != product of dims");
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  std::size_t r = rows.size();
  std::size_t c = rows.begin()->size();
  Tensor t({r, c});
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw shape_error("ragged matrix literal");
    for (double v : row) t.data_[i++] = v;
  }
  return t;
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw shape_error("rows() on rank-" + std::to_string(rank()));
  return dims_[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw shape_error("cols() on rank-" + std::to_string(rank()));
  return dims_[1];
}

double& Tensor::at(std::size_t r, std::size_t c) {
  return data_[r * cols() + c];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  return data_[r * cols() + c];
}

bool Tensor::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

namespace {
constexpr char kMagic[4] = {'S', 'T', 'I', '1'};

void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}
}  // namespace

void save_sti(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error("cannot open for write: " + path.string());
  os.write(kMagic, 4);
  unsigned char dtype = 0, rank = static_cast<unsigned char>(t.rank());
  os.write(reinterpret_cast<const char*>(&dtype), 1);
  os.write(reinterpret_cast<const char*>(&rank), 1);
  for (std::size_t d : t.dims()) write_u64(os, d);
  os.write(reinterpret_cast<const char*>(t.data().data()),
           static_cast<std::streamsize>(t.size() * sizeof(double)));
  if (!os) throw io_error("write failed: " + path.string());
}

Tensor load_sti(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error("cannot open: " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw io_error("bad magic: " + path.string());
  unsigned char dtype = 0, rank = 0;
  is.read(reinterpret_cast<char*>(&dtype), 1);
  is.read(reinterpret_cast<char*>(&rank), 1);
  if (dtype != 0) throw io_error("unsupported dtype code");
  Shape dims(rank);
  for (auto& d : dims) d = static_cast<std::size_t>(read_u64(is));
  Tensor t(dims);
  is.read(reinterpret_cast<char*>(t.data().data()),
          static_cast<std::streamsize>(t.size() * sizeof(double)));
  if (!is) throw io_error("truncated payload: " + path.string());
  return t;
}

}  // namespace stimpute
