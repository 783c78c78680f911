#include "mixact/data.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mixact/errors.hpp"

namespace mixact {

namespace {

std::uint32_t be32(const std::uint8_t* p) {
  return ((std::uint32_t)p[0] << 24) | ((std::uint32_t)p[1] << 16) |
         ((std::uint32_t)p[2] << 8) | (std::uint32_t)p[3];
}

void put_be32(std::uint32_t v, std::vector<std::uint8_t>& out) {
  out.push_back((std::uint8_t)(v >> 24));
  out.push_back((std::uint8_t)(v >> 16));
  out.push_back((std::uint8_t)(v >> 8));
  out.push_back((std::uint8_t)v);
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "0x%08x", v);
  return buf;
}

}  // namespace

IdxFile read_idx(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open idx file: " + path.string());
  std::vector<std::uint8_t> raw((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
  if (raw.size() < 4)
    throw DataError("truncated idx file: " + path.string() + " (only " +
                    std::to_string(raw.size()) + " bytes)");
  IdxFile f;
  f.magic = be32(raw.data());
  if ((f.magic & 0xFFFFFF00u) != 0x00000800u)
    throw DataError("bad idx magic " + hex32(f.magic) + " in " + path.string() +
                    " (expected unsigned-byte idx)");
  const std::size_t ndim = f.magic & 0xFFu;
  const std::size_t header = 4 + 4 * ndim;
  if (raw.size() < header)
    throw DataError("truncated idx header: " + path.string());
  std::size_t payload = 1;
  for (std::size_t i = 0; i < ndim; ++i) {
    f.dims.push_back(be32(raw.data() + 4 + 4 * i));
    payload *= f.dims.back();
  }
  if (raw.size() != header + payload)
    throw DataError("truncated idx file: " + path.string() + " (expected " +
                    std::to_string(header + payload) + " bytes, got " +
                    std::to_string(raw.size()) + ")");
  f.bytes.assign(raw.begin() + header, raw.end());
  return f;
}

void write_idx(const IdxFile& f, const std::filesystem::path& path) {
  std::vector<std::uint8_t> out;
  out.reserve(4 + 4 * f.dims.size() + f.bytes.size());
  put_be32(f.magic, out);
  for (std::uint32_t d : f.dims) put_be32(d, out);
  out.insert(out.end(), f.bytes.begin(), f.bytes.end());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("cannot write idx file: " + path.string());
  os.write((const char*)out.data(), (std::streamsize)out.size());
  if (!os) throw DataError("short write to idx file: " + path.string());
}

Tensor load_idx_images(const std::filesystem::path& path) {
  const IdxFile f = read_idx(path);
  if (f.magic != kIdxImagesMagic)
    throw DataError("wrong idx magic " + hex32(f.magic) + " for image file " +
                    path.string() + " (expected " + hex32(kIdxImagesMagic) + ")");
  if (f.dims.size() != 3 || f.dims[1] != 28 || f.dims[2] != 28)
    throw DataError("unexpected image dims in " + path.string() +
                    " (need [n,28,28])");
  const std::size_t n = f.dims[0];
  Tensor t({n, 1, 28, 28});
  for (std::size_t i = 0; i < f.bytes.size(); ++i)
    t.data[i] = (double)f.bytes[i] / 255.0;
  return t;
}

std::vector<int> load_idx_labels(const std::filesystem::path& path) {
  const IdxFile f = read_idx(path);
  if (f.magic != kIdxLabelsMagic)
    throw DataError("wrong idx magic " + hex32(f.magic) + " for label file " +
                    path.string() + " (expected " + hex32(kIdxLabelsMagic) + ")");
  if (f.dims.size() != 1)
    throw DataError("unexpected label dims in " + path.string());
  std::vector<int> labels(f.bytes.size());
  for (std::size_t i = 0; i < f.bytes.size(); ++i) {
    if (f.bytes[i] > 9)
      throw DataError("label " + std::to_string((int)f.bytes[i]) + " out of range in " +
                      path.string());
    labels[i] = f.bytes[i];
  }
  return labels;
}

std::array<std::string, 2> split_filenames(bool train) {
  if (train) return {"train-images-idx3-ubyte", "train-labels-idx1-ubyte"};
  return {"t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"};
}

const std::vector<std::string>& known_dataset_names() {
  static const std::vector<std::string> names = {"mnist", "fashion_mnist", "kmnist"};
  return names;
}

Dataset load_dataset(const std::filesystem::path& data_root, const std::string& name,
                     bool train) {
  const auto& known = known_dataset_names();
  if (std::find(known.begin(), known.end(), name) == known.end())
    throw ConfigError("unknown dataset '" + name + "' (want mnist, fashion_mnist, or kmnist)");
  const auto files = split_filenames(train);
  const auto dir = data_root / name;
  for (const std::string& fn : files) {
    if (!std::filesystem::exists(dir / fn)) {
      std::string msg = "missing dataset file: " + (dir / fn).string() +
                        "\nexpected layout under " + (data_root / name).string() + ":";
      for (bool tr : {true, false})
        for (const std::string& f : split_filenames(tr)) msg += "\n  " + f;
      msg += "\n(standard 28x28 unsigned-byte idx files; e.g. 60000 training images = "
             "47040016 bytes)";
      throw DataError(msg);
    }
  }
  Dataset d;
  d.name = name;
  d.images = load_idx_images(dir / files[0]);
  d.labels = load_idx_labels(dir / files[1]);
  if (d.images.shape[0] != d.labels.size())
    throw DataError("image/label count mismatch in " + dir.string() + ": " +
                    std::to_string(d.images.shape[0]) + " images vs " +
                    std::to_string(d.labels.size()) + " labels");
  return d;
}

Dataset subset_dataset(const Dataset& d, std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(d.count());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const std::size_t take = std::min(n, idx.size());
  Dataset out;
  out.name = d.name;
  out.labels.resize(take);
  out.images = Tensor({take, 1, 28, 28});
  const std::size_t px = 28 * 28;
  for (std::size_t i = 0; i < take; ++i) {
    out.labels[i] = d.labels[idx[i]];
    std::copy_n(d.images.data.begin() + (std::ptrdiff_t)(idx[i] * px), px,
                out.images.data.begin() + (std::ptrdiff_t)(i * px));
  }
  return out;
}

Batch take_batch(const Dataset& d, const std::vector<std::size_t>& order,
                 std::size_t from, std::size_t to) {
  const std::size_t b = to - from;
  const std::size_t px = 28 * 28;
  Batch out;
  out.images = Tensor({b, 1, 28, 28});
  out.labels.resize(b);
  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t src = order[from + i];
    out.labels[i] = d.labels[src];
    std::copy_n(d.images.data.begin() + (std::ptrdiff_t)(src * px), px,
                out.images.data.begin() + (std::ptrdiff_t)(i * px));
  }
  return out;
}

Batcher::Batcher(const Dataset& d, std::size_t batch_size, std::uint64_t seed,
                 std::optional<std::size_t> subset)
    : data_(&d), batch_size_(batch_size), rng_(seed) {
  if (batch_size_ == 0) throw ConfigError("batch size must be >= 1");
  indices_.resize(d.count());
  std::iota(indices_.begin(), indices_.end(), 0);
  if (subset) {
    std::shuffle(indices_.begin(), indices_.end(), rng_);
    indices_.resize(std::min(*subset, indices_.size()));
  }
}

std::vector<Batch> Batcher::make_batches() {
  std::shuffle(indices_.begin(), indices_.end(), rng_);
  std::vector<Batch> out;
  for (std::size_t at = 0; at < indices_.size(); at += batch_size_) {
    const std::size_t to = std::min(at + batch_size_, indices_.size());
    out.push_back(take_batch(*data_, indices_, at, to));
  }
  return out;
}

std::string Batcher::rng_state() const {
  std::ostringstream os;
  os << rng_;
  return os.str();
}

void Batcher::set_rng_state(const std::string& state) {
  std::istringstream is(state);
  is >> rng_;
  if (!is) throw Error("bad rng state string");
}

}  // namespace mixact
