#include "mixact/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mixact/data.hpp"
#include "mixact/errors.hpp"

namespace mixact {
namespace {

constexpr std::uint32_t kMagic = 0x4d584143;  // "MXAC"
constexpr std::uint32_t kVersion = 1;

// All scalar fields are little-endian; this code assumes a little-endian host
// (checked at load via the magic) and writes raw bytes.
template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(const std::vector<std::uint8_t>& in, std::size_t& off) {
  if (off + sizeof(T) > in.size()) throw DataError("checkpoint: truncated file");
  T v;
  std::memcpy(&v, in.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

std::string take_name(const std::vector<std::uint8_t>& in, std::size_t& off) {
  const std::uint16_t len = take<std::uint16_t>(in, off);
  if (off + len > in.size()) throw DataError("checkpoint: truncated name");
  std::string s(reinterpret_cast<const char*>(in.data() + off), len);
  off += len;
  return s;
}

}  // namespace

void Checkpoint::add_array(const std::string& name,
                           const std::vector<std::size_t>& shape,
                           const std::vector<double>& data) {
  if (shape_product(shape) != data.size()) {
    throw ShapeError("checkpoint: array '" + name + "' shape " +
                     shape_string(shape) + " does not match " +
                     std::to_string(data.size()) + " values");
  }
  arrays_.push_back(Array{name, shape, data});
}

void Checkpoint::add_blob(const std::string& name,
                          const std::vector<std::uint8_t>& data) {
  blobs_.push_back(Blob{name, data});
}

void Checkpoint::add_text(const std::string& name, const std::string& text) {
  add_blob(name, std::vector<std::uint8_t>(text.begin(), text.end()));
}

bool Checkpoint::has_array(const std::string& name) const {
  for (const Array& a : arrays_)
    if (a.name == name) return true;
  return false;
}

bool Checkpoint::has_blob(const std::string& name) const {
  for (const Blob& b : blobs_)
    if (b.name == name) return true;
  return false;
}

const Checkpoint::Array& Checkpoint::array(const std::string& name) const {
  for (const Array& a : arrays_)
    if (a.name == name) return a;
  throw Error("checkpoint: no array named '" + name + "'");
}

const Checkpoint::Blob& Checkpoint::blob(const std::string& name) const {
  for (const Blob& b : blobs_)
    if (b.name == name) return b;
  throw Error("checkpoint: no blob named '" + name + "'");
}

std::string Checkpoint::text(const std::string& name) const {
  const Blob& b = blob(name);
  return std::string(b.data.begin(), b.data.end());
}

void Checkpoint::save(const std::filesystem::path& path) const {
  std::string out;
  put<std::uint32_t>(out, kMagic);
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, arrays_.size());
  put<std::uint64_t>(out, blobs_.size());
  for (const Array& a : arrays_) {
    if (a.name.size() > 0xffff) throw Error("checkpoint: name too long");
    put<std::uint16_t>(out, static_cast<std::uint16_t>(a.name.size()));
    out.append(a.name);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(a.shape.size()));
    for (std::size_t d : a.shape) put<std::uint64_t>(out, d);
    const char* raw = reinterpret_cast<const char*>(a.data.data());
    out.append(raw, a.data.size() * sizeof(double));
  }
  for (const Blob& b : blobs_) {
    if (b.name.size() > 0xffff) throw Error("checkpoint: name too long");
    put<std::uint16_t>(out, static_cast<std::uint16_t>(b.name.size()));
    out.append(b.name);
    put<std::uint64_t>(out, b.data.size());
    out.append(reinterpret_cast<const char*>(b.data.data()), b.data.size());
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("checkpoint: cannot open '" + path.string() + "' for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("checkpoint: write failed for '" + path.string() + "'");
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("checkpoint: cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> in((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
  std::size_t off = 0;
  if (take<std::uint32_t>(in, off) != kMagic)
    throw DataError("checkpoint: bad magic in '" + path.string() + "'");
  const std::uint32_t version = take<std::uint32_t>(in, off);
  if (version != kVersion)
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  const std::uint64_t n_arrays = take<std::uint64_t>(in, off);
  const std::uint64_t n_blobs = take<std::uint64_t>(in, off);
  Checkpoint ckpt;
  for (std::uint64_t i = 0; i < n_arrays; ++i) {
    Array a;
    a.name = take_name(in, off);
    const std::uint8_t ndim = take<std::uint8_t>(in, off);
    a.shape.resize(ndim);
    for (std::uint8_t d = 0; d < ndim; ++d)
      a.shape[d] = static_cast<std::size_t>(take<std::uint64_t>(in, off));
    const std::size_t count = shape_product(a.shape);
    if (off + count * sizeof(double) > in.size())
      throw DataError("checkpoint: truncated array '" + a.name + "'");
    a.data.resize(count);
    std::memcpy(a.data.data(), in.data() + off, count * sizeof(double));
    off += count * sizeof(double);
    ckpt.arrays_.push_back(std::move(a));
  }
  for (std::uint64_t i = 0; i < n_blobs; ++i) {
    Blob b;
    b.name = take_name(in, off);
    const std::uint64_t len = take<std::uint64_t>(in, off);
    if (off + len > in.size())
      throw DataError("checkpoint: truncated blob '" + b.name + "'");
    b.data.assign(in.begin() + static_cast<std::ptrdiff_t>(off),
                  in.begin() + static_cast<std::ptrdiff_t>(off + len));
    off += len;
    ckpt.blobs_.push_back(std::move(b));
  }
  if (off != in.size())
    throw DataError("checkpoint: trailing bytes in '" + path.string() + "'");
  return ckpt;
}

namespace {

std::string arch_string(const ModelDims& d) {
  std::ostringstream os;
  os << d.conv1_channels << ' ' << d.conv2_channels << ' ' << d.hidden << ' '
     << d.classes << ' ' << d.image << ' ' << d.ksize << ' ' << d.pad;
  return os.str();
}

ModelDims parse_arch(const std::string& s) {
  std::istringstream is(s);
  ModelDims d;
  if (!(is >> d.conv1_channels >> d.conv2_channels >> d.hidden >> d.classes >>
        d.image >> d.ksize >> d.pad)) {
    throw DataError("checkpoint: malformed meta/arch entry '" + s + "'");
  }
  return d;
}

}  // namespace

Checkpoint snapshot(Model& model, const Adam* adam, const Batcher* batcher,
                    std::uint64_t seed) {
  Checkpoint ckpt;
  for (const ParamRef& p : model.parameters()) {
    ckpt.add_array("param/" + p.name, p.tensor->shape, p.tensor->data);
  }
  if (adam != nullptr) {
    for (const std::string& name : adam->slot_names()) {
      ckpt.add_array("adam/m/" + name, {adam->moment1(name).size()},
                     adam->moment1(name));
      ckpt.add_array("adam/v/" + name, {adam->moment2(name).size()},
                     adam->moment2(name));
    }
    ckpt.add_array("adam/t", {1}, {static_cast<double>(adam->step_count())});
  }
  ckpt.add_text("meta/arch", arch_string(model.dims));
  if (batcher != nullptr) ckpt.add_text("rng/batcher", batcher->rng_state());
  char seed_text[32];
  std::snprintf(seed_text, sizeof(seed_text), "%llu",
                static_cast<unsigned long long>(seed));
  ckpt.add_text("meta/seed", seed_text);
  return ckpt;
}

void restore_model(Model& model, const Checkpoint& ckpt) {
  for (const ParamRef& p : model.parameters()) {
    const Checkpoint::Array& a = ckpt.array("param/" + p.name);
    if (a.shape != p.tensor->shape) {
      throw ShapeError("checkpoint: parameter '" + p.name + "' has shape " +
                       shape_string(a.shape) + ", model expects " +
                       shape_string(p.tensor->shape));
    }
    p.tensor->data = a.data;
  }
}

Model model_from_checkpoint(const Checkpoint& ckpt) {
  const ModelDims dims = parse_arch(ckpt.text("meta/arch"));
  Model model = build_model(0, dims);
  restore_model(model, ckpt);
  return model;
}

void restore_adam(Adam& adam, const Checkpoint& ckpt) {
  for (const std::string& name : adam.slot_names()) {
    const Checkpoint::Array& m = ckpt.array("adam/m/" + name);
    const Checkpoint::Array& v = ckpt.array("adam/v/" + name);
    adam.load_moments(name, m.data, v.data);
  }
  const Checkpoint::Array& t = ckpt.array("adam/t");
  adam.set_step_count(static_cast<std::int64_t>(t.data.at(0)));
}

}  // namespace mixact
