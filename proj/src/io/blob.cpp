#include "nsbi/io/blob.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>

namespace nsbi {

static_assert(std::endian::native == std::endian::little, "blob encoding assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'N', 'S', 'B', 'I', 'B', 'L', 'O', 'B'};

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_string(std::string& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out += s;
}

class Reader {
 public:
  Reader(const std::string& bytes, std::size_t start) : bytes_(bytes), pos_(start) {}

  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string get_string() {
    const auto n = get<std::uint64_t>();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void get_doubles(double* dst, std::size_t n) {
    need(n * sizeof(double));
    std::memcpy(dst, bytes_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
  }

  [[nodiscard]] bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw std::runtime_error("blob is truncated at byte " + std::to_string(pos_));
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const diff::Tensor& Blob::array(const std::string& name) const {
  for (const auto& [n, t] : arrays)
    if (n == name) return t;
  throw std::out_of_range("blob has no array named " + name);
}

std::string encode_blob(const Blob& blob) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kBlobVersion);
  put_string(out, blob.kind);
  put_string(out, blob.config.dump());
  put<std::uint64_t>(out, blob.arrays.size());
  for (const auto& [name, t] : blob.arrays) {
    put_string(out, name);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape().rank()));
    for (std::size_t k = 0; k < t.shape().rank(); ++k) put<std::uint64_t>(out, t.shape()[k]);
    out.append(reinterpret_cast<const char*>(t.data().data()), t.size() * sizeof(double));
  }
  return out;
}

Blob decode_blob(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not an nsbi blob (bad magic)");
  }
  Reader r(bytes, sizeof(kMagic));
  const auto version = r.get<std::uint32_t>();
  if (version != kBlobVersion) throw std::runtime_error("unsupported blob version " + std::to_string(version));
  Blob blob;
  blob.kind = r.get_string();
  blob.config = nlohmann::json::parse(r.get_string());
  const auto count = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = r.get_string();
    const auto rank = r.get<std::uint32_t>();
    if (rank > diff::kMaxRank) throw std::runtime_error("blob array " + name + " has rank " + std::to_string(rank));
    std::vector<std::size_t> dims(rank);
    for (auto& d : dims) d = r.get<std::uint64_t>();
    diff::Tensor t{diff::Shape(std::span<const std::size_t>(dims))};
    r.get_doubles(t.data().data(), t.size());
    blob.arrays.emplace_back(std::move(name), std::move(t));
  }
  if (!r.done()) throw std::runtime_error("trailing bytes after blob arrays");
  return blob;
}

void write_blob(const std::string& path, const Blob& blob) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  const std::string bytes = encode_blob(blob);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("failed writing " + path);
}

Blob read_blob(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_blob(bytes);
}

}  // namespace nsbi

#include "nsbi/diffcore/adam.hpp"

namespace nsbi {

void append_params(Blob& blob, const diff::ParamStore& store) {
  for (std::size_t k = 0; k < store.names().size(); ++k) {
    blob.arrays.emplace_back("param/" + store.names()[k], store.params()[k].value());
  }
}

void load_params(const Blob& blob, diff::ParamStore& store) {
  for (const auto& name : store.names()) store.set_value(name, blob.array("param/" + name));
}

}  // namespace nsbi
