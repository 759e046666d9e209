#include "aggbuf/models/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <openssl/evp.h>

#include "aggbuf/common/error.hpp"

namespace aggbuf {
namespace {

static_assert(std::endian::native == std::endian::little);

template <typename T>
void put(std::vector<std::uint8_t>& out, T v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, b_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(b_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void doubles(std::span<double> dst) {
    need(dst.size() * sizeof(double));
    std::memcpy(dst.data(), b_.data() + pos_, dst.size() * sizeof(double));
    pos_ += dst.size() * sizeof(double);
  }
  bool done() const { return pos_ == b_.size(); }

 private:
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw LoadError("checkpoint truncated at byte " + std::to_string(pos_));
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

void put_tensors(std::vector<std::uint8_t>& out, const std::vector<NamedTensor>& tensors) {
  put<std::uint64_t>(out, tensors.size());
  for (const auto& t : tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    put<std::uint64_t>(out, t.value.rows());
    put<std::uint64_t>(out, t.value.cols());
    const auto* p = reinterpret_cast<const std::uint8_t*>(t.value.data().data());
    out.insert(out.end(), p, p + t.value.size() * sizeof(double));
  }
}

}  // namespace

std::vector<std::uint8_t> encode(const Container& c) {
  std::vector<std::uint8_t> out;
  out.push_back(kCheckpointVersion);
  const std::string header = c.header.dump();
  put<std::uint64_t>(out, header.size());
  out.insert(out.end(), header.begin(), header.end());
  put_tensors(out, c.tensors);
  return out;
}

Container decode(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto version = r.get<std::uint8_t>();
  if (version != kCheckpointVersion)
    throw LoadError("unsupported checkpoint version " + std::to_string(version));
  Container c;
  const auto hlen = r.get<std::uint64_t>();
  try {
    c.header = nlohmann::json::parse(r.str(hlen));
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(std::string("checkpoint header: ") + e.what());
  }
  const auto count = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.str(r.get<std::uint32_t>());
    const auto rows = r.get<std::uint64_t>();
    const auto cols = r.get<std::uint64_t>();
    if (cols != 0 && rows > (bytes.size() / sizeof(double)) / cols) throw LoadError("checkpoint tensor too large");
    t.value = Matrix(rows, cols);
    r.doubles(t.value.data());
    c.tensors.push_back(std::move(t));
  }
  if (!r.done()) throw LoadError("trailing bytes after checkpoint tensors");
  return c;
}

void write_container(const Container& c, const std::filesystem::path& path) {
  const auto bytes = encode(c);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

Container read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return decode(bytes);
}

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string s;
  for (unsigned int i = 0; i < len; ++i) {
    s.push_back(hex[md[i] >> 4]);
    s.push_back(hex[md[i] & 15]);
  }
  return s;
}

std::string content_hash(const std::vector<NamedTensor>& tensors) {
  std::vector<std::uint8_t> bytes;
  put_tensors(bytes, tensors);
  return sha256_hex(bytes);
}

void save_model(const ModelParams& params, const std::filesystem::path& path) {
  Container c;
  c.header = {{"kind", "model"}, {"config", to_json(params.config)}};
  c.tensors = params.tensors;
  write_container(c, path);
}

ModelParams load_model(const std::filesystem::path& path) {
  Container c = read_container(path);
  if (c.header.value("kind", "") != "model") throw LoadError(path.string() + " is not a model checkpoint");
  ModelParams p;
  p.config = model_config_from_json(c.header.at("config"));
  const ModelParams shape = init_params(p.config, 0);
  if (shape.tensors.size() != c.tensors.size()) throw LoadError("checkpoint tensor count does not match its config");
  for (std::size_t i = 0; i < c.tensors.size(); ++i) {
    const auto& want = shape.tensors[i];
    const auto& got = c.tensors[i];
    if (want.name != got.name || want.value.rows() != got.value.rows() || want.value.cols() != got.value.cols())
      throw LoadError("checkpoint tensor '" + got.name + "' does not match its config");
  }
  p.tensors = std::move(c.tensors);
  return p;
}

}  // namespace aggbuf
