#include "aggbuf/graph/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <set>

#include <json.hpp>

#include "aggbuf/common/error.hpp"

namespace aggbuf {
namespace {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

using nlohmann::json;

std::vector<char> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw LoadError("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <typename T>
std::vector<T> read_array(const std::filesystem::path& p) {
  const auto bytes = read_bytes(p);
  if (bytes.size() % sizeof(T) != 0)
    throw LoadError(p.filename().string() + ": size " + std::to_string(bytes.size()) +
                    " is not a multiple of " + std::to_string(sizeof(T)));
  std::vector<T> out(bytes.size() / sizeof(T));
  std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

template <typename T>
void write_array(const std::filesystem::path& p, const std::vector<T>& v) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
  if (!out) throw Error("write failed for " + p.string());
}

json read_json(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw LoadError("cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw LoadError(p.filename().string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& p, const json& j) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  out << j.dump(2) << '\n';
}

std::vector<std::uint32_t> ids_from(const json& j, const std::string& what) {
  if (!j.is_array()) throw LoadError("splits.json: '" + what + "' is not an array");
  return j.get<std::vector<std::uint32_t>>();
}

}  // namespace

const Split& DatasetBundle::split(std::size_t k) const {
  if (k >= splits.size())
    throw ConfigError("split index " + std::to_string(k) + " out of range (" + std::to_string(splits.size()) +
                      " splits)");
  return splits[k];
}

void DatasetBundle::validate() const {
  const std::size_t n = graph.num_nodes();
  if (features.rows() != n) throw LoadError("feature rows " + std::to_string(features.rows()) + " != nodes " + std::to_string(n));
  if (labels.size() != n) throw LoadError("label count " + std::to_string(labels.size()) + " != nodes " + std::to_string(n));
  if (!features.all_finite()) throw LoadError("features contain non-finite values");
  for (std::size_t i = 0; i < n; ++i)
    if (labels[i] >= num_classes)
      throw LoadError("label " + std::to_string(labels[i]) + " of node " + std::to_string(i) +
                      " out of range for " + std::to_string(num_classes) + " classes");
  for (const Split& s : splits) {
    std::vector<std::uint32_t> all;
    for (const auto* part : {&s.train, &s.val, &s.test}) {
      for (auto id : *part)
        if (id >= n) throw LoadError(s.name + ": node id " + std::to_string(id) + " out of range");
      all.insert(all.end(), part->begin(), part->end());
    }
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end())
      throw LoadError(s.name + ": train/val/test lists overlap");
  }
}

DatasetBundle load_dataset(const std::filesystem::path& dir) {
  DatasetBundle b;
  const json meta = read_json(dir / "meta.json");
  std::size_t n = 0, d0 = 0;
  try {
    b.name = meta.at("name").get<std::string>();
    n = meta.at("num_nodes").get<std::size_t>();
    d0 = meta.at("num_features").get<std::size_t>();
    b.num_classes = meta.at("num_classes").get<std::size_t>();
  } catch (const json::exception& e) {
    throw LoadError(std::string("meta.json: malformed header: ") + e.what());
  }

  const auto raw_edges = read_array<std::uint32_t>(dir / "edges.bin");
  if (raw_edges.size() % 2 != 0) throw LoadError("edges.bin: odd number of endpoints");
  std::vector<Edge> edges(raw_edges.size() / 2);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    edges[k] = {raw_edges[2 * k], raw_edges[2 * k + 1]};
    if (edges[k].u >= n || edges[k].v >= n) throw LoadError("edges.bin: endpoint out of range at pair " + std::to_string(k));
  }
  b.graph = Graph::from_edges(n, edges);

  const auto feats = read_array<float>(dir / "features.bin");
  if (feats.size() != n * d0)
    throw LoadError("features.bin: expected " + std::to_string(n * d0) + " values, found " + std::to_string(feats.size()));
  b.features = Matrix(n, d0, std::vector<double>(feats.begin(), feats.end()));

  const auto labels = read_array<std::uint16_t>(dir / "labels.bin");
  if (labels.size() != n)
    throw LoadError("labels.bin: expected " + std::to_string(n) + " labels, found " + std::to_string(labels.size()));
  b.labels.assign(labels.begin(), labels.end());

  const json splits = read_json(dir / "splits.json");
  if (!splits.is_object()) throw LoadError("splits.json: top level must be an object");
  std::vector<std::pair<std::size_t, Split>> ordered;
  for (const auto& [key, val] : splits.items()) {
    if (key.rfind("split_", 0) != 0) throw LoadError("splits.json: unexpected key '" + key + "'");
    Split s;
    s.name = key;
    try {
      s.train = ids_from(val.at("train"), "train");
      s.val = ids_from(val.at("val"), "val");
      s.test = ids_from(val.at("test"), "test");
      ordered.emplace_back(std::stoul(key.substr(6)), std::move(s));
    } catch (const json::exception& e) {
      throw LoadError("splits.json: " + key + ": " + e.what());
    } catch (const std::logic_error&) {
      throw LoadError("splits.json: bad split key '" + key + "'");
    }
  }
  std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& c) { return a.first < c.first; });
  for (auto& [k, s] : ordered) b.splits.push_back(std::move(s));
  b.validate();
  return b;
}

void save_dataset(const DatasetBundle& b, const std::filesystem::path& dir) {
  b.validate();
  std::filesystem::create_directories(dir);
  json meta;
  meta["name"] = b.name;
  meta["num_nodes"] = b.graph.num_nodes();
  meta["num_features"] = b.features.cols();
  meta["num_classes"] = b.num_classes;
  write_json(dir / "meta.json", meta);

  std::vector<std::uint32_t> edges;
  edges.reserve(2 * b.graph.num_edges());
  for (const Edge& e : b.graph.edges()) {
    edges.push_back(e.u);
    edges.push_back(e.v);
  }
  write_array(dir / "edges.bin", edges);

  std::vector<float> feats(b.features.size());
  std::transform(b.features.data().begin(), b.features.data().end(), feats.begin(),
                 [](double v) { return static_cast<float>(v); });
  write_array(dir / "features.bin", feats);

  std::vector<std::uint16_t> labels(b.labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (b.labels[i] > 0xffff) throw Error("label does not fit in uint16");
    labels[i] = static_cast<std::uint16_t>(b.labels[i]);
  }
  write_array(dir / "labels.bin", labels);

  json splits = json::object();
  for (const Split& s : b.splits) splits[s.name] = {{"train", s.train}, {"val", s.val}, {"test", s.test}};
  write_json(dir / "splits.json", splits);
}

Split random_split(std::size_t n, double train_frac, double val_frac, Rng& rng, std::string name) {
  std::vector<std::uint32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0u);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::llround(val_frac * static_cast<double>(n)));
  if (n_train + n_val > n) throw ContractError("split fractions exceed 1");
  Split s;
  s.name = std::move(name);
  s.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
               perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), perm.end());
  for (auto* part : {&s.train, &s.val, &s.test}) std::sort(part->begin(), part->end());
  return s;
}

}  // namespace aggbuf
