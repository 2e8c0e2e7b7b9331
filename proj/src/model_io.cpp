#include "edgeids/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "edgeids/error.hpp"

namespace edgeids {
namespace {

constexpr char kModelMagic[8] = {'E', 'I', 'D', 'S', 'M', 'O', 'D', 'L'};
constexpr char kBundleMagic[8] = {'E', 'I', 'D', 'S', 'B', 'N', 'D', 'L'};
constexpr std::uint32_t kBundleVersion = 1;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void raw(const char* data, std::size_t n) { out_.write(data, static_cast<std::streamsize>(n)); }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint8_t u8() {
    const int c = in_.get();
    if (c == std::char_traits<char>::eof()) throw Error(Errc::FormatError, "truncated model data");
    return static_cast<std::uint8_t>(c);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const auto n = u32();
    if (n > (1u << 20)) throw Error(Errc::FormatError, "string field too long");
    std::string s(n, '\0');
    in_.read(s.data(), n);
    if (in_.gcount() != static_cast<std::streamsize>(n)) {
      throw Error(Errc::FormatError, "truncated model data");
    }
    return s;
  }
  void expect_magic(const char (&magic)[8]) {
    char got[8];
    in_.read(got, 8);
    if (in_.gcount() != 8 || std::memcmp(got, magic, 8) != 0) {
      throw Error(Errc::FormatError, "bad magic");
    }
  }

 private:
  std::istream& in_;
};

void write_tree(Writer& w, const DecisionTree& tree) {
  w.u32(static_cast<std::uint32_t>(tree.nodes.size()));
  for (const auto& n : tree.nodes) {
    w.i32(n.feature);
    w.f64(n.threshold);
    w.i32(n.left);
    w.i32(n.right);
    for (double p : n.posterior) w.f64(p);
  }
}

DecisionTree read_tree(Reader& r) {
  DecisionTree tree;
  const auto count = r.u32();
  tree.nodes.resize(count);
  for (auto& n : tree.nodes) {
    n.feature = r.i32();
    n.threshold = r.f64();
    n.left = r.i32();
    n.right = r.i32();
    for (double& p : n.posterior) p = r.f64();
  }
  const auto valid_child = [&](int c) { return c > 0 && static_cast<std::uint32_t>(c) < count; };
  for (const auto& n : tree.nodes) {
    if (n.feature >= static_cast<int>(kFeatureCount) ||
        (n.feature >= 0 && !(valid_child(n.left) && valid_child(n.right)))) {
      throw Error(Errc::FormatError, "corrupt tree node");
    }
  }
  return tree;
}

std::string parameter_block(const ClassifierModel& model) {
  std::ostringstream block(std::ios::binary);
  Writer w(block);
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, DecisionTree>) {
          write_tree(w, p);
        } else if constexpr (std::is_same_v<T, RandomForest>) {
          w.u32(static_cast<std::uint32_t>(p.trees.size()));
          for (const auto& t : p.trees) write_tree(w, t);
        } else if constexpr (std::is_same_v<T, KNearest>) {
          w.u32(static_cast<std::uint32_t>(p.k));
          w.u32(static_cast<std::uint32_t>(p.exemplars.count));
          for (std::size_t i = 0; i < p.exemplars.count; ++i) {
            for (std::size_t d = 0; d < kFeatureCount; ++d) {
              w.f64(p.exemplars.columns[d * p.exemplars.count + i]);
            }
          }
          for (auto label : p.exemplars.labels) w.u8(static_cast<std::uint8_t>(label));
        } else {
          w.str(p.source_id);
        }
      },
      model.parameters());
  return block.str();
}

ClassLabel read_label(Reader& r) {
  const auto v = r.u8();
  if (v >= kClassCount) throw Error(Errc::FormatError, "bad class label");
  return static_cast<ClassLabel>(v);
}

}  // namespace

void write_model(std::ostream& out, const ClassifierModel& model) {
  Writer w(out);
  w.raw(kModelMagic, 8);
  w.u32(kModelFormatVersion);
  w.u32(static_cast<std::uint32_t>(model.kind()));
  w.u32(static_cast<std::uint32_t>(kFeatureCount));
  w.u32(static_cast<std::uint32_t>(kClassCount));
  w.str(model.name());
  const std::string block = parameter_block(model);
  w.u64(block.size());
  w.raw(block.data(), block.size());
}

ClassifierModel read_model(std::istream& in) {
  Reader r(in);
  r.expect_magic(kModelMagic);
  if (const auto v = r.u32(); v != kModelFormatVersion) {
    throw Error(Errc::FormatError, "unsupported model format version " + std::to_string(v));
  }
  const auto kind = r.u32();
  if (r.u32() != kFeatureCount) throw Error(Errc::FormatError, "feature dimension mismatch");
  if (r.u32() != kClassCount) throw Error(Errc::FormatError, "class count mismatch");
  std::string name = r.str();
  const auto block_len = r.u64();
  (void)block_len;

  switch (static_cast<ModelKind>(kind)) {
    case ModelKind::DecisionTree:
      return ClassifierModel(std::move(name), read_tree(r));
    case ModelKind::RandomForest: {
      RandomForest forest;
      const auto n = r.u32();
      for (std::uint32_t t = 0; t < n; ++t) forest.trees.push_back(read_tree(r));
      return ClassifierModel(std::move(name), std::move(forest));
    }
    case ModelKind::KNearest: {
      KNearest knn;
      knn.k = r.u32();
      const auto count = r.u32();
      std::vector<LabeledVector> rows(count);
      for (auto& row : rows) {
        FeatureVector::Values v{};
        for (double& x : v) x = r.f64();
        row.x = FeatureVector(v);
      }
      for (auto& row : rows) row.y = read_label(r);
      knn.exemplars = ExemplarStore::build(rows);
      if (knn.k < 1 || knn.k > count) throw Error(Errc::FormatError, "bad k");
      return ClassifierModel(std::move(name), std::move(knn));
    }
    case ModelKind::External:
      return ClassifierModel(std::move(name), ExternalModel{r.str()});
  }
  throw Error(Errc::FormatError, "unknown model kind " + std::to_string(kind));
}

void write_bundle(std::ostream& out, const ModelBundle& bundle) {
  Writer w(out);
  w.raw(kBundleMagic, 8);
  w.u32(kBundleVersion);
  w.u32(static_cast<std::uint32_t>(kFeatureCount));
  w.u64(bundle.stats.sample_count);
  w.f64(bundle.stats.sigma_floor);
  for (double m : bundle.stats.mean) w.f64(m);
  for (double s : bundle.stats.stddev) w.f64(s);
  w.u32(static_cast<std::uint32_t>(bundle.models.size()));
  for (const auto& m : bundle.models) write_model(out, m);
}

ModelBundle read_bundle(std::istream& in) {
  Reader r(in);
  r.expect_magic(kBundleMagic);
  if (const auto v = r.u32(); v != kBundleVersion) {
    throw Error(Errc::FormatError, "unsupported bundle version " + std::to_string(v));
  }
  if (r.u32() != kFeatureCount) throw Error(Errc::FormatError, "feature dimension mismatch");
  ModelBundle bundle;
  bundle.stats.sample_count = r.u64();
  bundle.stats.sigma_floor = r.f64();
  for (double& m : bundle.stats.mean) m = r.f64();
  for (double& s : bundle.stats.stddev) s = r.f64();
  const auto n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) bundle.models.push_back(read_model(in));
  return bundle;
}

void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  write_bundle(out, bundle);
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  return read_bundle(in);
}

}  // namespace edgeids
