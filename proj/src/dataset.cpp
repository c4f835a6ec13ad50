#include "rmvh/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "rmvh/byte_io.hpp"

namespace rmvh {

namespace fs = std::filesystem;

std::vector<Index> MultiViewDataset::dims() const {
  std::vector<Index> d;
  for (const auto& v : views) d.push_back(v.rows());
  return d;
}

Index MultiViewDataset::total_dim() const {
  Index d = 0;
  for (const auto& v : views) d += v.rows();
  return d;
}

void MultiViewDataset::validate() const {
  if (views.empty()) throw FormatError("dataset '" + name + "' has no views");
  const Index n = views.front().cols();
  for (std::size_t m = 0; m < views.size(); ++m) {
    if (views[m].rows() < 1) throw FormatError("view " + std::to_string(m) + " has zero dimensions");
    if (views[m].cols() != n) {
      throw FormatError("view " + std::to_string(m) + " has " + std::to_string(views[m].cols()) +
                        " samples, expected " + std::to_string(n) + " (from view 0)");
    }
    for (Index j = 0; j < views[m].cols(); ++j) {
      for (Index i = 0; i < views[m].rows(); ++i) {
        if (!std::isfinite(views[m](i, j))) {
          throw FormatError("view " + std::to_string(m) + " has a non-finite value at (" +
                            std::to_string(i) + ", " + std::to_string(j) + ")");
        }
      }
    }
  }
  if (labels && static_cast<Index>(labels->size()) != n) {
    throw FormatError("label count " + std::to_string(labels->size()) + " does not match N = " +
                      std::to_string(n));
  }
  if (static_cast<Index>(ids.size()) != n) {
    throw FormatError("id count " + std::to_string(ids.size()) + " does not match N = " + std::to_string(n));
  }
}

Matrix MultiViewDataset::concatenated() const {
  Matrix out(total_dim(), num_samples());
  Index row = 0;
  for (const auto& v : views) {
    out.middleRows(row, v.rows()) = v;
    row += v.rows();
  }
  return out;
}

MultiViewDataset MultiViewDataset::subset(const std::vector<Index>& columns) const {
  MultiViewDataset out;
  out.name = name;
  for (const auto& v : views) out.views.push_back(v(Eigen::all, columns));
  if (labels) {
    std::vector<int> l;
    l.reserve(columns.size());
    for (Index c : columns) l.push_back((*labels)[c]);
    out.labels = std::move(l);
  }
  for (Index c : columns) out.ids.push_back(ids[c]);
  return out;
}

Matrix round_to_float(const Matrix& m) {
  return m.unaryExpr([](double x) { return static_cast<double>(static_cast<float>(x)); });
}

// ---------------------------------------------------------------------------
// MVH1 files

Matrix read_view(const fs::path& path) {
  const auto bytes = io::read_file(path);
  io::Reader r(bytes, path.string());
  if (r.bytes(4) != "MVH1") throw FormatError(path.string() + ": bad magic, expected MVH1");
  const std::uint64_t rows = r.u64(), cols = r.u64();
  if (rows != 0 && cols > r.remaining() / 4 / rows) {
    throw FormatError(path.string() + ": header declares " + std::to_string(rows) + "x" +
                      std::to_string(cols) + " floats but only " + std::to_string(r.remaining()) +
                      " payload bytes are present");
  }
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::uint64_t i = 0; i < rows; ++i) {
    for (std::uint64_t j = 0; j < cols; ++j) {
      const float v = r.f32();
      if (!std::isfinite(v)) {
        throw FormatError(path.string() + ": non-finite value at (" + std::to_string(i) + ", " +
                          std::to_string(j) + ")");
      }
      m(static_cast<Index>(i), static_cast<Index>(j)) = v;
    }
  }
  if (r.remaining() != 0) {
    throw FormatError(path.string() + ": " + std::to_string(r.remaining()) + " trailing bytes");
  }
  return m;
}

void write_view(const fs::path& path, const Matrix& view) {
  for (Index j = 0; j < view.cols(); ++j)
    for (Index i = 0; i < view.rows(); ++i)
      if (!std::isfinite(static_cast<float>(view(i, j))))
        throw FormatError(path.string() + ": non-finite value at (" + std::to_string(i) + ", " +
                          std::to_string(j) + ")");
  io::Writer w;
  w.data().reserve(20 + 4 * static_cast<std::size_t>(view.size()));
  w.bytes("MVH1");
  w.u64(static_cast<std::uint64_t>(view.rows()));
  w.u64(static_cast<std::uint64_t>(view.cols()));
  for (Index i = 0; i < view.rows(); ++i) {
    for (Index j = 0; j < view.cols(); ++j) w.f32(static_cast<float>(view(i, j)));
  }
  io::write_file(path, w.data());
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string read_text(const fs::path& path) {
  const auto bytes = io::read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

template <class T>
std::vector<T> read_column_file(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<T> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    std::istringstream ls(line);
    T v{};
    if (!(ls >> v) || !(ls >> std::ws).eof()) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected one integer, got '" +
                        line + "'");
    }
    out.push_back(v);
  }
  return out;
}

template <class T>
void write_column_file(const fs::path& path, const std::vector<T>& values) {
  std::ostringstream out;
  for (const T& v : values) out << v << '\n';
  const std::string s = out.str();
  io::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

}  // namespace

MultiViewDataset load_dataset(const fs::path& manifest_path) {
  std::istringstream in(read_text(manifest_path));
  const fs::path base = manifest_path.parent_path();
  auto resolve = [&](const std::string& p) {
    const fs::path q(p);
    return q.is_absolute() ? q : base / q;
  };

  MultiViewDataset ds;
  ds.name = manifest_path.stem().string();
  std::optional<fs::path> label_path, id_path;
  std::vector<fs::path> view_paths;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError(manifest_path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key == "name") {
      ds.name = value;
    } else if (key == "view") {
      view_paths.push_back(resolve(value));
    } else if (key == "labels") {
      label_path = resolve(value);
    } else if (key == "ids") {
      id_path = resolve(value);
    } else {
      throw FormatError(manifest_path.string() + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  if (view_paths.empty()) throw FormatError(manifest_path.string() + ": manifest lists no views");

  for (const auto& p : view_paths) ds.views.push_back(read_view(p));
  const Index n = ds.views.front().cols();
  for (std::size_t m = 1; m < ds.views.size(); ++m) {
    if (ds.views[m].cols() != n) {
      throw FormatError("view " + std::to_string(m) + " (" + view_paths[m].string() + ") has " +
                        std::to_string(ds.views[m].cols()) + " samples but view 0 has " + std::to_string(n));
    }
  }
  if (label_path) ds.labels = read_column_file<int>(*label_path);
  if (id_path) {
    ds.ids = read_column_file<std::uint64_t>(*id_path);
  } else {
    ds.ids.resize(static_cast<std::size_t>(n));
    std::iota(ds.ids.begin(), ds.ids.end(), 0);
  }
  ds.validate();
  return ds;
}

std::vector<fs::path> save_dataset(const MultiViewDataset& ds, const fs::path& manifest_path, bool gzip) {
  ds.validate();
  const fs::path dir = manifest_path.parent_path();
  if (!dir.empty()) fs::create_directories(dir);
  const std::string stem = manifest_path.stem().string();
  const std::string suffix = gzip ? ".mvh.gz" : ".mvh";

  std::vector<fs::path> written{manifest_path};
  std::ostringstream manifest;
  manifest << "name = " << ds.name << '\n';
  for (Index m = 0; m < ds.num_views(); ++m) {
    const std::string file = stem + ".view" + std::to_string(m) + suffix;
    write_view(dir / file, ds.views[m]);
    manifest << "view = " << file << '\n';
    written.push_back(dir / file);
  }
  if (ds.labels) {
    const std::string file = stem + ".labels.txt";
    write_column_file(dir / file, *ds.labels);
    manifest << "labels = " << file << '\n';
    written.push_back(dir / file);
  }
  {
    const std::string file = stem + ".ids.txt";
    write_column_file(dir / file, ds.ids);
    manifest << "ids = " << file << '\n';
    written.push_back(dir / file);
  }
  const std::string s = manifest.str();
  io::write_file(manifest_path, std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
  return written;
}

// ---------------------------------------------------------------------------
// Generation and corruption

MultiViewDataset synth_multiview(Index n_clusters, Index per_cluster, const std::vector<Index>& dims,
                                 double view_noise, std::uint64_t seed) {
  require(!dims.empty(), "synth_multiview: need at least one view");
  require(n_clusters >= 1, "synth_multiview: need at least one cluster");
  require(per_cluster >= 1, "synth_multiview: per_cluster must be >= 1");
  require(view_noise >= 0.0, "synth_multiview: negative view noise");
  for (Index d : dims) require(d >= 1, "synth_multiview: every view needs at least one dimension");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Index latent = std::max<Index>(n_clusters, 2);
  const Index n = n_clusters * per_cluster;

  Matrix centers(latent, n_clusters);
  for (Index j = 0; j < n_clusters; ++j)
    for (Index i = 0; i < latent; ++i) centers(i, j) = gauss(rng);

  MultiViewDataset ds;
  ds.name = "synth";
  for (Index d : dims) {
    Matrix embed(d, latent);
    for (Index j = 0; j < latent; ++j)
      for (Index i = 0; i < d; ++i) embed(i, j) = gauss(rng) / std::sqrt(static_cast<double>(latent));
    const Matrix projected = embed * centers;
    Matrix view(d, n);
    for (Index s = 0; s < n; ++s) {
      view.col(s) = projected.col(s / per_cluster);
      if (view_noise > 0.0) {
        for (Index i = 0; i < d; ++i) view(i, s) += view_noise * gauss(rng);
      }
    }
    ds.views.push_back(round_to_float(view));
  }
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Index s = 0; s < n; ++s) labels[s] = static_cast<int>(s / per_cluster);
  ds.labels = std::move(labels);
  ds.ids.resize(static_cast<std::size_t>(n));
  std::iota(ds.ids.begin(), ds.ids.end(), 0);
  return ds;
}

namespace {

void check_fraction(double f) {
  require(f >= 0.0 && f <= 1.0, "corruption fraction must lie in [0, 1], got " + std::to_string(f));
}

// Independent stream per view so that adding a view does not reshuffle others.
std::mt19937_64 view_rng(std::uint64_t seed, Index view) {
  std::seed_seq seq{seed, static_cast<std::uint64_t>(view), std::uint64_t{0x5eed}};
  return std::mt19937_64(seq);
}

}  // namespace

MultiViewDataset corrupt_gaussian(const MultiViewDataset& ds, const CorruptionSpec& spec) {
  require(spec.kind == CorruptionKind::gaussian_fraction, "corrupt_gaussian: spec kind is not gaussian-fraction");
  check_fraction(spec.fraction);
  MultiViewDataset out = ds;
  for (Index m = 0; m < out.num_views(); ++m) {
    Matrix& view = out.views[m];
    const auto total = static_cast<std::size_t>(view.size());
    const auto count = static_cast<std::size_t>(std::llround(spec.fraction * static_cast<double>(total)));
    if (count == 0) continue;
    auto rng = view_rng(spec.seed, m);
    // Partial Fisher-Yates: the first `count` slots are a uniform sample.
    std::vector<std::size_t> idx(total);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, total - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    std::normal_distribution<double> gauss(0.0, 1.0);
    double* data = view.data();
    for (std::size_t i = 0; i < count; ++i) data[idx[i]] += gauss(rng);
    view = round_to_float(view);
  }
  return out;
}

MultiViewDataset corrupt_block(const MultiViewDataset& ds, const CorruptionSpec& spec) {
  require(spec.kind == CorruptionKind::block_zero, "corrupt_block: spec kind is not block-zero");
  check_fraction(spec.fraction);
  MultiViewDataset out = ds;
  for (Index m = 0; m < out.num_views(); ++m) {
    Matrix& view = out.views[m];
    const Index d = view.rows();
    const auto run = static_cast<Index>(std::ceil(spec.fraction * static_cast<double>(d) - 1e-12));
    if (run == 0) continue;
    auto rng = view_rng(spec.seed, m);
    std::uniform_int_distribution<Index> offset(0, d - run);
    for (Index s = 0; s < view.cols(); ++s) view.col(s).segment(offset(rng), run).setZero();
  }
  return out;
}

MultiViewDataset corrupt(const MultiViewDataset& ds, const CorruptionSpec& spec) {
  return spec.kind == CorruptionKind::gaussian_fraction ? corrupt_gaussian(ds, spec) : corrupt_block(ds, spec);
}

Split split(const MultiViewDataset& ds, Index n_query, std::uint64_t seed) {
  const Index n = ds.num_samples();
  require(n_query >= 0 && n_query < n, "split: n_query = " + std::to_string(n_query) +
                                           " must be smaller than N = " + std::to_string(n));
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  for (Index i = 0; i < n_query; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(perm[i], perm[pick(rng)]);
  }
  Split s;
  s.query_index.assign(perm.begin(), perm.begin() + n_query);
  s.train_index.assign(perm.begin() + n_query, perm.end());
  std::sort(s.query_index.begin(), s.query_index.end());
  std::sort(s.train_index.begin(), s.train_index.end());
  s.train = ds.subset(s.train_index);
  s.query = ds.subset(s.query_index);
  return s;
}

}  // namespace rmvh
