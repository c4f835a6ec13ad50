#include "rmvh/model_io.hpp"

#include <string>
#include <string_view>

#include "rmvh/byte_io.hpp"

namespace rmvh {

namespace {

constexpr std::string_view kMagic = "RMVHMODL";
constexpr std::size_t kHeader = 8 + 4;
constexpr std::size_t kTrailer = 8;
// Shapes beyond this are treated as corruption rather than allocated.
constexpr std::uint64_t kMaxExtent = std::uint64_t{1} << 32;

void put_matrix(io::Writer& w, const Matrix& m) {
  w.u64(static_cast<std::uint64_t>(m.rows()));
  w.u64(static_cast<std::uint64_t>(m.cols()));
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) w.f64(m(i, j));
}

Matrix get_matrix(io::Reader& r, const std::string& context) {
  const std::uint64_t rows = r.u64();
  const std::uint64_t cols = r.u64();
  if (rows > kMaxExtent || cols > kMaxExtent || (rows * cols) * 8 > r.remaining())
    throw CorruptFile(context + ": matrix of " + std::to_string(rows) + " x " + std::to_string(cols) +
                      " does not fit in the file");
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i) m(i, j) = r.f64();
  return m;
}

void put_vector(io::Writer& w, const Vector& v) {
  w.u64(static_cast<std::uint64_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) w.f64(v(i));
}

Vector get_vector(io::Reader& r, const std::string& context) {
  const std::uint64_t n = r.u64();
  if (n > kMaxExtent || n * 8 > r.remaining()) throw CorruptFile(context + ": vector length out of range");
  Vector v(static_cast<Index>(n));
  for (Index i = 0; i < v.size(); ++i) v(i) = r.f64();
  return v;
}

template <class E>
E get_enum(io::Reader& r, std::uint32_t count, const std::string& context, const char* what) {
  const std::uint32_t v = r.u32();
  if (v >= count) throw CorruptFile(context + ": invalid " + what + " tag " + std::to_string(v));
  return static_cast<E>(v);
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const ModelFile& file) {
  const HashModel& m = file.model;
  io::Writer w;
  w.bytes(kMagic);
  w.u32(file.version);

  put_matrix(w, m.w);
  put_vector(w, m.b);

  w.u32(static_cast<std::uint32_t>(m.landmarks.mode));
  w.u64(m.landmarks.views.size());
  for (const auto& v : m.landmarks.views) put_matrix(w, v);

  w.u64(m.kernel.sigma.size());
  for (double s : m.kernel.sigma) w.f64(s);
  w.f64(m.kernel.sigma_concat);
  w.u64(static_cast<std::uint64_t>(m.kernel.self_tuning_k));
  w.u32(static_cast<std::uint32_t>(m.kernel.query_mode));

  w.u32(m.base ? 1 : 0);
  if (m.base) {
    put_matrix(w, m.base->centers);
    put_matrix(w, m.base->embeddings);
    w.f64(m.base->sigma);
    w.u64(static_cast<std::uint64_t>(m.base->k));
  }
  w.str(file.config_snapshot);

  w.u64(io::fnv1a64(w.data()));
  return std::move(w.data());
}

ModelFile deserialize_model(const std::vector<std::uint8_t>& bytes, const std::string& context) {
  if (bytes.size() < kHeader + kTrailer)
    throw CorruptFile(context + ": truncated (" + std::to_string(bytes.size()) + " bytes)");
  if (std::string_view(reinterpret_cast<const char*>(bytes.data()), kMagic.size()) != kMagic)
    throw CorruptFile(context + ": not a model file (bad magic)");

  const std::span<const std::uint8_t> all(bytes);
  ModelFile file;
  {
    io::Reader head(all.subspan(kMagic.size(), 4), context);
    file.version = head.u32();
  }
  if (file.version > kModelFormatVersion)
    throw VersionError(context + ": file format version " + std::to_string(file.version) +
                       " is newer than the supported version " + std::to_string(kModelFormatVersion));
  if (file.version == 0) throw CorruptFile(context + ": invalid format version 0");

  const std::size_t body = bytes.size() - kTrailer;
  io::Reader tail(all.subspan(body), context);
  const std::uint64_t stored = tail.u64();
  if (io::fnv1a64(all.first(body)) != stored)
    throw CorruptFile(context + ": checksum mismatch (file truncated or modified)");

  io::Reader r(all.subspan(kHeader, body - kHeader), context);
  HashModel& m = file.model;
  m.w = get_matrix(r, context);
  m.b = get_vector(r, context);

  m.landmarks.mode = get_enum<KernelLandmarkMode>(r, 2, context, "landmark mode");
  const std::uint64_t views = r.u64();
  if (views > 4096) throw CorruptFile(context + ": implausible view count");
  for (std::uint64_t v = 0; v < views; ++v) m.landmarks.views.push_back(get_matrix(r, context));

  const std::uint64_t sigmas = r.u64();
  if (sigmas != views) throw CorruptFile(context + ": bandwidth count does not match view count");
  for (std::uint64_t v = 0; v < sigmas; ++v) m.kernel.sigma.push_back(r.f64());
  m.kernel.sigma_concat = r.f64();
  m.kernel.self_tuning_k = static_cast<Index>(r.u64());
  m.kernel.query_mode = get_enum<QueryKernelMode>(r, 3, context, "query mode");

  if (r.u32() != 0) {
    BaseSet base;
    base.centers = get_matrix(r, context);
    base.embeddings = get_matrix(r, context);
    base.sigma = r.f64();
    base.k = static_cast<Index>(r.u64());
    m.base = std::move(base);
  }
  file.config_snapshot = r.str();
  if (r.remaining() != 0) throw CorruptFile(context + ": trailing bytes after the payload");

  // Structural consistency.
  auto bad = [&](const std::string& what) { throw CorruptFile(context + ": " + what); };
  if (m.b.size() != m.w.cols()) bad("b length does not match the code length");
  for (const auto& v : m.landmarks.views)
    if (v.cols() != m.w.rows()) bad("landmark count does not match the rows of W");
  if (m.base && (m.base->embeddings.rows() != m.base->centers.cols() || m.base->embeddings.cols() != m.w.cols()))
    bad("base set shape is inconsistent");
  return file;
}

void save_model(const std::filesystem::path& path, const ModelFile& file) {
  io::write_file(path, serialize_model(file));
}

ModelFile load_model(const std::filesystem::path& path) {
  return deserialize_model(io::read_file(path), path.string());
}

}  // namespace rmvh
