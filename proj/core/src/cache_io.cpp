#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "priu/capture.hpp"
#include "priu/error.hpp"

// On-disk layout (little endian), documented in docs/format.md:
//   "PRIU" u16 version u8 mode u8 kind | 128-byte fixed header | chunks
//   chunk = u32 iteration, u8 kind, 3 pad, u64 payload bytes, payload padded to 8

namespace priu {

static_assert(std::endian::native == std::endian::little, "cache I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'P', 'R', 'I', 'U'};
constexpr std::size_t kFixedHeader = 128;
constexpr std::uint32_t kNoIteration = 0xffffffffu;

enum class Chunk : std::uint8_t {
  kPacked = 1,
  kP = 2,
  kV = 3,
  kMoment = 4,
  kSegments = 5,
  kProbs = 6,
  kOffsets = 7,
  kW0 = 8,
  kFinal = 9,
  kFrozenSegments = 10,
  kFrozenProbs = 11,
  kFrozenOffsets = 12,
};

class Writer {
 public:
  template <class T>
  void put(T v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof v);
  }
  void raw(const void* data, std::size_t len) {
    const auto* p = static_cast<const char*>(data);
    buf_.insert(buf_.end(), p, p + len);
  }
  void pad_to(std::size_t size) { buf_.resize(size, 0); }
  void align8() { buf_.resize((buf_.size() + 7) / 8 * 8, 0); }
  std::size_t size() const { return buf_.size(); }
  const std::vector<char>& bytes() const { return buf_; }

  void chunk(std::uint32_t iteration, Chunk kind, const void* data, std::size_t len) {
    put(iteration);
    put(static_cast<std::uint8_t>(kind));
    pad_to(size() + 3);
    put(static_cast<std::uint64_t>(len));
    raw(data, len);
    align8();
  }
  void doubles(std::uint32_t it, Chunk kind, const double* data, std::size_t count) {
    chunk(it, kind, data, count * sizeof(double));
  }
  void matrix(std::uint32_t it, Chunk kind, const Matrix& M) {
    std::vector<char> payload(8 + sizeof(double) * static_cast<std::size_t>(M.size()));
    auto rows = static_cast<std::uint32_t>(M.rows());
    auto cols = static_cast<std::uint32_t>(M.cols());
    std::memcpy(payload.data(), &rows, 4);
    std::memcpy(payload.data() + 4, &cols, 4);
    if (M.size()) std::memcpy(payload.data() + 8, M.data(), sizeof(double) * M.size());
    chunk(it, kind, payload.data(), payload.size());
  }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> buf) : buf_(std::move(buf)) {}

  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof v);
    pos_ += sizeof v;
    return v;
  }
  const char* take(std::size_t len) {
    need(len);
    const char* p = buf_.data() + pos_;
    pos_ += len;
    return p;
  }
  void seek(std::size_t pos) {
    require(pos <= buf_.size(), ErrorCode::kTruncated, "cache file is truncated");
    pos_ = pos;
  }
  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ >= buf_.size(); }

 private:
  void need(std::size_t len) const {
    require(len <= buf_.size() - pos_, ErrorCode::kTruncated, "cache file is truncated");
  }
  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

template <class T>
std::vector<T> as_vector(const char* data, std::size_t len) {
  require(len % sizeof(T) == 0, ErrorCode::kCacheCorrupt, "cache chunk has a ragged length");
  std::vector<T> out(len / sizeof(T));
  if (len) std::memcpy(out.data(), data, len);
  return out;
}

Vector as_eigen(const char* data, std::size_t len) {
  auto v = as_vector<double>(data, len);
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Matrix as_matrix(const char* data, std::size_t len) {
  require(len >= 8, ErrorCode::kCacheCorrupt, "matrix chunk is too short");
  std::uint32_t rows, cols;
  std::memcpy(&rows, data, 4);
  std::memcpy(&cols, data + 4, 4);
  require(len - 8 == sizeof(double) * static_cast<std::size_t>(rows) * cols, ErrorCode::kCacheCorrupt,
          "matrix chunk size disagrees with its shape");
  Matrix M(rows, cols);
  if (M.size()) std::memcpy(M.data(), data + 8, len - 8);
  return M;
}

void write_coeffs(Writer& w, const LinearCoeffs& c, Chunk seg, Chunk probs, Chunk offs) {
  if (c.kind == ModelKind::kBinaryLogistic)
    w.chunk(kNoIteration, seg, c.segments.data(), c.segments.size() * sizeof(std::int32_t));
  else {
    w.doubles(kNoIteration, probs, c.probs.data(), c.probs.size());
    w.doubles(kNoIteration, offs, c.offsets.data(), c.offsets.size());
  }
}

}  // namespace

void save_cache(const ProvenanceCache& cache, const std::filesystem::path& path) {
  const auto& h = cache.header;
  Writer w;
  w.raw(kMagic, 4);
  w.put(kCacheFormatVersion);
  w.put(static_cast<std::uint8_t>(h.mode));
  w.put(static_cast<std::uint8_t>(h.hp.kind));

  const std::size_t start = w.size();
  w.put(h.fingerprint.hi);
  w.put(h.fingerprint.lo);
  w.put(static_cast<std::uint32_t>(h.n));
  w.put(static_cast<std::uint32_t>(h.m));
  w.put(static_cast<std::uint32_t>(h.q));
  w.put(static_cast<std::uint32_t>(h.hp.batch_size));
  w.put(static_cast<std::uint32_t>(h.hp.iterations));
  w.put(h.segments);
  w.put(h.hp.seed);
  w.put(h.hp.eta);
  w.put(h.hp.lambda);
  w.put(h.epsilon);
  w.put(h.a_bound);
  w.put(static_cast<std::uint32_t>(h.t_s ? 1 : 0));
  w.put(static_cast<std::uint32_t>(h.t_s.value_or(0)));
  w.pad_to(start + kFixedHeader);

  for (std::size_t t = 0; t < cache.entries.size(); ++t) {
    const auto& e = cache.entries[t];
    const auto it = static_cast<std::uint32_t>(t);
    if (h.mode == CacheMode::kDenseFull) {
      w.doubles(it, Chunk::kPacked, e.packed.data(), e.packed.size());
    } else {
      w.matrix(it, Chunk::kP, e.P);
      w.matrix(it, Chunk::kV, e.V);
    }
    w.doubles(it, Chunk::kMoment, e.moment.data(), static_cast<std::size_t>(e.moment.size()));
  }
  if (is_logistic(h.hp.kind)) write_coeffs(w, cache.coeffs, Chunk::kSegments, Chunk::kProbs, Chunk::kOffsets);
  if (cache.frozen)
    write_coeffs(w, *cache.frozen, Chunk::kFrozenSegments, Chunk::kFrozenProbs, Chunk::kFrozenOffsets);
  w.doubles(kNoIteration, Chunk::kW0, cache.w0.data(), static_cast<std::size_t>(cache.w0.size()));
  w.doubles(kNoIteration, Chunk::kFinal, cache.final_w.data(), static_cast<std::size_t>(cache.final_w.size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::kData, "cannot open '" + path.string() + "' for writing");
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.size()));
  require(out.good(), ErrorCode::kData, "failed writing '" + path.string() + "'");
}

ProvenanceCache load_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::kData, "cannot open cache '" + path.string() + "'");
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  require(buf.size() >= 4, ErrorCode::kTruncated, "cache file is truncated");
  require(std::memcmp(buf.data(), kMagic, 4) == 0, ErrorCode::kFormat,
          "'" + path.string() + "' is not a provenance cache");
  Reader r(std::move(buf));
  r.take(4);
  const auto version = r.get<std::uint16_t>();
  require(version == kCacheFormatVersion, ErrorCode::kVersion,
          "cache format version " + std::to_string(version) + " is not supported (expected " +
              std::to_string(kCacheFormatVersion) + ")");
  const auto mode = r.get<std::uint8_t>();
  const auto kind = r.get<std::uint8_t>();
  require(mode <= 2 && kind <= 2, ErrorCode::kFormat, "cache header has an unknown mode or model kind");

  ProvenanceCache cache;
  auto& h = cache.header;
  h.mode = static_cast<CacheMode>(mode);
  h.hp.kind = static_cast<ModelKind>(kind);
  const std::size_t start = r.pos();
  h.fingerprint.hi = r.get<std::uint64_t>();
  h.fingerprint.lo = r.get<std::uint64_t>();
  h.n = r.get<std::uint32_t>();
  h.m = r.get<std::uint32_t>();
  h.q = static_cast<int>(r.get<std::uint32_t>());
  h.hp.batch_size = r.get<std::uint32_t>();
  h.hp.iterations = r.get<std::uint32_t>();
  h.segments = r.get<std::uint32_t>();
  h.hp.seed = r.get<std::uint64_t>();
  h.hp.eta = r.get<double>();
  h.hp.lambda = r.get<double>();
  h.epsilon = r.get<double>();
  h.a_bound = r.get<double>();
  const bool has_ts = r.get<std::uint32_t>() != 0;
  const auto ts = r.get<std::uint32_t>();
  if (has_ts) h.t_s = ts;
  r.seek(start + kFixedHeader);
  require(h.n >= 1 && h.m >= 1 && h.q >= 1 && h.hp.batch_size >= 1 && h.hp.batch_size <= h.n &&
              h.hp.iterations >= 1 && h.segments >= 1,
          ErrorCode::kCacheCorrupt, "cache header holds an invalid shape");
  // Guards the allocation below against a corrupted header.
  require(h.hp.iterations <= (1u << 26), ErrorCode::kCacheCorrupt, "cache header iteration count is implausible");

  if (h.mode != CacheMode::kSparseLinearized) cache.entries.resize(h.hp.iterations);
  auto init_coeffs = [&](LinearCoeffs& c, Index iterations, Index batch) {
    c.kind = h.hp.kind;
    c.iterations = iterations;
    c.batch_size = batch;
    c.classes = h.q;
  };
  if (is_logistic(h.hp.kind)) init_coeffs(cache.coeffs, h.hp.iterations, h.hp.batch_size);

  while (!r.done()) {
    const auto it = r.get<std::uint32_t>();
    const auto ck = static_cast<Chunk>(r.get<std::uint8_t>());
    r.take(3);
    const auto len = r.get<std::uint64_t>();
    const char* data = r.take(len);
    r.seek((r.pos() + 7) / 8 * 8);
    auto entry = [&]() -> IterationEntry& {
      require(it < cache.entries.size(), ErrorCode::kCacheCorrupt,
              "cache chunk refers to iteration " + std::to_string(it) + " outside the run");
      return cache.entries[it];
    };
    auto frozen = [&]() -> LinearCoeffs& {
      if (!cache.frozen) {
        cache.frozen.emplace();
        init_coeffs(*cache.frozen, 1, h.n);
      }
      return *cache.frozen;
    };
    switch (ck) {
      case Chunk::kPacked: entry().packed = as_vector<double>(data, len); break;
      case Chunk::kP: entry().P = as_matrix(data, len); break;
      case Chunk::kV: entry().V = as_matrix(data, len); break;
      case Chunk::kMoment: entry().moment = as_eigen(data, len); break;
      case Chunk::kSegments: cache.coeffs.segments = as_vector<std::int32_t>(data, len); break;
      case Chunk::kProbs: cache.coeffs.probs = as_vector<double>(data, len); break;
      case Chunk::kOffsets: cache.coeffs.offsets = as_vector<double>(data, len); break;
      case Chunk::kW0: cache.w0 = as_eigen(data, len); break;
      case Chunk::kFinal: cache.final_w = as_eigen(data, len); break;
      case Chunk::kFrozenSegments: frozen().segments = as_vector<std::int32_t>(data, len); break;
      case Chunk::kFrozenProbs: frozen().probs = as_vector<double>(data, len); break;
      case Chunk::kFrozenOffsets: frozen().offsets = as_vector<double>(data, len); break;
      default:
        fail(ErrorCode::kCacheCorrupt, "unknown cache chunk kind " + std::to_string(static_cast<int>(ck)));
    }
  }
  cache.check_complete();
  cache.decode();
  return cache;
}

}  // namespace priu
