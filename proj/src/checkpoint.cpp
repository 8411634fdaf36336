#include <bit>
#include <cstring>

#include "spard/state.hpp"

namespace spard {
namespace {

constexpr char kMagic[4] = {'S', 'P', 'R', 'D'};
constexpr std::size_t kHeaderSize = 4 + 1 + 8;
// Guards against absurd allocations from a corrupted length field.
constexpr std::uint64_t kMaxDimension = 1u << 20;

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f64s(std::span<const double> vs) {
    for (double v : vs) f64(v);
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

[[noreturn]] void corrupt(const char* what) {
  throw Error(ErrorCode::kCorruptCheckpoint,
              std::string("corrupt checkpoint: ") + what);
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::vector<double> f64s(std::size_t n) {
    std::vector<double> out(n);
    for (auto& v : out) v = f64();
    return out;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) {
    if (bytes_.size() - pos_ < n) corrupt("truncated");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

SchedulerState SchedulerState::initial(std::size_t n_rewards,
                                       std::size_t n_categories) {
  SchedulerState s;
  s.reward_weights = SimplexWeights::uniform(n_rewards);
  s.data_weights = SimplexWeights::uniform(n_categories);
  s.stats = DimensionStats::zeros(n_rewards);
  return s;
}

std::vector<std::uint8_t> save_state(const SchedulerState& state) {
  const std::size_t n = state.reward_weights.size();
  const std::size_t m = state.data_weights.size();
  Writer p;
  p.u64(n);
  p.u64(m);
  p.u64(state.step);
  p.f64s(state.reward_weights.values());
  p.f64s(state.data_weights.values());
  p.f64s(state.stats.mu);
  p.f64s(state.stats.sigma);
  p.f64s(state.stats.mu_snapshot);
  p.f64s(state.stats.sigma_snapshot);
  p.u8(state.stats.has_snapshot ? 1 : 0);
  p.u64(state.stats.step);
  p.u8(state.attribution ? 1 : 0);
  if (state.attribution) {
    p.f64s(state.attribution->raw.data);
    p.f64s(state.attribution->normalized.data);
    p.u64(state.attribution->stale_columns.size());
    for (auto c : state.attribution->stale_columns) p.u64(c);
  }

  Writer out;
  for (char c : kMagic) out.u8(static_cast<std::uint8_t>(c));
  out.u8(kCheckpointVersion);
  out.u64(p.bytes().size());
  auto& bytes = out.bytes();
  bytes.insert(bytes.end(), p.bytes().begin(), p.bytes().end());
  return bytes;
}

SchedulerState load_state(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) corrupt("truncated header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) corrupt("bad magic");
  if (bytes[4] != kCheckpointVersion) corrupt("unsupported version");
  Reader header(bytes.subspan(5, 8));
  std::uint64_t length = header.u64();
  if (length != bytes.size() - kHeaderSize) corrupt("length mismatch");

  Reader r(bytes.subspan(kHeaderSize));
  std::uint64_t n = r.u64();
  std::uint64_t m = r.u64();
  if (n == 0 || m == 0 || n > kMaxDimension || m > kMaxDimension) {
    corrupt("bad dimensions");
  }
  SchedulerState s;
  s.step = r.u64();
  try {
    s.reward_weights = SimplexWeights::from_values(r.f64s(n));
    s.data_weights = SimplexWeights::from_values(r.f64s(m));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kCorruptCheckpoint) throw;
    corrupt("weights off the simplex");
  }
  s.stats.mu = r.f64s(n);
  s.stats.sigma = r.f64s(n);
  s.stats.mu_snapshot = r.f64s(n);
  s.stats.sigma_snapshot = r.f64s(n);
  std::uint8_t has_snapshot = r.u8();
  if (has_snapshot > 1) corrupt("bad flag");
  s.stats.has_snapshot = has_snapshot == 1;
  s.stats.step = r.u64();
  std::uint8_t has_attribution = r.u8();
  if (has_attribution > 1) corrupt("bad flag");
  if (has_attribution) {
    AttributionMatrix a;
    a.raw = Matrix(n, m);
    a.raw.data = r.f64s(n * m);
    a.normalized = Matrix(n, m);
    a.normalized.data = r.f64s(n * m);
    std::uint64_t n_stale = r.u64();
    if (n_stale > m) corrupt("bad stale column count");
    for (std::uint64_t i = 0; i < n_stale; ++i) {
      std::uint64_t c = r.u64();
      if (c >= m) corrupt("stale column out of range");
      a.stale_columns.push_back(c);
    }
    s.attribution = std::move(a);
  }
  if (!r.done()) corrupt("trailing bytes");
  return s;
}

}  // namespace spard
