#include "dpacct/sim.h"

#include "dpacct/dgauss.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

namespace dpacct {

namespace {

constexpr std::size_t kChunk = 1 << 16;

std::uint64_t chunk_seed(std::uint64_t seed, std::uint64_t chunk) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(chunk), static_cast<std::uint32_t>(chunk >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

bool parse_int(const std::string& s, std::int64_t& v) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

void CountsDataset::validate() const {
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] < 0) throw SpecError("dataset " + label + ": negative count at entry " + std::to_string(i));
}

CountsDataset parse_counts_csv(const std::string& text, const std::string& label) {
  CountsDataset data{label, {}};
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    auto e = line.find_last_not_of(" \t\r");
    std::string field = line.substr(b, e - b + 1);
    std::int64_t v = 0;
    if (!parse_int(field, v)) {
      if (lineno == 1) continue;  // header
      throw SpecError(label + ":" + std::to_string(lineno) + ": expected an integer count, got '" + field + "'");
    }
    if (v < 0) throw SpecError(label + ":" + std::to_string(lineno) + ": negative count");
    data.values.push_back(v);
  }
  return data;
}

CountsDataset read_counts_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open counts file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  auto data = parse_counts_csv(ss.str(), path);
  data.label = std::filesystem::path(path).stem().string();
  return data;
}

std::vector<std::int64_t> privatize(const CountsDataset& data, const HPReal& sigma2, std::uint64_t seed,
                                    unsigned threads) {
  if (!(sigma2 > 0)) throw DomainError("privatize: sigma2 must be positive");
  DiscreteGaussian dist(sigma2);
  const std::size_t n = data.values.size();
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<std::int64_t> out(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t c = next++; c < chunks; c = next++) {
      DiscreteGaussianSampler draw(dist, chunk_seed(seed, c));
      std::size_t hi = std::min(n, (c + 1) * kChunk);
      for (std::size_t i = c * kChunk; i < hi; ++i) out[i] = data.values[i] + draw();
    }
  };
  unsigned nt = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(chunks, 1))));
  if (nt == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < nt; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return out;
}

std::vector<std::int64_t> postprocess_nonneg(std::vector<std::int64_t> values) {
  for (auto& v : values) v = std::max<std::int64_t>(v, 0);
  return values;
}

ErrorStats error_report(const std::vector<std::int64_t>& truth, const std::vector<std::int64_t>& noisy) {
  if (truth.size() != noisy.size()) throw SpecError("error_report: length mismatch");
  ErrorStats s;
  if (truth.empty()) return s;
  long double sq = 0, ab = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    long double d = static_cast<long double>(noisy[i] - truth[i]);
    sq += d * d;
    ab += std::fabs(d);
  }
  s.mse = static_cast<double>(sq / truth.size());
  s.mae = static_cast<double>(ab / truth.size());
  return s;
}

std::vector<SimRow> simulate(const CountsDataset& data, const HPReal& sigma2, std::uint64_t seed, int replicates,
                             unsigned threads) {
  data.validate();
  if (replicates < 1) throw SpecError("simulate: replicates must be at least 1");
  SimRow raw{data.label, sigma2, "none", 0, 0, data.values.size(), seed};
  SimRow clamped{data.label, sigma2, "nonneg", 0, 0, data.values.size(), seed};
  for (int r = 0; r < replicates; ++r) {
    auto noisy = privatize(data, sigma2, seed + static_cast<std::uint64_t>(r), threads);
    auto a = error_report(data.values, noisy);
    auto b = error_report(data.values, postprocess_nonneg(std::move(noisy)));
    raw.mse += a.mse / replicates;
    raw.mae += a.mae / replicates;
    clamped.mse += b.mse / replicates;
    clamped.mae += b.mae / replicates;
  }
  return {raw, clamped};
}

std::string sim_csv(const std::vector<SimRow>& rows) {
  std::ostringstream out;
  out << "dataset,sigma2,postproc,mse,mae,n_entries,seed\n";
  char buf[64];
  for (const auto& r : rows) {
    out << r.dataset << ',' << to_sci(r.sigma2) << ',' << r.postproc << ',';
    std::snprintf(buf, sizeof buf, "%.17e", r.mse);
    out << buf << ',';
    std::snprintf(buf, sizeof buf, "%.17e", r.mae);
    out << buf << ',' << r.n_entries << ',' << r.seed << '\n';
  }
  return out.str();
}

CountsDataset constant_dataset(std::size_t n, std::int64_t value, const std::string& label) {
  return CountsDataset{label, std::vector<std::int64_t>(n, value)};
}

}  // namespace dpacct
