#pragma once

#include "dpacct/hp_numeric.h"

#include <cstdint>
#include <string>
#include <vector>

namespace dpacct {

struct CountsDataset {
  std::string label;
  std::vector<std::int64_t> values;  // all >= 0
  void validate() const;
};

// One integer count per line; an optional non-numeric first line is a header.
// Files are labelled by their stem.
CountsDataset read_counts_csv(const std::string& path);
CountsDataset parse_counts_csv(const std::string& text, const std::string& label);

// value + N_Z(0, sigma2) per entry. Entries are split into fixed chunks, each
// with its own seeded sampler, so output depends only on (seed, values).
std::vector<std::int64_t> privatize(const CountsDataset& data, const HPReal& sigma2, std::uint64_t seed,
                                    unsigned threads = 1);

std::vector<std::int64_t> postprocess_nonneg(std::vector<std::int64_t> values);

struct ErrorStats {
  double mse = 0;
  double mae = 0;
};
ErrorStats error_report(const std::vector<std::int64_t>& truth, const std::vector<std::int64_t>& noisy);

struct SimRow {
  std::string dataset;
  HPReal sigma2;
  std::string postproc;  // "none" or "nonneg"
  double mse = 0;
  double mae = 0;
  std::size_t n_entries = 0;
  std::uint64_t seed = 0;
};

// Raw and non-negativity rows, each averaged over replicates seeded seed, seed+1, ...
std::vector<SimRow> simulate(const CountsDataset& data, const HPReal& sigma2, std::uint64_t seed,
                             int replicates = 1, unsigned threads = 1);
std::string sim_csv(const std::vector<SimRow>& rows);

// Synthetic dataset of n copies of one count, for property checks.
CountsDataset constant_dataset(std::size_t n, std::int64_t value, const std::string& label = "constant");

}  // namespace dpacct
