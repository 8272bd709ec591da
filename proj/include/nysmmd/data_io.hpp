#pragma once

#include "nysmmd/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>

namespace nysmmd {

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Dataset load_csv(const std::filesystem::path& path, bool has_header);
Dataset parse_csv(std::istream& in, bool has_header, const std::string& source = "<stream>");

/// Shortest round-trip representation of every value.
void write_csv(const std::filesystem::path& path, const Dataset& data);
void write_csv(std::ostream& out, const Dataset& data);

/// n draws from N_d(0, S) with S = (1 - rho) I + rho 11'. Requires
/// -1 / (d - 1) < rho < 1.
Dataset sample_correlated_gaussians(Index d, double rho, Index n, std::uint64_t seed);

/// Each row comes from `signal` with probability alpha_mix, else from
/// `background`; rows are taken without replacement within each pool.
Dataset sample_mixture(const Dataset& background, const Dataset& signal, double alpha_mix,
                       Index n, std::uint64_t seed);

}  // namespace nysmmd
