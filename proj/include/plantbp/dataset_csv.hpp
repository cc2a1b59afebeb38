#pragma once

#include <filesystem>
#include <iosfwd>

#include "plantbp/dynamics.hpp"

namespace plantbp {

// Complete datasets: header `pop,cycle,S,T,R,V,F`, one row per population and
// cycle 0..n, then a terminal row per population with cycle n+1, the seed pair
// (S_{n+1}, T_{n+1}) and empty R,V,F fields.
//
// Observed datasets: header `pop,cycle,R,V,F`, cycles 0..n only.
//
// Populations are numbered 0..K-1 on output. On input any integer labels are
// accepted; populations are ordered by label.

void write_complete_csv(std::ostream& out, const CompleteDataset& data);
void write_observed_csv(std::ostream& out, const ObservedDataset& data);

// Throw parse_error naming the offending line.
CompleteDataset read_complete_csv(std::istream& in);
ObservedDataset read_observed_csv(std::istream& in);

void save_complete_csv(const std::filesystem::path& path, const CompleteDataset& data);
void save_observed_csv(const std::filesystem::path& path, const ObservedDataset& data);
CompleteDataset load_complete_csv(const std::filesystem::path& path);
ObservedDataset load_observed_csv(const std::filesystem::path& path);

}  // namespace plantbp
